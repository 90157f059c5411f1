#pragma once

// Core value types the DSP layer operates on. All are immutable-by-convention
// plain data; every operation in the library takes them by const reference and
// returns fresh values.

#include <cstddef>
#include <vector>

#include "physaudit/error.hpp"

namespace physaudit {

// Mono sample buffer. Samples are nominally in [-1, 1]; sample_rate in Hz.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

inline void require_analyzable(const AudioClip& clip, const char* what) {
    if (clip.sample_rate <= 0) throw Error("bad_rate", std::string(what) + ": sample rate must be positive");
    if (clip.samples.empty()) throw Error("empty_clip", std::string(what) + ": empty clip");
}

// Magnitude spectrogram, frames x bins, row-major.
struct Spectrogram {
    std::vector<double> magnitudes;
    std::size_t n_frames = 0;
    std::size_t n_bins = 0;
    double frame_period = 0.0;             // seconds between frame starts
    std::vector<double> bin_frequencies;   // Hz, one per bin

    double at(std::size_t frame, std::size_t bin) const {
        return magnitudes[frame * n_bins + bin];
    }
    double& at(std::size_t frame, std::size_t bin) {
        return magnitudes[frame * n_bins + bin];
    }
};

// Non-negative amplitude envelope sampled at `rate` Hz.
struct Envelope {
    std::vector<double> values;
    double rate = 0.0;
};

// One-sided power spectral density.
struct PowerSpectrum {
    std::vector<double> densities;
    std::vector<double> frequencies;
};

}  // namespace physaudit
