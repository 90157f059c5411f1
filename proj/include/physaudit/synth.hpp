#pragma once

// Deterministic test-signal generators. Construction parameters double as the
// ground truth for oracle tests (a reverb_tail(0.8) clip reaches -60 dB at
// 0.8 s by construction). All randomness flows through an explicit seed and a
// portable Box-Muller transform so output is bit-reproducible.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"

namespace physaudit::synth {

class Rng {
public:
    explicit Rng(std::uint32_t seed) : gen_(seed) {}

    double uniform() {
        // 53-bit mantissa from two 32-bit draws, portable across platforms
        const std::uint64_t hi = gen_();
        const std::uint64_t lo = gen_();
        return static_cast<double>(((hi << 21) ^ lo) & ((1ULL << 53) - 1)) / static_cast<double>(1ULL << 53);
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline AudioClip silence(double duration, int rate = 16000) {
    if (duration <= 0.0 || rate <= 0) throw Error("bad_params", "synth: duration and rate must be positive");
    return {std::vector<double>(static_cast<std::size_t>(duration * rate), 0.0), rate};
}

// Damped sinusoid with a linear attack ramp: the canonical oracle for
// attack_time (10-90 rise of a linear ramp is 0.8 * attack), decay_rate
// (lambda) and fundamental_frequency (f0).
inline AudioClip damped_sine(double f0, double lambda, double attack_ms,
                             double duration = 0.5, int rate = 16000,
                             double amplitude = 0.7, double onset_s = 0.0) {
    if (f0 <= 0.0 || lambda < 0.0 || attack_ms < 0.0) throw Error("bad_params", "damped_sine");
    AudioClip clip = silence(duration, rate);
    const double ta = attack_ms / 1000.0;
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate - onset_s;
        if (t < 0.0) continue;
        const double env = (ta > 0.0 && t < ta) ? t / ta : std::exp(-lambda * (t - ta));
        clip.samples[i] = amplitude * env * std::sin(2.0 * std::numbers::pi * f0 * (t < 0 ? 0 : t));
    }
    return clip;
}

// Sharp transients (2 kHz ping, instant attack, fast decay) at the given
// times. True onset times are the input.
inline AudioClip click_train(std::span<const double> times, double duration,
                             int rate = 16000, double amplitude = 0.8) {
    AudioClip clip = silence(duration, rate);
    for (const double t0 : times) {
        if (t0 < 0.0 || t0 >= duration) throw Error("bad_params", "click_train: click outside clip");
        const auto i0 = static_cast<std::size_t>(t0 * rate);
        for (std::size_t i = i0; i < clip.samples.size(); ++i) {
            const double t = static_cast<double>(i - i0) / rate;
            const double v = amplitude * std::exp(-t / 0.01) * std::sin(2.0 * std::numbers::pi * 2000.0 * t);
            if (t > 0.08) break;
            clip.samples[i] += v;
        }
    }
    return clip;
}

// White noise shaped by a linear-attack / exponential-decay envelope.
inline AudioClip noise_burst(double attack_ms, double lambda, double duration = 0.6,
                             int rate = 16000, std::uint32_t seed = 1,
                             double amplitude = 0.5, double onset_s = 0.05) {
    if (attack_ms < 0.0 || lambda < 0.0) throw Error("bad_params", "noise_burst");
    AudioClip clip = silence(duration, rate);
    Rng rng(seed);
    const double ta = attack_ms / 1000.0;
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate - onset_s;
        if (t < 0.0) continue;
        const double env = (ta > 0.0 && t < ta) ? t / ta : std::exp(-lambda * (t - ta));
        clip.samples[i] = amplitude * env * rng.gaussian();
    }
    return clip;
}

// Amplitude-modulated tone, modulation depth in [0, 1].
inline AudioClip am_tone(double f_mod, double depth, double f_carrier = 500.0,
                         double duration = 3.0, int rate = 16000, double amplitude = 0.6) {
    if (f_mod <= 0.0 || depth < 0.0 || depth > 1.0) throw Error("bad_params", "am_tone");
    AudioClip clip = silence(duration, rate);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        const double mod = (1.0 + depth * std::sin(2.0 * std::numbers::pi * f_mod * t)) / (1.0 + depth);
        clip.samples[i] = amplitude * mod * std::sin(2.0 * std::numbers::pi * f_carrier * t);
    }
    return clip;
}

// Noise tail whose amplitude envelope reaches -60 dB exactly at t = rt60
// after the onset (lambda = 3 ln10 / rt60).
inline AudioClip reverb_tail(double rt60, double duration = 0.0, int rate = 16000,
                             std::uint32_t seed = 1, double amplitude = 0.6, double onset_s = 0.02) {
    if (rt60 <= 0.0) throw Error("bad_params", "reverb_tail: rt60 must be positive");
    if (duration <= 0.0) duration = 1.6 * rt60 + 0.3 + onset_s;
    const double lambda = 3.0 * std::numbers::ln10 / rt60;
    AudioClip clip = silence(duration, rate);
    Rng rng(seed);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate - onset_s;
        if (t < 0.0) continue;
        clip.samples[i] = amplitude * std::exp(-lambda * t) * rng.gaussian();
    }
    return clip;
}

// Direct noise burst of `direct_s` followed by a flat reverberant stretch
// holding `tail_energy_ratio` times the direct energy; the DRR oracle is
// -10*log10(tail_energy_ratio).
inline AudioClip impulse_with_tail(double tail_energy_ratio, double direct_s = 0.04,
                                   double tail_s = 0.4, int rate = 16000,
                                   std::uint32_t seed = 1, double onset_s = 0.05) {
    if (tail_energy_ratio < 0.0) throw Error("bad_params", "impulse_with_tail");
    const double duration = onset_s + direct_s + tail_s + 0.05;
    AudioClip clip = silence(duration, rate);
    Rng rng(seed);
    const double direct_amp = 0.5;
    // equal per-sample power scaled so total tail energy hits the requested ratio
    const double tail_amp = direct_amp * std::sqrt(tail_energy_ratio * direct_s / tail_s);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate - onset_s;
        if (t < 0.0) continue;
        if (t < direct_s) {
            clip.samples[i] = direct_amp * rng.gaussian();
        } else if (t < direct_s + tail_s) {
            clip.samples[i] = tail_amp * rng.gaussian();
        }
    }
    return clip;
}

// Impulse-excited two-pole resonator (pole radius 0.996, ~15 ms ring) over a
// white floor at one fifth of the ring amplitude. Rings too briefly and too
// noisily for autocorrelation voicing, but leaves a clear PSD peak at f_res.
inline AudioClip resonant_burst(double f_res, double duration = 0.5, int rate = 16000,
                                std::uint32_t seed = 1, double amplitude = 0.2) {
    if (f_res <= 0.0 || f_res >= 0.5 * rate) throw Error("bad_params", "resonant_burst");
    AudioClip clip = silence(duration, rate);
    const double r = 0.996;
    const double w0 = 2.0 * std::numbers::pi * f_res / rate;
    const double a1 = -2.0 * r * std::cos(w0);
    const double a2 = r * r;
    std::vector<double>& y = clip.samples;
    y[0] = 1.0;
    double y1 = y[0], y2 = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        y[i] = -a1 * y1 - a2 * y2;
        y2 = y1;
        y1 = y[i];
    }
    const std::size_t head = std::min<std::size_t>(200, y.size());
    double rms = 0.0;
    for (std::size_t i = 0; i < head; ++i) rms += y[i] * y[i];
    rms = std::sqrt(rms / static_cast<double>(head));
    Rng rng(seed);
    for (auto& v : y) v = amplitude * (v / rms + 0.2 * rng.gaussian());
    return clip;
}

}  // namespace physaudit::synth
