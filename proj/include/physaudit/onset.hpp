#pragma once

// Sound-event onset detection, greedy matching against annotations, and the
// three alignment scores (hit coverage, timing error, perfect align).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"
#include "physaudit/signal.hpp"
#include "physaudit/stats.hpp"

namespace physaudit::onset {

enum class AnnotationSource { manual, semi_auto };

struct HitAnnotations {
    std::vector<double> times;  // strictly increasing, seconds
    AnnotationSource source = AnnotationSource::manual;
};

struct OnsetMatch {
    struct Entry {
        double annotated = 0.0;
        std::optional<double> detected;
    };
    std::vector<Entry> entries;
    double tolerance = 0.0;  // seconds
};

struct AlignmentScores {
    double hit_coverage = 0.0;               // percent, [0, 100]
    std::optional<double> timing_error_ms;   // mean |deviation|, matched hits only
    bool perfect = false;
};

struct DetectorOptions {
    // candidate annotation (44.1 kHz energy-envelope path)
    double candidate_prominence_mads = 4.0;
    double candidate_min_separation_s = 0.5;
    // generated-audio detector (16 kHz spectral-flux path)
    double novelty_threshold_mads = 3.0;
    double peak_min_contrast = 2.0;       // peak must exceed contrast * median
    double peak_min_rel_to_max = 0.05;    // absolute floor when the curve is mostly silent
    double peak_neighborhood_s = 0.05;    // local-max dominance window
    double fallback_max_density_hz = 20.0;
    // matching
    double tolerance_gap_factor = 0.25;
    double tolerance_min_s = 0.10;
    double tolerance_max_s = 0.25;
};

namespace detail {

// Topographic prominence of local maxima: height above the higher of the two
// lowest saddles toward the nearest taller samples (or the series ends).
inline std::vector<double> peak_prominences(const std::vector<double>& v) {
    std::vector<double> prom(v.size(), 0.0);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
        double left_min = v[i];
        for (std::size_t j = i; j-- > 0;) {
            if (v[j] > v[i]) break;
            left_min = std::min(left_min, v[j]);
        }
        double right_min = v[i];
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            if (v[j] > v[i]) break;
            right_min = std::min(right_min, v[j]);
        }
        prom[i] = v[i] - std::max(left_min, right_min);
    }
    return prom;
}

// Local maxima that clear both the robust threshold (median + k*MAD) and a
// contrast floor relative to the curve median. The contrast gate keeps
// scale-free MAD thresholds from firing on stationary texture.
inline std::vector<std::size_t> robust_peaks(const std::vector<double>& v,
                                             double threshold_mads,
                                             double min_contrast,
                                             double min_rel_to_max,
                                             std::size_t neighborhood) {
    std::vector<std::size_t> peaks;
    if (v.size() < 3) return peaks;
    const double med = stats::median(v);
    const double threshold = med + threshold_mads * stats::mad(v);
    // median/MAD collapse to 0 on mostly-silent curves; the relative floor
    // keeps decay-phase micro-peaks out in that regime
    const double floor = min_rel_to_max * *std::max_element(v.begin(), v.end());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
        if (!(v[i] > threshold)) continue;
        if (!(v[i] >= floor)) continue;
        if (min_contrast > 0.0 && !(v[i] > min_contrast * med)) continue;
        const std::size_t lo = i > neighborhood ? i - neighborhood : 0;
        const std::size_t hi = std::min(v.size(), i + neighborhood + 1);
        bool dominant = true;
        for (std::size_t j = lo; j < hi; ++j) {
            if (v[j] > v[i]) {
                dominant = false;
                break;
            }
        }
        if (dominant) peaks.push_back(i);
    }
    return peaks;
}

}  // namespace detail

// Conservative candidate onsets for the semi-automatic annotation pass:
// peaks of the 44.1 kHz STFT energy envelope with prominence >= 4 MAD,
// accepted in time order with at least 0.5 s separation.
inline HitAnnotations annotate_candidates(const AudioClip& clip, const DetectorOptions& opt = {}) {
    require_analyzable(clip, "annotate_candidates");
    const AudioClip work = signal::resample(clip, 44100);
    constexpr std::size_t kWin = 1024;
    constexpr std::size_t kHop = 256;
    if (work.samples.size() < kWin) throw Error("clip_too_short", "annotate_candidates: need at least 1024 samples");

    const auto env = signal::rms_envelope(signal::stft(work, kWin, kHop, signal::Window::hann));
    const double env_mad = stats::mad(env.values);
    const auto prom = detail::peak_prominences(env.values);

    HitAnnotations hits;
    hits.source = AnnotationSource::semi_auto;
    const double min_prominence = opt.candidate_prominence_mads * env_mad;
    for (std::size_t i = 0; i < env.values.size(); ++i) {
        // MAD of a mostly-silent envelope is 0; any positive prominence counts then
        if (!(prom[i] > 0.0 && prom[i] >= min_prominence)) continue;
        const double t = (static_cast<double>(i) * kHop + kWin / 2.0) / work.sample_rate;
        if (!hits.times.empty() && t - hits.times.back() < opt.candidate_min_separation_s) continue;
        hits.times.push_back(t);
    }
    return hits;
}

// Onset detection for generated audio: positive spectral-flux novelty at
// ~3.3 ms resolution (16 kHz, FFT 512, hop 53), falling back to the smoothed
// analytic envelope when the flux path finds nothing or an implausible
// density (> 20 onsets/s).
inline std::vector<double> detect_onsets(const AudioClip& clip, const DetectorOptions& opt = {}) {
    require_analyzable(clip, "detect_onsets");
    if (clip.duration() < 0.1) throw Error("clip_too_short", "detect_onsets: need at least 100 ms");
    const AudioClip work = signal::resample(clip, 16000);
    constexpr std::size_t kFft = 512;
    constexpr std::size_t kHop = 53;

    std::vector<double> result;
    if (work.samples.size() >= kFft) {
        const auto spec = signal::stft(work, kFft, kHop, signal::Window::hann);
        if (spec.n_frames >= 2) {
            std::vector<double> novelty(spec.n_frames - 1, 0.0);
            for (std::size_t f = 1; f < spec.n_frames; ++f) {
                double s = 0.0;
                for (std::size_t k = 0; k < spec.n_bins; ++k) {
                    s += std::max(0.0, spec.at(f, k) - spec.at(f - 1, k));
                }
                novelty[f - 1] = s;
            }
            const auto hood = static_cast<std::size_t>(
                std::llround(opt.peak_neighborhood_s * work.sample_rate / kHop));
            const auto peaks = detail::robust_peaks(novelty, opt.novelty_threshold_mads,
                                                    opt.peak_min_contrast,
                                                    opt.peak_min_rel_to_max, hood);
            for (const std::size_t i : peaks) {
                // novelty[i] is the flux into frame i+1; report that frame's center
                result.push_back(((static_cast<double>(i) + 1.0) * kHop + kFft / 2.0) / work.sample_rate);
            }
        }
    }

    const bool implausible =
        !result.empty() &&
        static_cast<double>(result.size()) / work.duration() > opt.fallback_max_density_hz;
    if (result.empty() || implausible) {
        const auto env = signal::gaussian_smooth(signal::analytic_envelope(work), 0.003);
        const auto hood = static_cast<std::size_t>(std::llround(opt.peak_neighborhood_s * env.rate));
        const auto peaks = detail::robust_peaks(env.values, opt.novelty_threshold_mads,
                                                opt.peak_min_contrast,
                                                opt.peak_min_rel_to_max, hood);
        result.clear();
        for (const std::size_t i : peaks) result.push_back(static_cast<double>(i) / env.rate);
    }
    return result;
}

// Greedy matching: annotations in time order each take the nearest unconsumed
// detection within an adaptive tolerance (ties break toward the earlier
// detection). Tolerance = clamp(0.25 * median inter-annotation gap,
// 100 ms, 250 ms); single-annotation clips use the maximum.
inline OnsetMatch match(const std::vector<double>& detected, const HitAnnotations& annotated,
                        const DetectorOptions& opt = {}) {
    if (annotated.times.empty()) throw Error("empty_annotations", "match: no annotated hits");

    double tolerance = opt.tolerance_max_s;
    if (annotated.times.size() > 1) {
        std::vector<double> gaps;
        gaps.reserve(annotated.times.size() - 1);
        for (std::size_t i = 1; i < annotated.times.size(); ++i) {
            gaps.push_back(annotated.times[i] - annotated.times[i - 1]);
        }
        tolerance = std::clamp(opt.tolerance_gap_factor * stats::median(gaps),
                               opt.tolerance_min_s, opt.tolerance_max_s);
    }

    std::vector<double> sorted = detected;
    std::sort(sorted.begin(), sorted.end());
    std::vector<bool> used(sorted.size(), false);

    OnsetMatch m;
    m.tolerance = tolerance;
    for (const double t : annotated.times) {
        OnsetMatch::Entry entry;
        entry.annotated = t;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = sorted.size();
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(sorted[i] - t);
            if (d < best) {  // strict: equidistant keeps the earlier detection
                best = d;
                best_i = i;
            }
        }
        if (best_i < sorted.size() && best <= tolerance) {
            used[best_i] = true;
            entry.detected = sorted[best_i];
        }
        m.entries.push_back(entry);
    }
    return m;
}

inline AlignmentScores alignment_scores(const OnsetMatch& m) {
    AlignmentScores s;
    if (m.entries.empty()) return s;
    std::size_t matched = 0;
    double dev_sum = 0.0;
    for (const auto& e : m.entries) {
        if (e.detected) {
            ++matched;
            dev_sum += std::abs(*e.detected - e.annotated);
        }
    }
    s.hit_coverage = 100.0 * static_cast<double>(matched) / static_cast<double>(m.entries.size());
    if (matched > 0) s.timing_error_ms = 1000.0 * dev_sum / static_cast<double>(matched);
    s.perfect = matched == m.entries.size();
    return s;
}

// Percentage of seeds with 100% hit coverage.
inline double perfect_align_rate(const std::vector<AlignmentScores>& per_seed) {
    if (per_seed.empty()) throw Error("empty_input", "perfect_align_rate: no scores");
    std::size_t count = 0;
    for (const auto& s : per_seed) {
        if (s.perfect) ++count;
    }
    return 100.0 * static_cast<double>(count) / static_cast<double>(per_seed.size());
}

}  // namespace physaudit::onset
