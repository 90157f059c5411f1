#pragma once

// Per-hit segmentation and the nine physical-acoustic metric extractors.
// Metric functions are total: in-domain failures come back as NaN values with
// a reason code instead of exceptions, so corpus runs never die on one bad
// segment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"
#include "physaudit/fft.hpp"
#include "physaudit/onset.hpp"
#include "physaudit/signal.hpp"
#include "physaudit/stats.hpp"

namespace physaudit::metrics {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricValue {
    double value = kNaN;
    std::string reason;  // set when value is NaN

    bool ok() const { return !std::isnan(value); }

    static MetricValue of(double v) { return {v, {}}; }
    static MetricValue failure(std::string why) { return {kNaN, std::move(why)}; }
};

struct HitSegment {
    AudioClip samples;        // 16 kHz slice
    double onset_offset = 0;  // seconds from segment start to the annotated hit
    std::size_t hit_index = 0;
};

struct Segmentation {
    std::vector<HitSegment> segments;
    std::vector<std::string> warnings;  // dropped hits etc.
};

struct Options {
    // segmentation
    double pre_onset_s = 0.05;
    double next_hit_guard_s = 0.02;
    double w_dur_factor = 1.5;
    double w_dur_min_s = 0.2;
    double w_dur_max_s = 2.0;
    double w_dur_default_s = 0.5;
    // attack time
    double envelope_sigma_s = 0.003;
    double attack_peak_window_s = 0.2;
    double attack_gate_mads = 3.0;
    double attack_min_pre_s = 0.010;
    // decay rate
    double decay_clip_min = 0.02;
    double decay_clip_max = 50.0;
    std::size_t decay_min_points = 6;
    std::size_t decay_max_fit_points = 256;
    // fundamental frequency
    double f0_min_hz = 27.5;
    double f0_max_hz = 4186.0;
    double f0_frame_s = 0.040;
    double f0_hop_s = 0.010;
    double f0_voicing_threshold = 0.45;
    double f0_voiced_ratio_min = 0.1;
    std::size_t f0_voiced_frames_min = 3;
    double f0_trim_fraction = 0.1;
    double f0_octave_trigger_hz = 2000.0;
    double f0_octave_lo_hz = 80.0;
    double f0_octave_hi_hz = 1500.0;
    double f0_fallback_lo_hz = 80.0;
    double f0_fallback_hi_hz = 4000.0;
    double f0_fallback_mads = 2.5;
    double f0_fallback_min_contrast = 3.0;
    // spectral centroid / rolloff / flux
    double timbre_start_s = 0.060;
    double timbre_stop_s = 0.180;
    double timbre_min_span_s = 0.060;
    double rolloff_fraction = 0.85;
    double flux_window_s = 0.180;
    double flux_mad_filter = 3.0;
    double frame_trim_fraction = 0.1;
    // RT60
    double rt60_min_r2 = 0.9;
    std::size_t rt60_min_points = 6;
    double rt60_min_duration_s = 0.05;
    double rt60_floor_margin_db = 5.0;
    double rt60_min_peak_excess_db = 20.0;
    // DRR
    double drr_direct_s = 0.040;
    double drr_reverb_min_s = 0.2;
    double drr_reverb_max_s = 2.0;
    double drr_band_lo_hz = 125.0;
    double drr_band_hi_hz = 4000.0;
    double drr_clip_min_db = -20.0;
    double drr_clip_max_db = 40.0;
    // temporal modulation
    double mod_envelope_rate_hz = 200.0;
    double mod_highpass_hz = 1.0;
    double mod_band_lo_hz = 4.0;
    double mod_band_hi_hz = 16.0;
    double mod_overall_weight = 0.85;
    double mod_cv_weight = 0.4;
    double mod_pf_weight = 0.3;
    double mod_emod_weight = 0.6;
    double mod_cv_norm_div = 2.0;
    double mod_pf_norm_offset = 1.0;
    double mod_pf_norm_div = 9.0;
};

// Metric identifiers used by manifests, reports and the audit layer.
inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "attack_time", "decay_rate", "f0", "spectral_centroid", "spectral_rolloff",
        "spectral_flux", "temporal_modulation", "rt60", "drr"};
    return names;
}

inline bool is_per_hit_metric(const std::string& name) {
    return name == "attack_time" || name == "decay_rate" || name == "f0" ||
           name == "spectral_centroid" || name == "spectral_rolloff" || name == "spectral_flux";
}

struct MetricVector {
    MetricValue attack_time;         // ms
    MetricValue decay_rate;          // 1/s, clipped to [0.02, 50]
    MetricValue f0;                  // Hz
    MetricValue spectral_centroid;   // Hz
    MetricValue spectral_rolloff;    // Hz
    MetricValue spectral_flux;       // dimensionless
    MetricValue temporal_modulation; // dimensionless
    MetricValue rt60;                // s
    MetricValue drr;                 // dB, clipped to [-20, 40]

    // per-hit values for the six per-hit metrics (NaN entries preserved);
    // the f0 sequence drives ascending/descending tests
    struct PerHit {
        std::vector<double> attack_time;
        std::vector<double> decay_rate;
        std::vector<double> f0;
        std::vector<double> spectral_centroid;
        std::vector<double> spectral_rolloff;
        std::vector<double> spectral_flux;
    } per_hit;

    std::vector<std::string> warnings;

    const MetricValue& by_name(const std::string& name) const {
        if (name == "attack_time") return attack_time;
        if (name == "decay_rate") return decay_rate;
        if (name == "f0") return f0;
        if (name == "spectral_centroid") return spectral_centroid;
        if (name == "spectral_rolloff") return spectral_rolloff;
        if (name == "spectral_flux") return spectral_flux;
        if (name == "temporal_modulation") return temporal_modulation;
        if (name == "rt60") return rt60;
        if (name == "drr") return drr;
        throw Error("unknown_metric", "no metric named '" + name + "'");
    }

    const std::vector<double>& per_hit_by_name(const std::string& name) const {
        if (name == "attack_time") return per_hit.attack_time;
        if (name == "decay_rate") return per_hit.decay_rate;
        if (name == "f0") return per_hit.f0;
        if (name == "spectral_centroid") return per_hit.spectral_centroid;
        if (name == "spectral_rolloff") return per_hit.spectral_rolloff;
        if (name == "spectral_flux") return per_hit.spectral_flux;
        throw Error("unknown_metric", "'" + name + "' has no per-hit values");
    }
};

namespace detail {

inline std::vector<double> central_gradient(const std::vector<double>& v) {
    std::vector<double> g(v.size(), 0.0);
    if (v.size() < 2) return g;
    g[0] = v[1] - v[0];
    g[v.size() - 1] = v[v.size() - 1] - v[v.size() - 2];
    for (std::size_t i = 1; i + 1 < v.size(); ++i) g[i] = 0.5 * (v[i + 1] - v[i - 1]);
    return g;
}

inline Envelope smoothed_envelope(const AudioClip& clip, double sigma_s) {
    return signal::gaussian_smooth(signal::analytic_envelope(clip), sigma_s);
}

// Linear-interpolation percentile (q in [0, 100]).
inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Pitch of one frame: autocorrelation normalized by the window's own
// autocorrelation, candidate peaks limited to lags <= n/2 (the normalization
// is ill-conditioned beyond), shortest near-best candidate wins, parabolic
// refinement. Returns NaN when unvoiced.
inline double frame_pitch(const std::vector<double>& frame, double fs, const Options& opt) {
    const std::size_t n = frame.size();
    if (n < 16) return kNaN;
    double m = 0.0;
    for (const double v : frame) m += v;
    m /= static_cast<double>(n);

    const auto w = signal::detail::make_window(signal::Window::hann, n);
    const std::size_t fft_n = fft::next_pow2(2 * n);
    std::vector<fft::cplx> buf(fft_n, fft::cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) buf[i] = fft::cplx((frame[i] - m) * w[i], 0.0);
    fft::transform(buf, false);
    for (auto& c : buf) c = fft::cplx(std::norm(c), 0.0);
    fft::transform(buf, true);
    if (buf[0].real() <= 1e-30) return kNaN;
    const double r0 = buf[0].real();

    std::vector<fft::cplx> wbuf(fft_n, fft::cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) wbuf[i] = fft::cplx(w[i], 0.0);
    fft::transform(wbuf, false);
    for (auto& c : wbuf) c = fft::cplx(std::norm(c), 0.0);
    fft::transform(wbuf, true);
    const double rw0 = wbuf[0].real();

    const auto lag_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fs / opt.f0_max_hz)));
    const auto lag_max = std::min<std::size_t>(n / 2, static_cast<std::size_t>(std::ceil(fs / opt.f0_min_hz)));
    if (lag_min + 1 >= lag_max) return kNaN;

    auto rnorm = [&](std::size_t lag) {
        const double rw = wbuf[lag].real() / rw0;
        return rw > 1e-9 ? (buf[lag].real() / r0) / rw : -1.0;
    };

    std::vector<std::size_t> cands;
    double best = -1.0;
    for (std::size_t k = lag_min; k <= lag_max; ++k) {
        const double v = rnorm(k);
        if (v >= rnorm(k - 1) && v >= rnorm(k + 1)) {
            cands.push_back(k);
            best = std::max(best, std::min(v, 1.0));
        }
    }
    if (cands.empty() || best < opt.f0_voicing_threshold) return kNaN;

    std::size_t pick = cands.front();
    for (const std::size_t k : cands) {
        if (std::min(rnorm(k), 1.0) >= 0.85 * best) {
            pick = k;
            break;
        }
    }
    const double ym1 = rnorm(pick - 1), y0 = rnorm(pick), yp1 = rnorm(pick + 1);
    const double den = ym1 - 2.0 * y0 + yp1;
    double delta = den != 0.0 ? 0.5 * (ym1 - yp1) / den : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    const double f = fs / (static_cast<double>(pick) + delta);
    return (f >= opt.f0_min_hz && f <= opt.f0_max_hz) ? f : kNaN;
}

struct CentroidRolloff {
    MetricValue centroid;
    MetricValue rolloff;
};

inline CentroidRolloff centroid_rolloff(const HitSegment& seg, const Options& opt) {
    const int fs = seg.samples.sample_rate;
    const auto n = static_cast<double>(seg.samples.samples.size());
    const double start_s = seg.onset_offset + opt.timbre_start_s;
    const double span_s = n / fs - start_s;
    if (span_s < opt.timbre_min_span_s) {
        return {MetricValue::failure("too_short"), MetricValue::failure("too_short")};
    }
    const double stop_s = std::min(seg.onset_offset + opt.timbre_stop_s, n / fs);
    const auto i0 = static_cast<std::size_t>(std::llround(start_s * fs));
    const auto i1 = std::min(static_cast<std::size_t>(std::llround(stop_s * fs)), seg.samples.samples.size());

    std::vector<double> window(seg.samples.samples.begin() + static_cast<std::ptrdiff_t>(i0),
                               seg.samples.samples.begin() + static_cast<std::ptrdiff_t>(i1));
    double dc = 0.0;
    for (const double v : window) dc += v;
    dc /= static_cast<double>(window.size());
    for (auto& v : window) v -= dc;
    constexpr std::size_t kFft = 1024;
    constexpr std::size_t kHop = 128;
    if (window.size() < kFft) window.resize(kFft, 0.0);  // boundary sliver: pad to one frame

    const auto spec = signal::stft({std::move(window), fs}, kFft, kHop, signal::Window::hann);
    std::vector<double> centroids, rolloffs;
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
        double total = 0.0, weighted = 0.0;
        for (std::size_t k = 0; k < spec.n_bins; ++k) {
            total += spec.at(f, k);
            weighted += spec.at(f, k) * spec.bin_frequencies[k];
        }
        if (total < 1e-12) continue;  // silent frame
        centroids.push_back(weighted / total);
        double cum = 0.0;
        for (std::size_t k = 0; k < spec.n_bins; ++k) {
            cum += spec.at(f, k);
            if (cum >= opt.rolloff_fraction * total) {
                rolloffs.push_back(spec.bin_frequencies[k]);
                break;
            }
        }
    }
    if (centroids.empty()) {
        return {MetricValue::failure("silent"), MetricValue::failure("silent")};
    }
    return {MetricValue::of(stats::trimmed_mean(centroids, opt.frame_trim_fraction)),
            MetricValue::of(stats::trimmed_mean(rolloffs, opt.frame_trim_fraction))};
}

}  // namespace detail

// Segment a clip at annotated hit times: each segment spans
// [max(0, t_i - 50 ms), min(t_{i+1} - 20 ms, t_i + w_dur)] with w_dur adapted
// to the RT60 estimate (clamp(1.5 * rt60, 0.2 s, 2.0 s), default 0.5 s).
inline Segmentation segment_hits(const AudioClip& clip, const onset::HitAnnotations& hits,
                                 std::optional<double> rt60_hint, const Options& opt = {}) {
    require_analyzable(clip, "segment_hits");
    if (hits.times.empty()) throw Error("empty_annotations", "segment_hits: no hits");
    const AudioClip work = signal::resample(clip, 16000);
    const double duration = work.duration();
    const int fs = work.sample_rate;

    double w_dur = opt.w_dur_default_s;
    if (rt60_hint && !std::isnan(*rt60_hint)) {
        w_dur = std::clamp(opt.w_dur_factor * *rt60_hint, opt.w_dur_min_s, opt.w_dur_max_s);
    }

    Segmentation out;
    for (std::size_t i = 0; i < hits.times.size(); ++i) {
        const double t = hits.times[i];
        if (i > 0 && t <= hits.times[i - 1]) throw Error("bad_annotations", "hit times must be strictly increasing");
        if (t < 0.0 || t >= duration) {
            out.warnings.push_back("hit " + std::to_string(i) + " at " + std::to_string(t) +
                                   " s is outside the clip; dropped");
            continue;
        }
        const double start = std::max(0.0, t - opt.pre_onset_s);
        double end = std::min(t + w_dur, duration);
        if (i + 1 < hits.times.size()) end = std::min(end, hits.times[i + 1] - opt.next_hit_guard_s);
        if (end <= start) {
            out.warnings.push_back("hit " + std::to_string(i) + " leaves an empty segment; dropped");
            continue;
        }
        HitSegment seg;
        seg.hit_index = i;
        seg.onset_offset = t - start;
        const auto a = static_cast<std::size_t>(std::llround(start * fs));
        const auto b = std::min(static_cast<std::size_t>(std::llround(end * fs)), work.samples.size());
        seg.samples.sample_rate = fs;
        seg.samples.samples.assign(work.samples.begin() + static_cast<std::ptrdiff_t>(a),
                                   work.samples.begin() + static_cast<std::ptrdiff_t>(b));
        out.segments.push_back(std::move(seg));
    }
    return out;
}

// 10-90% envelope rise time in ms. Onset found by double gating (level and
// derivative above 3 MAD of the pre-onset noise), peak within 200 ms of the
// onset, cumulative-max monotonicization in between.
inline MetricValue attack_time(const HitSegment& seg, const Options& opt = {}) {
    const int fs = seg.samples.sample_rate;
    const auto n_pre = static_cast<std::size_t>(std::llround(seg.onset_offset * fs));
    if (seg.samples.samples.size() < static_cast<std::size_t>(0.060 * fs) ||
        n_pre < static_cast<std::size_t>(opt.attack_min_pre_s * fs)) {
        return MetricValue::failure("too_short");
    }
    const auto env = detail::smoothed_envelope(seg.samples, opt.envelope_sigma_s);
    const auto& v = env.values;
    const std::span<const double> pre(v.data(), n_pre);
    const double mu = stats::median(pre);
    const double sigma = stats::mad(pre);
    const auto grad = detail::central_gradient(v);
    const double sigma_der = stats::mad(std::span<const double>(grad.data(), n_pre));

    std::size_t i_onset = v.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > mu + opt.attack_gate_mads * sigma && grad[i] > opt.attack_gate_mads * sigma_der) {
            i_onset = i;
            break;
        }
    }
    if (i_onset == v.size()) return MetricValue::failure("no_onset");

    const std::size_t window_end = std::min(
        v.size(), i_onset + static_cast<std::size_t>(opt.attack_peak_window_s * fs) + 1);
    std::size_t i_peak = i_onset;
    for (std::size_t i = i_onset; i < window_end; ++i) {
        if (v[i] > v[i_peak]) i_peak = i;
    }
    if (i_peak == i_onset) return MetricValue::of(0.0);

    const double peak = v[i_peak];
    double running = 0.0;
    std::size_t i10 = i_peak, i90 = i_peak;
    bool have10 = false, have90 = false;
    for (std::size_t i = i_onset; i <= i_peak; ++i) {
        running = std::max(running, v[i]);
        if (!have10 && running >= 0.10 * peak) {
            i10 = i;
            have10 = true;
        }
        if (!have90 && running >= 0.90 * peak) {
            i90 = i;
            have90 = true;
            break;
        }
    }
    return MetricValue::of(1000.0 * static_cast<double>(i90 - i10) / fs);
}

// Exponential decay constant (1/s) from hierarchical Theil-Sen fits on the
// cumulative-min normalized envelope in dB. Crossing segments are decimated
// to a bounded point count before the O(n^2) slope enumeration.
inline MetricValue decay_rate(const HitSegment& seg, const Options& opt = {}) {
    const int fs = seg.samples.sample_rate;
    const auto env = detail::smoothed_envelope(seg.samples, opt.envelope_sigma_s);
    const auto& v = env.values;
    if (v.size() < 8) return MetricValue::failure("too_short");
    std::size_t i_peak = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i_peak]) i_peak = i;
    }
    if (v[i_peak] <= 0.0) return MetricValue::failure("no_decay_fit");

    std::vector<double> db(v.size() - i_peak);
    double running = 1.0;
    for (std::size_t j = 0; j < db.size(); ++j) {
        running = std::min(running, v[i_peak + j] / v[i_peak]);
        db[j] = 20.0 * std::log10(std::max(running, 1e-12));
    }

    constexpr double kRanges[3][2] = {{-5.0, -35.0}, {-10.0, -30.0}, {-5.0, -25.0}};
    for (const auto& range : kRanges) {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < db.size(); ++j) {
            if (db[j] <= range[0] && db[j] >= range[1]) idx.push_back(j);
        }
        if (idx.size() < opt.decay_min_points) continue;
        const std::size_t stride = 1 + idx.size() / opt.decay_max_fit_points;
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < idx.size(); k += stride) {
            xs.push_back(static_cast<double>(idx[k]) / fs);
            ys.push_back(db[idx[k]]);
        }
        if (xs.size() < opt.decay_min_points) continue;
        const double m = stats::theil_sen(xs, ys);
        if (m < 0.0 && std::abs(m) > 1e-6) {
            const double lambda = -m * std::numbers::ln10 / 20.0;
            return MetricValue::of(std::clamp(lambda, opt.decay_clip_min, opt.decay_clip_max));
        }
    }
    return MetricValue::failure("no_decay_fit");
}

// Octave-error correction: frequencies above the trigger try divisors
// [2, 3, 4, 6, 8], first quotient inside [80, 1500] Hz wins.
inline double octave_correct(double f0, const Options& opt = {}) {
    if (!(f0 > opt.f0_octave_trigger_hz)) return f0;
    for (const int d : {2, 3, 4, 6, 8}) {
        const double q = f0 / d;
        if (q >= opt.f0_octave_lo_hz && q <= opt.f0_octave_hi_hz) return q;
    }
    return f0;
}

// Two-tier F0: Praat-style autocorrelation over a 300 ms window (10 ms skip),
// falling back to the lowest significant Welch PSD peak in a 20-110 ms window.
inline MetricValue fundamental_frequency(const HitSegment& seg, const Options& opt = {}) {
    const int fs = seg.samples.sample_rate;
    const auto& x = seg.samples.samples;
    if (static_cast<double>(x.size()) / fs < 0.030) return MetricValue::failure("too_short");

    // tier 1: autocorrelation pitch
    {
        const auto start = static_cast<std::size_t>(std::llround((seg.onset_offset + 0.010) * fs));
        const auto stop = std::min(x.size(),
                                   static_cast<std::size_t>(std::llround((seg.onset_offset + 0.310) * fs)));
        const auto frame_len = static_cast<std::size_t>(std::llround(opt.f0_frame_s * fs));
        const auto hop = static_cast<std::size_t>(std::llround(opt.f0_hop_s * fs));
        if (stop > start && stop - start >= frame_len) {
            const std::size_t n_frames = (stop - start - frame_len) / hop + 1;
            std::vector<double> voiced;
            std::vector<double> frame(frame_len);
            for (std::size_t f = 0; f < n_frames; ++f) {
                const std::size_t base = start + f * hop;
                for (std::size_t i = 0; i < frame_len; ++i) frame[i] = x[base + i];
                const double pitch = detail::frame_pitch(frame, fs, opt);
                if (!std::isnan(pitch)) voiced.push_back(pitch);
            }
            const double ratio = n_frames > 0
                ? static_cast<double>(voiced.size()) / static_cast<double>(n_frames) : 0.0;
            if (ratio >= opt.f0_voiced_ratio_min && voiced.size() >= opt.f0_voiced_frames_min) {
                const double f0 = stats::trimmed_mean(voiced, opt.f0_trim_fraction);
                return MetricValue::of(octave_correct(f0, opt));
            }
        }
    }

    // tier 2: modal peak in the Welch PSD
    {
        const auto start = static_cast<std::size_t>(std::llround((seg.onset_offset + 0.020) * fs));
        const auto stop = std::min(x.size(),
                                   static_cast<std::size_t>(std::llround((seg.onset_offset + 0.110) * fs)));
        if (stop > start && stop - start >= 64) {
            AudioClip win;
            win.sample_rate = fs;
            win.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(start),
                               x.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto ps = signal::welch_psd(win, 256, 0.75);
            const double med = stats::median(ps.densities);
            const double threshold = med + opt.f0_fallback_mads * stats::mad(ps.densities);
            for (std::size_t k = 1; k + 1 < ps.densities.size(); ++k) {
                const double f = ps.frequencies[k];
                if (f < opt.f0_fallback_lo_hz || f > opt.f0_fallback_hi_hz) continue;
                if (!(ps.densities[k] > threshold)) continue;
                if (!(ps.densities[k] > opt.f0_fallback_min_contrast * med)) continue;
                if (ps.densities[k] >= ps.densities[k - 1] && ps.densities[k] >= ps.densities[k + 1]) {
                    return MetricValue::of(f);
                }
            }
        }
    }
    return MetricValue::failure("no_pitch");
}

inline MetricValue spectral_centroid(const HitSegment& seg, const Options& opt = {}) {
    return detail::centroid_rolloff(seg, opt).centroid;
}

inline MetricValue spectral_rolloff(const HitSegment& seg, const Options& opt = {}) {
    return detail::centroid_rolloff(seg, opt).rolloff;
}

// Mean positive spectral-magnitude increment over the RMS-normalized attack
// window, MAD-filtered across frames.
inline MetricValue spectral_flux(const HitSegment& seg, const Options& opt = {}) {
    const int fs = seg.samples.sample_rate;
    constexpr std::size_t kFft = 1024;
    constexpr std::size_t kHop = 128;
    const auto& x = seg.samples.samples;
    const auto i0 = static_cast<std::size_t>(std::llround(seg.onset_offset * fs));
    const auto i1 = std::min(x.size(),
                             static_cast<std::size_t>(std::llround((seg.onset_offset + opt.flux_window_s) * fs)));
    if (i1 <= i0 || i1 - i0 < kFft + kHop) return MetricValue::failure("too_short");

    std::vector<double> window(x.begin() + static_cast<std::ptrdiff_t>(i0),
                               x.begin() + static_cast<std::ptrdiff_t>(i1));
    double power = 0.0;
    for (const double v : window) power += v * v;
    const double rms = std::sqrt(power / static_cast<double>(window.size()));
    if (rms <= 0.0) return MetricValue::failure("silent");
    for (auto& v : window) v /= rms;

    const auto spec = signal::stft({std::move(window), fs}, kFft, kHop, signal::Window::hann);
    if (spec.n_frames < 2) return MetricValue::failure("too_short");
    std::vector<double> flux;
    for (std::size_t f = 1; f < spec.n_frames; ++f) {
        double s = 0.0;
        for (std::size_t k = 0; k < spec.n_bins; ++k) {
            s += std::max(0.0, spec.at(f, k) - spec.at(f - 1, k));
        }
        if (s > 0.0) flux.push_back(s);
    }
    if (flux.empty()) return MetricValue::of(0.0);  // perfectly static spectrum

    const double med = stats::median(flux);
    const double fmad = stats::mad(flux);
    std::vector<double> kept;
    for (const double v : flux) {
        if (fmad <= 0.0 || std::abs(v - med) <= opt.flux_mad_filter * fmad) kept.push_back(v);
    }
    return MetricValue::of(stats::mean(kept.empty() ? flux : kept));
}

// RT60 from backward Schroeder integration with hierarchical T30/T20/T10
// least-squares fits (R^2 >= 0.9 required).
inline MetricValue rt60(const AudioClip& clip, const Options& opt = {}) {
    require_analyzable(clip, "rt60");
    const auto& x = clip.samples;
    const int fs = clip.sample_rate;
    if (x.size() < 16) return MetricValue::failure("too_short");

    std::size_t i_peak = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (std::abs(x[i]) > std::abs(x[i_peak])) i_peak = i;
    }
    const double peak_power = x[i_peak] * x[i_peak];
    if (peak_power <= 0.0) return MetricValue::failure("no_rt60");

    const std::size_t tail_start = x.size() - std::max<std::size_t>(1, x.size() / 10);
    double tail_power = 0.0;
    for (std::size_t i = tail_start; i < x.size(); ++i) tail_power += x[i] * x[i];
    tail_power /= static_cast<double>(x.size() - tail_start);
    if (tail_power > 0.0 &&
        10.0 * std::log10(peak_power / tail_power) < opt.rt60_min_peak_excess_db) {
        return MetricValue::failure("no_rt60");
    }

    // backward energy integral from the peak
    std::vector<double> schroeder(x.size() - i_peak);
    double acc = 0.0;
    for (std::size_t j = x.size(); j-- > i_peak;) {
        acc += x[j] * x[j];
        schroeder[j - i_peak] = acc;
    }
    const double total = schroeder[0];
    std::vector<double> db(schroeder.size());
    for (std::size_t j = 0; j < schroeder.size(); ++j) {
        db[j] = 10.0 * std::log10(std::max(schroeder[j] / total, 1e-30));
    }

    // the curve is only trustworthy above the level where just the noisy tail
    // remains under the integral
    double floor_db = -300.0;
    if (tail_start > i_peak) floor_db = db[tail_start - i_peak];

    constexpr double kRanges[3][2] = {{-5.0, -35.0}, {-5.0, -25.0}, {-5.0, -15.0}};
    for (const auto& range : kRanges) {
        if (range[1] < floor_db + opt.rt60_floor_margin_db) continue;
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < db.size(); ++j) {
            if (db[j] <= range[0] && db[j] >= range[1]) {
                xs.push_back(static_cast<double>(j) / fs);
                ys.push_back(db[j]);
            }
        }
        if (xs.size() < opt.rt60_min_points) continue;
        if (xs.back() - xs.front() < opt.rt60_min_duration_s) continue;
        const auto fit = stats::linfit_r2(xs, ys);
        if (fit.r2 >= opt.rt60_min_r2 && fit.slope < 0.0) {
            return MetricValue::of(-60.0 / fit.slope);
        }
    }
    return MetricValue::failure("no_rt60");
}

// Direct-to-reverberant energy ratio in dB: 40 ms direct window from the
// onset, reverberant window capped by the RT60 estimate, both band-limited to
// 125-4000 Hz, clipped to [-20, 40] dB.
inline MetricValue drr(const HitSegment& seg, std::optional<double> rt60_est, const Options& opt = {}) {
    const int fs = seg.samples.sample_rate;
    const auto& raw = seg.samples.samples;
    const auto onset = static_cast<std::size_t>(std::llround(seg.onset_offset * fs));
    const auto direct_end = onset + static_cast<std::size_t>(std::llround(opt.drr_direct_s * fs));
    if (direct_end >= raw.size()) return MetricValue::failure("no_reverb_window");

    double cap_s = opt.drr_reverb_max_s;
    if (rt60_est && !std::isnan(*rt60_est)) {
        cap_s = std::clamp(*rt60_est, opt.drr_reverb_min_s, opt.drr_reverb_max_s);
    }
    const auto reverb_end = std::min(raw.size(),
                                     onset + static_cast<std::size_t>(std::llround(cap_s * fs)));
    if (reverb_end <= direct_end) return MetricValue::failure("no_reverb_window");

    const auto filtered = signal::bandpass(seg.samples, opt.drr_band_lo_hz, opt.drr_band_hi_hz);
    double direct = 0.0, reverb = 0.0;
    for (std::size_t i = onset; i < direct_end; ++i) direct += filtered.samples[i] * filtered.samples[i];
    for (std::size_t i = direct_end; i < reverb_end; ++i) reverb += filtered.samples[i] * filtered.samples[i];

    if (direct <= 0.0 && reverb <= 0.0) return MetricValue::failure("silent");
    double value;
    if (reverb <= 0.0) {
        value = opt.drr_clip_max_db;
    } else if (direct <= 0.0) {
        value = opt.drr_clip_min_db;
    } else {
        value = 10.0 * std::log10(direct / reverb);
    }
    return MetricValue::of(std::clamp(value, opt.drr_clip_min_db, opt.drr_clip_max_db));
}

struct ModulationComponents {
    double cv = 0.0;     // std of the high-passed envelope over its mean
    double pf = 0.0;     // 99th percentile over RMS
    double e_mod = 0.0;  // 4-16 Hz share of the modulation spectrum
    double index = 0.0;  // the combined ModIndex
};

// Component breakdown behind the temporal-modulation index, computed on the
// analytic envelope downsampled to ~200 Hz.
inline ModulationComponents modulation_components(const AudioClip& clip, const Options& opt = {}) {
    const AudioClip work = signal::resample(clip, 16000);

    const auto env = signal::analytic_envelope(work);
    AudioClip env_clip;
    env_clip.sample_rate = work.sample_rate;
    env_clip.samples = env.values;
    const auto target = static_cast<int>(opt.mod_envelope_rate_hz);
    const auto ds = signal::resample(env_clip, target);
    const auto& e = ds.samples;

    ModulationComponents out;
    double env_mean = 0.0;
    for (const double v : e) env_mean += v;
    env_mean /= static_cast<double>(e.size());
    if (env_mean <= 1e-12) return out;  // silence scores 0 across the board

    const auto hp = signal::highpass(e, opt.mod_envelope_rate_hz, opt.mod_highpass_hz);
    double hp_mean = 0.0;
    for (const double v : hp) hp_mean += v;
    hp_mean /= static_cast<double>(hp.size());
    double hp_var = 0.0;
    for (const double v : hp) hp_var += (v - hp_mean) * (v - hp_mean);
    hp_var /= static_cast<double>(hp.size());
    out.cv = std::sqrt(hp_var) / env_mean;

    double rms = 0.0;
    for (const double v : e) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(e.size()));
    out.pf = rms > 0.0 ? detail::percentile(e, 99.0) / rms : 0.0;

    // modulation spectrum of the mean-removed, Hann-tapered envelope
    std::vector<double> centered(e.size());
    const auto w = signal::detail::make_window(signal::Window::hann, e.size());
    for (std::size_t i = 0; i < e.size(); ++i) centered[i] = (e[i] - env_mean) * w[i];
    const auto bins = fft::real_forward(centered);
    double band = 0.0, all_pos = 0.0;
    for (std::size_t k = 1; k < bins.size(); ++k) {
        const double f = static_cast<double>(k) * opt.mod_envelope_rate_hz / static_cast<double>(e.size());
        const double p = std::norm(bins[k]);
        all_pos += p;
        if (f >= opt.mod_band_lo_hz && f <= opt.mod_band_hi_hz) band += p;
    }
    out.e_mod = all_pos > 0.0 ? band / all_pos : 0.0;

    const double cv_norm = std::min(out.cv / opt.mod_cv_norm_div, 1.0);
    const double pf_norm = std::clamp((out.pf - opt.mod_pf_norm_offset) / opt.mod_pf_norm_div, 0.0, 1.0);
    out.index = opt.mod_overall_weight *
                (opt.mod_cv_weight * cv_norm + opt.mod_pf_weight * pf_norm +
                 opt.mod_emod_weight * out.e_mod);
    return out;
}

// ModIndex = 0.85 * (0.4 CV_norm + 0.3 PF_norm + 0.6 E_mod). Silent clips
// score 0.
inline MetricValue temporal_modulation(const AudioClip& clip, const Options& opt = {}) {
    require_analyzable(clip, "temporal_modulation");
    if (clip.duration() < 1.0) return MetricValue::failure("too_short");
    return MetricValue::of(modulation_components(clip, opt).index);
}

namespace detail {

inline MetricValue aggregate_mean(const std::vector<double>& per_hit) {
    std::vector<double> valid;
    std::string reason = "no_valid_hits";
    for (const double v : per_hit) {
        if (!std::isnan(v)) valid.push_back(v);
    }
    if (valid.empty()) return MetricValue::failure(reason);
    return MetricValue::of(stats::mean(valid));
}

inline MetricValue aggregate_median(const std::vector<double>& per_hit, const std::string& fail_reason) {
    std::vector<double> valid;
    for (const double v : per_hit) {
        if (!std::isnan(v)) valid.push_back(v);
    }
    if (valid.empty()) return MetricValue::failure(fail_reason);
    return MetricValue::of(stats::median(valid));
}

}  // namespace detail

// Full per-clip extraction. Uses the given hits when non-empty (ground truth),
// otherwise detects onsets. Fewer than 2 valid hits NaN the six per-hit
// metrics ("insufficient_hits") while RT60, DRR and temporal modulation are
// still computed.
inline MetricVector compute_all(const AudioClip& clip, const onset::HitAnnotations& hits,
                                const Options& opt = {}, const onset::DetectorOptions& det = {}) {
    require_analyzable(clip, "compute_all");
    const AudioClip work = signal::resample(clip, 16000);

    MetricVector out;

    onset::HitAnnotations effective = hits;
    if (effective.times.empty()) {
        try {
            effective.times = onset::detect_onsets(work, det);
            effective.source = onset::AnnotationSource::semi_auto;
        } catch (const Error&) {
            effective.times.clear();
        }
    }
    std::vector<double> valid_hits;
    for (const double t : effective.times) {
        if (t >= 0.0 && t < work.duration()) valid_hits.push_back(t);
    }

    // global metrics first
    {
        const auto tm = temporal_modulation(work, opt);
        out.temporal_modulation = tm;
    }
    const auto clip_rt60 = rt60(work, opt);
    std::optional<double> rt60_hint;
    if (clip_rt60.ok()) rt60_hint = clip_rt60.value;

    if (valid_hits.size() < 2) {
        const auto why = MetricValue::failure("insufficient_hits");
        out.attack_time = why;
        out.decay_rate = why;
        out.f0 = why;
        out.spectral_centroid = why;
        out.spectral_rolloff = why;
        out.spectral_flux = why;

        if (valid_hits.empty()) {
            out.rt60 = clip_rt60;
            out.drr = MetricValue::failure("no_hits");
            return out;
        }
    }

    onset::HitAnnotations anchors;
    anchors.times = valid_hits;
    anchors.source = effective.source;
    const auto segmentation = segment_hits(work, anchors, rt60_hint, opt);
    out.warnings = segmentation.warnings;

    std::vector<double> rt60_hits, drr_hits;
    for (const auto& seg : segmentation.segments) {
        const auto seg_rt60 = rt60(seg.samples, opt);
        rt60_hits.push_back(seg_rt60.value);
        const auto seg_drr = drr(seg, seg_rt60.ok() ? std::optional<double>(seg_rt60.value) : rt60_hint, opt);
        drr_hits.push_back(seg_drr.value);

        if (valid_hits.size() >= 2) {
            out.per_hit.attack_time.push_back(attack_time(seg, opt).value);
            out.per_hit.decay_rate.push_back(decay_rate(seg, opt).value);
            out.per_hit.f0.push_back(fundamental_frequency(seg, opt).value);
            const auto cr = detail::centroid_rolloff(seg, opt);
            out.per_hit.spectral_centroid.push_back(cr.centroid.value);
            out.per_hit.spectral_rolloff.push_back(cr.rolloff.value);
            out.per_hit.spectral_flux.push_back(spectral_flux(seg, opt).value);
        }
    }

    // room acoustics aggregate across hits by median; fall back to the whole
    // clip when no per-hit estimate worked
    out.rt60 = detail::aggregate_median(rt60_hits, "no_rt60");
    if (!out.rt60.ok() && clip_rt60.ok()) out.rt60 = clip_rt60;
    out.drr = detail::aggregate_median(drr_hits, "no_reverb_window");

    if (valid_hits.size() >= 2) {
        out.attack_time = detail::aggregate_mean(out.per_hit.attack_time);
        out.decay_rate = detail::aggregate_mean(out.per_hit.decay_rate);
        out.f0 = detail::aggregate_mean(out.per_hit.f0);
        out.spectral_centroid = detail::aggregate_mean(out.per_hit.spectral_centroid);
        out.spectral_rolloff = detail::aggregate_mean(out.per_hit.spectral_rolloff);
        out.spectral_flux = detail::aggregate_mean(out.per_hit.spectral_flux);
    }
    return out;
}

}  // namespace physaudit::metrics
