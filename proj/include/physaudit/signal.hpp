#pragma once

// Deterministic DSP primitives: band-limited resampling, STFT, envelopes,
// Welch PSD, zero-phase Butterworth filtering. Everything here is a pure
// function over immutable inputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"
#include "physaudit/fft.hpp"

namespace physaudit::signal {

enum class Window { hann, rect };

namespace detail {

inline std::vector<double> make_window(Window kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (kind == Window::hann) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        }
    }
    return w;
}

inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = 0.5 * x;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

inline double sinc(double u) {
    if (std::abs(u) < 1e-12) return 1.0;
    const double pu = std::numbers::pi * u;
    return std::sin(pu) / pu;
}

// Mirror index with edge inclusion (…b a | a b c | c b…).
inline std::size_t mirror_index(long long i, std::size_t n) {
    const long long nn = static_cast<long long>(n);
    while (i < 0 || i >= nn) {
        if (i < 0) i = -i - 1;
        if (i >= nn) i = 2 * nn - 1 - i;
    }
    return static_cast<std::size_t>(i);
}

struct Biquad {
    double b0, b1, b2, a1, a2;
};

inline Biquad butter_lowpass(double fc, double fs) {
    const double w0 = 2.0 * std::numbers::pi * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0,
            -2.0 * c / a0, (1.0 - alpha) / a0};
}

inline Biquad butter_highpass(double fc, double fs) {
    const double w0 = 2.0 * std::numbers::pi * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0,
            -2.0 * c / a0, (1.0 - alpha) / a0};
}

inline void biquad_forward(const Biquad& q, std::vector<double>& x) {
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
        const double in = v;
        const double out = q.b0 * in + q.b1 * x1 + q.b2 * x2 - q.a1 * y1 - q.a2 * y2;
        x2 = x1; x1 = in;
        y2 = y1; y1 = out;
        v = out;
    }
}

// Zero-phase: odd-reflection padding, filter forward, reverse, filter, reverse.
inline std::vector<double> filtfilt(const Biquad& q, const std::vector<double>& x, std::size_t pad) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    pad = std::min(pad, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    biquad_forward(q, ext);
    std::reverse(ext.begin(), ext.end());
    biquad_forward(q, ext);
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace detail

// Band-limited sample interpolation at fractional position `pos` (in samples),
// windowed sinc with Kaiser taper. `cutoff` in (0, 1] is the low-pass cutoff
// as a fraction of the input Nyquist. Out-of-range taps read as zero.
inline double sinc_interpolate(const std::vector<double>& x, double pos, double cutoff,
                               int half_taps = 16, double kaiser_beta = 8.0) {
    const double scale = std::min(1.0, cutoff);
    const double support = static_cast<double>(half_taps) / scale;
    const long long lo = static_cast<long long>(std::ceil(pos - support));
    const long long hi = static_cast<long long>(std::floor(pos + support));
    const double i0_beta = detail::bessel_i0(kaiser_beta);
    double acc = 0.0, ksum = 0.0;
    for (long long i = lo; i <= hi; ++i) {
        const double u = (static_cast<double>(i) - pos) * scale;
        const double frac = u / static_cast<double>(half_taps);
        if (std::abs(frac) >= 1.0) continue;
        const double k = detail::sinc(u) *
                         detail::bessel_i0(kaiser_beta * std::sqrt(1.0 - frac * frac)) / i0_beta;
        ksum += k;
        if (i >= 0 && i < static_cast<long long>(x.size())) acc += x[static_cast<std::size_t>(i)] * k;
    }
    return ksum != 0.0 ? acc / ksum : 0.0;
}

// Windowed-sinc resampler (Kaiser beta=8, 32 taps per phase). Same-rate input
// is returned unchanged, bit for bit.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw Error("bad_rate", "resample: target rate must be positive");
    require_analyzable(clip, "resample");
    if (clip.sample_rate == target_rate) return clip;

    const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
    const auto n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(clip.samples.size()) * ratio));
    AudioClip out;
    out.sample_rate = target_rate;
    out.samples.resize(std::max<std::size_t>(n_out, 1));
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        const double pos = static_cast<double>(n) / ratio;
        out.samples[n] = sinc_interpolate(clip.samples, pos, ratio);
    }
    return out;
}

// STFT magnitudes. No center padding: frame f covers samples
// [f*hop, f*hop + window_len).
inline Spectrogram stft(const AudioClip& clip, std::size_t window_len, std::size_t hop,
                        Window window = Window::hann) {
    require_analyzable(clip, "stft");
    if (hop == 0 || hop > window_len) throw Error("bad_hop", "stft: need 0 < hop <= window_len");
    if (window_len > clip.samples.size()) throw Error("clip_too_short", "stft: clip shorter than window");

    const std::size_t n_frames = (clip.samples.size() - window_len) / hop + 1;
    const std::size_t n_bins = window_len / 2 + 1;
    const auto w = detail::make_window(window, window_len);

    Spectrogram spec;
    spec.n_frames = n_frames;
    spec.n_bins = n_bins;
    spec.frame_period = static_cast<double>(hop) / clip.sample_rate;
    spec.magnitudes.resize(n_frames * n_bins);
    spec.bin_frequencies.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        spec.bin_frequencies[k] = static_cast<double>(k) * clip.sample_rate / static_cast<double>(window_len);
    }

    std::vector<double> frame(window_len);
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t i = 0; i < window_len; ++i) frame[i] = clip.samples[f * hop + i] * w[i];
        const auto bins = fft::real_forward(frame);
        for (std::size_t k = 0; k < n_bins; ++k) spec.at(f, k) = std::abs(bins[k]);
    }
    return spec;
}

// Frame-wise RMS across frequency bins.
inline Envelope rms_envelope(const Spectrogram& spec) {
    if (spec.n_frames == 0 || spec.n_bins == 0) throw Error("empty_input", "rms_envelope: empty spectrogram");
    Envelope env;
    env.rate = 1.0 / spec.frame_period;
    env.values.resize(spec.n_frames);
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
        double s = 0.0;
        for (std::size_t k = 0; k < spec.n_bins; ++k) s += spec.at(f, k) * spec.at(f, k);
        env.values[f] = std::sqrt(s / static_cast<double>(spec.n_bins));
    }
    return env;
}

// Magnitude of the analytic signal, frequency-domain method (zero the negative
// frequencies, double the positive ones).
inline Envelope analytic_envelope(const AudioClip& clip) {
    require_analyzable(clip, "analytic_envelope");
    const std::size_t n = clip.samples.size();
    Envelope env;
    env.rate = clip.sample_rate;
    env.values.resize(n);
    if (n == 1) {
        env.values[0] = std::abs(clip.samples[0]);
        return env;
    }
    std::vector<fft::cplx> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = fft::cplx(clip.samples[i], 0.0);
    fft::transform(a, false);
    const std::size_t half = n / 2;
    if (n % 2 == 0) {
        for (std::size_t k = 1; k < half; ++k) a[k] *= 2.0;
        for (std::size_t k = half + 1; k < n; ++k) a[k] = 0.0;
    } else {
        for (std::size_t k = 1; k <= half; ++k) a[k] *= 2.0;
        for (std::size_t k = half + 1; k < n; ++k) a[k] = 0.0;
    }
    fft::transform(a, true);
    for (std::size_t i = 0; i < n; ++i) env.values[i] = std::abs(a[i]);
    return env;
}

// Discrete Gaussian smoothing, kernel truncated at +-4 sigma, mirrored edges.
// sigma = 0 returns the input unchanged.
inline Envelope gaussian_smooth(const Envelope& env, double sigma_seconds) {
    if (sigma_seconds < 0.0) throw Error("bad_sigma", "gaussian_smooth: sigma must be >= 0");
    if (sigma_seconds == 0.0 || env.values.empty()) return env;
    const double sigma = sigma_seconds * env.rate;
    const auto radius = static_cast<long long>(std::ceil(4.0 * sigma));
    if (radius == 0) return env;

    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (long long i = -radius; i <= radius; ++i) {
        const double u = static_cast<double>(i) / sigma;
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * u * u);
        ksum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (auto& k : kernel) k /= ksum;

    Envelope out;
    out.rate = env.rate;
    out.values.resize(env.values.size());
    const auto n = static_cast<long long>(env.values.size());
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long j = -radius; j <= radius; ++j) {
            acc += kernel[static_cast<std::size_t>(j + radius)] *
                   env.values[detail::mirror_index(i + j, env.values.size())];
        }
        out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

// Welch averaged periodogram, Hann taper, density scaling (the integral over
// frequency approximates the mean signal power). A clip shorter than one
// segment degrades to a single tapered periodogram of the whole clip.
inline PowerSpectrum welch_psd(const AudioClip& clip, std::size_t segment_len, double overlap) {
    require_analyzable(clip, "welch_psd");
    if (overlap < 0.0 || overlap >= 1.0) throw Error("bad_overlap", "welch_psd: overlap must be in [0, 1)");
    if (segment_len < 2) throw Error("bad_segment", "welch_psd: segment too short");
    if (clip.samples.size() < segment_len) segment_len = clip.samples.size();

    const auto hop = std::max<std::size_t>(1,
        static_cast<std::size_t>(std::llround(static_cast<double>(segment_len) * (1.0 - overlap))));
    const auto w = detail::make_window(Window::hann, segment_len);
    double u = 0.0;
    for (double v : w) u += v * v;

    const std::size_t n_bins = segment_len / 2 + 1;
    std::vector<double> acc(n_bins, 0.0);
    std::size_t count = 0;
    std::vector<double> seg(segment_len);
    for (std::size_t start = 0; start + segment_len <= clip.samples.size(); start += hop) {
        for (std::size_t i = 0; i < segment_len; ++i) seg[i] = clip.samples[start + i] * w[i];
        const auto bins = fft::real_forward(seg);
        for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(bins[k]);
        ++count;
        if (start + segment_len == clip.samples.size()) break;
    }

    PowerSpectrum ps;
    ps.densities.resize(n_bins);
    ps.frequencies.resize(n_bins);
    const double scale = 1.0 / (static_cast<double>(count) * clip.sample_rate * u);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const bool edge = (k == 0) || (segment_len % 2 == 0 && k == n_bins - 1);
        ps.densities[k] = acc[k] * scale * (edge ? 1.0 : 2.0);
        ps.frequencies[k] = static_cast<double>(k) * clip.sample_rate / static_cast<double>(segment_len);
    }
    return ps;
}

// Zero-phase band filter: 2nd-order Butterworth high-pass at `lo` cascaded
// with 2nd-order low-pass at `hi`, each applied forward-backward.
inline AudioClip bandpass(const AudioClip& clip, double lo, double hi) {
    require_analyzable(clip, "bandpass");
    const double nyquist = 0.5 * clip.sample_rate;
    if (!(0.0 < lo && lo < hi && hi < nyquist)) {
        throw Error("invalid_band", "bandpass: need 0 < lo < hi < Nyquist");
    }
    const auto pad = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(clip.samples.size() - 1), std::max(24.0, 2.0 * clip.sample_rate / lo)));
    auto y = detail::filtfilt(detail::butter_highpass(lo, clip.sample_rate), clip.samples, pad);
    y = detail::filtfilt(detail::butter_lowpass(hi, clip.sample_rate), y, pad);
    return {std::move(y), clip.sample_rate};
}

// Zero-phase 2nd-order Butterworth high-pass on a raw value sequence.
inline std::vector<double> highpass(const std::vector<double>& values, double rate, double fc) {
    if (values.empty()) return {};
    if (!(fc > 0.0 && fc < 0.5 * rate)) throw Error("invalid_band", "highpass: cutoff out of range");
    const auto pad = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(values.size() - 1), std::max(24.0, 2.0 * rate / fc)));
    return detail::filtfilt(detail::butter_highpass(fc, rate), values, pad);
}

}  // namespace physaudit::signal
