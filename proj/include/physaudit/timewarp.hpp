#pragma once

// Anchor-based piecewise-linear time warping: aligns counterfactual event
// timings to their factual partner, producing warped audio and a frame remap
// plan for an external video tool. Audio is plainly resampled per segment, so
// pitch shifts with stretch; that is fine for the synthetic-pair construction
// this exists for.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "physaudit/audio.hpp"
#include "physaudit/error.hpp"
#include "physaudit/signal.hpp"

namespace physaudit::warp {

// Continuous, strictly increasing piecewise-linear map from source time to
// target time. Anchors include the implicit 0 and clip-end points.
struct WarpMap {
    std::vector<double> source_anchors;
    std::vector<double> target_anchors;

    double source_duration() const { return source_anchors.back(); }
    double target_duration() const { return target_anchors.back(); }

    double map(double t) const { return interpolate(source_anchors, target_anchors, t); }
    double inverse_map(double t) const { return interpolate(target_anchors, source_anchors, t); }

    double segment_stretch(std::size_t k) const {
        return (target_anchors[k + 1] - target_anchors[k]) /
               (source_anchors[k + 1] - source_anchors[k]);
    }
    std::size_t segments() const { return source_anchors.size() - 1; }

private:
    static double interpolate(const std::vector<double>& from, const std::vector<double>& to,
                              double t) {
        if (t <= from.front()) return to.front() + (t - from.front());
        if (t >= from.back()) {
            const std::size_t k = from.size() - 2;
            const double slope = (to[k + 1] - to[k]) / (from[k + 1] - from[k]);
            return to.back() + (t - from.back()) * slope;
        }
        const auto it = std::upper_bound(from.begin(), from.end(), t);
        const auto k = static_cast<std::size_t>(it - from.begin()) - 1;
        const double frac = (t - from[k]) / (from[k + 1] - from[k]);
        return to[k] + frac * (to[k + 1] - to[k]);
    }
};

// Anchors are [0] + hits + [end]; the tail after the last hit keeps the last
// inter-hit segment's stretch factor.
inline WarpMap build_warp_map(const std::vector<double>& source_hits,
                              const std::vector<double>& target_hits,
                              double source_duration) {
    if (source_hits.size() != target_hits.size()) {
        throw Error("hit_count_mismatch", "source and target must have equally many hits");
    }
    if (source_hits.empty()) throw Error("empty_hits", "need at least one anchor hit");
    auto check = [&](const std::vector<double>& hits, const char* side) {
        double prev = 0.0;
        for (const double t : hits) {
            if (t <= prev) throw Error("bad_anchors", std::string(side) + " hits must be strictly increasing and > 0");
            prev = t;
        }
    };
    check(source_hits, "source");
    check(target_hits, "target");
    if (source_hits.back() >= source_duration) {
        throw Error("bad_anchors", "last source hit beyond the clip");
    }

    WarpMap m;
    m.source_anchors.push_back(0.0);
    m.target_anchors.push_back(0.0);
    for (std::size_t i = 0; i < source_hits.size(); ++i) {
        m.source_anchors.push_back(source_hits[i]);
        m.target_anchors.push_back(target_hits[i]);
    }
    const std::size_t last = m.source_anchors.size() - 1;
    const double last_stretch = (m.target_anchors[last] - m.target_anchors[last - 1]) /
                                (m.source_anchors[last] - m.source_anchors[last - 1]);
    m.source_anchors.push_back(source_duration);
    m.target_anchors.push_back(m.target_anchors[last] +
                               (source_duration - m.source_anchors[last]) * last_stretch);
    return m;
}

// Per-segment sample-rate conversion along the inverse map. Stretch factors
// outside [0.25, 4] abort (audible-artifact guard).
inline AudioClip warp_audio(const AudioClip& clip, const WarpMap& map) {
    require_analyzable(clip, "warp_audio");
    if (std::abs(map.source_duration() - clip.duration()) > 0.5) {
        throw Error("map_mismatch", "warp map does not cover the clip");
    }
    std::vector<double> stretches(map.segments());
    for (std::size_t k = 0; k < map.segments(); ++k) {
        stretches[k] = map.segment_stretch(k);
        if (stretches[k] < 0.25 || stretches[k] > 4.0) {
            throw Error("extreme_warp", "segment stretch outside [0.25, 4]");
        }
    }

    const int fs = clip.sample_rate;
    AudioClip out;
    out.sample_rate = fs;
    const auto n_out = static_cast<std::size_t>(std::llround(map.target_duration() * fs));
    out.samples.resize(n_out);
    for (std::size_t n = 0; n < n_out; ++n) {
        const double t = static_cast<double>(n) / fs;
        const double s = map.inverse_map(t);
        // local stretch decides the anti-alias cutoff when compressing
        const auto it = std::upper_bound(map.target_anchors.begin(), map.target_anchors.end(), t);
        std::size_t k = it == map.target_anchors.begin()
                            ? 0
                            : static_cast<std::size_t>(it - map.target_anchors.begin()) - 1;
        k = std::min(k, map.segments() - 1);
        const double cutoff = std::min(1.0, stretches[k]);
        out.samples[n] = signal::sinc_interpolate(clip.samples, s * fs, cutoff);
    }
    return out;
}

struct FrameRemapPlan {
    double fps = 0.0;
    std::vector<std::size_t> source_frame_index;  // one entry per target frame
};

// Nearest-source-frame resampling plan for the video stream.
inline FrameRemapPlan frame_remap_plan(const WarpMap& map, double fps, std::size_t n_source_frames) {
    if (fps <= 0.0) throw Error("bad_fps", "fps must be positive");
    if (n_source_frames == 0) throw Error("bad_frames", "no source frames");
    FrameRemapPlan plan;
    plan.fps = fps;
    const auto n_target = static_cast<std::size_t>(std::llround(map.target_duration() * fps));
    plan.source_frame_index.reserve(n_target);
    for (std::size_t j = 0; j < n_target; ++j) {
        const double t = static_cast<double>(j) / fps;
        const double s = map.inverse_map(t);
        const auto idx = static_cast<long long>(std::llround(s * fps));
        plan.source_frame_index.push_back(static_cast<std::size_t>(
            std::clamp<long long>(idx, 0, static_cast<long long>(n_source_frames) - 1)));
    }
    return plan;
}

}  // namespace physaudit::warp
