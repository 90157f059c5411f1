#pragma once

// Builds a synthetic oracle corpus on disk: reference clips, jittered
// per-seed "generations" for both sides of each test, and a manifest tying
// them together. Construction parameters are the ground truth the audit is
// expected to recover.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "physaudit/signal.hpp"
#include "physaudit/synth.hpp"
#include "physaudit/wav.hpp"

namespace fixture {

namespace synth = physaudit::synth;
using physaudit::AudioClip;

inline AudioClip mix(const std::vector<AudioClip>& parts) {
    AudioClip out = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        for (std::size_t i = 0; i < out.samples.size() && i < parts[p].samples.size(); ++i) {
            out.samples[i] += parts[p].samples[i];
        }
    }
    return out;
}

// jitter in [-amount, amount], deterministic per (seed, salt)
inline double jitter(std::uint32_t seed, std::uint32_t salt, double amount) {
    synth::Rng rng(seed * 7919u + salt);
    return (2.0 * rng.uniform() - 1.0) * amount;
}

struct Maker {
    std::string dir;
    nlohmann::json manifest;

    explicit Maker(const std::string& base_dir) : dir(base_dir) {
        std::filesystem::create_directories(dir + "/gen");
        manifest["clips"] = nlohmann::json::array();
        manifest["pair_tests"] = nlohmann::json::array();
        manifest["single_tests"] = nlohmann::json::array();
        manifest["generations"] = nlohmann::json::array();
    }

    void add_clip(const std::string& id, const AudioClip& clip, const std::vector<double>& hits) {
        physaudit::io::save_wav(dir + "/" + id + ".wav", clip, physaudit::io::WavFormat::pcm16);
        nlohmann::json c;
        c["id"] = id;
        c["audio"] = id + ".wav";
        c["hits"] = hits;
        c["duration"] = clip.duration();
        manifest["clips"].push_back(c);
    }

    std::string add_seed_audio(const std::string& tag, int seed, const AudioClip& clip) {
        const std::string rel = "gen/" + tag + "_" + std::to_string(seed) + ".wav";
        physaudit::io::save_wav(dir + "/" + rel, clip, physaudit::io::WavFormat::pcm16);
        return rel;
    }

    void write_manifest() {
        std::ofstream out(dir + "/manifest.json");
        out << manifest.dump(2) << "\n";
    }

    std::string manifest_path() const { return dir + "/manifest.json"; }
};

// Burst train: noise impacts at the given hit times. `bright` keeps the full
// band; dull ones are low-passed below 1 kHz.
inline AudioClip burst_train(const std::vector<double>& hits, double duration, bool bright,
                             std::uint32_t seed, double amp = 0.5) {
    std::vector<AudioClip> parts;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        parts.push_back(synth::noise_burst(3.0, 18.0, duration, 16000,
                                           seed * 131u + static_cast<std::uint32_t>(i), amp, hits[i]));
    }
    AudioClip clip = mix(parts);
    if (!bright) clip = physaudit::signal::bandpass(clip, 50.0, 1000.0);
    return clip;
}

// Damped-sine train at one frequency (decay oracle) or a frequency sequence
// (pitch-scale oracle).
inline AudioClip tone_train(const std::vector<double>& hits, const std::vector<double>& freqs,
                            double lambda, double duration, std::uint32_t seed, double amp = 0.6) {
    std::vector<AudioClip> parts;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const double f = freqs[i % freqs.size()] * (1.0 + jitter(seed, static_cast<std::uint32_t>(i), 0.002));
        parts.push_back(synth::damped_sine(f, lambda, 2.0, duration, 16000, amp, hits[i]));
    }
    return mix(parts);
}

// Reverberant room response: one onset followed by a noise tail of the given
// RT60.
inline AudioClip room_response(double rt60, double duration, std::uint32_t seed) {
    return synth::reverb_tail(rt60, duration, 16000, seed, 0.55, 0.25);
}

inline std::vector<double> jittered_hits(const std::vector<double>& hits, std::uint32_t seed,
                                         double amount = 0.010) {
    std::vector<double> out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        out.push_back(hits[i] + jitter(seed, 37u + static_cast<std::uint32_t>(i), amount));
    }
    return out;
}

// The full oracle corpus of pair and single tests. `n_seeds` generations per
// side, each a jittered resynthesis.
inline Maker build_audit_corpus(const std::string& base_dir, int n_seeds) {
    Maker mk(base_dir);
    const std::vector<double> three_hits{0.4, 1.4, 2.4};
    const double burst_dur = 3.2;

    // dull vs bright burst trains: centroid and rolloff must increase
    mk.add_clip("dull", burst_train(three_hits, burst_dur, false, 1000), three_hits);
    mk.add_clip("bright", burst_train(three_hits, burst_dur, true, 2000), three_hits);
    {
        nlohmann::json t;
        t["id"] = "pair_brightness";
        t["factual"] = "dull";
        t["counterfactual"] = "bright";
        t["expectations"] = {
            {{"metric", "spectral_centroid"}, {"trend", "increase"}},
            {{"metric", "spectral_rolloff"}, {"trend", "increase"}},
            // deliberately inverted controls
            {{"metric", "spectral_centroid"}, {"trend", "decrease"}},
            {{"metric", "spectral_rolloff"}, {"trend", "decrease"}},
        };
        mk.manifest["pair_tests"].push_back(t);
        nlohmann::json g;
        g["test"] = "pair_brightness";
        g["seeds"] = nlohmann::json::array();
        for (int s = 0; s < n_seeds; ++s) {
            const auto hits_f = jittered_hits(three_hits, 10 + s);
            const auto hits_c = jittered_hits(three_hits, 60 + s);
            nlohmann::json seed;
            seed["seed"] = s;
            seed["factual_audio"] = mk.add_seed_audio(
                "dull", s, burst_train(hits_f, burst_dur, false, 3000 + s));
            seed["counterfactual_audio"] = mk.add_seed_audio(
                "bright", s, burst_train(hits_c, burst_dur, true, 4000 + s));
            g["seeds"].push_back(seed);
        }
        mk.manifest["generations"].push_back(g);
    }

    // short vs long reverberant tail: rt60 up, drr down
    const std::vector<double> one_hit{0.25};
    mk.add_clip("room_short", room_response(0.25, 1.2, 1100), one_hit);
    mk.add_clip("room_long", room_response(1.0, 2.2, 2100), one_hit);
    {
        nlohmann::json t;
        t["id"] = "pair_room";
        t["factual"] = "room_short";
        t["counterfactual"] = "room_long";
        t["expectations"] = {
            {{"metric", "rt60"}, {"trend", "increase"}},
            {{"metric", "drr"}, {"trend", "decrease"}},
            {{"metric", "rt60"}, {"trend", "decrease"}},
            {{"metric", "drr"}, {"trend", "increase"}},
        };
        mk.manifest["pair_tests"].push_back(t);
        nlohmann::json g;
        g["test"] = "pair_room";
        g["seeds"] = nlohmann::json::array();
        for (int s = 0; s < n_seeds; ++s) {
            nlohmann::json seed;
            seed["seed"] = s;
            seed["factual_audio"] = mk.add_seed_audio(
                "room_short", s, room_response(0.25 * (1.0 + jitter(s, 1, 0.05)), 1.2, 5000 + s));
            seed["counterfactual_audio"] = mk.add_seed_audio(
                "room_long", s, room_response(1.0 * (1.0 + jitter(s, 2, 0.05)), 2.2, 6000 + s));
            g["seeds"].push_back(seed);
        }
        mk.manifest["generations"].push_back(g);
    }

    // lambda 2 vs lambda 10: decay rate must increase
    const std::vector<double> two_hits{0.3, 2.4};
    const double tone_dur = 4.5;
    mk.add_clip("damped_slow", tone_train(two_hits, {500.0}, 2.0, tone_dur, 1200), two_hits);
    mk.add_clip("damped_fast", tone_train(two_hits, {500.0}, 10.0, tone_dur, 2200), two_hits);
    {
        nlohmann::json t;
        t["id"] = "pair_damping";
        t["factual"] = "damped_slow";
        t["counterfactual"] = "damped_fast";
        t["expectations"] = {
            {{"metric", "decay_rate"}, {"trend", "increase"}},
            {{"metric", "decay_rate"}, {"trend", "decrease"}},
        };
        mk.manifest["pair_tests"].push_back(t);
        nlohmann::json g;
        g["test"] = "pair_damping";
        g["seeds"] = nlohmann::json::array();
        for (int s = 0; s < n_seeds; ++s) {
            nlohmann::json seed;
            seed["seed"] = s;
            seed["factual_audio"] = mk.add_seed_audio(
                "slow", s, tone_train(jittered_hits(two_hits, 80 + s), {500.0},
                                      2.0 * (1.0 + jitter(s, 3, 0.05)), tone_dur, 7000 + s));
            seed["counterfactual_audio"] = mk.add_seed_audio(
                "fast", s, tone_train(jittered_hits(two_hits, 140 + s), {500.0},
                                      10.0 * (1.0 + jitter(s, 4, 0.05)), tone_dur, 8000 + s));
            g["seeds"].push_back(seed);
        }
        mk.manifest["generations"].push_back(g);
    }

    // identical pair: f0 must not change; shifted pair: the same test must fail
    const std::vector<double> scale_hits{0.3, 1.3, 2.3, 3.3};
    const double scale_dur = 4.3;
    mk.add_clip("tone_ref", tone_train(scale_hits, {440.0}, 6.0, scale_dur, 1300), scale_hits);
    mk.add_clip("tone_same", tone_train(scale_hits, {440.0}, 6.0, scale_dur, 2300), scale_hits);
    mk.add_clip("tone_shifted", tone_train(scale_hits, {484.0}, 6.0, scale_dur, 3300), scale_hits);
    for (const bool shifted : {false, true}) {
        nlohmann::json t;
        t["id"] = shifted ? "pair_shifted" : "pair_same";
        t["factual"] = "tone_ref";
        t["counterfactual"] = shifted ? "tone_shifted" : "tone_same";
        t["expectations"] = {{{"metric", "f0"}, {"trend", "no_change"}}};
        mk.manifest["pair_tests"].push_back(t);
        nlohmann::json g;
        g["test"] = t["id"];
        g["seeds"] = nlohmann::json::array();
        const double cf_freq = shifted ? 484.0 : 440.0;
        for (int s = 0; s < n_seeds; ++s) {
            nlohmann::json seed;
            seed["seed"] = s;
            seed["factual_audio"] = mk.add_seed_audio(
                shifted ? "shift_f" : "same_f", s,
                tone_train(jittered_hits(scale_hits, 200 + s), {440.0}, 6.0, scale_dur, 9000 + s));
            seed["counterfactual_audio"] = mk.add_seed_audio(
                shifted ? "shift_c" : "same_c", s,
                tone_train(jittered_hits(scale_hits, 260 + s), {cf_freq}, 6.0, scale_dur, 9500 + s));
            g["seeds"].push_back(seed);
        }
        mk.manifest["generations"].push_back(g);
    }

    // ascending four-note scale: per-hit f0 sequence must ascend
    mk.add_clip("scale", tone_train(scale_hits, {220.0, 277.18, 329.63, 440.0}, 6.0, scale_dur, 1400),
                scale_hits);
    {
        nlohmann::json t;
        t["id"] = "single_scale";
        t["clip"] = "scale";
        t["expectations"] = {
            {{"metric", "f0"}, {"trend", "ascending"}},
            {{"metric", "f0"}, {"trend", "descending"}},
        };
        mk.manifest["single_tests"].push_back(t);
        nlohmann::json g;
        g["test"] = "single_scale";
        g["seeds"] = nlohmann::json::array();
        for (int s = 0; s < n_seeds; ++s) {
            nlohmann::json seed;
            seed["seed"] = s;
            seed["factual_audio"] = mk.add_seed_audio(
                "scale", s, tone_train(jittered_hits(scale_hits, 320 + s),
                                       {220.0, 277.18, 329.63, 440.0}, 6.0, scale_dur, 11000 + s));
            g["seeds"].push_back(seed);
        }
        mk.manifest["generations"].push_back(g);
    }

    mk.write_manifest();
    return mk;
}

}  // namespace fixture
