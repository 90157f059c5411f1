#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "physaudit/config.hpp"
#include "physaudit/manifest.hpp"
#include "physaudit/report.hpp"
#include "physaudit/synth.hpp"
#include "physaudit/wav.hpp"

namespace io = physaudit::io;
namespace synth = physaudit::synth;
using physaudit::AudioClip;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("16-bit full-scale square decodes to +-32767/32768") {
    AudioClip clip;
    clip.sample_rate = 16000;
    for (int i = 0; i < 64; ++i) clip.samples.push_back(i % 2 == 0 ? 32767.0 / 32768.0 : -1.0);
    const auto path = temp_path("pa_square.wav");
    io::save_wav(path, clip, io::WavFormat::pcm16);
    const auto back = io::load_wav(path);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (std::size_t i = 0; i < back.samples.size(); ++i) {
        CHECK(back.samples[i] == (i % 2 == 0 ? 32767.0 / 32768.0 : -1.0));
    }
}

TEST_CASE("stereo opposite channels cancel to silence") {
    // hand-build a 2-channel 16-bit file: L = max, R = -max
    std::vector<std::uint8_t> bytes;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
    };
    auto u16 = [&](std::uint16_t v) {
        bytes.push_back(v & 0xff);
        bytes.push_back((v >> 8) & 0xff);
    };
    const std::uint32_t frames = 10;
    bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
    u32(36 + frames * 4);
    bytes.insert(bytes.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    u32(16);
    u16(1);
    u16(2);  // stereo
    u32(8000);
    u32(8000 * 4);
    u16(4);
    u16(16);
    bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
    u32(frames * 4);
    for (std::uint32_t f = 0; f < frames; ++f) {
        u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(20000)));
        u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(-20000)));
    }
    const auto path = temp_path("pa_stereo.wav");
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

    const auto clip = io::load_wav(path);
    REQUIRE(clip.samples.size() == frames);
    for (const double s : clip.samples) CHECK(s == 0.0);
}

TEST_CASE("truncated data chunk raises a typed error") {
    AudioClip clip = synth::silence(0.1, 8000);
    const auto path = temp_path("pa_trunc.wav");
    io::save_wav(path, clip, io::WavFormat::pcm16);
    auto bytes = slurp(path);
    bytes.resize(bytes.size() - 37);  // cut into the data chunk
    std::ofstream(path, std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    try {
        io::load_wav(path);
        FAIL("expected an error");
    } catch (const physaudit::Error& e) {
        CHECK(e.code() == "truncated_data");
    }
}

TEST_CASE("wav round trip is bit exact per PCM width") {
    const auto clip = synth::damped_sine(440.0, 5.0, 2.0, 0.2, 16000);
    for (const auto fmt : {io::WavFormat::pcm8, io::WavFormat::pcm16, io::WavFormat::pcm24,
                           io::WavFormat::pcm32, io::WavFormat::float32}) {
        const auto p1 = temp_path("pa_rt1.wav");
        const auto p2 = temp_path("pa_rt2.wav");
        io::save_wav(p1, clip, fmt);
        const auto loaded = io::load_wav(p1);
        io::save_wav(p2, loaded, fmt);
        const auto b1 = slurp(p1);
        const auto b2 = slurp(p2);
        REQUIRE(b1.size() == b2.size());
        CHECK(b1 == b2);
        // loading either file yields identical samples
        const auto again = io::load_wav(p2);
        REQUIRE(again.samples.size() == loaded.samples.size());
        for (std::size_t i = 0; i < again.samples.size(); ++i) {
            CHECK(again.samples[i] == loaded.samples[i]);
        }
    }
}

TEST_CASE("non-wav bytes are rejected") {
    const auto path = temp_path("pa_not_wav.bin");
    std::ofstream(path) << "definitely not audio";
    CHECK_THROWS_AS(io::load_wav(path), physaudit::Error);
    CHECK_THROWS_AS(io::load_wav(temp_path("pa_missing_file.wav")), physaudit::Error);
}

TEST_CASE("synth output is reproducible for a fixed seed") {
    const auto a = synth::noise_burst(2.0, 10.0, 0.3, 16000, 42);
    const auto b = synth::noise_burst(2.0, 10.0, 0.3, 16000, 42);
    CHECK(a.samples == b.samples);
    const auto c = synth::noise_burst(2.0, 10.0, 0.3, 16000, 43);
    CHECK(a.samples != c.samples);
}

TEST_CASE("minimal manifest loads and resolves") {
    nlohmann::json doc;
    doc["clips"] = {{{"id", "c1"}, {"audio", "c1.wav"}, {"hits", {0.5, 1.5}}, {"duration", 2.0}},
                    {{"id", "c2"}, {"audio", "c2.wav"}, {"hits", {0.4, 1.4, 2.2}}, {"duration", 3.0}}};
    doc["pair_tests"] = {{{"id", "t1"},
                          {"factual", "c1"},
                          {"counterfactual", "c2"},
                          {"expectations", {{{"metric", "spectral_centroid"}, {"trend", "increase"}}}}}};
    doc["single_tests"] = {{{"id", "s1"},
                            {"clip", "c2"},
                            {"expectations", {{{"metric", "f0"}, {"trend", "ascending"}}}}}};
    doc["generations"] = {{{"test", "t1"},
                           {"seeds", {{{"seed", 0},
                                       {"factual_audio", "gen/t1_f_0.wav"},
                                       {"counterfactual_audio", "gen/t1_c_0.wav"},
                                       {"semantic_factual", 0.8}}}}}};
    const auto corpus = io::parse_manifest(doc, ".");
    CHECK(corpus.clips.size() == 2);
    CHECK(corpus.pair_tests.size() == 1);
    CHECK(corpus.single_tests.size() == 1);
    REQUIRE(corpus.generations.size() == 1);
    CHECK(corpus.generations[0].seeds[0].semantic_factual == 0.8);
    CHECK(corpus.clip("c1") != nullptr);
    CHECK(corpus.clip("zzz") == nullptr);
}

TEST_CASE("manifest validation reports JSON paths") {
    nlohmann::json doc;
    doc["clips"] = {{{"id", "c1"}, {"audio", "c1.wav"}, {"hits", {0.5, 1.5}}, {"duration", 2.0}},
                    {{"id", "c2"}, {"audio", "c2.wav"}, {"hits", {0.4}}, {"duration", 3.0}}};
    doc["pair_tests"] = {{{"id", "t1"},
                          {"factual", "c1"},
                          {"counterfactual", "ghost"},
                          {"expectations", {{{"metric", "rt60"}, {"trend", "increase"}}}}},
                         {{"id", "t2"},
                          {"factual", "c1"},
                          {"counterfactual", "c2"},
                          {"expectations", {{{"metric", "rt60"}, {"trend", "increase"}}}}}};
    try {
        io::parse_manifest(doc, ".");
        FAIL("expected validation to fail");
    } catch (const physaudit::Error& e) {
        const std::string what = e.what();
        CHECK(what.find("/pair_tests/0/counterfactual") != std::string::npos);
        CHECK(what.find("ghost") != std::string::npos);
        // counterfactual with fewer hits than factual cites the pairing rule
        CHECK(what.find("/pair_tests/1/counterfactual") != std::string::npos);
        CHECK(what.find("at least as many annotated hits") != std::string::npos);
    }
}

TEST_CASE("manifest rejects invalid trends and semantic ranges") {
    nlohmann::json doc;
    doc["clips"] = {{{"id", "c1"}, {"audio", "c1.wav"}, {"hits", {0.5}}, {"duration", 2.0}}};
    doc["single_tests"] = {{{"id", "s1"},
                            {"clip", "c1"},
                            {"expectations", {{{"metric", "rt60"}, {"trend", "ascending"}},
                                              {{"metric", "f0"}, {"trend", "increase"}}}}}};
    doc["generations"] = {{{"test", "s1"},
                           {"seeds", {{{"seed", 0},
                                       {"factual_audio", "a.wav"},
                                       {"semantic_factual", 1.7}}}}}};
    try {
        io::parse_manifest(doc, ".");
        FAIL("expected validation to fail");
    } catch (const physaudit::Error& e) {
        const std::string what = e.what();
        CHECK(what.find("per-hit") != std::string::npos);
        CHECK(what.find("counterfactual pair") != std::string::npos);
        CHECK(what.find("semantic") != std::string::npos);
    }
}

TEST_CASE("report JSON round-trips") {
    io::AuditReport report;
    physaudit::audit::TestVerdict v;
    v.metric = "spectral_centroid";
    v.trend = physaudit::audit::Trend::increase;
    v.confidence = 0.85;
    v.n_seeds = 10;
    v.n_votes_pass = 8;
    v.n_failures = 1;
    v.tau = 12.5;
    report.verdicts.push_back({"case_a", v});
    v.metric = "f0";
    v.tau = std::numeric_limits<double>::quiet_NaN();
    report.verdicts.push_back({"case_a", v});
    io::AlignmentRow row;
    row.id = "case_a";
    row.n_seeds = 10;
    row.coverage_mean = 92.0;
    row.coverage_ci_half = 3.5;
    row.timing_error_mean_ms = 14.0;
    row.timing_error_ci_half_ms = 2.0;
    row.perfect_align = 60.0;
    report.alignment.push_back(row);
    report.quarantined.push_back("case_b: boom");

    const auto j1 = io::report_to_json(report);
    const auto back = io::report_from_json(j1);
    const auto j2 = io::report_to_json(back);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("CSV emission is stable and header-only when empty") {
    io::AuditReport empty;
    CHECK(io::verdicts_csv(empty) == "case,metric,trend,confidence,n_seeds,n_votes_pass,n_failures,tau\n");

    physaudit::audit::TestVerdict v;
    v.metric = "rt60";
    v.trend = physaudit::audit::Trend::increase;
    v.confidence = 0.5;
    v.n_seeds = 4;
    v.n_votes_pass = 2;
    v.n_failures = 1;
    v.tau = 0.125;
    io::AuditReport one;
    one.verdicts.push_back({"k", v});
    const auto csv = io::verdicts_csv(one);
    CHECK(csv.find("k,rt60,increase,0.500000,4,2,1,0.125000\n") != std::string::npos);

    const auto per_metric = io::per_metric_csv(one);
    CHECK(per_metric.find("rt60,0.500000,1") != std::string::npos);
    CHECK(per_metric.find("f0,,0") != std::string::npos);
}

TEST_CASE("config files parse with overrides and validation") {
    const auto path = temp_path("pa_config.txt");
    std::ofstream(path) << "# tuning\n"
                        << "onset.tolerance_min_s = 0.12\n"
                        << "audit.jnd.f0 = 0.02\n"
                        << "audit.pooled_tau = true\n"
                        << "run.jobs = 3\n";
    const auto cfg = physaudit::load_config(path);
    CHECK(cfg.detector.tolerance_min_s == 0.12);
    CHECK(cfg.audit.jnd.at("f0") == 0.02);
    CHECK(cfg.audit.pooled_tau);
    CHECK(cfg.jobs == 3);
    // defaults stay put
    CHECK(cfg.detector.tolerance_max_s == 0.25);

    std::ofstream(path) << "no.such.key = 1\n";
    CHECK_THROWS_AS(physaudit::load_config(path), physaudit::Error);
    std::ofstream(path) << "run.jobs = banana\n";
    CHECK_THROWS_AS(physaudit::load_config(path), physaudit::Error);
}
