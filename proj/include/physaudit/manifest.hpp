#pragma once

// Corpus data model and JSON manifest loading. Validation is total: a
// manifest either yields a fully validated corpus or an error listing every
// violation with its JSON path.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "physaudit/audit.hpp"
#include "physaudit/error.hpp"
#include "physaudit/metrics.hpp"
#include "physaudit/onset.hpp"

namespace physaudit::io {

struct ClipRecord {
    std::string id;
    std::string audio_path;
    onset::HitAnnotations hits;
    std::string caption;
    double duration = 0.0;
};

struct PairTest {
    std::string id;
    std::string factual_id;
    std::string counterfactual_id;
    std::vector<audit::DirectionalExpectation> expectations;
};

struct SingleTest {
    std::string id;
    std::string clip_id;
    std::vector<audit::DirectionalExpectation> expectations;
};

struct SeedPaths {
    std::string seed_id;
    std::string factual_audio;
    std::optional<std::string> counterfactual_audio;
    std::optional<double> semantic_factual;
    std::optional<double> semantic_counterfactual;
};

struct GenerationSet {
    std::string test_id;
    std::vector<SeedPaths> seeds;
};

struct Corpus {
    std::string base_dir;
    std::vector<ClipRecord> clips;
    std::vector<PairTest> pair_tests;
    std::vector<SingleTest> single_tests;
    std::vector<GenerationSet> generations;

    const ClipRecord* clip(const std::string& id) const {
        for (const auto& c : clips) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }
    const PairTest* pair_test(const std::string& id) const {
        for (const auto& t : pair_tests) {
            if (t.id == id) return &t;
        }
        return nullptr;
    }
    const SingleTest* single_test(const std::string& id) const {
        for (const auto& t : single_tests) {
            if (t.id == id) return &t;
        }
        return nullptr;
    }
};

namespace detail {

class ManifestChecker {
public:
    void fail(const std::string& path, const std::string& why) {
        problems_.push_back(path + ": " + why);
    }
    void finish() const {
        if (problems_.empty()) return;
        std::string all;
        for (const auto& p : problems_) {
            all += "\n  " + p;
        }
        throw Error("invalid_manifest", "manifest validation failed:" + all);
    }
    bool ok() const { return problems_.empty(); }

private:
    std::vector<std::string> problems_;
};

inline std::vector<audit::DirectionalExpectation> parse_expectations(
    const nlohmann::json& arr, const std::string& path, ManifestChecker& check) {
    std::vector<audit::DirectionalExpectation> out;
    if (!arr.is_array() || arr.empty()) {
        check.fail(path, "expectations must be a non-empty array");
        return out;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        const auto& e = arr[i];
        if (!e.is_object() || !e.contains("metric") || !e.contains("trend")) {
            check.fail(p, "expectation needs 'metric' and 'trend'");
            continue;
        }
        audit::DirectionalExpectation exp;
        exp.metric = e["metric"].get<std::string>();
        const auto& names = metrics::metric_names();
        if (std::find(names.begin(), names.end(), exp.metric) == names.end()) {
            check.fail(p + "/metric", "unknown metric '" + exp.metric + "'");
            continue;
        }
        try {
            exp.trend = audit::trend_from_name(e["trend"].get<std::string>());
        } catch (const Error&) {
            check.fail(p + "/trend", "unknown trend '" + e["trend"].get<std::string>() + "'");
            continue;
        }
        out.push_back(exp);
    }
    return out;
}

}  // namespace detail

inline Corpus parse_manifest(const nlohmann::json& doc, const std::string& base_dir) {
    detail::ManifestChecker check;
    Corpus corpus;
    corpus.base_dir = base_dir;

    std::set<std::string> clip_ids, test_ids;

    if (doc.contains("clips")) {
        const auto& clips = doc["clips"];
        for (std::size_t i = 0; i < clips.size(); ++i) {
            const std::string p = "/clips/" + std::to_string(i);
            const auto& c = clips[i];
            ClipRecord rec;
            if (!c.contains("id") || !c.contains("audio")) {
                check.fail(p, "clip needs 'id' and 'audio'");
                continue;
            }
            rec.id = c["id"].get<std::string>();
            rec.audio_path = c["audio"].get<std::string>();
            if (!clip_ids.insert(rec.id).second) {
                check.fail(p + "/id", "duplicate clip id '" + rec.id + "'");
            }
            if (c.contains("duration")) rec.duration = c["duration"].get<double>();
            if (c.contains("caption")) rec.caption = c["caption"].get<std::string>();
            if (c.contains("hit_source") && c["hit_source"].get<std::string>() == "semi_auto") {
                rec.hits.source = onset::AnnotationSource::semi_auto;
            }
            if (c.contains("hits")) {
                double prev = -1.0;
                for (std::size_t h = 0; h < c["hits"].size(); ++h) {
                    const double t = c["hits"][h].get<double>();
                    if (t <= prev) {
                        check.fail(p + "/hits/" + std::to_string(h), "hit times must be strictly increasing");
                    }
                    if (rec.duration > 0.0 && t > rec.duration) {
                        check.fail(p + "/hits/" + std::to_string(h), "hit beyond clip duration");
                    }
                    rec.hits.times.push_back(t);
                    prev = t;
                }
            }
            corpus.clips.push_back(std::move(rec));
        }
    }

    if (doc.contains("pair_tests")) {
        const auto& tests = doc["pair_tests"];
        for (std::size_t i = 0; i < tests.size(); ++i) {
            const std::string p = "/pair_tests/" + std::to_string(i);
            const auto& t = tests[i];
            PairTest test;
            if (!t.contains("id") || !t.contains("factual") || !t.contains("counterfactual")) {
                check.fail(p, "pair test needs 'id', 'factual' and 'counterfactual'");
                continue;
            }
            test.id = t["id"].get<std::string>();
            test.factual_id = t["factual"].get<std::string>();
            test.counterfactual_id = t["counterfactual"].get<std::string>();
            if (!test_ids.insert(test.id).second) check.fail(p + "/id", "duplicate test id");
            const auto* fact = corpus.clip(test.factual_id);
            const auto* cf = corpus.clip(test.counterfactual_id);
            if (fact == nullptr) check.fail(p + "/factual", "unknown clip '" + test.factual_id + "'");
            if (cf == nullptr) check.fail(p + "/counterfactual", "unknown clip '" + test.counterfactual_id + "'");
            if (fact != nullptr && cf != nullptr &&
                cf->hits.times.size() < fact->hits.times.size()) {
                check.fail(p + "/counterfactual",
                           "counterfactual must have at least as many annotated hits as the factual clip");
            }
            test.expectations = detail::parse_expectations(t.value("expectations", nlohmann::json::array()),
                                                           p + "/expectations", check);
            for (std::size_t e = 0; e < test.expectations.size(); ++e) {
                const auto tr = test.expectations[e].trend;
                if (tr == audit::Trend::ascending || tr == audit::Trend::descending) {
                    check.fail(p + "/expectations/" + std::to_string(e),
                               "ascending/descending trends belong to single-video tests");
                }
            }
            corpus.pair_tests.push_back(std::move(test));
        }
    }

    if (doc.contains("single_tests")) {
        const auto& tests = doc["single_tests"];
        for (std::size_t i = 0; i < tests.size(); ++i) {
            const std::string p = "/single_tests/" + std::to_string(i);
            const auto& t = tests[i];
            SingleTest test;
            if (!t.contains("id") || !t.contains("clip")) {
                check.fail(p, "single test needs 'id' and 'clip'");
                continue;
            }
            test.id = t["id"].get<std::string>();
            test.clip_id = t["clip"].get<std::string>();
            if (!test_ids.insert(test.id).second) check.fail(p + "/id", "duplicate test id");
            if (corpus.clip(test.clip_id) == nullptr) {
                check.fail(p + "/clip", "unknown clip '" + test.clip_id + "'");
            }
            test.expectations = detail::parse_expectations(t.value("expectations", nlohmann::json::array()),
                                                           p + "/expectations", check);
            for (std::size_t e = 0; e < test.expectations.size(); ++e) {
                const auto& exp = test.expectations[e];
                const std::string ep = p + "/expectations/" + std::to_string(e);
                if (exp.trend == audit::Trend::increase || exp.trend == audit::Trend::decrease) {
                    check.fail(ep, "increase/decrease trends need a counterfactual pair");
                } else if (!metrics::is_per_hit_metric(exp.metric)) {
                    check.fail(ep, "'" + exp.metric + "' has no per-hit sequence for single-video tests");
                }
            }
            corpus.single_tests.push_back(std::move(test));
        }
    }

    if (doc.contains("generations")) {
        const auto& gens = doc["generations"];
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const std::string p = "/generations/" + std::to_string(i);
            const auto& g = gens[i];
            GenerationSet set;
            if (!g.contains("test") || !g.contains("seeds")) {
                check.fail(p, "generation set needs 'test' and 'seeds'");
                continue;
            }
            set.test_id = g["test"].get<std::string>();
            const bool is_pair = corpus.pair_test(set.test_id) != nullptr;
            const bool is_single = corpus.single_test(set.test_id) != nullptr;
            if (!is_pair && !is_single) {
                check.fail(p + "/test", "unknown test '" + set.test_id + "'");
                continue;
            }
            for (std::size_t s = 0; s < g["seeds"].size(); ++s) {
                const std::string sp = p + "/seeds/" + std::to_string(s);
                const auto& seed = g["seeds"][s];
                SeedPaths sd;
                sd.seed_id = seed.contains("seed") ? to_string(seed["seed"]) : std::to_string(s);
                if (!seed.contains("factual_audio")) {
                    check.fail(sp, "seed needs 'factual_audio'");
                    continue;
                }
                sd.factual_audio = seed["factual_audio"].get<std::string>();
                if (seed.contains("counterfactual_audio")) {
                    sd.counterfactual_audio = seed["counterfactual_audio"].get<std::string>();
                }
                if (is_pair && !sd.counterfactual_audio) {
                    check.fail(sp, "pair-test seed needs 'counterfactual_audio'");
                }
                if (is_single && sd.counterfactual_audio) {
                    check.fail(sp, "single-test seed must not carry 'counterfactual_audio'");
                }
                for (const char* key : {"semantic_factual", "semantic_counterfactual"}) {
                    if (!seed.contains(key)) continue;
                    const double v = seed[key].get<double>();
                    if (v < 0.0 || v > 1.0) {
                        check.fail(sp + "/" + key, "semantic scores live in [0, 1]");
                    }
                    if (std::string(key) == "semantic_factual") {
                        sd.semantic_factual = v;
                    } else {
                        sd.semantic_counterfactual = v;
                    }
                }
                set.seeds.push_back(std::move(sd));
            }
            if (set.seeds.empty()) check.fail(p + "/seeds", "generation set has no seeds");
            corpus.generations.push_back(std::move(set));
        }
    }

    check.finish();
    return corpus;
}

inline Corpus load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("file_not_found", "cannot open manifest '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_manifest", std::string("JSON parse error: ") + e.what());
    }
    std::string base = path;
    const auto slash = base.find_last_of('/');
    base = slash == std::string::npos ? std::string(".") : base.substr(0, slash);
    return parse_manifest(doc, base);
}

}  // namespace physaudit::io
