#pragma once

// Statistical voting over generation seeds with soft quality gating. Each
// test case carries directional expectations; seeds vote pass/fail per
// expectation and votes are combined into a quality-weighted Confidence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "physaudit/error.hpp"
#include "physaudit/metrics.hpp"
#include "physaudit/onset.hpp"
#include "physaudit/stats.hpp"

namespace physaudit::audit {

enum class Trend { increase, decrease, ascending, descending, no_change };

inline const char* trend_name(Trend t) {
    switch (t) {
        case Trend::increase: return "increase";
        case Trend::decrease: return "decrease";
        case Trend::ascending: return "ascending";
        case Trend::descending: return "descending";
        case Trend::no_change: return "no_change";
    }
    return "?";
}

inline Trend trend_from_name(const std::string& name) {
    if (name == "increase") return Trend::increase;
    if (name == "decrease") return Trend::decrease;
    if (name == "ascending") return Trend::ascending;
    if (name == "descending") return Trend::descending;
    if (name == "no_change") return Trend::no_change;
    throw Error("unknown_trend", "no trend named '" + name + "'");
}

struct DirectionalExpectation {
    std::string metric;
    Trend trend = Trend::increase;
};

struct SeedObservation {
    std::string seed_id;
    metrics::MetricVector metrics_factual;
    std::optional<metrics::MetricVector> metrics_counterfactual;
    std::optional<onset::AlignmentScores> alignment_factual;
    std::optional<onset::AlignmentScores> alignment_counterfactual;
    std::optional<double> semantic_factual;
    std::optional<double> semantic_counterfactual;
};

enum class Vote { pass, fail_direction, fail_subthreshold, fail_nan };

struct TestVerdict {
    std::string metric;
    Trend trend = Trend::increase;
    double confidence = 0.0;
    std::size_t n_seeds = 0;
    std::size_t n_votes_pass = 0;
    std::size_t n_failures = 0;  // NaN / sub-threshold / insufficient-hit seeds
    double tau = std::numeric_limits<double>::quiet_NaN();
};

struct Options {
    double tau_mean_fraction = 0.02;
    double tau_robust_fraction = 0.25;
    double tau_eq_factor = 1.5;
    // Spearman gate for monotonic trends
    double rho_short = 0.40;   // n <= 4
    double rho_mid = 0.30;     // 5 <= n <= 7
    double rho_long = 0.25;    // n >= 8
    // per-metric JND thresholds for single-video no-change tests; drr is an
    // absolute dB tolerance, the rest are robust coefficients of variation
    std::map<std::string, double> jnd{
        {"f0", 0.01},
        {"spectral_centroid", 0.05},
        {"spectral_rolloff", 0.05},
        {"attack_time", 0.10},
        {"decay_rate", 0.10},
        {"spectral_flux", 0.15},
        {"temporal_modulation", 0.15},
        {"rt60", 0.10},
    };
    double jnd_drr_db = 1.0;
    // tau from the pooled factual+counterfactual distribution instead of the
    // factual side only
    bool pooled_tau = false;
    // divide confidence by seed count instead of the weight sum
    bool unweighted_denominator = false;
};

// tau = max(2% of |mean|, 25% of robust_std) over the per-seed values of the
// reference condition.
inline double effect_threshold(const std::vector<double>& factual_values,
                               const Options& opt = {}) {
    std::vector<double> valid;
    for (const double v : factual_values) {
        if (!std::isnan(v)) valid.push_back(v);
    }
    if (valid.size() < 2) throw Error("insufficient_seeds", "effect_threshold needs >= 2 valid values");
    const double m = std::abs(stats::mean(valid));
    const double rs = stats::robust_summary(valid).robust_std;
    return std::max(opt.tau_mean_fraction * m, opt.tau_robust_fraction * rs);
}

inline Vote vote_pair(double factual, double counterfactual, Trend trend, double tau) {
    if (trend != Trend::increase && trend != Trend::decrease) {
        throw Error("bad_trend", "vote_pair handles increase/decrease only");
    }
    if (std::isnan(factual) || std::isnan(counterfactual) || std::isnan(tau)) return Vote::fail_nan;
    const double delta = counterfactual - factual;
    if (std::abs(delta) <= tau) return Vote::fail_subthreshold;
    const bool up = delta > 0.0;
    return up == (trend == Trend::increase) ? Vote::pass : Vote::fail_direction;
}

inline double monotonic_rho_threshold(std::size_t n, const Options& opt = {}) {
    if (n <= 4) return opt.rho_short;
    if (n <= 7) return opt.rho_mid;
    return opt.rho_long;
}

enum class MonotonicVote { pass, fail_direction, fail_insufficient };

// Per-hit sequence trend test in log2 space: sign of the difference for two
// hits, Spearman rho against hit index with length-adaptive thresholds for
// three or more.
inline MonotonicVote vote_monotonic(const std::vector<double>& per_hit_values, Trend trend,
                                    const Options& opt = {}) {
    if (trend != Trend::ascending && trend != Trend::descending) {
        throw Error("bad_trend", "vote_monotonic handles ascending/descending only");
    }
    std::vector<double> logs;
    std::vector<double> index;
    for (std::size_t i = 0; i < per_hit_values.size(); ++i) {
        const double v = per_hit_values[i];
        if (std::isnan(v) || v <= 0.0) continue;
        logs.push_back(std::log2(v));
        index.push_back(static_cast<double>(i));
    }
    if (logs.size() < 2) return MonotonicVote::fail_insufficient;
    const double sign = trend == Trend::ascending ? 1.0 : -1.0;
    if (logs.size() == 2) {
        const double diff = logs[1] - logs[0];
        return sign * diff > 0.0 ? MonotonicVote::pass : MonotonicVote::fail_direction;
    }
    const double rho = stats::spearman(index, logs);
    if (std::isnan(rho)) return MonotonicVote::fail_direction;
    const double threshold = monotonic_rho_threshold(logs.size(), opt);
    return (sign * rho > 0.0 && std::abs(rho) >= threshold) ? MonotonicVote::pass
                                                            : MonotonicVote::fail_direction;
}

// Equivalence test for pair no-change: the 95% CI of the mean delta must sit
// inside [-tau_eq, tau_eq].
inline bool vote_no_change_pair(const std::vector<double>& deltas, double tau_eq) {
    std::vector<double> valid;
    for (const double d : deltas) {
        if (!std::isnan(d)) valid.push_back(d);
    }
    if (valid.size() < 2) return false;
    const auto ci = stats::mean_ci95(valid);
    return ci.lo >= -tau_eq && ci.hi <= tau_eq;
}

// Within-clip consistency: robust CV (or absolute spread for dB-valued DRR)
// against the metric's JND threshold.
inline bool vote_no_change_single(const std::vector<double>& per_hit_values,
                                  const std::string& metric, const Options& opt = {}) {
    std::vector<double> valid;
    for (const double v : per_hit_values) {
        if (!std::isnan(v)) valid.push_back(v);
    }
    if (valid.size() < 2) return false;
    const auto summary = stats::robust_summary(valid);
    if (metric == "drr") return summary.robust_std <= opt.jnd_drr_db;
    if (summary.median == 0.0) return false;
    const auto it = opt.jnd.find(metric);
    if (it == opt.jnd.end()) throw Error("unknown_metric", "no JND threshold for '" + metric + "'");
    return summary.robust_std / std::abs(summary.median) <= it->second;
}

// Soft quality gate: w = 0.5 * w_temporal + 0.5 * w_semantic. Pair tests take
// the minimum across the factual/counterfactual sides; a missing semantic
// score defaults to 1 (semantic models live outside this artifact); with no
// alignment data the weight falls back to the available components, or 0.5
// when nothing is known.
inline double quality_weight(const SeedObservation& obs) {
    std::optional<double> w_temporal;
    if (obs.alignment_factual && obs.alignment_counterfactual) {
        w_temporal = std::min(obs.alignment_factual->hit_coverage,
                              obs.alignment_counterfactual->hit_coverage) / 100.0;
    } else if (obs.alignment_factual) {
        w_temporal = obs.alignment_factual->hit_coverage / 100.0;
    } else if (obs.alignment_counterfactual) {
        w_temporal = obs.alignment_counterfactual->hit_coverage / 100.0;
    }

    std::optional<double> w_semantic;
    if (obs.semantic_factual && obs.semantic_counterfactual) {
        w_semantic = std::min(*obs.semantic_factual, *obs.semantic_counterfactual);
    } else if (obs.semantic_factual) {
        w_semantic = *obs.semantic_factual;
    } else if (obs.semantic_counterfactual) {
        w_semantic = *obs.semantic_counterfactual;
    }

    if (w_temporal) return 0.5 * *w_temporal + 0.5 * w_semantic.value_or(1.0);
    if (w_semantic) return *w_semantic;
    return 0.5;
}

// Weighted pass proportion with every seed kept in the denominator.
inline double confidence(const std::vector<bool>& votes, const std::vector<double>& weights,
                         const Options& opt = {}) {
    if (votes.size() != weights.size()) throw Error("size_mismatch", "confidence: votes vs weights");
    if (votes.empty()) throw Error("empty_input", "confidence: no votes");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < votes.size(); ++i) {
        num += votes[i] ? weights[i] : 0.0;
        den += weights[i];
    }
    if (opt.unweighted_denominator) den = static_cast<double>(votes.size());
    return den > 0.0 ? num / den : 0.0;
}

// Run every expectation of one test case over its seeds.
inline std::vector<TestVerdict> run_test(const std::vector<SeedObservation>& seeds,
                                         const std::vector<DirectionalExpectation>& expectations,
                                         const Options& opt = {}) {
    if (seeds.size() < 2) throw Error("insufficient_seeds", "run_test needs >= 2 seeds");
    const bool is_pair = seeds.front().metrics_counterfactual.has_value();
    for (const auto& s : seeds) {
        if (s.metrics_counterfactual.has_value() != is_pair) {
            throw Error("inconsistent_seeds", "seed '" + s.seed_id +
                        "' mixes pair and single observations");
        }
    }

    std::vector<double> weights;
    weights.reserve(seeds.size());
    for (const auto& s : seeds) weights.push_back(quality_weight(s));

    std::vector<TestVerdict> verdicts;
    for (const auto& exp : expectations) {
        TestVerdict v;
        v.metric = exp.metric;
        v.trend = exp.trend;
        v.n_seeds = seeds.size();

        switch (exp.trend) {
            case Trend::increase:
            case Trend::decrease: {
                if (!is_pair) throw Error("trend_requires_pair",
                                          "increase/decrease expectations need counterfactual seeds");
                std::vector<double> reference;
                for (const auto& s : seeds) {
                    reference.push_back(s.metrics_factual.by_name(exp.metric).value);
                    if (opt.pooled_tau) {
                        reference.push_back(s.metrics_counterfactual->by_name(exp.metric).value);
                    }
                }
                double tau = std::numeric_limits<double>::quiet_NaN();
                try {
                    tau = effect_threshold(reference, opt);
                } catch (const Error&) {
                    // fewer than two valid reference values: every vote fails as NaN
                }
                v.tau = tau;
                std::vector<bool> votes;
                for (const auto& s : seeds) {
                    const Vote vote = vote_pair(s.metrics_factual.by_name(exp.metric).value,
                                                s.metrics_counterfactual->by_name(exp.metric).value,
                                                exp.trend, tau);
                    votes.push_back(vote == Vote::pass);
                    if (vote == Vote::pass) ++v.n_votes_pass;
                    if (vote == Vote::fail_nan || vote == Vote::fail_subthreshold) ++v.n_failures;
                }
                v.confidence = confidence(votes, weights, opt);
                break;
            }
            case Trend::ascending:
            case Trend::descending: {
                if (!metrics::is_per_hit_metric(exp.metric)) {
                    throw Error("not_per_hit", "'" + exp.metric + "' has no per-hit sequence");
                }
                std::vector<bool> votes;
                for (const auto& s : seeds) {
                    const auto vote = vote_monotonic(s.metrics_factual.per_hit_by_name(exp.metric),
                                                     exp.trend, opt);
                    votes.push_back(vote == MonotonicVote::pass);
                    if (vote == MonotonicVote::pass) ++v.n_votes_pass;
                    if (vote == MonotonicVote::fail_insufficient) ++v.n_failures;
                }
                v.confidence = confidence(votes, weights, opt);
                break;
            }
            case Trend::no_change: {
                if (is_pair) {
                    std::vector<double> reference, deltas;
                    for (const auto& s : seeds) {
                        const double f = s.metrics_factual.by_name(exp.metric).value;
                        const double c = s.metrics_counterfactual->by_name(exp.metric).value;
                        reference.push_back(f);
                        if (opt.pooled_tau) reference.push_back(c);
                        deltas.push_back(c - f);
                        if (std::isnan(f) || std::isnan(c)) ++v.n_failures;
                    }
                    double tau = std::numeric_limits<double>::quiet_NaN();
                    try {
                        tau = effect_threshold(reference, opt);
                    } catch (const Error&) {
                    }
                    v.tau = tau;
                    const bool pass = !std::isnan(tau) &&
                                      vote_no_change_pair(deltas, opt.tau_eq_factor * tau);
                    v.confidence = pass ? 1.0 : 0.0;
                    if (pass) v.n_votes_pass = seeds.size() - v.n_failures;
                } else {
                    if (!metrics::is_per_hit_metric(exp.metric)) {
                        throw Error("not_per_hit", "'" + exp.metric + "' has no per-hit sequence");
                    }
                    std::vector<bool> votes;
                    for (const auto& s : seeds) {
                        std::vector<double> valid;
                        for (const double x : s.metrics_factual.per_hit_by_name(exp.metric)) {
                            if (!std::isnan(x)) valid.push_back(x);
                        }
                        const bool pass = vote_no_change_single(
                            s.metrics_factual.per_hit_by_name(exp.metric), exp.metric, opt);
                        votes.push_back(pass);
                        if (pass) ++v.n_votes_pass;
                        if (valid.size() < 2) ++v.n_failures;
                    }
                    v.confidence = confidence(votes, weights, opt);
                }
                break;
            }
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace physaudit::audit
