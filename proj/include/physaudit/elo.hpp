#pragma once

// ELO aggregation of pairwise human preferences and rank-correlation of
// candidate metrics against the resulting ratings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "physaudit/error.hpp"
#include "physaudit/stats.hpp"

namespace physaudit::elo {

enum class Outcome { a_wins, b_wins, tie };

struct Comparison {
    std::string model_a;
    std::string model_b;
    Outcome outcome = Outcome::tie;
    std::int64_t sequence_index = 0;  // explicit total order; never map iteration order
};

struct Ratings {
    std::map<std::string, double> rating;
    double k_factor = 32.0;

    static constexpr double kInitial = 1500.0;

    void ensure(const std::string& model) { rating.emplace(model, kInitial); }

    double of(const std::string& model) const {
        const auto it = rating.find(model);
        if (it == rating.end()) throw Error("unknown_model", "model '" + model + "' not registered");
        return it->second;
    }
};

// E_A = 1 / (1 + 10^((R_B - R_A)/400))
inline double expected_score(double rating_a, double rating_b) {
    return 1.0 / (1.0 + std::pow(10.0, (rating_b - rating_a) / 400.0));
}

// Simultaneous zero-sum update of both ratings from their pre-update values.
inline void update(Ratings& ratings, const Comparison& comp) {
    if (comp.model_a == comp.model_b) throw Error("self_comparison", "a model cannot face itself");
    const double ra = ratings.of(comp.model_a);
    const double rb = ratings.of(comp.model_b);
    const double ea = expected_score(ra, rb);
    const double eb = expected_score(rb, ra);
    double sa = 0.5, sb = 0.5;
    if (comp.outcome == Outcome::a_wins) {
        sa = 1.0;
        sb = 0.0;
    } else if (comp.outcome == Outcome::b_wins) {
        sa = 0.0;
        sb = 1.0;
    }
    ratings.rating[comp.model_a] = ra + ratings.k_factor * (sa - ea);
    ratings.rating[comp.model_b] = rb + ratings.k_factor * (sb - eb);
}

// Fold updates over the comparisons in sequence_index order.
inline Ratings run_ladder(std::vector<Comparison> comparisons, double k_factor = 32.0) {
    Ratings ratings;
    ratings.k_factor = k_factor;
    for (const auto& c : comparisons) {
        ratings.ensure(c.model_a);
        ratings.ensure(c.model_b);
    }
    std::stable_sort(comparisons.begin(), comparisons.end(),
                     [](const Comparison& a, const Comparison& b) {
                         return a.sequence_index < b.sequence_index;
                     });
    for (const auto& c : comparisons) update(ratings, c);
    return ratings;
}

// |Spearman rho| between a metric's per-model scores and the ELO ratings.
inline double metric_vs_elo(const std::map<std::string, double>& metric_scores,
                            const Ratings& ratings) {
    if (metric_scores.size() < 3) throw Error("insufficient_models", "need at least 3 models");
    if (metric_scores.size() != ratings.rating.size()) {
        throw Error("model_set_mismatch", "metric and rating model sets differ");
    }
    std::vector<double> xs, ys;
    for (const auto& [model, score] : metric_scores) {
        xs.push_back(score);
        ys.push_back(ratings.of(model));  // throws on unknown models
    }
    return std::abs(stats::spearman(xs, ys));
}

}  // namespace physaudit::elo
