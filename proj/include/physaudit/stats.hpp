#pragma once

// Robust estimators shared by the whole pipeline. All functions are pure and
// operate on plain double spans; NaN handling is the caller's job unless a
// function says otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "physaudit/error.hpp"

namespace physaudit::stats {

// Normal-consistency factor: robust_std = kMadToSigma * MAD.
inline constexpr double kMadToSigma = 1.4826;

inline double median(std::span<const double> values) {
    if (values.empty()) throw Error("empty_input", "median of empty range");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double hi = v[mid];
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw Error("empty_input", "mean of empty range");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

inline double mad(std::span<const double> values) {
    const double med = median(values);
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
    return median(dev);
}

struct RobustSummary {
    double median = 0.0;
    double mad = 0.0;
    double robust_std = 0.0;
    std::size_t n = 0;
};

inline RobustSummary robust_summary(std::span<const double> values) {
    RobustSummary s;
    s.median = median(values);
    s.mad = mad(values);
    s.robust_std = kMadToSigma * s.mad;
    s.n = values.size();
    return s;
}

// Median of all pairwise slopes (x-ties skipped).
inline double theil_sen(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("size_mismatch", "theil_sen input lengths differ");
    if (xs.size() < 2) throw Error("insufficient_data", "theil_sen needs at least 2 points");
    std::vector<double> slopes;
    slopes.reserve(xs.size() * (xs.size() - 1) / 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            if (xs[j] != xs[i]) slopes.push_back((ys[j] - ys[i]) / (xs[j] - xs[i]));
        }
    }
    if (slopes.empty()) throw Error("degenerate_x", "theil_sen: all x values equal");
    return median(slopes);
}

inline double trimmed_mean(std::span<const double> values, double fraction) {
    if (fraction < 0.0 || fraction >= 0.5) throw Error("bad_fraction", "trim fraction must be in [0, 0.5)");
    if (values.empty()) throw Error("empty_input", "trimmed_mean of empty range");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(v.size())));
    if (2 * cut >= v.size()) throw Error("empty_after_trim", "nothing left after trimming");
    double s = 0.0;
    for (std::size_t i = cut; i < v.size() - cut; ++i) s += v[i];
    return s / static_cast<double>(v.size() - 2 * cut);
}

namespace detail {

// Average ranks, ties share the mean of their rank positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

// Spearman rho = Pearson correlation of average ranks. NaN when either side
// has zero rank variance.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("size_mismatch", "spearman input lengths differ");
    if (xs.size() < 2) throw Error("insufficient_data", "spearman needs at least 2 points");
    const auto rx = detail::average_ranks(xs);
    const auto ry = detail::average_ranks(ys);
    return detail::pearson(rx, ry);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares with R^2 = 1 - SS_res/SS_tot; constant y gives
// R^2 = 0 so downstream quality gates reject the fit instead of dividing
// by zero.
inline LineFit linfit_r2(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("size_mismatch", "linfit input lengths differ");
    if (xs.size() < 3) throw Error("insufficient_data", "linfit needs at least 3 points");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw Error("degenerate_x", "linfit: zero variance in x");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.slope * xs[i] + fit.intercept;
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

struct MeanInterval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Student-t 95% confidence interval for the mean.
inline MeanInterval mean_ci95(std::span<const double> values) {
    if (values.size() < 2) throw Error("insufficient_data", "mean_ci95 needs at least 2 values");
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double n = static_cast<double>(values.size());
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.975);
    const double half = t * sd / std::sqrt(n);
    return {m, m - half, m + half};
}

}  // namespace physaudit::stats
