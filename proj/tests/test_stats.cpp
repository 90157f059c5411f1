#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "physaudit/stats.hpp"

namespace st = physaudit::stats;

namespace {

// Brute-force oracles, kept deliberately separate from the implementation:
// sort-based median, full pairwise slope list, rank-then-Pearson.
double oracle_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_theil_sen(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> slopes;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            if (x[i] != x[j]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
        }
    }
    return oracle_median(slopes);
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0.0, equal = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++less;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = less + 0.5 * (equal + 1.0);
    }
    return ranks;
}

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = oracle_ranks(x);
    const auto ry = oracle_ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("mad handles constants, outliers and singletons") {
    CHECK(st::mad(std::vector<double>{1, 1, 1}) == 0.0);
    CHECK(st::mad(std::vector<double>{1, 2, 3, 4, 100}) == 1.0);
    CHECK(st::mad(std::vector<double>{7.5}) == 0.0);
    CHECK_THROWS_AS(st::mad(std::vector<double>{}), physaudit::Error);
}

TEST_CASE("robust_summary applies the 1.4826 consistency factor") {
    const auto s = st::robust_summary(std::vector<double>{1, 2, 3, 4, 100});
    CHECK(s.median == 3.0);
    CHECK(s.mad == 1.0);
    CHECK(s.robust_std == Catch::Approx(1.4826));
    CHECK(s.n == 5);
}

TEST_CASE("theil_sen is exact on lines and robust to one outlier") {
    std::vector<double> xs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> line(10), outl(10);
    for (std::size_t i = 0; i < 10; ++i) {
        line[i] = 3.0 * xs[i] + 1.0;
        outl[i] = 2.0 * xs[i];
    }
    outl[4] += 500.0;
    CHECK(st::theil_sen(xs, line) == 3.0);
    CHECK(st::theil_sen(xs, outl) == 2.0);

    const std::vector<double> x2{1.0, 4.0}, y2{2.0, 11.0};
    CHECK(st::theil_sen(x2, y2) == 3.0);

    const std::vector<double> same{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(st::theil_sen(same, line), physaudit::Error);
}

TEST_CASE("theil_sen matches the brute-force oracle on random instances") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + gen() % 12;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = dist(gen);
            y[i] = dist(gen);
        }
        CHECK(st::theil_sen(x, y) == Catch::Approx(oracle_theil_sen(x, y)).margin(1e-12));
    }
}

TEST_CASE("theil_sen equivariance: slope(x, a*y + b) = a*slope(x, y)") {
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    std::vector<double> x(8), y(8);
    for (std::size_t i = 0; i < 8; ++i) {
        x[i] = static_cast<double>(i);
        y[i] = dist(gen);
    }
    const double base = st::theil_sen(x, y);
    for (const double a : {-2.0, 0.5, 3.0}) {
        std::vector<double> ty(8);
        for (std::size_t i = 0; i < 8; ++i) ty[i] = a * y[i] + 7.0;
        CHECK(st::theil_sen(x, ty) == Catch::Approx(a * base).margin(1e-12));
    }
}

TEST_CASE("trimmed_mean drops symmetric tails") {
    const std::vector<double> v{0, 10, 10, 10, 1000};
    CHECK(st::trimmed_mean(v, 0.2) == 10.0);
    CHECK(st::trimmed_mean(v, 0.0) == Catch::Approx(206.0));
    CHECK(st::trimmed_mean(std::vector<double>{4.0, 4.0, 4.0}, 0.1) == 4.0);
    CHECK_THROWS_AS(st::trimmed_mean(v, 0.5), physaudit::Error);
    CHECK_THROWS_AS(st::trimmed_mean(std::vector<double>{}, 0.1), physaudit::Error);
}

TEST_CASE("trimmed_mean and mad are translation and scale equivariant") {
    std::mt19937 gen(23);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::vector<double> v(11);
    for (auto& x : v) x = dist(gen);
    const double tm = st::trimmed_mean(v, 0.1);
    const double md = st::mad(v);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = -3.0 * v[i] + 2.0;
    CHECK(st::trimmed_mean(w, 0.1) == Catch::Approx(-3.0 * tm + 2.0).margin(1e-12));
    CHECK(st::mad(w) == Catch::Approx(3.0 * md).margin(1e-12));
}

TEST_CASE("spearman on monotone and reversed data") {
    const std::vector<double> up{1, 2, 3, 5, 9};
    std::vector<double> up2{0.1, 0.5, 0.6, 2.0, 30.0};
    CHECK(st::spearman(up, up2) == Catch::Approx(1.0));
    std::vector<double> neg(up.size());
    for (std::size_t i = 0; i < up.size(); ++i) neg[i] = -up[i];
    CHECK(st::spearman(up, neg) == Catch::Approx(-1.0));
    CHECK(st::spearman(up, up) == Catch::Approx(1.0));
    CHECK(std::isnan(st::spearman(std::vector<double>{1, 1, 1}, std::vector<double>{4, 5, 6})));
}

TEST_CASE("spearman matches the brute-force oracle on random instances") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + gen() % 16;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = dist(gen);
            y[i] = dist(gen);
        }
        // ties with some probability
        if (trial % 3 == 0 && n > 2) {
            x[1] = x[0];
            y[n - 1] = y[n - 2];
        }
        CHECK(st::spearman(x, y) == Catch::Approx(oracle_spearman(x, y)).margin(1e-12));
    }
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> dist(0.1, 5.0);
    std::vector<double> x(9), y(9);
    for (std::size_t i = 0; i < 9; ++i) {
        x[i] = dist(gen);
        y[i] = dist(gen);
    }
    const double base = st::spearman(x, y);
    std::vector<double> tx(9), ty(9);
    for (std::size_t i = 0; i < 9; ++i) {
        tx[i] = std::exp(x[i]);
        ty[i] = 5.0 * y[i] + 1.0;
    }
    CHECK(st::spearman(tx, ty) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("linfit_r2 on exact, noisy and degenerate data") {
    std::vector<double> xs(100), exact(100);
    for (std::size_t i = 0; i < 100; ++i) {
        xs[i] = static_cast<double>(i);
        exact[i] = -0.7 * xs[i] + 3.0;
    }
    const auto fit = st::linfit_r2(xs, exact);
    CHECK(fit.slope == Catch::Approx(-0.7).margin(1e-12));
    CHECK(fit.intercept == Catch::Approx(3.0).margin(1e-10));
    CHECK(fit.r2 == Catch::Approx(1.0).margin(1e-12));

    std::mt19937 gen(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> ys(100);
    for (auto& y : ys) y = noise(gen);
    const auto nf = st::linfit_r2(xs, ys);
    CHECK(std::abs(nf.slope) < 0.05);
    CHECK(nf.r2 < 0.2);

    const std::vector<double> flat(10, 4.0);
    std::vector<double> x10(10);
    for (std::size_t i = 0; i < 10; ++i) x10[i] = static_cast<double>(i);
    CHECK(st::linfit_r2(x10, flat).r2 == 0.0);
    CHECK_THROWS_AS(st::linfit_r2(flat, x10), physaudit::Error);
}

TEST_CASE("mean_ci95 uses the Student t quantile") {
    const std::vector<double> constant(5, 2.5);
    const auto c = st::mean_ci95(constant);
    CHECK(c.mean == 2.5);
    CHECK(c.lo == Catch::Approx(2.5));
    CHECK(c.hi == Catch::Approx(2.5));

    // n = 10 hand computation with t_{0.975,9} = 2.2621571627409915
    const std::vector<double> sample{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    double m = 5.5;
    double ss = 0.0;
    for (const double v : sample) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / 9.0);
    const double half = 2.2621571627409915 * sd / std::sqrt(10.0);
    const auto ci = st::mean_ci95(sample);
    CHECK(ci.mean == Catch::Approx(m).margin(1e-12));
    CHECK(ci.lo == Catch::Approx(m - half).margin(1e-9));
    CHECK(ci.hi == Catch::Approx(m + half).margin(1e-9));

    // symmetric data -> symmetric interval
    const std::vector<double> sym{-3.0, -1.0, 1.0, 3.0};
    const auto s = st::mean_ci95(sym);
    CHECK(s.mean == Catch::Approx(0.0).margin(1e-12));
    CHECK(s.lo == Catch::Approx(-s.hi).margin(1e-12));

    CHECK_THROWS_AS(st::mean_ci95(std::vector<double>{1.0}), physaudit::Error);
}
