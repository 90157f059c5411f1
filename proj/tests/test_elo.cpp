#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "physaudit/elo.hpp"

namespace elo = physaudit::elo;

TEST_CASE("expected_score follows the logistic formula") {
    CHECK(elo::expected_score(1500.0, 1500.0) == 0.5);
    CHECK(elo::expected_score(1900.0, 1500.0) == Catch::Approx(10.0 / 11.0).margin(1e-12));
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> dist(1000.0, 2000.0);
    for (int i = 0; i < 50; ++i) {
        const double a = dist(gen), b = dist(gen);
        CHECK(elo::expected_score(a, b) + elo::expected_score(b, a) ==
              Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("update moves equal ratings by exactly K/2") {
    elo::Ratings r;
    r.ensure("a");
    r.ensure("b");
    elo::update(r, {"a", "b", elo::Outcome::a_wins, 0});
    CHECK(r.of("a") == Catch::Approx(1516.0).margin(1e-12));
    CHECK(r.of("b") == Catch::Approx(1484.0).margin(1e-12));
}

TEST_CASE("ties between equals change nothing") {
    elo::Ratings r;
    r.ensure("a");
    r.ensure("b");
    elo::update(r, {"a", "b", elo::Outcome::tie, 0});
    CHECK(r.of("a") == 1500.0);
    CHECK(r.of("b") == 1500.0);
}

TEST_CASE("a favourite gains little for beating an underdog") {
    elo::Ratings r;
    r.rating["top"] = 1900.0;
    r.rating["bottom"] = 1500.0;
    elo::update(r, {"top", "bottom", elo::Outcome::a_wins, 0});
    CHECK(r.of("top") == Catch::Approx(1900.0 + 32.0 / 11.0).margin(1e-9));
    CHECK(r.of("bottom") == Catch::Approx(1500.0 - 32.0 / 11.0).margin(1e-9));
}

TEST_CASE("update rejects unknown models and self-play") {
    elo::Ratings r;
    r.ensure("a");
    CHECK_THROWS_AS(elo::update(r, {"a", "ghost", elo::Outcome::a_wins, 0}), physaudit::Error);
    CHECK_THROWS_AS(elo::update(r, {"a", "a", elo::Outcome::tie, 0}), physaudit::Error);
}

TEST_CASE("empty ladder keeps everyone at 1500") {
    const auto r = elo::run_ladder({});
    CHECK(r.rating.empty());
    const auto single = elo::run_ladder({{"x", "y", elo::Outcome::a_wins, 0}});
    CHECK(single.of("x") == Catch::Approx(1516.0));
    CHECK(single.of("y") == Catch::Approx(1484.0));
}

TEST_CASE("ladder conserves total rating over 1000 random comparisons") {
    const std::vector<std::string> models{"m0", "m1", "m2", "m3", "m4"};
    std::mt19937 gen(42);
    std::vector<elo::Comparison> comps;
    for (int i = 0; i < 1000; ++i) {
        const auto a = gen() % models.size();
        auto b = gen() % models.size();
        while (b == a) b = gen() % models.size();
        const auto outcome = static_cast<elo::Outcome>(gen() % 3);
        comps.push_back({models[a], models[b], outcome, i});
    }
    const auto r = elo::run_ladder(comps);
    double total = 0.0;
    for (const auto& [name, rating] : r.rating) total += rating;
    CHECK(total == Catch::Approx(1500.0 * 5.0).margin(1e-6));
}

TEST_CASE("each update is bounded by K and zero-sum") {
    std::mt19937 gen(5);
    elo::Ratings r;
    r.ensure("a");
    r.ensure("b");
    r.ensure("c");
    const std::vector<std::string> names{"a", "b", "c"};
    for (int i = 0; i < 200; ++i) {
        const auto ia = gen() % 3;
        auto ib = gen() % 3;
        while (ib == ia) ib = gen() % 3;
        const double before_a = r.of(names[ia]);
        const double before_b = r.of(names[ib]);
        elo::update(r, {names[ia], names[ib], static_cast<elo::Outcome>(gen() % 3), i});
        const double da = r.of(names[ia]) - before_a;
        const double db = r.of(names[ib]) - before_b;
        CHECK(std::abs(da) <= 32.0 + 1e-12);
        CHECK(da + db == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("ladder order matters and is honored via sequence_index") {
    std::vector<elo::Comparison> comps{
        {"a", "b", elo::Outcome::a_wins, 1},
        {"b", "c", elo::Outcome::a_wins, 0},
    };
    const auto r1 = elo::run_ladder(comps);
    std::swap(comps[0].sequence_index, comps[1].sequence_index);
    const auto r2 = elo::run_ladder(comps);
    CHECK(r1.of("b") != r2.of("b"));
}

TEST_CASE("metric_vs_elo is 1 for rating-aligned and anti-aligned metrics") {
    elo::Ratings r;
    r.rating = {{"a", 1600.0}, {"b", 1500.0}, {"c", 1400.0}, {"d", 1450.0}};
    std::map<std::string, double> aligned;
    for (const auto& [name, rating] : r.rating) aligned[name] = rating;
    CHECK(elo::metric_vs_elo(aligned, r) == Catch::Approx(1.0));

    std::map<std::string, double> inverted;
    for (const auto& [name, rating] : r.rating) inverted[name] = -rating;
    CHECK(elo::metric_vs_elo(inverted, r) == Catch::Approx(1.0));

    std::map<std::string, double> partial{{"a", 3.0}, {"b", 1.0}, {"c", 2.0}, {"d", 4.0}};
    // hand ranking: metric ranks a=3,b=1,c=2,d=4 vs rating ranks a=4,b=3,c=1,d=2
    // spearman = 1 - 6*sum(d^2)/(n(n^2-1)) with d = (-1,-2,1,2) -> 1 - 60/60 = 0
    CHECK(elo::metric_vs_elo(partial, r) == Catch::Approx(0.0).margin(1e-12));

    std::map<std::string, double> wrong{{"a", 1.0}, {"b", 2.0}};
    CHECK_THROWS_AS(elo::metric_vs_elo(wrong, r), physaudit::Error);
}
