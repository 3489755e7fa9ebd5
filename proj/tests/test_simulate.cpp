#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "rfx/simulate.hpp"

using namespace rfx;

namespace {

GeneratorSpec pareto_spec(std::vector<Index> dims, std::uint64_t seed) {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::iid_pareto;
    s.alpha = 1.0;
    s.shape = LatticeShape{std::move(dims), 1};
    s.seed = seed;
    return s;
}

GeneratorSpec temporal_maxima_spec(std::vector<Index> dims, std::uint64_t seed) {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::max_moving_maxima;
    s.shape = LatticeShape{std::move(dims), 1};
    s.seed = seed;
    const std::size_t d = s.shape.rank();
    Coord at(d, 0);
    s.weights.push_back({at, 1.0});
    at[d - 1] = 1;
    s.weights.push_back({at, 1.0});
    return s;
}

} // namespace

TEST_CASE("field generation is deterministic", "[simulate]") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::gaussian_iid;
    s.shape = LatticeShape{{4, 4, 4}, 1};
    s.seed = 42;
    const Field a = generate_field(s);
    const Field b = generate_field(s);
    REQUIRE(a.raw().size() == b.raw().size());
    for (std::size_t i = 0; i < a.raw().size(); ++i) {
        CHECK(a.raw()[i] == b.raw()[i]);
    }
}

TEST_CASE("generator spec validation", "[simulate]") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::max_moving_maxima;
    s.shape = LatticeShape{{4, 4}, 1};
    CHECK_THROWS_AS(s.validate(), param_error); // no window
    s.weights.push_back({{0, 0}, 0.0});
    CHECK_THROWS_AS(s.validate(), param_error); // no positive weight
    s.weights.push_back({{0}, 1.0});
    CHECK_THROWS_AS(s.validate(), param_error); // rank mismatch
    s.weights.clear();
    s.weights.push_back({{0, 0}, 1.0});
    CHECK_NOTHROW(s.validate());

    GeneratorSpec p = pareto_spec({4, 4}, 1);
    p.alpha = 0.0;
    CHECK_THROWS_AS(p.validate(), param_error);
}

TEST_CASE("pareto tail frequency at its empirical quantile", "[simulate]") {
    const Field f = generate_field(pareto_spec({120, 120}, 7));
    std::vector<double> values(f.raw().begin(), f.raw().end());
    const double q = nearest_rank_quantile(values, 0.9);
    Index above = 0;
    for (double v : f.raw()) {
        if (v > q) {
            ++above;
        }
    }
    const double frac =
        static_cast<double>(above) / static_cast<double>(f.shape().site_count());
    CHECK(std::abs(frac - 0.1) < 0.005);
}

TEST_CASE("single-weight moving maxima is iid Frechet", "[simulate]") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::max_moving_maxima;
    s.shape = LatticeShape{{300, 300}, 1};
    s.seed = 9;
    s.weights.push_back({{0, 0}, 1.0});
    const Field f = generate_field(s);
    for (const double x : {0.5, 1.0, 2.0}) {
        Index below = 0;
        for (double v : f.raw()) {
            if (v <= x) {
                ++below;
            }
        }
        const double frac =
            static_cast<double>(below) / static_cast<double>(f.shape().site_count());
        const double expected = std::exp(-1.0 / x);
        CHECK(std::abs(frac - expected) < 3.0 * std::sqrt(expected * (1 - expected) /
                                                          static_cast<double>(f.shape().site_count())));
    }
}

TEST_CASE("analytic marginals match sampling", "[simulate]") {
    // moving maxima with weights summing to 2: Frechet with scale 2
    const GeneratorSpec s = temporal_maxima_spec({200, 200, 1}, 11);
    CHECK(std::abs(marginal_tail(s, 4.0) - (1.0 - std::exp(-0.5))) < 1e-12);
    const double u = analytic_u_n(s, 10.0);
    CHECK(std::abs(marginal_tail(s, u) - 0.1) < 1e-12);
    const Field f = generate_field(s);
    Index above = 0;
    for (double v : f.raw()) {
        if (v > u) {
            ++above;
        }
    }
    const double frac =
        static_cast<double>(above) / static_cast<double>(f.shape().site_count());
    CHECK(std::abs(frac - 0.1) < 3.0 * std::sqrt(0.09 / 40000.0));
}

TEST_CASE("oracle trivial and analytic values", "[simulate]") {
    const auto a = RelevanceSet::norm_exceedance(1.0);
    const GeneratorSpec s = pareto_spec({24, 24, 40}, 3);

    const OracleValue lag0 = oracle_extremogram(s, a, a, 0, 0, 10.0, 1000, 5);
    CHECK(lag0.method == OracleValue::Method::analytic);
    CHECK(lag0.value == 1.0);

    const OracleValue far = oracle_extremogram(s, a, a, 2, 3, 10.0, 1000, 5);
    CHECK(far.method == OracleValue::Method::analytic);
    CHECK(std::abs(far.value - 0.1) < 1e-12);
}

TEST_CASE("temporal clustering raises the oracle above the iid baseline",
          "[simulate]") {
    const auto a = RelevanceSet::norm_exceedance(1.0);
    GeneratorSpec s = temporal_maxima_spec({10, 10, 10}, 21);

    // Monte Carlo route (box sets force it) against the analytic route
    const auto box_a = RelevanceSet::box({1.0}, {1e18});
    const OracleValue mc =
        oracle_extremogram(s, box_a, box_a, 0, 1, 10.0, 400000, 77);
    CHECK(mc.method == OracleValue::Method::monte_carlo);
    const OracleValue closed = oracle_extremogram(s, a, a, 0, 1, 10.0, 1000, 77);
    CHECK(closed.method == OracleValue::Method::analytic);
    CHECK(std::abs(mc.value - closed.value) < 3.0 * mc.stderr_ + 1e-12);

    // shared innovations create extremal clustering: strictly above the
    // baseline P(X > u) = 0.1 by more than 3 stderr
    CHECK(mc.value - 0.1 > 3.0 * mc.stderr_);
    CHECK(closed.value > 0.1);

    // spatially separated pair at the same u is iid-like for this window
    const OracleValue spatial = oracle_extremogram(s, a, a, 2, 0, 10.0, 1000, 77);
    CHECK(std::abs(spatial.value - 0.1) < 1e-12);
}

TEST_CASE("oracle error paths", "[simulate]") {
    GeneratorSpec s = temporal_maxima_spec({10, 10, 10}, 21);
    const auto box_a = RelevanceSet::box({1.0}, {1e18});
    // expected conditioning events below 100 (p ~ 0.1, 50 pairs)
    CHECK_THROWS_AS(oracle_extremogram(s, box_a, box_a, 0, 1, 10.0, 50, 1),
                    param_error);
    // unreachable conditioning set: zero events seen
    const auto far_box = RelevanceSet::box({1e17}, {1e18});
    CHECK_THROWS_AS(oracle_extremogram(s, far_box, box_a, 0, 1, 10.0, 2000, 1),
                    degenerate_error);
}

TEST_CASE("oracle stderr shrinks like one over root pairs", "[simulate]") {
    const auto box_a = RelevanceSet::box({1.0}, {1e18});
    GeneratorSpec s = temporal_maxima_spec({10, 10, 10}, 21);
    const OracleValue small =
        oracle_extremogram(s, box_a, box_a, 0, 1, 10.0, 100000, 13);
    const OracleValue big =
        oracle_extremogram(s, box_a, box_a, 0, 1, 10.0, 200000, 13);
    const double ratio = big.stderr_ / small.stderr_;
    CHECK(std::abs(ratio - 1.0 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
}

TEST_CASE("isotropy holds for iid and temporal-window generators", "[simulate]") {
    // joint exceedance frequencies at equal L-infinity spatial radius agree
    const auto check_pair = [](const GeneratorSpec& s, Coord lag_a, Coord lag_b,
                               double u) {
        PairSampler sa(s, lag_a, 99);
        PairSampler sb(s, lag_b, 99);
        const Index n = 200000;
        Index hits_a = 0;
        Index hits_b = 0;
        for (Index i = 0; i < n; ++i) {
            const auto [xa0, xa1] = sa.draw(static_cast<std::uint64_t>(i));
            const auto [xb0, xb1] = sb.draw(static_cast<std::uint64_t>(i));
            hits_a += (xa0 > u && xa1 > u) ? 1 : 0;
            hits_b += (xb0 > u && xb1 > u) ? 1 : 0;
        }
        const double pa = static_cast<double>(hits_a) / static_cast<double>(n);
        const double pb = static_cast<double>(hits_b) / static_cast<double>(n);
        const double se = std::sqrt((pa * (1 - pa) + pb * (1 - pb)) /
                                    static_cast<double>(n));
        CHECK(std::abs(pa - pb) <= 3.0 * se + 1e-9);
    };
    // same |s|_inf = 1 ring, temporal window spec (condition holds exactly)
    GeneratorSpec temporal = temporal_maxima_spec({10, 10, 10}, 31);
    const double u = analytic_u_n(temporal, 5.0);
    check_pair(temporal, {1, 0, 1}, {1, 1, 1}, u);
    check_pair(temporal, {1, 0, 0}, {0, 1, 0}, u);

    GeneratorSpec iid = pareto_spec({10, 10, 10}, 32);
    check_pair(iid, {1, 0, 0}, {1, 1, 0}, 10.0);
}

TEST_CASE("m-dependent average has the declared dependence range", "[simulate]") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::m_dependent_average;
    s.alpha = 2.5;
    s.shape = LatticeShape{{6, 6, 12}, 1};
    s.seed = 77;
    s.weights.push_back({{0, 0, 0}, 1.0});
    s.weights.push_back({{0, 0, 1}, 1.0});
    CHECK_NOTHROW(s.validate());
    const Field f = generate_field(s);
    // same seed, same field
    const Field g = generate_field(s);
    CHECK(f.raw()[5] == g.raw()[5]);
    CHECK_THROWS_AS(analytic_u_n(s, 10.0), param_error);
    CHECK(oracle_u_n(s, 10.0, 5, 1u << 16) > 0.0);
}
