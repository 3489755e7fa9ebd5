#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "rfx/clt.hpp"
#include "rfx/extremogram.hpp"
#include "rfx/simulate.hpp"

using namespace rfx;

namespace {

const RelevanceSet kUnit = RelevanceSet::norm_exceedance(1.0);

BlockGrid spatial_grid(const NormalizedField& nf, Index r1, Index r2) {
    const LatticeShape spatial{{nf.field.shape().dims[0], nf.field.shape().dims[1]}, 1};
    return make_block_grid(spatial, std::vector<Index>{r1, r2});
}

} // namespace

TEST_CASE("self lag at zero is one", "[extremogram]") {
    for (int rep = 0; rep < 50; ++rep) {
        NormalizedField nf =
            test::as_normalized(test::sparse_field({12, 12, 20}, 0.1, 6200 + rep));
        const BlockGrid spat = spatial_grid(nf, 4, 4);
        const ExtremogramEstimate est = estimate_direct(nf, spat, kUnit, kUnit, 1, 2);
        if (est.denominator_count > 0) {
            CHECK(est.rho[est.lags.flat(0, 0)] == 1.0);
        }
    }
}

TEST_CASE("no exceedance is an error, not a zero", "[extremogram]") {
    NormalizedField nf = test::as_normalized(Field(LatticeShape{{8, 8, 10}, 1}));
    const BlockGrid spat = spatial_grid(nf, 4, 4);
    CHECK_THROWS_AS(estimate_direct(nf, spat, kUnit, kUnit, 1, 2), degenerate_error);
    const BlockGrid g3 =
        make_block_grid(nf.field.shape(), std::vector<Index>{4, 4, 5});
    CHECK_THROWS_AS(estimate_via_blocks(nf, g3, kUnit, kUnit, 1, 2), degenerate_error);
}

TEST_CASE("lag caps are enforced", "[extremogram]") {
    NormalizedField nf = test::as_normalized(test::sparse_field({12, 12, 20}, 0.2, 5));
    const BlockGrid spat = spatial_grid(nf, 4, 4);
    CHECK_THROWS_AS(estimate_direct(nf, spat, kUnit, kUnit, 2, 0), lag_error);
    CHECK_THROWS_AS(estimate_direct(nf, spat, kUnit, kUnit, 0, 20), lag_error);
    const BlockGrid g3 = make_block_grid(nf.field.shape(), std::vector<Index>{4, 4, 5});
    CHECK_THROWS_AS(estimate_via_blocks(nf, g3, kUnit, kUnit, 0, 5), lag_error);
    CHECK_NOTHROW(estimate_via_blocks(nf, g3, kUnit, kUnit, 1, 4));
}

TEST_CASE("hand-computed estimate on a 4x4x4 field", "[extremogram]") {
    // One spatial block, center (3,3). Exceedance threshold 1.
    Field f(LatticeShape{{4, 4, 4}, 1});
    const auto set = [&f](Index s1, Index s2, Index t, double v) {
        f.value(std::vector<Index>{s1, s2, t})[0] = v;
    };
    set(3, 3, 1, 2.0);  // center relevant at t = 1
    set(3, 3, 2, 1.7);  // ... and t = 2
    set(3, 3, 3, 1.5);  // ... and t = 3
    set(2, 3, 2, 3.0);  // ring(1) hits at time 2: two points
    set(4, 2, 2, 1.2);
    set(2, 2, 3, 2.0);  // ring(1) hit at time 3: one point
    set(3, 4, 4, 5.0);  // ring(1) hit at time 4: one point

    NormalizedField nf = test::as_normalized(std::move(f));
    const BlockGrid spat = spatial_grid(nf, 4, 4);
    const ExtremogramEstimate direct = estimate_direct(nf, spat, kUnit, kUnit, 1, 1);
    // denominator: center exceedances over t in [1..4]
    CHECK(direct.denominator_count == 3);
    // numerator(1,1) = sum_t a_t ring_count(t+1)/8 = (2 + 1 + 1)/8
    CHECK(direct.numerator[direct.lags.flat(1, 1)] == 0.5);
    CHECK(direct.rho[direct.lags.flat(1, 1)] == 0.5 / 3.0);
    // numerator(1,0): pairs at the same time; ring hits at t = 2 (2 points,
    // center relevant) and t = 3 (1 point, center relevant)
    CHECK(direct.numerator[direct.lags.flat(1, 0)] == 3.0 / 8.0);
    // numerator(0,1): center-to-center; a_1 a_2 + a_2 a_3 = 2 pairs
    CHECK(direct.numerator[direct.lags.flat(0, 1)] == 2.0);

    // the block decomposition with r3 = 2 puts the t = 2 -> 3 pair in the
    // boundary term: f(block 1) = 2/8, f(block 2) = 1/8, delta = 1/8
    const BlockGrid g3 = make_block_grid(nf.field.shape(), std::vector<Index>{4, 4, 2});
    const ExtremogramEstimate blocks = estimate_via_blocks(nf, g3, kUnit, kUnit, 1, 1);
    const std::size_t l11 = blocks.lags.flat(1, 1);
    CHECK(blocks.block_sum[l11] == 3.0 / 8.0);
    CHECK(blocks.delta_term[l11] == 1.0 / 8.0);
    CHECK(blocks.r_num[l11] == 0.0);
    CHECK(blocks.numerator[l11] == 0.5);
    CHECK(blocks.denominator == 3.0);
}

TEST_CASE("direct and block-decomposed estimates agree exactly", "[extremogram]") {
    // includes a shape with an incomplete time tail (n3 = 23, r3 = 5)
    const std::vector<std::vector<Index>> shapes{{12, 12, 20}, {12, 12, 23}, {13, 11, 17}};
    const std::vector<Index> r3s{5, 5, 4};
    for (std::size_t cfg = 0; cfg < shapes.size(); ++cfg) {
        for (int rep = 0; rep < 30; ++rep) {
            NormalizedField nf = test::as_normalized(
                test::sparse_field(shapes[cfg], 0.12, 1234 + 100 * cfg + rep));
            const BlockGrid spat = spatial_grid(nf, 4, 4);
            const BlockGrid g3 = make_block_grid(
                nf.field.shape(), std::vector<Index>{4, 4, r3s[cfg]});
            const Index max_s = 1;
            const Index max_t = 3;
            const ExtremogramEstimate direct =
                estimate_direct(nf, spat, kUnit, kUnit, max_s, max_t);
            const ExtremogramEstimate blocks =
                estimate_via_blocks(nf, g3, kUnit, kUnit, max_s, max_t);
            REQUIRE(direct.rho.size() == blocks.rho.size());
            CHECK(direct.denominator_count == blocks.denominator_count);
            CHECK(std::abs(direct.denominator - blocks.denominator) < 1e-12);
            for (std::size_t l = 0; l < direct.rho.size(); ++l) {
                CHECK(std::abs(direct.numerator[l] - blocks.numerator[l]) < 1e-12);
                CHECK(std::abs(direct.rho[l] - blocks.rho[l]) < 1e-12);
                CHECK(direct.rho[l] >= 0.0);
                CHECK(direct.rho[l] <= 1.0);
            }
        }
    }
}

TEST_CASE("decomposition components behave as displayed", "[extremogram]") {
    // exact time division: R terms are empty sums
    NormalizedField nf = test::as_normalized(test::sparse_field({12, 12, 20}, 0.15, 88));
    const BlockGrid g3 = make_block_grid(nf.field.shape(), std::vector<Index>{4, 4, 5});
    const ExtremogramEstimate est = estimate_via_blocks(nf, g3, kUnit, kUnit, 1, 3);
    REQUIRE(est.has_components);
    CHECK(est.r_den == 0.0);
    for (std::size_t l = 0; l < est.rho.size(); ++l) {
        CHECK(est.r_num[l] == 0.0);
        // h_t = 0 has an empty boundary range
        if (est.lags.temporal_of(l) == 0) {
            CHECK(est.delta_term[l] == 0.0);
        }
    }

    // incomplete time tail: R terms appear and add up
    NormalizedField nf2 = test::as_normalized(test::sparse_field({12, 12, 23}, 0.15, 89));
    const BlockGrid g32 = make_block_grid(nf2.field.shape(), std::vector<Index>{4, 4, 5});
    const ExtremogramEstimate est2 = estimate_via_blocks(nf2, g32, kUnit, kUnit, 1, 3);
    CHECK(est2.r_den > 0.0);
    for (std::size_t l = 0; l < est2.rho.size(); ++l) {
        CHECK(std::abs(est2.block_sum[l] + est2.delta_term[l] + est2.r_num[l] -
                       est2.numerator[l]) < 1e-12);
    }
}

TEST_CASE("vector-valued fields run through both estimator routes", "[extremogram]") {
    const auto set_a = RelevanceSet::norm_exceedance(1.0, Norm::l2);
    const auto set_b = RelevanceSet::box({0.8, -10.0}, {10.0, 10.0});
    for (int rep = 0; rep < 10; ++rep) {
        NormalizedField nf = test::as_normalized(
            test::sparse_field({12, 12, 20}, 0.15, 8800 + rep, 2));
        const BlockGrid spat = spatial_grid(nf, 4, 4);
        const BlockGrid g3 =
            make_block_grid(nf.field.shape(), std::vector<Index>{4, 4, 5});
        const ExtremogramEstimate direct =
            estimate_direct(nf, spat, set_a, set_b, 1, 3);
        const ExtremogramEstimate blocks =
            estimate_via_blocks(nf, g3, set_a, set_b, 1, 3);
        for (std::size_t l = 0; l < direct.rho.size(); ++l) {
            CHECK(std::abs(direct.numerator[l] - blocks.numerator[l]) < 1e-12);
        }
    }
}

TEST_CASE("enlarging B never decreases the estimate", "[extremogram]") {
    const auto wide = RelevanceSet::norm_exceedance(0.6);
    for (int rep = 0; rep < 20; ++rep) {
        NormalizedField nf =
            test::as_normalized(test::sparse_field({12, 12, 20}, 0.15, 7100 + rep));
        const BlockGrid spat = spatial_grid(nf, 4, 4);
        const ExtremogramEstimate narrow =
            estimate_direct(nf, spat, kUnit, kUnit, 1, 2);
        const ExtremogramEstimate wider = estimate_direct(nf, spat, kUnit, wide, 1, 2);
        for (std::size_t l = 0; l < narrow.rho.size(); ++l) {
            CHECK(narrow.rho[l] <= wider.rho[l]);
        }
    }
}

TEST_CASE("standardization arithmetic", "[extremogram]") {
    ExtremogramEstimate est;
    est.lags = LagGrid{0, 0};
    est.rho = {0.26};
    est.numerator = {0.0};
    est.denominator = 1.0;
    est.denominator_count = 1;

    // rho_hat equal to the centering gives exactly zero
    CHECK(standardize(est, std::vector<double>{0.26}, 1e4, 1.0, 4, 4)[0] == 0.0);

    // scalar check: difference 0.01, n v_n = 1e4, r1 = r2 = 4 -> 0.0625
    const auto s = standardize(est, std::vector<double>{0.25}, 1e5, 0.1, 4, 4);
    CHECK(std::abs(s[0] - 0.0625) < 1e-15);

    // doubling r1 halves the value
    const auto h = standardize(est, std::vector<double>{0.25}, 1e5, 0.1, 8, 4);
    CHECK(std::abs(h[0] - 0.03125) < 1e-15);

    CHECK_THROWS_AS(standardize(est, std::vector<double>{0.1, 0.2}, 1e4, 1.0, 4, 4),
                    shape_error);
}

TEST_CASE("sigma assembly identity with constant ingredients", "[extremogram]") {
    const LagGrid lags{1, 2};
    const std::size_t n = lags.count();
    const double s = 0.7;
    const double u = 0.22;
    const double p = 0.31;
    const double aa0 = 0.55;
    const SigmaMatrix m = assemble_sigma(lags, std::vector<double>(n * n, s),
                                         std::vector<double>(n, u), aa0,
                                         std::vector<double>(n, p));
    // s - 2pu + p^2 aa0, written in the assembly's own evaluation order so
    // the equality is exact
    const double expected = s - p * u - p * u + p * p * aa0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(m.at(i, j) == expected);
        }
    }
}

TEST_CASE("sigma matrix symmetry and degenerate input", "[extremogram]") {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::iid_pareto;
    spec.alpha = 1.0;
    spec.shape = LatticeShape{{6, 6, 8}, 1};
    spec.seed = 5;
    const std::vector<Index> r{6, 6, 8};
    const LagGrid lags{1, 2};
    std::vector<double> rho_star(lags.count(), 0.1);
    rho_star[lags.flat(0, 0)] = 1.0;

    const std::vector<Block> draws = draw_normalized_blocks(spec, r, 120, 10.0, 99);
    const SigmaMatrix m = sigma_matrix(draws, kUnit, kUnit, lags, r, 0.1, rho_star);
    for (std::size_t i = 0; i < lags.count(); ++i) {
        for (std::size_t j = 0; j < lags.count(); ++j) {
            CHECK(m.at(i, j) == m.at(j, i));
        }
    }

    // all values far below the threshold: every ingredient is zero
    std::vector<Block> quiet(3, Block::zeros({6, 6, 8}, 1));
    const SigmaMatrix z = sigma_matrix(quiet, kUnit, kUnit, lags, r, 0.1, rho_star);
    for (double v : z.sigma_ab) {
        CHECK(v == 0.0);
    }
    CHECK(z.sigma_prime_aa0 == 0.0);

    CHECK_THROWS_AS(sigma_matrix(std::vector<Block>(1, quiet[0]), kUnit, kUnit, lags, r,
                                 0.1, rho_star),
                    sample_error);
}

TEST_CASE("replicate mean tracks the iid oracle with the range deficit",
          "[extremogram]") {
    // The display's numerator runs t <= n3 - h_t while the denominator runs
    // t <= n3, so at finite n3 the iid mean is rho* (n3 - h_t) / n3, not
    // rho* itself; the gap closes as n3 grows. Pin the exact finite-n value.
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::iid_pareto;
    spec.alpha = 1.0;
    spec.shape = LatticeShape{{12, 12, 20}, 1};
    spec.seed = 400;
    const double u_n = 10.0; // analytic for k_n = 10
    const double n3 = 20.0;
    const Index reps = 120;
    const LagGrid lags{1, 2};
    std::vector<std::vector<double>> samples(lags.count());
    for (Index b = 0; b < reps; ++b) {
        GeneratorSpec s = spec;
        s.seed = derive_seed(123, static_cast<std::uint64_t>(b));
        const NormalizedField nf =
            normalize_field_with_scale(generate_field(s), u_n, 10.0);
        const BlockGrid spat = spatial_grid(nf, 4, 4);
        const ExtremogramEstimate est = estimate_direct(nf, spat, kUnit, kUnit, 1, 2);
        for (std::size_t l = 0; l < lags.count(); ++l) {
            samples[l].push_back(est.rho[l]);
        }
    }
    // For h_s >= 1 the ring values are independent of every center value, so
    // conditional on the center exceedances E[rho_hat] = rho* (n3 - h_t)/n3
    // exactly (the truncated window is an exchangeable sub-count).
    for (Index ht = 0; ht <= 2; ++ht) {
        const auto& x = samples[lags.flat(1, ht)];
        const double m = mean(x);
        const double se = std::sqrt(variance(x) / static_cast<double>(x.size()));
        const double target = 0.1 * (n3 - static_cast<double>(ht)) / n3;
        CHECK(std::abs(m - target) <= 3.0 * se);
    }
    // the untruncated lag (1,0) matches the oracle itself
    const auto& base = samples[lags.flat(1, 0)];
    CHECK(std::abs(mean(base) - 0.1) <=
          3.0 * std::sqrt(variance(base) / static_cast<double>(base.size())));
}
