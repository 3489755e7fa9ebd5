#pragma once

/// @file
/// Monte Carlo replication of the standardized iso-extremogram and of the
/// empirical-process fidis, with normality and covariance diagnostics. The
/// harness centers with the pre-asymptotic oracle at the finite quantile,
/// exactly the quantity the limit theorem subtracts.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/diagnostics.hpp"
#include "rfx/empirical.hpp"
#include "rfx/extremogram.hpp"
#include "rfx/functionals.hpp"
#include "rfx/lattice.hpp"
#include "rfx/parallel.hpp"
#include "rfx/relevance.hpp"
#include "rfx/simulate.hpp"
#include "rfx/stats.hpp"

namespace rfx {

struct NormalityReport {
    double mean = 0.0;
    double variance = 0.0; // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks_distance = 0.0; // against N(mean, variance)
    Index count = 0;
    bool degenerate = false; // constant sample; shape diagnostics undefined
};

/// Sample moments plus the Kolmogorov-Smirnov distance to the normal law
/// with the sample's own mean and variance.
inline NormalityReport normality_diagnostics(std::span<const double> samples) {
    if (samples.size() < 8) {
        throw sample_error("normality diagnostics need at least 8 samples");
    }
    NormalityReport out;
    out.count = static_cast<Index>(samples.size());
    out.mean = mean(samples);
    out.variance = variance(samples);
    if (!(out.variance > 0.0)) {
        throw degenerate_error("degenerate sample: zero variance");
    }
    out.skewness = skewness(samples);
    out.excess_kurtosis = excess_kurtosis(samples);
    out.ks_distance = ks_distance({samples.begin(), samples.end()}, out.mean,
                                  std::sqrt(out.variance));
    return out;
}

/// Harness self-test input: i.i.d. standard normal draws.
inline NormalityReport normality_self_test(Index n, std::uint64_t seed) {
    const CounterRng rng(derive_seed(seed, 0x5e1f));
    std::vector<double> draws(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < draws.size(); ++i) {
        draws[i] = rng.normal(i);
    }
    return normality_diagnostics(draws);
}

struct EstimatorConfig {
    std::vector<Index> r; // r1, r2, r3
    RelevanceSet set_a = RelevanceSet::norm_exceedance(1.0);
    RelevanceSet set_b = RelevanceSet::norm_exceedance(1.0);
    Index max_spatial = 0;  // L_s
    Index max_temporal = 0; // L_t
    double k_n = 10.0;
    bool analytic_normalization = true;
    Index oracle_pairs = 200000;
    double lindeberg_eps = 0.1;
};

struct CltReport {
    LagGrid lags;
    std::vector<double> centering;            // rho*_n per lag
    std::vector<std::vector<double>> samples; // [lag][replicate]
    std::vector<NormalityReport> normality;   // per lag
    std::vector<double> sigma_diag;           // estimated Sigma diagonal
    std::vector<double> sigma_ratio;          // sample variance / Sigma diagonal
    Index replicates = 0;
    Index dropped = 0;
    double u_n = 0.0;
    double v_n = 0.0;
    std::string normalization; // "analytic" or "empirical"

    // numeric proxies for the rate conditions
    double r_n_v_n = 0.0;   // r1 r2 r3 * v_n, the tau proxy
    double sqrt_n_v_n = 0.0;
    double r_total = 0.0;
    double n_v_n_r3 = 0.0;
    double c_sum = 0.0;     // center-pair double sum, estimated by mean(D^2)
    double lindeberg = 0.0; // truncated-moment statistic for f_{A,A,0,0}
    double lindeberg_eps = 0.0;
    std::uint64_t seed = 0;
};

/// Independent draws of generic normalized blocks (block-shaped fields).
inline std::vector<Block> draw_normalized_blocks(const GeneratorSpec& spec,
                                                 std::span<const Index> r, Index count,
                                                 double u_n, std::uint64_t seed) {
    GeneratorSpec block_spec = spec;
    block_spec.shape.dims.assign(r.begin(), r.end());
    std::vector<Block> out(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        GeneratorSpec s = block_spec;
        s.seed = derive_seed(seed, i);
        const Field f = generate_field(s);
        Block b;
        b.extent.assign(r.begin(), r.end());
        b.value_dim = f.value_dim();
        b.origin.assign(r.size(), 1);
        b.values.assign(f.raw().begin(), f.raw().end());
        const double inv = 1.0 / u_n;
        for (double& v : b.values) {
            v *= inv;
        }
        out[i] = b;
    });
    return out;
}

/// Functional-value source backed by freshly generated fields; used by the
/// dependence diagnostics.
inline BlockValueSource make_block_value_source(const GeneratorSpec& spec,
                                                const BlockGrid& grid,
                                                std::vector<ClusterFunctional> functionals,
                                                double u_n, double k_n) {
    if (functionals.empty()) {
        throw param_error("block value source needs at least one functional");
    }
    BlockValueSource src;
    src.block_count = grid.block_count();
    src.tuple_size = functionals.size();
    src.draw = [spec, grid, fs = std::move(functionals), u_n,
                k_n](std::uint64_t seed, std::span<double> out) {
        GeneratorSpec s = spec;
        s.seed = seed;
        const Field field = generate_field(s);
        const NormalizedField nf = normalize_field_with_scale(field, u_n, k_n);
        const Index blocks = grid.block_count();
        for (Index j = 0; j < blocks; ++j) {
            const Block y = extract_block(nf.field, grid, grid.index_at(j));
            for (std::size_t f = 0; f < fs.size(); ++f) {
                out[static_cast<std::size_t>(j) * fs.size() + f] = fs[f](y);
            }
        }
    };
    return src;
}

/// Runs the replication experiment: generate, normalize, estimate, center by
/// the oracle, standardize, and summarize. Replicates that hit the
/// no-exceedance error are dropped and counted; more than 10% drops is a
/// configuration error.
inline CltReport run_clt_experiment(const GeneratorSpec& spec, const EstimatorConfig& cfg,
                                    Index replicates, std::uint64_t seed) {
    spec.validate();
    if (replicates < 50) {
        throw param_error("normality diagnostics need at least 50 replicates");
    }
    if (cfg.r.size() != 3) {
        throw param_error("estimator config needs 3-d block sides");
    }
    if (spec.shape.rank() != 3) {
        throw param_error("the iso-extremogram harness needs 3-d fields");
    }

    const bool analytic = cfg.analytic_normalization && has_analytic_marginal(spec);
    double u_n = 0.0;
    double v_n = 0.0;
    if (analytic) {
        u_n = analytic_u_n(spec, cfg.k_n);
        if (cfg.set_a.kind == RelevanceSet::Kind::box) {
            throw param_error("analytic v_n needs an exceedance-type relevance set");
        }
        v_n = marginal_tail(spec, cfg.set_a.threshold * u_n);
    }

    CltReport report;
    report.lags = LagGrid{cfg.max_spatial, cfg.max_temporal};
    report.seed = seed;
    report.normalization = analytic ? "analytic" : "empirical";

    // centering oracle per lag
    const std::size_t n_lags = report.lags.count();
    report.centering.resize(n_lags);
    for (std::size_t l = 0; l < n_lags; ++l) {
        report.centering[l] =
            oracle_extremogram(spec, cfg.set_a, cfg.set_b, report.lags.spatial_of(l),
                               report.lags.temporal_of(l), cfg.k_n, cfg.oracle_pairs,
                               derive_seed(seed, 0xc000 + l))
                .value;
    }

    const double n_n = static_cast<double>(spec.shape.site_count());
    const LatticeShape spatial_shape{{spec.shape.dims[0], spec.shape.dims[1]}, 1};
    const BlockGrid spatial =
        make_block_grid(spatial_shape, std::span<const Index>(cfg.r.data(), 2));

    struct ReplicateOutcome {
        bool ok = false;
        std::vector<double> standardized;
        double denominator = 0.0;
        double v_n_used = 0.0;
    };
    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
        try {
            GeneratorSpec s = spec;
            s.seed = derive_seed(seed, b);
            const Field field = generate_field(s);
            NormalizedField nf;
            double v_used = v_n;
            if (analytic) {
                nf = normalize_field_with_scale(field, u_n, cfg.k_n);
            } else {
                nf = normalize_field(field, cfg.k_n);
                v_used = estimate_v_n(nf, cfg.set_a);
                if (!(v_used > 0.0)) {
                    return; // dropped, no exceedance at all
                }
            }
            const ExtremogramEstimate est = estimate_direct(
                nf, spatial, cfg.set_a, cfg.set_b, cfg.max_spatial, cfg.max_temporal);
            auto& o = outcomes[b];
            o.standardized = standardize(est, report.centering, n_n, v_used,
                                         cfg.r[0], cfg.r[1]);
            o.denominator = static_cast<double>(est.denominator_count);
            o.v_n_used = v_used;
            o.ok = true;
        } catch (const degenerate_error&) {
            // no exceedance in this replicate; dropped and counted
        }
    });

    report.samples.assign(n_lags, {});
    double d_sq_sum = 0.0;
    double v_n_accum = 0.0;
    Index kept = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++report.dropped;
            continue;
        }
        ++kept;
        d_sq_sum += o.denominator * o.denominator;
        v_n_accum += o.v_n_used;
        for (std::size_t l = 0; l < n_lags; ++l) {
            report.samples[l].push_back(o.standardized[l]);
        }
    }
    report.replicates = kept;
    if (report.dropped * 10 > replicates) {
        throw config_error("more than 10% of replicates had no exceedance; "
                           "revisit k_n or the relevance set");
    }
    if (kept < 8) {
        throw sample_error("too few surviving replicates for diagnostics");
    }
    if (!analytic) {
        v_n = v_n_accum / static_cast<double>(kept);
    }
    report.u_n = analytic ? u_n : 0.0;
    report.v_n = v_n;
    report.c_sum = d_sq_sum / static_cast<double>(kept);

    report.normality.resize(n_lags);
    for (std::size_t l = 0; l < n_lags; ++l) {
        // the (0,0) self lag with B = A is identically 1 - rho*(0,0); treat
        // constant lags as degenerate instead of failing the whole run
        if (variance(report.samples[l]) == 0.0) {
            report.normality[l].mean = mean(report.samples[l]);
            report.normality[l].count = static_cast<Index>(report.samples[l].size());
            report.normality[l].degenerate = true;
            continue;
        }
        report.normality[l] = normality_diagnostics(report.samples[l]);
    }

    const double r_total = static_cast<double>(cfg.r[0] * cfg.r[1] * cfg.r[2]);
    report.r_total = r_total;
    report.r_n_v_n = r_total * v_n;
    report.sqrt_n_v_n = std::sqrt(n_n * v_n);
    report.n_v_n_r3 = n_n * v_n * static_cast<double>(cfg.r[2]);

    // covariance cross-check and Lindeberg proxy from generic-block draws
    if (analytic) {
        const std::vector<Block> blocks = draw_normalized_blocks(
            spec, cfg.r, replicates, u_n, derive_seed(seed, 0xb10c));
        const SigmaMatrix sigma =
            sigma_matrix(blocks, cfg.set_a, cfg.set_b, report.lags, cfg.r, v_n,
                         report.centering);
        report.sigma_diag.resize(n_lags);
        report.sigma_ratio.resize(n_lags);
        for (std::size_t l = 0; l < n_lags; ++l) {
            report.sigma_diag[l] = sigma.at(l, l);
            report.sigma_ratio[l] = sigma.at(l, l) != 0.0
                                        ? report.normality[l].variance / sigma.at(l, l)
                                        : 0.0;
        }
        std::vector<double> f_values(blocks.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            f_values[i] =
                eval_extremogram_functional(blocks[i], cfg.set_a, cfg.set_a, 0, 0);
        }
        report.lindeberg = lindeberg_statistic(f_values, r_total, v_n, n_n,
                                               cfg.lindeberg_eps);
        report.lindeberg_eps = cfg.lindeberg_eps;
    }
    return report;
}

/// One stage of a monotone-path sweep.
struct SweepStage {
    std::vector<Index> dims; // n_1, n_2, n_3
    std::vector<Index> r;    // r_1, r_2, r_3
    double k_n = 10.0;
};

/// Runs the harness along a growing sequence of shapes and collects the
/// per-stage reports; diagnostics trends across stages approximate the
/// n -> infinity behaviour along the path.
inline std::vector<CltReport> run_sweep(const GeneratorSpec& base,
                                        const EstimatorConfig& base_cfg,
                                        std::span<const SweepStage> stages,
                                        Index replicates, std::uint64_t seed) {
    if (stages.empty()) {
        throw param_error("sweep needs at least one stage");
    }
    std::vector<CltReport> out;
    out.reserve(stages.size());
    for (std::size_t i = 0; i < stages.size(); ++i) {
        GeneratorSpec spec = base;
        spec.shape.dims = stages[i].dims;
        EstimatorConfig cfg = base_cfg;
        cfg.r = stages[i].r;
        cfg.k_n = stages[i].k_n;
        out.push_back(run_clt_experiment(spec, cfg, replicates, derive_seed(seed, i)));
    }
    return out;
}

} // namespace rfx
