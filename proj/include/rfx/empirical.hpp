#pragma once

/// @file
/// The empirical process of cluster functionals over the complete blocks of
/// a normalized field, the per-block standardized vectors W and empirical
/// cluster covariances.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/functionals.hpp"
#include "rfx/lattice.hpp"
#include "rfx/relevance.hpp"

namespace rfx {

/// How the centering term E f(Y) is obtained. `analytic` uses a caller
/// supplied exact mean (available for simulators); `plug_in` uses the mean
/// of f over the observed blocks, which is all a single realization offers.
enum class Centering { analytic, plug_in };

inline const char* to_string(Centering c) {
    return c == Centering::analytic ? "analytic" : "plug-in";
}

struct EmpiricalProcessValue {
    double value = 0.0;
    double n_n = 0.0;        // total site count n_1 ... n_d
    double v_n = 0.0;        // relevance probability used in the scaling
    Index block_count = 0;
    std::string functional_id;
    Centering centering = Centering::plug_in;
    double mean_used = 0.0;  // the centering term E f(Y)
};

namespace detail {

inline std::vector<double> block_values(const NormalizedField& nf, const BlockGrid& grid,
                                        const ClusterFunctional& f) {
    const Index blocks = grid.block_count();
    std::vector<double> out(static_cast<std::size_t>(blocks));
    for (Index flat = 0; flat < blocks; ++flat) {
        const Block y = extract_block(nf.field, grid, grid.index_at(flat));
        out[static_cast<std::size_t>(flat)] = f(y);
    }
    return out;
}

} // namespace detail

/// Z_n(f) = (n_n v_n)^{-1/2} sum over complete blocks of (f(Y_j) - E f(Y_j)).
/// Blocks are reduced in lexicographic order.
inline EmpiricalProcessValue empirical_process(const NormalizedField& nf,
                                               const BlockGrid& grid,
                                               const ClusterFunctional& f, double v_n,
                                               std::optional<double> analytic_mean = {}) {
    if (!(v_n > 0.0)) {
        throw degenerate_error("degenerate normalization: v_n must be > 0");
    }
    if (grid.rank() != nf.field.rank()) {
        throw shape_error("grid rank does not match field rank");
    }
    const std::vector<double> values = detail::block_values(nf, grid, f);

    EmpiricalProcessValue out;
    out.n_n = static_cast<double>(nf.field.shape().site_count());
    out.v_n = v_n;
    out.block_count = grid.block_count();
    out.functional_id = f.id;
    if (analytic_mean) {
        out.centering = Centering::analytic;
        out.mean_used = *analytic_mean;
    } else {
        out.centering = Centering::plug_in;
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        out.mean_used = s / static_cast<double>(values.size());
    }
    const double scale = 1.0 / std::sqrt(out.n_n * v_n);
    double sum = 0.0;
    for (double v : values) {
        sum += v - out.mean_used;
    }
    out.value = scale * sum;
    return out;
}

/// Per-block standardized vector for a tuple of functionals.
struct WVector {
    std::vector<double> components; // one per functional
    Coord block_index;
};

/// One W vector per block, components ordered as the functional tuple. Their
/// componentwise sum over all blocks equals (Z_n(f_1), ..., Z_n(f_k)).
inline std::vector<WVector> w_vectors(const NormalizedField& nf, const BlockGrid& grid,
                                      std::span<const ClusterFunctional> fs, double v_n,
                                      std::span<const double> analytic_means = {}) {
    if (fs.empty()) {
        throw param_error("w_vectors needs at least one functional");
    }
    if (!(v_n > 0.0)) {
        throw degenerate_error("degenerate normalization: v_n must be > 0");
    }
    if (!analytic_means.empty() && analytic_means.size() != fs.size()) {
        throw param_error("analytic mean count must match the functional tuple");
    }
    const Index blocks = grid.block_count();
    std::vector<std::vector<double>> values(fs.size());
    for (std::size_t s = 0; s < fs.size(); ++s) {
        values[s] = detail::block_values(nf, grid, fs[s]);
    }
    std::vector<double> means(fs.size());
    for (std::size_t s = 0; s < fs.size(); ++s) {
        if (!analytic_means.empty()) {
            means[s] = analytic_means[s];
        } else {
            double acc = 0.0;
            for (double v : values[s]) {
                acc += v;
            }
            means[s] = acc / static_cast<double>(blocks);
        }
    }
    const double n_n = static_cast<double>(nf.field.shape().site_count());
    const double scale = 1.0 / std::sqrt(n_n * v_n);
    std::vector<WVector> out(static_cast<std::size_t>(blocks));
    for (Index flat = 0; flat < blocks; ++flat) {
        auto& w = out[static_cast<std::size_t>(flat)];
        w.block_index = grid.index_at(flat);
        w.components.resize(fs.size());
        for (std::size_t s = 0; s < fs.size(); ++s) {
            w.components[s] = scale * (values[s][static_cast<std::size_t>(flat)] - means[s]);
        }
    }
    return out;
}

struct ClusterCovariance {
    double value = 0.0;
    double r_n = 0.0;
    double v_n = 0.0;
    Index samples = 0;
    std::string f_id, g_id;
};

/// Sample covariance of f and g over independent generic-block draws, with
/// the unbiased (B-1) denominator, scaled by (r_n v_n)^{-1}. Estimates the
/// cluster covariance c(f,g).
inline ClusterCovariance empirical_cluster_covariance(std::span<const double> f_values,
                                                      std::span<const double> g_values,
                                                      double r_n, double v_n) {
    if (f_values.size() != g_values.size()) {
        throw sample_error("functional sample lengths differ");
    }
    if (f_values.size() < 2) {
        throw sample_error("cluster covariance needs at least 2 block samples");
    }
    if (!(r_n * v_n > 0.0)) {
        throw degenerate_error("r_n v_n must be > 0");
    }
    ClusterCovariance out;
    out.r_n = r_n;
    out.v_n = v_n;
    out.samples = static_cast<Index>(f_values.size());
    out.value = covariance(f_values, g_values) / (r_n * v_n);
    return out;
}

inline ClusterCovariance empirical_cluster_covariance(std::span<const Block> samples,
                                                      const ClusterFunctional& f,
                                                      const ClusterFunctional& g,
                                                      double r_n, double v_n) {
    std::vector<double> fv(samples.size());
    std::vector<double> gv(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fv[i] = f(samples[i]);
        gv[i] = g(samples[i]);
    }
    ClusterCovariance out = empirical_cluster_covariance(fv, gv, r_n, v_n);
    out.f_id = f.id;
    out.g_id = g.id;
    return out;
}

} // namespace rfx
