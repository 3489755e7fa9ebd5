#pragma once

/// @file
/// The sample iso-extremogram in its direct form and in its exact
/// block-functional decomposition (block sums + boundary term delta_n +
/// leftover terms R), standardization, and the asymptotic covariance
/// matrix over a lag grid.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/functionals.hpp"
#include "rfx/lattice.hpp"
#include "rfx/relevance.hpp"

namespace rfx {

/// Rectangular lag grid [0:L_s] x [0:L_t], flattened spatial-lag major.
struct LagGrid {
    Index max_spatial = 0;  // L_s
    Index max_temporal = 0; // L_t

    std::size_t count() const {
        return static_cast<std::size_t>((max_spatial + 1) * (max_temporal + 1));
    }
    std::size_t flat(Index h_s, Index h_t) const {
        return static_cast<std::size_t>(h_s * (max_temporal + 1) + h_t);
    }
    Index spatial_of(std::size_t flat) const {
        return static_cast<Index>(flat) / (max_temporal + 1);
    }
    Index temporal_of(std::size_t flat) const {
        return static_cast<Index>(flat) % (max_temporal + 1);
    }
};

struct ExtremogramEstimate {
    LagGrid lags;
    std::vector<double> rho;        // estimate per lag, in [0,1]
    std::vector<double> numerator;  // per lag
    double denominator = 0.0;       // shared across lags
    Index denominator_count = 0;    // total center exceedances

    // decomposition components (filled by estimate_via_blocks only)
    bool has_components = false;
    std::vector<double> block_sum;  // sum of f_{A,B,h_s,h_t} over complete blocks
    std::vector<double> delta_term; // time-block boundary term delta_n
    std::vector<double> r_num;      // leftover numerator term R_{A,B,h_s,h_t}
    double den_block_sum = 0.0;     // sum of f_{A,A,0,0} over complete blocks
    double r_den = 0.0;             // leftover denominator term R_{A,A,0,0}
};

namespace detail {

/// Per-center exceedance indicators and ring hit counts shared by both
/// estimator routes.
struct CenterScan {
    std::vector<std::array<Index, 2>> centers; // lex order over (j1, j2)
    std::vector<std::size_t> ring_size;        // [center][h_s]
    std::vector<std::uint8_t> center_in_a;     // [center][t], t in [1..n3]
    std::vector<std::uint32_t> ring_in_b;      // [center][h_s][t]
    Index n3 = 0;
    Index max_spatial = 0;

    std::uint8_t a_at(std::size_t c, Index t) const {
        return center_in_a[c * static_cast<std::size_t>(n3) + static_cast<std::size_t>(t - 1)];
    }
    std::uint32_t b_at(std::size_t c, Index h, Index t) const {
        return ring_in_b[(c * static_cast<std::size_t>(max_spatial + 1) +
                          static_cast<std::size_t>(h)) * static_cast<std::size_t>(n3) +
                         static_cast<std::size_t>(t - 1)];
    }
    std::size_t rings(std::size_t c, Index h) const {
        return ring_size[c * static_cast<std::size_t>(max_spatial + 1) +
                         static_cast<std::size_t>(h)];
    }
};

inline CenterScan scan_centers(const NormalizedField& nf, Index r1, Index r2, Index m1,
                               Index m2, const RelevanceSet& a, const RelevanceSet& b,
                               Index max_spatial) {
    const auto& dims = nf.field.shape().dims;
    const Index n1 = dims[0];
    const Index n2 = dims[1];
    const Index n3 = dims[2];
    const auto k = static_cast<std::size_t>(nf.field.value_dim());

    CenterScan scan;
    scan.n3 = n3;
    scan.max_spatial = max_spatial;
    const std::size_t n_centers = static_cast<std::size_t>(m1 * m2);
    scan.centers.resize(n_centers);
    scan.ring_size.assign(n_centers * static_cast<std::size_t>(max_spatial + 1), 0);
    scan.center_in_a.assign(n_centers * static_cast<std::size_t>(n3), 0);
    scan.ring_in_b.assign(n_centers * static_cast<std::size_t>(max_spatial + 1) *
                              static_cast<std::size_t>(n3),
                          0);

    std::size_t c_idx = 0;
    for (Index j1 = 1; j1 <= m1; ++j1) {
        for (Index j2 = 1; j2 <= m2; ++j2, ++c_idx) {
            const auto c = block_center(j1, j2, r1, r2);
            scan.centers[c_idx] = c;
            for (Index t = 1; t <= n3; ++t) {
                const std::span<const double> v{nf.field.at3_vec(c[0], c[1], t), k};
                scan.center_in_a[c_idx * static_cast<std::size_t>(n3) +
                                 static_cast<std::size_t>(t - 1)] = a.contains(v) ? 1 : 0;
            }
            for (Index h = 0; h <= max_spatial; ++h) {
                const auto ring = sphere(c, h, {n1, n2});
                scan.ring_size[c_idx * static_cast<std::size_t>(max_spatial + 1) +
                               static_cast<std::size_t>(h)] = ring.size();
                auto* row = scan.ring_in_b.data() +
                            (c_idx * static_cast<std::size_t>(max_spatial + 1) +
                             static_cast<std::size_t>(h)) * static_cast<std::size_t>(n3);
                for (const auto& p : ring) {
                    for (Index t = 1; t <= n3; ++t) {
                        const std::span<const double> v{nf.field.at3_vec(p[0], p[1], t), k};
                        if (b.contains(v)) {
                            ++row[t - 1];
                        }
                    }
                }
            }
        }
    }
    return scan;
}

inline void check_lag_caps(Index r1, Index r2, Index n3, Index max_spatial,
                           Index max_temporal, Index temporal_cap) {
    if (max_spatial < 0 || max_temporal < 0) {
        throw lag_error("lag bounds must be nonnegative");
    }
    const Index spatial_cap = (std::min(r1, r2) - 1) / 2; // ceil(min/2) - 1
    if (max_spatial > spatial_cap) {
        throw lag_error("spatial lag bound violates L_s <= ceil(min(r1,r2)/2) - 1");
    }
    if (max_temporal > temporal_cap) {
        throw lag_error("temporal lag bound exceeds the admissible range");
    }
    (void)n3;
}

} // namespace detail

/// Direct evaluation of the sample iso-extremogram over the lag grid.
/// Numerator pairs anchor at block centers; the denominator counts center
/// exceedances over the full time range.
inline ExtremogramEstimate estimate_direct(const NormalizedField& nf,
                                           const BlockGrid& spatial,
                                           const RelevanceSet& a, const RelevanceSet& b,
                                           Index max_spatial, Index max_temporal) {
    if (nf.field.rank() != 3) {
        throw shape_error("iso-extremogram estimation needs a 3-d field");
    }
    if (spatial.rank() != 2) {
        throw shape_error("estimate_direct takes the 2-d spatial block grid");
    }
    const auto& dims = nf.field.shape().dims;
    if (spatial.dims[0] != dims[0] || spatial.dims[1] != dims[1]) {
        throw shape_error("spatial grid does not match the field's spatial extents");
    }
    const Index n3 = dims[2];
    detail::check_lag_caps(spatial.r[0], spatial.r[1], n3, max_spatial, max_temporal,
                           n3 - 1);

    const detail::CenterScan scan = detail::scan_centers(
        nf, spatial.r[0], spatial.r[1], spatial.m[0], spatial.m[1], a, b, max_spatial);

    ExtremogramEstimate out;
    out.lags = LagGrid{max_spatial, max_temporal};
    out.numerator.assign(out.lags.count(), 0.0);
    out.rho.assign(out.lags.count(), 0.0);

    std::int64_t den_count = 0;
    for (std::size_t c = 0; c < scan.centers.size(); ++c) {
        for (Index t = 1; t <= n3; ++t) {
            den_count += scan.a_at(c, t);
        }
    }
    out.denominator_count = den_count;
    out.denominator = static_cast<double>(den_count);
    if (den_count == 0) {
        throw degenerate_error("no-exceedance: the estimator denominator is zero");
    }

    for (Index h_s = 0; h_s <= max_spatial; ++h_s) {
        for (Index h_t = 0; h_t <= max_temporal; ++h_t) {
            double total = 0.0;
            for (std::size_t c = 0; c < scan.centers.size(); ++c) {
                std::int64_t hits = 0;
                for (Index t = 1; t + h_t <= n3; ++t) {
                    if (scan.a_at(c, t)) {
                        hits += scan.b_at(c, h_s, t + h_t);
                    }
                }
                total += static_cast<double>(hits) /
                         static_cast<double>(scan.rings(c, h_s));
            }
            const auto l = out.lags.flat(h_s, h_t);
            out.numerator[l] = total;
            out.rho[l] = total / out.denominator;
        }
    }
    return out;
}

/// Block-functional decomposition of the same estimator:
///   (sum_j f_{A,B,h_s,h_t}(Y_j) + delta_n + R_num) / (sum_j f_{A,A,0,0}(Y_j) + R_den).
/// Time indices with t + h_t > n_3 are excluded from delta_n so the
/// decomposition reproduces the direct form exactly; the temporal lag is
/// capped at r_3 - 1, beyond which the boundary term would double-count.
inline ExtremogramEstimate estimate_via_blocks(const NormalizedField& nf,
                                               const BlockGrid& grid3,
                                               const RelevanceSet& a,
                                               const RelevanceSet& b, Index max_spatial,
                                               Index max_temporal) {
    if (nf.field.rank() != 3) {
        throw shape_error("iso-extremogram estimation needs a 3-d field");
    }
    if (grid3.rank() != 3) {
        throw shape_error("estimate_via_blocks takes the 3-d block grid");
    }
    const auto& dims = nf.field.shape().dims;
    for (std::size_t ax = 0; ax < 3; ++ax) {
        if (grid3.dims[ax] != dims[ax]) {
            throw shape_error("block grid does not match the field extents");
        }
        if (grid3.m[ax] < 1) {
            throw shape_error("block grid must contain at least one complete block per axis");
        }
    }
    const Index n3 = dims[2];
    const Index r3 = grid3.r[2];
    const Index m3 = grid3.m[2];
    detail::check_lag_caps(grid3.r[0], grid3.r[1], n3, max_spatial, max_temporal,
                           r3 - 1);

    const detail::CenterScan scan = detail::scan_centers(
        nf, grid3.r[0], grid3.r[1], grid3.m[0], grid3.m[1], a, b, max_spatial);

    ExtremogramEstimate out;
    out.lags = LagGrid{max_spatial, max_temporal};
    out.has_components = true;
    const std::size_t n_lags = out.lags.count();
    out.numerator.assign(n_lags, 0.0);
    out.rho.assign(n_lags, 0.0);
    out.block_sum.assign(n_lags, 0.0);
    out.delta_term.assign(n_lags, 0.0);
    out.r_num.assign(n_lags, 0.0);

    // denominator: complete-block part and leftover tail
    double den_blocks = 0.0;
    double den_tail = 0.0;
    std::int64_t den_count = 0;
    for (std::size_t c = 0; c < scan.centers.size(); ++c) {
        std::int64_t in_blocks = 0;
        std::int64_t tail = 0;
        for (Index t = 1; t <= m3 * r3; ++t) {
            in_blocks += scan.a_at(c, t);
        }
        for (Index t = m3 * r3 + 1; t <= n3; ++t) {
            tail += scan.a_at(c, t);
        }
        den_blocks += static_cast<double>(in_blocks);
        den_tail += static_cast<double>(tail);
        den_count += in_blocks + tail;
    }
    out.den_block_sum = den_blocks;
    out.r_den = den_tail;
    out.denominator = den_blocks + den_tail;
    out.denominator_count = den_count;
    if (den_count == 0) {
        throw degenerate_error("no-exceedance: the estimator denominator is zero");
    }

    for (Index h_s = 0; h_s <= max_spatial; ++h_s) {
        for (Index h_t = 0; h_t <= max_temporal; ++h_t) {
            const auto l = out.lags.flat(h_s, h_t);
            double blocks_total = 0.0;
            double delta_total = 0.0;
            double tail_total = 0.0;
            for (std::size_t c = 0; c < scan.centers.size(); ++c) {
                const double inv = 1.0 / static_cast<double>(scan.rings(c, h_s));
                // complete blocks: the functional's in-block pairs
                std::int64_t f_hits = 0;
                std::int64_t d_hits = 0;
                for (Index j3 = 1; j3 <= m3; ++j3) {
                    const Index base = (j3 - 1) * r3;
                    for (Index i3 = 1; i3 + h_t <= r3; ++i3) {
                        const Index t = base + i3;
                        if (scan.a_at(c, t)) {
                            f_hits += scan.b_at(c, h_s, t + h_t);
                        }
                    }
                    // boundary pairs crossing the end of time-block j3;
                    // clip pairs that would leave the observation window
                    const Index lo = j3 * r3 - h_t + 1;
                    const Index hi = std::min(j3 * r3, n3 - h_t);
                    for (Index t = lo; t <= hi; ++t) {
                        if (scan.a_at(c, t)) {
                            d_hits += scan.b_at(c, h_s, t + h_t);
                        }
                    }
                }
                std::int64_t tail_hits = 0;
                for (Index t = m3 * r3 + 1; t + h_t <= n3; ++t) {
                    if (scan.a_at(c, t)) {
                        tail_hits += scan.b_at(c, h_s, t + h_t);
                    }
                }
                blocks_total += static_cast<double>(f_hits) * inv;
                delta_total += static_cast<double>(d_hits) * inv;
                tail_total += static_cast<double>(tail_hits) * inv;
            }
            out.block_sum[l] = blocks_total;
            out.delta_term[l] = delta_total;
            out.r_num[l] = tail_total;
            out.numerator[l] = blocks_total + delta_total + tail_total;
            out.rho[l] = out.numerator[l] / out.denominator;
        }
    }
    return out;
}

/// Elementwise sqrt(n v_n) / (r1 r2) * (rho_hat - rho*_n) over the lag grid.
inline std::vector<double> standardize(const ExtremogramEstimate& est,
                                       std::span<const double> centering, double n_n,
                                       double v_n, Index r1, Index r2) {
    if (centering.size() != est.rho.size()) {
        throw shape_error("centering matrix shape does not match the lag grid");
    }
    const double scale = std::sqrt(n_n * v_n) / static_cast<double>(r1 * r2);
    std::vector<double> out(est.rho.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = scale * (est.rho[i] - centering[i]);
    }
    return out;
}

/// Covariance matrix of the limiting Gaussian vector, with its ingredient
/// maps kept alongside for reporting.
struct SigmaMatrix {
    LagGrid lags;
    std::vector<double> sigma;       // count x count, row-major
    std::vector<double> sigma_ab;    // count x count
    std::vector<double> sigma_prime; // per lag
    double sigma_prime_aa0 = 0.0;
    std::vector<double> rho_star;    // per lag

    double at(std::size_t i, std::size_t j) const { return sigma[i * lags.count() + j]; }
};

/// Pure assembly step
///   sigma(h,h') = sigma_AB(h,h') - rho*(h') sigma'(h) - rho*(h) sigma'(h')
///               + rho*(h) rho*(h') sigma'_AA(0),
/// symmetrized by averaging with the transpose.
inline SigmaMatrix assemble_sigma(LagGrid lags, std::vector<double> sigma_ab,
                                  std::vector<double> sigma_prime, double sigma_prime_aa0,
                                  std::vector<double> rho_star) {
    const std::size_t n = lags.count();
    if (sigma_ab.size() != n * n || sigma_prime.size() != n || rho_star.size() != n) {
        throw shape_error("sigma ingredient shapes do not match the lag grid");
    }
    SigmaMatrix out;
    out.lags = lags;
    out.sigma_ab = std::move(sigma_ab);
    out.sigma_prime = std::move(sigma_prime);
    out.sigma_prime_aa0 = sigma_prime_aa0;
    out.rho_star = std::move(rho_star);
    out.sigma.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.sigma[i * n + j] = out.sigma_ab[i * n + j] -
                                   out.rho_star[j] * out.sigma_prime[i] -
                                   out.rho_star[i] * out.sigma_prime[j] +
                                   out.rho_star[i] * out.rho_star[j] * out.sigma_prime_aa0;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (out.sigma[i * n + j] + out.sigma[j * n + i]);
            out.sigma[i * n + j] = avg;
            out.sigma[j * n + i] = avg;
        }
    }
    return out;
}

/// Estimates the covariance ingredients from replicated generic-block draws:
/// joint exceedance probabilities become replicate frequencies, which reduce
/// to uncentered cross-moments of the extremogram functionals, scaled by
/// (r v_n)^{-1}.
inline SigmaMatrix sigma_matrix(std::span<const Block> block_draws, const RelevanceSet& a,
                                const RelevanceSet& b, LagGrid lags,
                                std::span<const Index> r, double v_n,
                                std::span<const double> rho_star) {
    if (block_draws.size() < 2) {
        throw sample_error("sigma_matrix needs at least 2 replicated block draws");
    }
    if (r.size() != 3) {
        throw shape_error("sigma_matrix expects 3-d block sides");
    }
    if (rho_star.size() != lags.count()) {
        throw shape_error("rho_star shape does not match the lag grid");
    }
    const double r_total = static_cast<double>(r[0] * r[1] * r[2]);
    if (!(r_total * v_n > 0.0)) {
        throw degenerate_error("r v_n must be > 0");
    }
    const std::size_t n = lags.count();
    const std::size_t n_b = block_draws.size();

    // per-replicate functional values at each lag, plus the center count
    std::vector<double> f_vals(n_b * n);
    std::vector<double> c_vals(n_b);
    for (std::size_t bi = 0; bi < n_b; ++bi) {
        const Block& y = block_draws[bi];
        if (y.extent.size() != 3 || y.extent[0] != r[0] || y.extent[1] != r[1] ||
            y.extent[2] != r[2]) {
            throw shape_error("block draw extent does not match r");
        }
        for (std::size_t l = 0; l < n; ++l) {
            f_vals[bi * n + l] = eval_extremogram_functional(
                y, a, b, lags.spatial_of(l), lags.temporal_of(l));
        }
        c_vals[bi] = eval_extremogram_functional(y, a, a, 0, 0);
    }

    std::vector<double> sigma_ab(n * n, 0.0);
    std::vector<double> sigma_prime(n, 0.0);
    double sigma_aa0 = 0.0;
    for (std::size_t bi = 0; bi < n_b; ++bi) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                sigma_ab[i * n + j] += f_vals[bi * n + i] * f_vals[bi * n + j];
            }
            sigma_prime[i] += f_vals[bi * n + i] * c_vals[bi];
        }
        sigma_aa0 += c_vals[bi] * c_vals[bi];
    }
    const double scale = 1.0 / (static_cast<double>(n_b) * r_total * v_n);
    for (double& v : sigma_ab) {
        v *= scale;
    }
    for (double& v : sigma_prime) {
        v *= scale;
    }
    sigma_aa0 *= scale;

    return assemble_sigma(lags, std::move(sigma_ab), std::move(sigma_prime), sigma_aa0,
                          std::vector<double>(rho_star.begin(), rho_star.end()));
}

} // namespace rfx
