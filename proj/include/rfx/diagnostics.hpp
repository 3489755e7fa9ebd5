#pragma once

/// @file
/// Lindeberg and dependence diagnostics: the truncated-moment statistic, the
/// summed moments A_n / a_n / B_n(eps) of the per-block standardized vectors,
/// the characteristic-function gap Delta_n against a Gaussian surrogate, the
/// summed dependence covariances T (d = 2) and T* (d = 3), and the
/// right-hand sides of the bounding inequalities.
///
/// All estimators work on replicated draws of the whole block array; a single
/// realization cannot estimate the between-block covariances, so collecting
/// fewer than two replicates is refused.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/lattice.hpp"
#include "rfx/parallel.hpp"
#include "rfx/rng.hpp"
#include "rfx/stats.hpp"

namespace rfx {

/// Replicable source of per-block cluster-functional values. One draw fills
/// block_count * tuple_size values: value[j * tuple_size + s] = f_s(Y_j) with
/// blocks in lexicographic order.
struct BlockValueSource {
    Index block_count = 0;
    std::size_t tuple_size = 1;
    std::function<void(std::uint64_t seed, std::span<double> out)> draw;
};

/// Centering and scaling policy for building W vectors from functional
/// values. An empty analytic_mean requests pooled empirical means across all
/// replicates and blocks.
struct WPlan {
    double nn_vn = 1.0; // n_n v_n
    std::vector<double> analytic_mean;
};

/// Materialized replicate draws of the W arrays.
struct WDraws {
    Index block_count = 0;
    std::size_t tuple_size = 1;
    Index replicates = 0;
    std::vector<double> w;          // [b][j][s], replicate-major
    std::vector<double> means_used; // centering per functional

    double at(Index b, Index j, std::size_t s) const {
        return w[(static_cast<std::size_t>(b) * static_cast<std::size_t>(block_count) +
                  static_cast<std::size_t>(j)) * tuple_size + s];
    }
};

inline WDraws collect_w_draws(const BlockValueSource& source, Index replicates,
                              std::uint64_t seed, const WPlan& plan) {
    if (replicates < 2) {
        throw sample_error("dependence diagnostics need at least 2 replicates");
    }
    if (!(plan.nn_vn > 0.0)) {
        throw degenerate_error("n_n v_n must be > 0");
    }
    const std::size_t k = source.tuple_size;
    if (!plan.analytic_mean.empty() && plan.analytic_mean.size() != k) {
        throw param_error("analytic mean count must match the functional tuple");
    }
    WDraws draws;
    draws.block_count = source.block_count;
    draws.tuple_size = k;
    draws.replicates = replicates;
    const std::size_t per_rep = static_cast<std::size_t>(source.block_count) * k;
    draws.w.assign(static_cast<std::size_t>(replicates) * per_rep, 0.0);
    parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
        source.draw(derive_seed(seed, b),
                    std::span<double>(draws.w.data() + b * per_rep, per_rep));
    });

    draws.means_used.assign(k, 0.0);
    if (!plan.analytic_mean.empty()) {
        draws.means_used = plan.analytic_mean;
    } else {
        const std::size_t n = static_cast<std::size_t>(replicates) *
                              static_cast<std::size_t>(source.block_count);
        for (std::size_t i = 0; i < draws.w.size(); i += k) {
            for (std::size_t s = 0; s < k; ++s) {
                draws.means_used[s] += draws.w[i + s];
            }
        }
        for (std::size_t s = 0; s < k; ++s) {
            draws.means_used[s] /= static_cast<double>(n);
        }
    }
    const double scale = 1.0 / std::sqrt(plan.nn_vn);
    for (std::size_t i = 0; i < draws.w.size(); i += k) {
        for (std::size_t s = 0; s < k; ++s) {
            draws.w[i + s] = scale * (draws.w[i + s] - draws.means_used[s]);
        }
    }
    return draws;
}

/// Monte Carlo version of the Lindeberg requirement for one functional:
/// (r_n v_n)^{-1} average of (f - mean)^2 over samples where the deviation
/// exceeds eps * sqrt(n_n v_n).
inline double lindeberg_statistic(std::span<const double> f_values, double r_n,
                                  double v_n, double n_n, double eps) {
    if (f_values.empty()) {
        throw sample_error("lindeberg_statistic needs at least one sample");
    }
    if (!(r_n * v_n > 0.0)) {
        throw degenerate_error("r_n v_n must be > 0");
    }
    if (!(eps > 0.0)) {
        throw param_error("eps must be > 0");
    }
    const double m = mean(f_values);
    const double cut = eps * std::sqrt(n_n * v_n);
    double acc = 0.0;
    for (double v : f_values) {
        const double dev = v - m;
        if (std::abs(dev) > cut) {
            acc += dev * dev;
        }
    }
    return acc / (static_cast<double>(f_values.size()) * r_n * v_n);
}

/// Summed moments of the per-block standardized vectors. By stationarity all
/// blocks share one law, so each sum is block_count times the pooled
/// replicate average.
struct MomentSummary {
    double sum_abs_2_delta = 0.0; // A_n
    double sum_sq = 0.0;          // a_n
    std::vector<std::pair<double, double>> truncated_sq; // (eps, B_n(eps))
    double delta = 1.0;
    Index block_count = 0;
    Index samples = 0;
    double stderr_sum_abs_2_delta = 0.0;

    double truncated_at(double eps) const {
        for (const auto& [e, v] : truncated_sq) {
            if (e == eps) {
                return v;
            }
        }
        throw param_error("eps was not among the evaluated truncation levels");
    }
};

/// `w_flat` holds n_draws k-vectors of W values for a generic block.
inline MomentSummary moment_sums(std::span<const double> w_flat, std::size_t k,
                                 double delta, std::span<const double> eps_list,
                                 Index block_count) {
    if (!(delta > 0.0) || delta > 1.0) {
        throw param_error("delta must lie in (0,1]");
    }
    if (k == 0 || w_flat.size() % k != 0 || w_flat.empty()) {
        throw sample_error("moment_sums needs at least one W draw");
    }
    const std::size_t n = w_flat.size() / k;
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double v = w_flat[i * k + c];
            s += v * v;
        }
        norms[i] = std::sqrt(s);
    }
    MomentSummary out;
    out.delta = delta;
    out.block_count = block_count;
    out.samples = static_cast<Index>(n);
    const double bc = static_cast<double>(block_count);
    double acc_2d = 0.0;
    double acc_2d_sq = 0.0;
    double acc_2 = 0.0;
    for (double v : norms) {
        const double p = std::pow(v, 2.0 + delta);
        acc_2d += p;
        acc_2d_sq += p * p;
        acc_2 += v * v;
    }
    const double dn = static_cast<double>(n);
    out.sum_abs_2_delta = bc * acc_2d / dn;
    out.sum_sq = bc * acc_2 / dn;
    if (n > 1) {
        const double var = std::max(0.0, (acc_2d_sq - acc_2d * acc_2d / dn) / (dn - 1.0));
        out.stderr_sum_abs_2_delta = bc * std::sqrt(var / dn);
    }
    for (double eps : eps_list) {
        double acc = 0.0;
        for (double v : norms) {
            if (v > eps) {
                acc += v * v;
            }
        }
        out.truncated_sq.emplace_back(eps, bc * acc / dn);
    }
    return out;
}

inline MomentSummary moment_sums(const WDraws& draws, double delta,
                                 std::span<const double> eps_list) {
    return moment_sums(draws.w, draws.tuple_size, delta, eps_list, draws.block_count);
}

struct DeltaEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::vector<double> t;
    Index replicates = 0;
    bool covariance_clipped = false; // surrogate covariance repaired by clipping
};

namespace detail {

inline std::complex<double> cf_point(std::span<const double> t,
                                     std::span<const double> x) {
    double dot = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        dot += t[i] * x[i];
    }
    return {std::cos(dot), std::sin(dot)};
}

/// Covariance matrix of (Re mean, Im mean) for a complex sample mean.
inline std::array<double, 3> mean_cov2(std::span<const std::complex<double>> z) {
    const auto n = static_cast<double>(z.size());
    double mr = 0.0;
    double mi = 0.0;
    for (const auto& v : z) {
        mr += v.real();
        mi += v.imag();
    }
    mr /= n;
    mi /= n;
    double vrr = 0.0;
    double vii = 0.0;
    double vri = 0.0;
    for (const auto& v : z) {
        const double dr = v.real() - mr;
        const double di = v.imag() - mi;
        vrr += dr * dr;
        vii += di * di;
        vri += dr * di;
    }
    const double denom = n > 1.5 ? (n - 1.0) * n : 1.0; // var of the mean
    return {vrr / denom, vii / denom, vri / denom};
}

} // namespace detail

/// Gap between the characteristic function of the summed W array and of its
/// independent Gaussian surrogate, |E h(sum W) - E h(sum W')| with
/// h(w) = exp(i <t, w>). The surrogate covariance is the pooled replicate
/// estimate, shared across blocks by stationarity; negative eigenvalues are
/// clipped to zero and flagged.
inline DeltaEstimate estimate_delta_n(const WDraws& draws, std::span<const double> t,
                                      std::uint64_t seed) {
    if (t.size() != draws.tuple_size) {
        throw param_error("frequency vector length must match the functional tuple");
    }
    const std::size_t k = draws.tuple_size;
    const auto b_count = static_cast<std::size_t>(draws.replicates);
    const auto m = static_cast<std::size_t>(draws.block_count);

    // data side: h(sum_j W_bj)
    std::vector<std::complex<double>> data_cf(b_count);
    std::vector<double> sum(k);
    for (std::size_t b = 0; b < b_count; ++b) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double* w = draws.w.data() + (b * m + j) * k;
            for (std::size_t c = 0; c < k; ++c) {
                sum[c] += w[c];
            }
        }
        data_cf[b] = detail::cf_point(t, sum);
    }

    // pooled per-block covariance of W
    SymMatrix cov = SymMatrix::zero(k);
    const std::size_t n_draws = b_count * m;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const double* w = draws.w.data() + i * k;
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                cov.at(r, c) += w[r] * w[c];
            }
        }
    }
    for (double& v : cov.a) {
        v /= static_cast<double>(n_draws - 1);
    }
    bool clipped = false;
    const SymMatrix root = psd_sqrt(cov, clipped);

    // surrogate side: per-block Gaussian draws with the estimated covariance
    const CounterRng rng(derive_seed(seed, 0x5157u));
    std::vector<std::complex<double>> surr_cf(b_count);
    std::vector<double> g(k);
    for (std::size_t b = 0; b < b_count; ++b) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const std::uint64_t base = (static_cast<std::uint64_t>(b) * m + j) * k;
            for (std::size_t c = 0; c < k; ++c) {
                g[c] = rng.normal(base + c);
            }
            for (std::size_t r = 0; r < k; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    acc += root.at(r, c) * g[c];
                }
                sum[r] += acc;
            }
        }
        surr_cf[b] = detail::cf_point(t, sum);
    }

    std::complex<double> mean_data{0.0, 0.0};
    std::complex<double> mean_surr{0.0, 0.0};
    for (std::size_t b = 0; b < b_count; ++b) {
        mean_data += data_cf[b];
        mean_surr += surr_cf[b];
    }
    mean_data /= static_cast<double>(b_count);
    mean_surr /= static_cast<double>(b_count);
    const std::complex<double> diff = mean_data - mean_surr;

    DeltaEstimate out;
    out.t.assign(t.begin(), t.end());
    out.replicates = draws.replicates;
    out.covariance_clipped = clipped;
    out.value = std::abs(diff);

    // delta method over the two sample means, treated as independent
    const auto cd = detail::mean_cov2(data_cf);
    const auto cs = detail::mean_cov2(surr_cf);
    const double srr = cd[0] + cs[0];
    const double sii = cd[1] + cs[1];
    const double sri = cd[2] + cs[2];
    if (out.value > 1e-12) {
        const double ur = diff.real() / out.value;
        const double ui = diff.imag() / out.value;
        out.stderr_ = std::sqrt(std::max(0.0, ur * ur * srr + 2.0 * ur * ui * sri +
                                                  ui * ui * sii));
    } else {
        out.stderr_ = std::sqrt(std::max(0.0, srr + sii));
    }
    return out;
}

struct TEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::vector<double> t;
    int block_rank = 2; // d
    Index replicates = 0;
};

/// Summed moduli of the replicate covariances between exp(i<t, V_j>) and
/// exp(i<t, W_j>), where V_j is the sum of W over all blocks after j in
/// lexicographic order (the partial-sum complement of the chained index
/// sets; identical bookkeeping for d = 2 and d = 3). The reported spread is
/// the sum of the per-term noise scales: the moduli prevent cancellation, so
/// per-term errors accumulate linearly.
inline TEstimate estimate_T(const WDraws& draws, std::span<const double> t, int block_rank,
                            std::span<const Index> m_dims) {
    if (t.size() != draws.tuple_size) {
        throw param_error("frequency vector length must match the functional tuple");
    }
    if (block_rank != 2 && block_rank != 3) {
        throw param_error("T is defined for block ranks 2 and 3");
    }
    if (m_dims.size() != static_cast<std::size_t>(block_rank)) {
        throw param_error("m_dims rank must equal the block rank");
    }
    Index product = 1;
    for (Index v : m_dims) {
        product *= v;
    }
    if (product != draws.block_count) {
        throw param_error("m_dims product must equal the block count");
    }
    const std::size_t k = draws.tuple_size;
    const auto b_count = static_cast<std::size_t>(draws.replicates);
    const auto m = static_cast<std::size_t>(draws.block_count);

    // complement partial sums V_bj = S_b - prefix_bj, then both exponentials
    std::vector<std::complex<double>> v_cf(b_count * m);
    std::vector<std::complex<double>> w_cf(b_count * m);
    std::vector<double> total(k);
    std::vector<double> prefix(k);
    std::vector<double> v(k);
    for (std::size_t b = 0; b < b_count; ++b) {
        std::fill(total.begin(), total.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double* w = draws.w.data() + (b * m + j) * k;
            for (std::size_t c = 0; c < k; ++c) {
                total[c] += w[c];
            }
        }
        std::fill(prefix.begin(), prefix.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double* w = draws.w.data() + (b * m + j) * k;
            for (std::size_t c = 0; c < k; ++c) {
                prefix[c] += w[c];
                v[c] = total[c] - prefix[c];
            }
            v_cf[b * m + j] = detail::cf_point(t, v);
            w_cf[b * m + j] = detail::cf_point(t, {w, k});
        }
    }

    TEstimate out;
    out.t.assign(t.begin(), t.end());
    out.block_rank = block_rank;
    out.replicates = draws.replicates;
    const double bn = static_cast<double>(b_count);
    for (std::size_t j = 0; j < m; ++j) {
        std::complex<double> mu_v{0.0, 0.0};
        std::complex<double> mu_w{0.0, 0.0};
        for (std::size_t b = 0; b < b_count; ++b) {
            mu_v += v_cf[b * m + j];
            mu_w += w_cf[b * m + j];
        }
        mu_v /= bn;
        mu_w /= bn;
        std::complex<double> acc{0.0, 0.0};
        double acc_rr = 0.0;
        double acc_ii = 0.0;
        for (std::size_t b = 0; b < b_count; ++b) {
            const std::complex<double> p = (v_cf[b * m + j] - mu_v) * (w_cf[b * m + j] - mu_w);
            acc += p;
            acc_rr += p.real() * p.real();
            acc_ii += p.imag() * p.imag();
        }
        const std::complex<double> mean_p = acc / bn;
        const std::complex<double> cov = acc / (bn - 1.0);
        out.value += std::abs(cov);
        const double var_r = std::max(0.0, acc_rr / bn - mean_p.real() * mean_p.real());
        const double var_i = std::max(0.0, acc_ii / bn - mean_p.imag() * mean_p.imag());
        out.stderr_ += (bn / (bn - 1.0)) * std::sqrt((var_r + var_i) / bn);
    }
    return out;
}

/// One-call forms drawing replicates from a source directly.
inline DeltaEstimate estimate_delta_n(const BlockValueSource& source,
                                      std::span<const double> t, Index replicates,
                                      std::uint64_t seed, const WPlan& plan) {
    return estimate_delta_n(collect_w_draws(source, replicates, seed, plan), t,
                            derive_seed(seed, 0xde17a));
}

inline TEstimate estimate_T(const BlockValueSource& source, std::span<const double> t,
                            Index replicates, int block_rank,
                            std::span<const Index> m_dims, std::uint64_t seed,
                            const WPlan& plan) {
    return estimate_T(collect_w_draws(source, replicates, seed, plan), t, block_rank,
                      m_dims);
}

/// Right-hand sides of the three bounding inequalities, evaluated with
/// ||h^(2)|| = ||t||^2 and ||h^(3)|| = ||t||^3 for h(w) = exp(i<t,w>).
struct BoundReport {
    double independence = 0.0;      // 6 ||t||^{2+delta} A_n
    double classical = 0.0;         // 2 ||t||^2 B_n(eps) + ||t||^3 a_n (4 eps/3 + sqrt(B_n))
    double dependent = 0.0;         // T + 6 ||t||^{2+delta} A_n
    bool has_dependent = false;
    double eps = 0.0;
    double t_norm = 0.0;
};

inline BoundReport lemma_bounds(const MomentSummary& summary, std::span<const double> t,
                                double eps, const std::optional<TEstimate>& t_hat = {}) {
    BoundReport out;
    out.eps = eps;
    double nsq = 0.0;
    for (double v : t) {
        nsq += v * v;
    }
    const double tnorm = std::sqrt(nsq);
    out.t_norm = tnorm;
    const double h2 = tnorm * tnorm;
    const double h3 = h2 * tnorm;
    const double a_n = summary.sum_abs_2_delta;
    out.independence = 6.0 * std::pow(h2, 1.0 - summary.delta) *
                       std::pow(h3, summary.delta) * a_n;
    const double b_eps = summary.truncated_at(eps);
    out.classical = 2.0 * h2 * b_eps +
                    h3 * summary.sum_sq * (4.0 / 3.0 * eps + std::sqrt(b_eps));
    if (t_hat) {
        out.dependent = t_hat->value + 6.0 * std::pow(tnorm, 2.0 + summary.delta) * a_n;
        out.has_dependent = true;
    }
    return out;
}

/// The classical conditions chained back through Markov's inequality:
///   2 ||t||^2 eps^{-delta} A_n + ||t||^3 a_n (4 eps/3 + eps^{-delta/2} sqrt(A_n)).
inline double chained_bound(const MomentSummary& summary, std::span<const double> t,
                            double eps) {
    double nsq = 0.0;
    for (double v : t) {
        nsq += v * v;
    }
    const double tnorm = std::sqrt(nsq);
    const double h2 = tnorm * tnorm;
    const double h3 = h2 * tnorm;
    return 2.0 * h2 * std::pow(eps, -summary.delta) * summary.sum_abs_2_delta +
           h3 * summary.sum_sq *
               (4.0 / 3.0 * eps +
                std::pow(eps, -summary.delta / 2.0) * std::sqrt(summary.sum_abs_2_delta));
}

} // namespace rfx
