#pragma once

/// @file
/// Small statistics toolbox: nearest-rank quantiles, moment summaries,
/// normal CDF / quantile, Kolmogorov-Smirnov distance and dense symmetric
/// matrix helpers for the low-dimensional covariances used elsewhere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rfx/common.hpp"

namespace rfx {

/// Nearest-rank empirical quantile: the ceil(p*N)-th order statistic.
/// Deterministic and order-statistic exact; no interpolation.
inline double nearest_rank_quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw sample_error("quantile of an empty sample");
    }
    if (!(p > 0.0) || !(p <= 1.0)) {
        throw param_error("quantile level must lie in (0,1]");
    }
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (n-1 denominator).
inline double variance(std::span<const double> x) {
    if (x.size() < 2) {
        throw sample_error("variance needs at least 2 samples");
    }
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(x.size() - 1);
}

/// Unbiased sample covariance (n-1 denominator).
inline double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw sample_error("covariance inputs differ in length");
    }
    if (x.size() < 2) {
        throw sample_error("covariance needs at least 2 samples");
    }
    const double mx = mean(x);
    const double my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += (x[i] - mx) * (y[i] - my);
    }
    return s / static_cast<double>(x.size() - 1);
}

/// Central moment m_j with 1/n normalization.
inline double central_moment(std::span<const double> x, int order) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += std::pow(v - m, order);
    }
    return s / static_cast<double>(x.size());
}

/// m3 / m2^{3/2}, bias-uncorrected.
inline double skewness(std::span<const double> x) {
    const double m2 = central_moment(x, 2);
    if (m2 <= 0.0) {
        throw degenerate_error("skewness of a constant sample");
    }
    return central_moment(x, 3) / std::pow(m2, 1.5);
}

/// m4 / m2^2 - 3, bias-uncorrected.
inline double excess_kurtosis(std::span<const double> x) {
    const double m2 = central_moment(x, 2);
    if (m2 <= 0.0) {
        throw degenerate_error("kurtosis of a constant sample");
    }
    return central_moment(x, 4) / (m2 * m2) - 3.0;
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Inverse standard normal CDF by bisection on erfc; accurate to ~1e-13,
/// plenty for test oracles and diagnostics.
inline double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw param_error("normal quantile level must lie in (0,1)");
    }
    double lo = -40.0;
    double hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of the sample
/// and the normal CDF with the given mean and standard deviation.
inline double ks_distance(std::vector<double> samples, double mu, double sigma) {
    if (samples.empty()) {
        throw sample_error("KS distance of an empty sample");
    }
    if (!(sigma > 0.0)) {
        throw degenerate_error("KS distance with non-positive scale");
    }
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = normal_cdf((samples[i] - mu) / sigma);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
    }
    return d;
}

/// Column-major dense symmetric matrix of small fixed dimension.
struct SymMatrix {
    std::size_t dim = 0;
    std::vector<double> a; // dim*dim entries

    static SymMatrix zero(std::size_t k) { return SymMatrix{k, std::vector<double>(k * k, 0.0)}; }
    double& at(std::size_t i, std::size_t j) { return a[i * dim + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * dim + j]; }
};

/// Cyclic Jacobi eigendecomposition; returns eigenvalues and fills the
/// columns of V with eigenvectors. Fine for the k <= 8 matrices used here.
inline std::vector<double> jacobi_eigen(const SymMatrix& m, SymMatrix& v_out) {
    const std::size_t n = m.dim;
    SymMatrix a = m;
    v_out = SymMatrix::zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        v_out.at(i, i) = 1.0;
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += a.at(p, q) * a.at(p, q);
            }
        }
        if (off < 1e-28) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) {
                    continue;
                }
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p);
                    const double aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i);
                    const double aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v_out.at(i, p);
                    const double viq = v_out.at(i, q);
                    v_out.at(i, p) = c * vip - s * viq;
                    v_out.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = a.at(i, i);
    }
    return eig;
}

/// Square root factor of a symmetric matrix with negative eigenvalues
/// clipped to zero. Returns L with L L^T = clip(M); sets `clipped` when any
/// eigenvalue was below -1e-12 * max|eig|.
inline SymMatrix psd_sqrt(const SymMatrix& m, bool& clipped) {
    SymMatrix v = SymMatrix::zero(m.dim);
    std::vector<double> eig = jacobi_eigen(m, v);
    double scale = 0.0;
    for (double e : eig) {
        scale = std::max(scale, std::abs(e));
    }
    clipped = false;
    SymMatrix l = SymMatrix::zero(m.dim);
    for (std::size_t j = 0; j < m.dim; ++j) {
        double e = eig[j];
        if (e < 0.0) {
            if (e < -1e-12 * scale) {
                clipped = true;
            }
            e = 0.0;
        }
        const double r = std::sqrt(e);
        for (std::size_t i = 0; i < m.dim; ++i) {
            l.at(i, j) = v.at(i, j) * r;
        }
    }
    return l;
}

} // namespace rfx
