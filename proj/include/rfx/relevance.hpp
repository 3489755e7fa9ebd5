#pragma once

/// @file
/// Relevance sets A (subsets of R^k bounded away from zero), field
/// normalization by a high empirical quantile, block cores and the
/// exceedance probability v_n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/lattice.hpp"
#include "rfx/stats.hpp"

namespace rfx {

enum class Norm { linf, l2 };

inline double point_norm(std::span<const double> x, Norm norm) {
    if (norm == Norm::linf) {
        double m = 0.0;
        for (double v : x) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

/// Declarative relevance set. All three families exclude the origin, so
/// is_relevant(0) is false by construction.
struct RelevanceSet {
    enum class Kind { norm_exceedance, box, ball_complement };

    Kind kind = Kind::norm_exceedance;
    Norm norm = Norm::linf;
    double threshold = 1.0; // norm_exceedance theta / ball_complement rho
    std::vector<double> lower, upper;
    std::vector<bool> lower_open, upper_open;

    static RelevanceSet norm_exceedance(double theta, Norm norm = Norm::linf) {
        if (!(theta > 0.0)) {
            throw param_error("norm-exceedance threshold must be > 0");
        }
        RelevanceSet s;
        s.kind = Kind::norm_exceedance;
        s.norm = norm;
        s.threshold = theta;
        return s;
    }

    static RelevanceSet ball_complement(double rho, Norm norm = Norm::linf) {
        if (!(rho > 0.0)) {
            throw param_error("ball-complement radius must be > 0");
        }
        RelevanceSet s;
        s.kind = Kind::ball_complement;
        s.norm = norm;
        s.threshold = rho;
        return s;
    }

    static RelevanceSet box(std::vector<double> lower, std::vector<double> upper,
                            std::vector<bool> lower_open = {},
                            std::vector<bool> upper_open = {}) {
        RelevanceSet s;
        s.kind = Kind::box;
        s.lower = std::move(lower);
        s.upper = std::move(upper);
        if (s.lower.size() != s.upper.size() || s.lower.empty()) {
            throw param_error("box bounds must be nonempty and equal-length");
        }
        s.lower_open = lower_open.empty() ? std::vector<bool>(s.lower.size(), false)
                                          : std::move(lower_open);
        s.upper_open = upper_open.empty() ? std::vector<bool>(s.lower.size(), false)
                                          : std::move(upper_open);
        if (s.lower_open.size() != s.lower.size() || s.upper_open.size() != s.lower.size()) {
            throw param_error("box open flags must match bound length");
        }
        // the box must exclude the origin
        bool zero_inside = true;
        for (std::size_t i = 0; i < s.lower.size(); ++i) {
            const bool lo_ok = s.lower_open[i] ? (0.0 > s.lower[i]) : (0.0 >= s.lower[i]);
            const bool hi_ok = s.upper_open[i] ? (0.0 < s.upper[i]) : (0.0 <= s.upper[i]);
            if (!(lo_ok && hi_ok)) {
                zero_inside = false;
                break;
            }
        }
        if (zero_inside) {
            throw param_error("box relevance set must exclude the origin");
        }
        return s;
    }

    bool contains(std::span<const double> x) const {
        switch (kind) {
        case Kind::norm_exceedance:
        case Kind::ball_complement:
            return point_norm(x, norm) > threshold;
        case Kind::box: {
            if (x.size() != lower.size()) {
                throw shape_error("box relevance set dimension mismatch");
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                const bool lo_ok = lower_open[i] ? (x[i] > lower[i]) : (x[i] >= lower[i]);
                const bool hi_ok = upper_open[i] ? (x[i] < upper[i]) : (x[i] <= upper[i]);
                if (!(lo_ok && hi_ok)) {
                    return false;
                }
            }
            return true;
        }
        }
        return false;
    }
};

template <class Pred>
inline bool is_relevant(std::span<const double> value, const Pred& set) {
    return set.contains(value);
}

/// Field rescaled by the empirical (1 - 1/k_n)-quantile u_n of the
/// pointwise norms.
struct NormalizedField {
    Field field;
    double u_n = 0.0;
    double k_n = 0.0;
    Norm norm_used = Norm::linf;
};

/// Scales every value by a caller-supplied u_n (analytic quantile path).
inline NormalizedField normalize_field_with_scale(const Field& field, double u_n,
                                                  double k_n, Norm norm = Norm::linf) {
    if (!(u_n > 0.0)) {
        throw degenerate_error("normalization scale u_n must be > 0");
    }
    NormalizedField out;
    out.field = field;
    out.u_n = u_n;
    out.k_n = k_n;
    out.norm_used = norm;
    const double inv = 1.0 / u_n;
    for (double& v : out.field.raw()) {
        v *= inv;
    }
    return out;
}

/// Empirical normalization: u_n is the nearest-rank (1 - 1/k_n)-quantile of
/// the pointwise norms over the whole lattice.
inline NormalizedField normalize_field(const Field& field, double k_n,
                                       Norm norm = Norm::linf) {
    if (!(k_n > 1.0)) {
        throw param_error("quantile tuning k_n must exceed 1");
    }
    const Index sites = field.shape().site_count();
    if (sites == 0) {
        throw degenerate_error("cannot normalize an empty field");
    }
    const auto k = static_cast<std::size_t>(field.value_dim());
    std::vector<double> norms(static_cast<std::size_t>(sites));
    const auto data = field.raw();
    for (std::size_t s = 0; s < norms.size(); ++s) {
        norms[s] = point_norm(data.subspan(s * k, k), norm);
    }
    const double u_n = nearest_rank_quantile(std::move(norms), 1.0 - 1.0 / k_n);
    if (!(u_n > 0.0)) {
        throw degenerate_error("degenerate scale: quantile of pointwise norms is zero");
    }
    return normalize_field_with_scale(field, u_n, k_n, norm);
}

/// Empirical frequency of relevant points over the whole lattice. For
/// simulators with known laws, supply the exact marginal probability to the
/// consumers directly instead (analytic mode).
template <class Pred>
inline double estimate_v_n(const NormalizedField& nf, const Pred& set) {
    const Index sites = nf.field.shape().site_count();
    if (sites == 0) {
        throw degenerate_error("empty field");
    }
    const auto k = static_cast<std::size_t>(nf.field.value_dim());
    const auto data = nf.field.raw();
    Index hits = 0;
    for (Index s = 0; s < sites; ++s) {
        if (set.contains(data.subspan(static_cast<std::size_t>(s) * k, k))) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(sites);
}

/// Minimal sub-block of a block containing all its relevant values, or the
/// distinguished zero element when no value is relevant.
struct Core {
    bool zero = true;
    std::vector<Index> lo, hi; // r_{i,I}, r_{i,S}, 1-based inclusive
    Block values;              // extent hi - lo + 1; empty when zero
};

template <class Pred>
inline Core core_of(const Block& block, const Pred& set) {
    const std::size_t d = block.extent.size();
    Core core;
    core.lo.assign(d, std::numeric_limits<Index>::max());
    core.hi.assign(d, 0);

    Coord within(d, 1);
    const Index cells = block.cell_count();
    bool any = false;
    for (Index cell = 0; cell < cells; ++cell) {
        if (set.contains(block.value(within))) {
            any = true;
            for (std::size_t ax = 0; ax < d; ++ax) {
                core.lo[ax] = std::min(core.lo[ax], within[ax]);
                core.hi[ax] = std::max(core.hi[ax], within[ax]);
            }
        }
        for (std::size_t ax = d; ax-- > 0;) {
            if (++within[ax] <= block.extent[ax]) {
                break;
            }
            within[ax] = 1;
        }
    }
    if (!any) {
        return core;
    }
    core.zero = false;
    std::vector<Index> extent(d);
    for (std::size_t ax = 0; ax < d; ++ax) {
        extent[ax] = core.hi[ax] - core.lo[ax] + 1;
    }
    core.values = Block::zeros(extent, block.value_dim);
    for (std::size_t ax = 0; ax < d; ++ax) {
        core.values.origin[ax] = block.origin[ax] + core.lo[ax] - 1;
    }
    Coord cw(d, 1);
    const Index ccells = core.values.cell_count();
    Coord parent(d);
    for (Index cell = 0; cell < ccells; ++cell) {
        for (std::size_t ax = 0; ax < d; ++ax) {
            parent[ax] = core.lo[ax] + cw[ax] - 1;
        }
        const auto src = block.value(parent);
        auto dst = core.values.value(cw);
        std::copy(src.begin(), src.end(), dst.begin());
        for (std::size_t ax = d; ax-- > 0;) {
            if (++cw[ax] <= core.values.extent[ax]) {
                break;
            }
            cw[ax] = 1;
        }
    }
    return core;
}

/// Re-embeds a core into a zero block of the original extent at its original
/// offsets. Geometry-dependent functionals evaluate f(C(y)) through this
/// embedding; zeros are never relevant, so indicator functionals are
/// unaffected by the padding.
inline Block embed_core(const Core& core, const std::vector<Index>& parent_extent,
                        Index value_dim) {
    Block out = Block::zeros(parent_extent, value_dim);
    if (core.zero) {
        return out;
    }
    const std::size_t d = parent_extent.size();
    Coord cw(d, 1);
    Coord parent(d);
    const Index cells = core.values.cell_count();
    for (Index cell = 0; cell < cells; ++cell) {
        for (std::size_t ax = 0; ax < d; ++ax) {
            parent[ax] = core.lo[ax] + cw[ax] - 1;
        }
        const auto src = core.values.value(cw);
        auto dst = out.value(parent);
        std::copy(src.begin(), src.end(), dst.begin());
        for (std::size_t ax = d; ax-- > 0;) {
            if (++cw[ax] <= core.values.extent[ax]) {
                break;
            }
            cw[ax] = 1;
        }
    }
    return out;
}

} // namespace rfx
