#pragma once

/// @file
/// Cluster functionals: real-valued maps on blocks that depend only on the
/// block core and vanish on the zero block. Ships the extremogram family
/// f_{A,B,h_s,h_t} along with a property checker for user functionals.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/lattice.hpp"
#include "rfx/relevance.hpp"

namespace rfx {

/// Evaluable cluster functional with a declared identifier.
struct ClusterFunctional {
    std::string id;
    std::function<double(const Block&)> eval;

    double operator()(const Block& block) const { return eval(block); }
};

namespace detail {

/// Shared kernel for the extremogram functional: sums the A x B indicator
/// over the radius-h1 ring of the section center and the in-extent time
/// range, normalized by the ring cardinality. `value_at(i1,i2,i3)` returns
/// the R^k point at 1-based within-extent coordinates.
template <class ValueAt>
double eval_extremogram_kernel(Index l1, Index l2, Index l3, const RelevanceSet& a,
                               const RelevanceSet& b, Index h1, Index h2,
                               ValueAt&& value_at, std::size_t k) {
    if (h1 < 0 || h2 < 0) {
        throw lag_error("lags must be nonnegative");
    }
    // ceil(min(l1,l2)/2) - 1, the largest radius whose ring stays inside
    const Index cap = (std::min(l1, l2) - 1) / 2;
    if (h1 > cap) {
        throw lag_error("spatial lag too large: the ring leaves the block section");
    }
    if (h2 >= l3) {
        throw lag_error("temporal lag must be smaller than the block time extent");
    }
    const auto center = section_center(l1, l2);
    const auto ring = sphere(center, h1, {l1, l2});
    if (ring.empty()) {
        throw lag_error("empty ring");
    }
    const double inv = 1.0 / static_cast<double>(ring.size());
    double total = 0.0;
    for (Index i3 = 1; i3 + h2 <= l3; ++i3) {
        const std::span<const double> cval{value_at(center[0], center[1], i3), k};
        if (!a.contains(cval)) {
            continue;
        }
        for (const auto& p : ring) {
            const std::span<const double> rval{value_at(p[0], p[1], i3 + h2), k};
            if (b.contains(rval)) {
                total += inv;
            }
        }
    }
    return total;
}

} // namespace detail

/// Evaluates f_{A,B,h1,h2} on a 3-d block of extent l1 x l2 x l3.
inline double eval_extremogram_functional(const Block& block, const RelevanceSet& a,
                                          const RelevanceSet& b, Index h1, Index h2) {
    if (block.extent.size() != 3) {
        throw shape_error("extremogram functionals act on 3-d blocks");
    }
    const auto k = static_cast<std::size_t>(block.value_dim);
    return detail::eval_extremogram_kernel(
        block.extent[0], block.extent[1], block.extent[2], a, b, h1, h2,
        [&block](Index i1, Index i2, Index i3) { return block.at3_vec(i1, i2, i3); }, k);
}

/// Wraps the extremogram functional as a ClusterFunctional value.
inline ClusterFunctional extremogram_functional(RelevanceSet a, RelevanceSet b,
                                                Index h_s, Index h_t) {
    ClusterFunctional f;
    f.id = "f[hs=" + std::to_string(h_s) + ",ht=" + std::to_string(h_t) + "]";
    f.eval = [a = std::move(a), b = std::move(b), h_s, h_t](const Block& block) {
        return eval_extremogram_functional(block, a, b, h_s, h_t);
    };
    return f;
}

/// Checks the defining cluster property on one block: f(y) = f(C(y)) with
/// the core re-embedded at its original offsets, and f(0) = 0.
template <class Pred>
inline bool check_cluster_property(const ClusterFunctional& f, const Block& block,
                                   const Pred& set) {
    const Core c = core_of(block, set);
    const Block embedded = embed_core(c, block.extent, block.value_dim);
    if (f(block) != f(embedded)) {
        return false;
    }
    const Block zero = Block::zeros(block.extent, block.value_dim);
    return f(zero) == 0.0;
}

} // namespace rfx
