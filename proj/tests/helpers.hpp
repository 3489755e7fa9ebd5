#pragma once

// Shared test utilities: deterministic random fields and blocks with a
// controllable fraction of relevant entries.

#include <cstdint>
#include <span>
#include <vector>

#include "rfx/lattice.hpp"
#include "rfx/relevance.hpp"
#include "rfx/rng.hpp"

namespace rfx::test {

/// Field whose entries are 0 with probability (1 - p_relevant) and uniform
/// in (1, 3) otherwise; with the unit norm-exceedance set, relevant points
/// have frequency ~ p_relevant.
inline Field sparse_field(std::vector<Index> dims, double p_relevant,
                          std::uint64_t seed, Index value_dim = 1) {
    Field field(LatticeShape{std::move(dims), value_dim});
    const CounterRng rng(seed);
    auto data = field.raw();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double u = rng.uniform(2 * i);
        data[i] = u < p_relevant ? 1.0 + 2.0 * rng.uniform(2 * i + 1) : 0.0;
    }
    return field;
}

inline Block sparse_block(std::vector<Index> extent, double p_relevant,
                          std::uint64_t seed, Index value_dim = 1) {
    const Field f = sparse_field(extent, p_relevant, seed, value_dim);
    Block b;
    b.extent = std::move(extent);
    b.value_dim = value_dim;
    b.origin.assign(b.extent.size(), 1);
    b.values.assign(f.raw().begin(), f.raw().end());
    return b;
}

/// Wraps a field in a NormalizedField without rescaling (u_n = 1).
inline NormalizedField as_normalized(Field field, double k_n = 10.0) {
    NormalizedField nf;
    nf.field = std::move(field);
    nf.u_n = 1.0;
    nf.k_n = k_n;
    return nf;
}

} // namespace rfx::test
