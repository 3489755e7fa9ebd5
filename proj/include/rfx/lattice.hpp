#pragma once

/// @file
/// d-dimensional observation lattices, complete-block partitions, block
/// centers and L-infinity spheres. Lattice coordinates are 1-based
/// throughout the public API; storage is row-major with the vector
/// component as the innermost axis.

#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"

namespace rfx {

using Index = std::int64_t;
using Coord = std::vector<Index>; // 1-based lattice coordinate

struct LatticeShape {
    std::vector<Index> dims; // n_1, ..., n_d
    Index value_dim = 1;     // k

    std::size_t rank() const { return dims.size(); }

    Index site_count() const {
        Index n = 1;
        for (Index d : dims) {
            n *= d;
        }
        return n;
    }

    void validate() const {
        if (dims.empty()) {
            throw shape_error("lattice must have at least one axis");
        }
        for (Index d : dims) {
            if (d < 1) {
                throw shape_error("all lattice extents must be >= 1");
            }
        }
        if (value_dim < 1) {
            throw shape_error("value dimension must be >= 1");
        }
    }
};

/// Observation lattice holding an R^k value at every site.
class Field {
public:
    Field() = default;

    explicit Field(LatticeShape shape)
        : shape_(std::move(shape)) {
        shape_.validate();
        data_.assign(static_cast<std::size_t>(shape_.site_count() * shape_.value_dim), 0.0);
    }

    const LatticeShape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.rank(); }
    Index value_dim() const { return shape_.value_dim; }
    std::span<const double> raw() const { return data_; }
    std::span<double> raw() { return data_; }

    /// Row-major site index of a 1-based coordinate.
    Index site_index(std::span<const Index> coord) const {
        Index idx = 0;
        for (std::size_t ax = 0; ax < shape_.dims.size(); ++ax) {
            const Index c = coord[ax];
            if (c < 1 || c > shape_.dims[ax]) {
                throw index_error("lattice coordinate out of range on axis " +
                                  std::to_string(ax + 1));
            }
            idx = idx * shape_.dims[ax] + (c - 1);
        }
        return idx;
    }

    std::span<const double> value(std::span<const Index> coord) const {
        const Index k = shape_.value_dim;
        return {data_.data() + site_index(coord) * k, static_cast<std::size_t>(k)};
    }

    std::span<double> value(std::span<const Index> coord) {
        const Index k = shape_.value_dim;
        return {data_.data() + site_index(coord) * k, static_cast<std::size_t>(k)};
    }

    double scalar(std::span<const Index> coord) const { return value(coord)[0]; }

    /// Unchecked fast path for 3-d scalar access, 1-based coordinates.
    double at3(Index s1, Index s2, Index t) const {
        const Index n2 = shape_.dims[1];
        const Index n3 = shape_.dims[2];
        return data_[static_cast<std::size_t>(
            (((s1 - 1) * n2 + (s2 - 1)) * n3 + (t - 1)) * shape_.value_dim)];
    }

    const double* at3_vec(Index s1, Index s2, Index t) const {
        const Index n2 = shape_.dims[1];
        const Index n3 = shape_.dims[2];
        return data_.data() + static_cast<std::size_t>(
            (((s1 - 1) * n2 + (s2 - 1)) * n3 + (t - 1)) * shape_.value_dim);
    }

private:
    LatticeShape shape_;
    std::vector<double> data_;
};

/// Partition of the lattice into complete blocks of side lengths r_i.
/// m_i = floor(n_i / r_i); incomplete edge blocks are ignored.
struct BlockGrid {
    std::vector<Index> dims; // lattice extents the grid was built for
    std::vector<Index> r;    // block side lengths
    std::vector<Index> m;    // complete block counts per axis

    std::size_t rank() const { return r.size(); }

    Index block_count() const {
        Index n = 1;
        for (Index v : m) {
            n *= v;
        }
        return n;
    }

    Index block_volume() const { // r_n = r_1 ... r_d
        Index n = 1;
        for (Index v : r) {
            n *= v;
        }
        return n;
    }

    /// Lexicographic position of a 1-based block index.
    Index flat_of(std::span<const Index> index) const {
        Index flat = 0;
        for (std::size_t ax = 0; ax < m.size(); ++ax) {
            const Index j = index[ax];
            if (j < 1 || j > m[ax]) {
                throw index_error("block index out of range on axis " +
                                  std::to_string(ax + 1));
            }
            flat = flat * m[ax] + (j - 1);
        }
        return flat;
    }

    /// Inverse of flat_of: the 1-based block index at a lexicographic slot.
    Coord index_at(Index flat) const {
        Coord index(m.size());
        for (std::size_t ax = m.size(); ax-- > 0;) {
            index[ax] = flat % m[ax] + 1;
            flat /= m[ax];
        }
        return index;
    }

    /// 1-based lattice coordinate of the block's (1,...,1) corner.
    Coord origin_of(std::span<const Index> index) const {
        Coord origin(r.size());
        for (std::size_t ax = 0; ax < r.size(); ++ax) {
            origin[ax] = (index[ax] - 1) * r[ax] + 1;
        }
        return origin;
    }
};

inline BlockGrid make_block_grid(const LatticeShape& shape, std::span<const Index> r) {
    shape.validate();
    if (r.size() != shape.dims.size()) {
        throw shape_error("block side count does not match lattice rank");
    }
    BlockGrid grid;
    grid.dims = shape.dims;
    grid.r.assign(r.begin(), r.end());
    grid.m.resize(r.size());
    for (std::size_t ax = 0; ax < r.size(); ++ax) {
        if (r[ax] < 1 || r[ax] > shape.dims[ax]) {
            throw shape_error("block side on axis " + std::to_string(ax + 1) +
                              " must lie in [1, n_i]");
        }
        grid.m[ax] = shape.dims[ax] / r[ax];
    }
    return grid;
}

/// A complete block: owning copy of the sub-array plus its lattice origin.
struct Block {
    std::vector<Index> extent; // l_1, ..., l_d
    Index value_dim = 1;
    Coord origin;              // 1-based lattice coordinate of corner (1,...,1)
    std::vector<double> values;

    static Block zeros(std::vector<Index> extent, Index value_dim) {
        Block b;
        b.extent = std::move(extent);
        b.value_dim = value_dim;
        b.origin.assign(b.extent.size(), 1);
        Index n = value_dim;
        for (Index e : b.extent) {
            n *= e;
        }
        b.values.assign(static_cast<std::size_t>(n), 0.0);
        return b;
    }

    Index cell_count() const {
        Index n = 1;
        for (Index e : extent) {
            n *= e;
        }
        return n;
    }

    Index cell_index(std::span<const Index> within) const { // 1-based within-block
        Index idx = 0;
        for (std::size_t ax = 0; ax < extent.size(); ++ax) {
            const Index c = within[ax];
            if (c < 1 || c > extent[ax]) {
                throw index_error("within-block coordinate out of range");
            }
            idx = idx * extent[ax] + (c - 1);
        }
        return idx;
    }

    std::span<const double> value(std::span<const Index> within) const {
        return {values.data() + cell_index(within) * value_dim,
                static_cast<std::size_t>(value_dim)};
    }

    std::span<double> value(std::span<const Index> within) {
        return {values.data() + cell_index(within) * value_dim,
                static_cast<std::size_t>(value_dim)};
    }

    const double* at3_vec(Index i1, Index i2, Index i3) const {
        return values.data() + static_cast<std::size_t>(
            (((i1 - 1) * extent[1] + (i2 - 1)) * extent[2] + (i3 - 1)) * value_dim);
    }

    bool is_zero() const {
        for (double v : values) {
            if (v != 0.0) {
                return false;
            }
        }
        return true;
    }
};

/// Copies block (j_1,...,j_d) out of the field. Content matches
/// X_t for t in the product of [(j_i-1) r_i + 1, j_i r_i].
inline Block extract_block(const Field& field, const BlockGrid& grid,
                           std::span<const Index> index) {
    if (grid.rank() != field.rank()) {
        throw shape_error("grid rank does not match field rank");
    }
    if (index.size() != grid.rank()) {
        throw index_error("block index rank mismatch");
    }
    for (std::size_t ax = 0; ax < grid.rank(); ++ax) {
        if (index[ax] < 1 || index[ax] > grid.m[ax]) {
            throw index_error("block index out of range on axis " +
                              std::to_string(ax + 1));
        }
    }
    Block block;
    block.extent = grid.r;
    block.value_dim = field.value_dim();
    block.origin = grid.origin_of(index);
    block.values.resize(static_cast<std::size_t>(block.cell_count() * block.value_dim));

    const std::size_t d = grid.rank();
    Coord within(d, 1);
    Coord site(d);
    const Index cells = block.cell_count();
    const auto k = static_cast<std::size_t>(block.value_dim);
    for (Index cell = 0; cell < cells; ++cell) {
        for (std::size_t ax = 0; ax < d; ++ax) {
            site[ax] = block.origin[ax] + within[ax] - 1;
        }
        const auto src = field.value(site);
        std::copy(src.begin(), src.end(),
                  block.values.begin() + static_cast<std::size_t>(cell) * k);
        for (std::size_t ax = d; ax-- > 0;) { // odometer, last axis fastest
            if (++within[ax] <= block.extent[ax]) {
                break;
            }
            within[ax] = 1;
        }
    }
    return block;
}

/// Center of spatial block (i,j) on the full lattice:
/// c_ij = (ceil(((2i-1) r1 + 1)/2), ceil(((2j-1) r2 + 1)/2)).
inline std::array<Index, 2> block_center(Index i, Index j, Index r1, Index r2) {
    if (i < 1 || j < 1 || r1 < 1 || r2 < 1) {
        throw param_error("block_center needs positive block index and sides");
    }
    const auto half = [](Index r) { return r / 2 + 1; }; // ceil((r+1)/2)
    return {(i - 1) * r1 + half(r1), (j - 1) * r2 + half(r2)};
}

/// Within-block center of an l1 x l2 cross-section: (ceil((l1+1)/2), ceil((l2+1)/2)).
inline std::array<Index, 2> section_center(Index l1, Index l2) {
    return {l1 / 2 + 1, l2 / 2 + 1};
}

/// Lattice points at L-infinity distance exactly h from the center, clipped
/// to [1, bounds]. Points are produced in lexicographic order.
inline std::vector<std::array<Index, 2>> sphere(std::array<Index, 2> center, Index h,
                                                std::array<Index, 2> bounds) {
    if (center[0] < 1 || center[0] > bounds[0] || center[1] < 1 || center[1] > bounds[1]) {
        throw index_error("sphere center outside bounds");
    }
    if (h < 0) {
        throw param_error("sphere radius must be nonnegative");
    }
    std::vector<std::array<Index, 2>> pts;
    if (h == 0) {
        pts.push_back(center);
        return pts;
    }
    const Index ulo = std::max<Index>(1, center[0] - h);
    const Index uhi = std::min<Index>(bounds[0], center[0] + h);
    for (Index u = ulo; u <= uhi; ++u) {
        const Index du = std::abs(u - center[0]);
        if (du == h) {
            // full row of the ring
            const Index vlo = std::max<Index>(1, center[1] - h);
            const Index vhi = std::min<Index>(bounds[1], center[1] + h);
            for (Index v = vlo; v <= vhi; ++v) {
                pts.push_back({u, v});
            }
        } else {
            // only the two side cells at |v - c2| = h
            if (center[1] - h >= 1) {
                pts.push_back({u, center[1] - h});
            }
            if (center[1] + h <= bounds[1]) {
                pts.push_back({u, center[1] + h});
            }
        }
    }
    return pts;
}

} // namespace rfx
