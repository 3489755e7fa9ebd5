#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "rfx/lattice.hpp"
#include "rfx/rng.hpp"

using namespace rfx;

TEST_CASE("block grid floor rule", "[lattice]") {
    {
        const BlockGrid g = make_block_grid(LatticeShape{{10, 10}, 1},
                                            std::vector<Index>{3, 3});
        CHECK(g.m == std::vector<Index>{3, 3});
        CHECK(g.block_count() == 9);
    }
    {
        const BlockGrid g = make_block_grid(LatticeShape{{6}, 1}, std::vector<Index>{6});
        CHECK(g.m == std::vector<Index>{1});
        CHECK(g.block_count() == 1);
    }
    {
        const BlockGrid g = make_block_grid(LatticeShape{{12, 12, 20}, 1},
                                            std::vector<Index>{4, 4, 5});
        CHECK(g.m == std::vector<Index>{3, 3, 4});
        CHECK(g.block_count() == 36);
    }
}

TEST_CASE("block grid rejects bad sides", "[lattice]") {
    CHECK_THROWS_AS(make_block_grid(LatticeShape{{10, 10}, 1}, std::vector<Index>{11, 3}),
                    shape_error);
    CHECK_THROWS_AS(make_block_grid(LatticeShape{{10, 10}, 1}, std::vector<Index>{0, 3}),
                    shape_error);
    CHECK_THROWS_AS(make_block_grid(LatticeShape{{10, 10}, 1}, std::vector<Index>{3}),
                    shape_error);
}

TEST_CASE("extract_block slices exactly", "[lattice]") {
    {
        Field f(LatticeShape{{6}, 1});
        for (Index i = 1; i <= 6; ++i) {
            f.value(std::vector<Index>{i})[0] = static_cast<double>(i);
        }
        const BlockGrid g = make_block_grid(f.shape(), std::vector<Index>{2});
        const Block b = extract_block(f, g, std::vector<Index>{2});
        CHECK(b.values == std::vector<double>{3.0, 4.0});
        CHECK(b.origin == Coord{3});
    }
    {
        Field f(LatticeShape{{6, 6}, 1});
        f.value(std::vector<Index>{4, 4})[0] = 9.0;
        const BlockGrid g = make_block_grid(f.shape(), std::vector<Index>{3, 3});
        const Block b = extract_block(f, g, std::vector<Index>{2, 2});
        CHECK(b.value(std::vector<Index>{1, 1})[0] == 9.0);
        CHECK(b.origin == Coord{4, 4});

        const Block first = extract_block(f, g, std::vector<Index>{1, 1});
        CHECK(first.origin == Coord{1, 1});

        CHECK_THROWS_AS(extract_block(f, g, std::vector<Index>{3, 1}), index_error);
    }
}

TEST_CASE("block centers", "[lattice]") {
    CHECK(block_center(1, 1, 3, 3) == std::array<Index, 2>{2, 2});
    CHECK(block_center(1, 1, 4, 4) == std::array<Index, 2>{3, 3});
    CHECK(block_center(2, 1, 3, 3) == std::array<Index, 2>{5, 2});
}

TEST_CASE("sphere membership and clipping", "[lattice]") {
    CHECK(sphere({2, 2}, 0, {3, 3}) == std::vector<std::array<Index, 2>>{{2, 2}});
    CHECK(sphere({2, 2}, 1, {3, 3}).size() == 8);
    const auto clipped = sphere({1, 1}, 1, {3, 3});
    CHECK(clipped == std::vector<std::array<Index, 2>>{{1, 2}, {2, 1}, {2, 2}});
}

TEST_CASE("sphere cardinality and nesting", "[lattice]") {
    // unclipped ring: 8h points for h >= 1
    for (Index h = 1; h <= 4; ++h) {
        CHECK(sphere({10, 10}, h, {20, 20}).size() == static_cast<std::size_t>(8 * h));
    }
    // distinct radii are disjoint and union to the clipped ball
    const std::array<Index, 2> c{2, 3};
    const std::array<Index, 2> bounds{5, 6};
    std::set<std::array<Index, 2>> seen;
    const Index radius = 3;
    for (Index h = 0; h <= radius; ++h) {
        for (const auto& p : sphere(c, h, bounds)) {
            CHECK(seen.insert(p).second); // never seen at a smaller radius
        }
    }
    std::size_t ball = 0;
    for (Index u = 1; u <= bounds[0]; ++u) {
        for (Index v = 1; v <= bounds[1]; ++v) {
            if (std::max(std::abs(u - c[0]), std::abs(v - c[1])) <= radius) {
                ++ball;
            }
        }
    }
    CHECK(seen.size() == ball);
}

TEST_CASE("complete blocks partition the covered region", "[lattice]") {
    const CounterRng rng(411);
    std::uint64_t ctr = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rng.bits(ctr++) % 3;
        std::vector<Index> dims(d), r(d);
        for (std::size_t ax = 0; ax < d; ++ax) {
            dims[ax] = 2 + static_cast<Index>(rng.bits(ctr++) % 9);
            r[ax] = 1 + static_cast<Index>(rng.bits(ctr++) % dims[ax]);
        }
        Field f(LatticeShape{dims, 1});
        const BlockGrid g = make_block_grid(f.shape(), r);

        // mark coverage by incrementing through every block
        std::vector<int> covered(static_cast<std::size_t>(f.shape().site_count()), 0);
        for (Index flat = 0; flat < g.block_count(); ++flat) {
            const Coord index = g.index_at(flat);
            const Coord origin = g.origin_of(index);
            Coord within(d, 1);
            const Index cells = g.block_volume();
            Coord site(d);
            for (Index cell = 0; cell < cells; ++cell) {
                for (std::size_t ax = 0; ax < d; ++ax) {
                    site[ax] = origin[ax] + within[ax] - 1;
                }
                covered[static_cast<std::size_t>(f.site_index(site))]++;
                for (std::size_t ax = d; ax-- > 0;) {
                    if (++within[ax] <= r[ax]) {
                        break;
                    }
                    within[ax] = 1;
                }
            }
        }
        // pairwise disjoint: no double coverage; union: exactly the sites
        // inside prod [1 : m_i r_i]
        Index covered_total = 0;
        Coord site(d, 1);
        for (Index s = 0; s < f.shape().site_count(); ++s) {
            bool inside = true;
            for (std::size_t ax = 0; ax < d; ++ax) {
                if (site[ax] > g.m[ax] * r[ax]) {
                    inside = false;
                }
            }
            const int c = covered[static_cast<std::size_t>(f.site_index(site))];
            CHECK(c == (inside ? 1 : 0));
            covered_total += c;
            for (std::size_t ax = d; ax-- > 0;) {
                if (++site[ax] <= dims[ax]) {
                    break;
                }
                site[ax] = 1;
            }
        }
        CHECK(covered_total == g.block_volume() * g.block_count());
    }
}

TEST_CASE("block index round trip is lexicographic", "[lattice]") {
    const BlockGrid g = make_block_grid(LatticeShape{{9, 8, 10}, 1},
                                        std::vector<Index>{3, 2, 5});
    Coord prev;
    for (Index flat = 0; flat < g.block_count(); ++flat) {
        const Coord idx = g.index_at(flat);
        CHECK(g.flat_of(idx) == flat);
        if (flat > 0) {
            CHECK(std::lexicographical_compare(prev.begin(), prev.end(), idx.begin(),
                                               idx.end()));
        }
        prev = idx;
    }
}
