#include "doctest.h"
#include "ebc/grid.hpp"

#include <cmath>

using namespace ebc;

TEST_CASE("unit square boundary enumeration") {
    Grid g = build_grid(2, 4, 0.0, 1.0, {-1.0, -1.0, 0.0}, true);
    CHECK(g.boundary_count() == 12);  // 4^2 - 2^2
    CHECK(g.h == doctest::Approx(1.0 / 3.0));

    // every boundary node has exactly one face and the face normals are unit
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        auto nu = g.normal(b);
        double len = 0.0;
        for (int a = 0; a < g.d; ++a) len += nu[a] * nu[a];
        CHECK(len == doctest::Approx(1.0));
    }

    // left-face interior node has normal (-1, 0)
    std::array<int, 3> i{0, 1, 0};
    std::int64_t idx = g.index(i);
    std::int64_t b = g.node_to_boundary[static_cast<std::size_t>(idx)];
    REQUIRE(b >= 0);
    CHECK(g.normal(b)[0] == doctest::Approx(-1.0));
    CHECK(g.normal(b)[1] == doctest::Approx(0.0));

    // corner (0,0): lowest-indexed face is x-low, normal (-1, 0)
    std::array<int, 3> c0{0, 0, 0};
    std::int64_t bc = g.node_to_boundary[static_cast<std::size_t>(g.index(c0))];
    CHECK(g.normal(bc)[0] == doctest::Approx(-1.0));

    // boundary weights sum to the perimeter
    double per = 0.0;
    for (double w : g.boundary_weight) per += w;
    CHECK(per == doctest::Approx(4.0));
}

TEST_CASE("3d boundary count and surface area") {
    Grid g = build_grid(3, 4, 0.0, 1.0, {-1.0, -1.0, -1.0}, true);
    CHECK(g.boundary_count() == 56);  // 4^3 - 2^3
    double area = 0.0;
    for (double w : g.boundary_weight) area += w;
    CHECK(area == doctest::Approx(6.0));
}

TEST_CASE("x0 inside the box is rejected") {
    CHECK_THROWS_AS(build_grid(2, 8, 0.0, 1.0, {0.5, 0.5, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(2, 8, 0.0, 1.0, {1.0, 0.5, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(build_grid(2, 8, 0.0, 1.0, {1.5, 0.5, 0.0}));
}

TEST_CASE("invalid dimension and resolution") {
    CHECK_THROWS_AS(build_grid(4, 8, 0.0, 1.0, {-1.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(2, 4, 0.0, 1.0, {-1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("volume weights integrate the box") {
    Grid g = build_grid(2, 9, 0.0, 2.0, {-1.0, -1.0, 0.0});
    double vol = 0.0;
    for (std::int64_t i = 0; i < g.node_count; ++i) vol += g.volume_weight(i);
    CHECK(vol == doctest::Approx(4.0));
}
