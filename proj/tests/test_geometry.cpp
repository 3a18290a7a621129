#include <doctest.h>

#include <random>

#include "mixplan/geometry.hpp"

using namespace mixplan;

namespace {
Shape square(double x0, double y0, double x1, double y1) {
    Shape s = Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
    REQUIRE(normalize_shape(s));
    return s;
}
}  // namespace

TEST_CASE("disk distance, containment, boundary") {
    const Shape d = Disk{{0, 0}, 2};
    CHECK(contains(d, {2, 0}));
    CHECK_FALSE(contains(d, {2.01, 0}));
    CHECK(distance(d, {5, 0}) == doctest::Approx(3));
    CHECK(distance(d, {1, 0}) == 0);
    const auto b = nearest_boundary(d, {0, 5});
    CHECK(b.point.y == doctest::Approx(2));
    CHECK(b.outward.y == doctest::Approx(1));
}

TEST_CASE("polygon distance, centroid, orientation") {
    Shape p = Polygon{{{0, 2}, {2, 2}, {2, 0}, {0, 0}}};  // clockwise input
    REQUIRE(normalize_shape(p));
    CHECK(contains(p, {1, 1}));
    CHECK(contains(p, {2, 1}));
    CHECK(distance(p, {3, 1}) == doctest::Approx(1));
    CHECK(distance(p, {3, 3}) == doctest::Approx(std::sqrt(2.0)));
    const Vec2 c = centroid(p);
    CHECK(c.x == doctest::Approx(1));
    CHECK(c.y == doctest::Approx(1));
    const auto b = nearest_boundary(p, {1, 1.9});
    CHECK(b.outward.y == doctest::Approx(1));
}

TEST_CASE("invalid shapes") {
    Shape s = Polygon{{{0, 0}, {1, 0}}};
    CHECK_FALSE(normalize_shape(s));
    s = Polygon{{{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}};  // reflex vertex
    CHECK_FALSE(normalize_shape(s));
    s = Disk{{0, 0}, 0};
    CHECK_FALSE(normalize_shape(s));
}

TEST_CASE("overlap tests allow touching") {
    CHECK_FALSE(interiors_overlap(square(0, 0, 1, 1), square(1, 0, 2, 1)));
    CHECK(interiors_overlap(square(0, 0, 1, 1), square(0.5, 0.5, 2, 2)));
    CHECK_FALSE(interiors_overlap(Disk{{0, 0}, 1}, Disk{{2, 0}, 1}));
    CHECK(interiors_overlap(Disk{{0, 0}, 1}, square(0.5, -0.5, 2, 0.5)));
    CHECK_FALSE(interiors_overlap(Disk{{0, 0}, 1}, square(1, -1, 2, 1)));
}

TEST_CASE("distance is zero exactly on the closed set (random points)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    const Shape p = square(-1, -1, 1, 1);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 x{u(rng), u(rng)};
        CHECK((distance(p, x) == 0) == contains(p, x));
        const auto b = nearest_boundary(p, x);
        CHECK((x - b.point).norm() == doctest::Approx(contains(p, x) ? (x - b.point).norm() : distance(p, x)));
    }
}
