#pragma once

#include <cmath>
#include <variant>
#include <vector>

namespace mixplan {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
    Vec2& operator+=(Vec2 b) { return *this = *this + b; }

    double dot(Vec2 b) const { return x * b.x + y * b.y; }
    double cross(Vec2 b) const { return x * b.y - y * b.x; }
    double norm() const { return std::hypot(x, y); }
};

struct Disk {
    Vec2 center;
    double radius = 0.0;
};

/// Convex polygon, vertices in either orientation (normalized to counter-clockwise).
struct Polygon {
    std::vector<Vec2> vertices;
};

using Shape = std::variant<Disk, Polygon>;

struct Box {
    Vec2 lo;
    Vec2 hi;
    Vec2 clamp(Vec2 p) const;
};

/// Closest point of the shape's boundary and the outward unit normal there.
struct BoundaryPoint {
    Vec2 point;
    Vec2 outward;
};

Vec2 centroid(const Shape& s);
bool contains(const Shape& s, Vec2 p);  // closed set
/// Euclidean distance from p to the shape; 0 inside.
double distance(const Shape& s, Vec2 p);
BoundaryPoint nearest_boundary(const Shape& s, Vec2 p);
Box bounding_box(const Shape& s);
/// True when the interiors intersect (touching boundaries is allowed).
bool interiors_overlap(const Shape& a, const Shape& b);
/// Validates radius > 0 / at least three vertices in strictly convex position; reorders
/// polygon vertices counter-clockwise. Returns false on invalid geometry.
bool normalize_shape(Shape& s);

}  // namespace mixplan
