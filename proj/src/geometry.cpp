#include "mixplan/geometry.hpp"

#include <algorithm>
#include <limits>

namespace mixplan {

namespace {

double signed_area(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) a += v[i].cross(v[(i + 1) % v.size()]);
    return 0.5 * a;
}

Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 p) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return a + t * ab;
}

Vec2 unit(Vec2 v) {
    const double n = v.norm();
    return n > 0.0 ? (1.0 / n) * v : Vec2{1.0, 0.0};
}

// Outward normal of polygon edge i (CCW order).
Vec2 edge_normal(const Polygon& poly, std::size_t i) {
    const auto& v = poly.vertices;
    const Vec2 e = v[(i + 1) % v.size()] - v[i];
    return unit(Vec2{e.y, -e.x});
}

// Interval of projections of the shape onto axis.
std::pair<double, double> project(const Shape& s, Vec2 axis) {
    if (const auto* d = std::get_if<Disk>(&s)) {
        const double c = d->center.dot(axis);
        return {c - d->radius, c + d->radius};
    }
    const auto& v = std::get<Polygon>(s).vertices;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Vec2 p : v) {
        lo = std::min(lo, p.dot(axis));
        hi = std::max(hi, p.dot(axis));
    }
    return {lo, hi};
}

}  // namespace

Vec2 Box::clamp(Vec2 p) const { return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y)}; }

Vec2 centroid(const Shape& s) {
    if (const auto* d = std::get_if<Disk>(&s)) return d->center;
    const auto& v = std::get<Polygon>(s).vertices;
    const double a = signed_area(v);
    Vec2 c;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 p = v[i];
        const Vec2 q = v[(i + 1) % v.size()];
        const double w = p.cross(q);
        c += w * (p + q);
    }
    return (1.0 / (6.0 * a)) * c;
}

bool contains(const Shape& s, Vec2 p) {
    if (const auto* d = std::get_if<Disk>(&s)) return (p - d->center).norm() <= d->radius;
    const auto& v = std::get<Polygon>(s).vertices;
    for (std::size_t i = 0; i < v.size(); ++i)
        if ((v[(i + 1) % v.size()] - v[i]).cross(p - v[i]) < 0.0) return false;
    return true;
}

double distance(const Shape& s, Vec2 p) {
    if (const auto* d = std::get_if<Disk>(&s)) return std::max(0.0, (p - d->center).norm() - d->radius);
    if (contains(s, p)) return 0.0;
    const auto& v = std::get<Polygon>(s).vertices;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i)
        best = std::min(best, (p - closest_on_segment(v[i], v[(i + 1) % v.size()], p)).norm());
    return best;
}

BoundaryPoint nearest_boundary(const Shape& s, Vec2 p) {
    if (const auto* d = std::get_if<Disk>(&s)) {
        const Vec2 n = unit(p - d->center);
        return {d->center + d->radius * n, n};
    }
    const auto& poly = std::get<Polygon>(s);
    const auto& v = poly.vertices;
    double best = std::numeric_limits<double>::infinity();
    BoundaryPoint out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 q = closest_on_segment(v[i], v[(i + 1) % v.size()], p);
        const double d = (p - q).norm();
        if (d < best) {
            best = d;
            out.point = q;
            out.outward = d > 1e-12 && !contains(s, p) ? unit(p - q) : edge_normal(poly, i);
        }
    }
    return out;
}

Box bounding_box(const Shape& s) {
    if (const auto* d = std::get_if<Disk>(&s))
        return {d->center - Vec2{d->radius, d->radius}, d->center + Vec2{d->radius, d->radius}};
    const auto& v = std::get<Polygon>(s).vertices;
    Box b{v.front(), v.front()};
    for (Vec2 p : v) {
        b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y)};
        b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y)};
    }
    return b;
}

bool interiors_overlap(const Shape& a, const Shape& b) {
    const auto* da = std::get_if<Disk>(&a);
    const auto* db = std::get_if<Disk>(&b);
    if (da && db) return (da->center - db->center).norm() < da->radius + db->radius;
    if (da) return distance(b, da->center) < da->radius;
    if (db) return distance(a, db->center) < db->radius;
    // Separating axis test over both polygons' edge normals.
    for (const Shape* s : {&a, &b}) {
        const auto& poly = std::get<Polygon>(*s);
        for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
            const Vec2 axis = edge_normal(poly, i);
            auto [alo, ahi] = project(a, axis);
            auto [blo, bhi] = project(b, axis);
            if (ahi <= blo || bhi <= alo) return false;
        }
    }
    return true;
}

bool normalize_shape(Shape& s) {
    if (auto* d = std::get_if<Disk>(&s)) return d->radius > 0.0 && std::isfinite(d->radius);
    auto& v = std::get<Polygon>(s).vertices;
    if (v.size() < 3) return false;
    if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i];
        const Vec2 b = v[(i + 1) % v.size()];
        const Vec2 c = v[(i + 2) % v.size()];
        if ((b - a).cross(c - b) <= 0.0) return false;
    }
    return true;
}

}  // namespace mixplan
