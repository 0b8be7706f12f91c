#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vec.hpp"

namespace polyscat::geom {

enum class PolytopeKind { ConvexPolygon, Cuboid };

inline constexpr double kGeomTol = 1e-12;

// Convex polygon (CCW, strictly convex) or rectangular box given by its 8 corners.
class Polytope {
public:
    static Polytope polygon(std::vector<Vec> vertices)
    {
        for (auto& v : vertices) v[2] = 0.0;
        const std::size_t m = vertices.size();
        if (m < 3) throw DomainError("polygon needs at least 3 vertices");
        for (std::size_t i = 0; i < m; ++i) {
            const Vec& a = vertices[i];
            const Vec& b = vertices[(i + 1) % m];
            const Vec& c = vertices[(i + 2) % m];
            if (cross2(b - a, c - b) <= 0.0)
                throw DomainError("polygon vertices must be counterclockwise and strictly convex");
        }
        Polytope p;
        p.dim_ = 2;
        p.kind_ = PolytopeKind::ConvexPolygon;
        p.vertices_ = std::move(vertices);
        return p;
    }

    // Axis-aligned rectangle helper, CCW from the lower-left corner.
    static Polytope rectangle(double x0, double y0, double x1, double y1)
    {
        return polygon({{x0, y0, 0}, {x1, y0, 0}, {x1, y1, 0}, {x0, y1, 0}});
    }

    static Polytope cuboid(std::vector<Vec> vertices, double tol = 1e-9)
    {
        if (vertices.size() != 8) throw DomainError("cuboid needs exactly 8 vertices");
        const Vec v0 = vertices[0];
        double scale = 0.0;
        for (const auto& v : vertices) scale = std::max(scale, dist(v, v0));
        if (scale <= 0.0) throw DomainError("degenerate cuboid");
        // Edge neighbours of v0: the mutually orthogonal triple that spans all corners.
        auto spansBox = [&](const std::array<Vec, 3>& e) {
            for (int mask = 0; mask < 8; ++mask) {
                Vec c = v0;
                for (int j = 0; j < 3; ++j)
                    if (mask & (1 << j)) c = c + e[j];
                bool found = false;
                for (const auto& v : vertices)
                    if (dist(v, c) <= tol * scale) found = true;
                if (!found) return false;
            }
            return true;
        };
        std::array<Vec, 3> e{};
        bool ok = false;
        for (int i = 1; i < 8 && !ok; ++i)
            for (int j = i + 1; j < 8 && !ok; ++j)
                for (int l = j + 1; l < 8 && !ok; ++l) {
                    const std::array<Vec, 3> t{vertices[i] - v0, vertices[j] - v0, vertices[l] - v0};
                    bool orth = true;
                    for (int a = 0; a < 3; ++a) {
                        if (norm(t[a]) <= tol * scale) orth = false;
                        for (int b = a + 1; b < 3; ++b)
                            if (std::abs(dot(t[a], t[b])) > tol * scale * scale) orth = false;
                    }
                    if (orth && spansBox(t)) {
                        e = t;
                        ok = true;
                    }
                }
        if (!ok) throw DomainError("vertices do not form a rectangular box");
        Polytope p;
        p.dim_ = 3;
        p.kind_ = PolytopeKind::Cuboid;
        p.vertices_ = std::move(vertices);
        p.origin_ = v0;
        p.edges_ = e;
        return p;
    }

    static Polytope box(const Vec& lo, const Vec& hi)
    {
        std::vector<Vec> v;
        for (int mask = 0; mask < 8; ++mask)
            v.push_back({(mask & 1) ? hi[0] : lo[0], (mask & 2) ? hi[1] : lo[1], (mask & 4) ? hi[2] : lo[2]});
        return cuboid(std::move(v));
    }

    int dim() const { return dim_; }
    PolytopeKind kind() const { return kind_; }
    const std::vector<Vec>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Vec& vertex(std::size_t i) const { return vertices_[i]; }

    Vec centroid() const
    {
        Vec c{0, 0, 0};
        for (const auto& v : vertices_) c = c + v;
        return (1.0 / static_cast<double>(vertices_.size())) * c;
    }

    // Cuboid frame: corner, three orthogonal edge vectors.
    const Vec& boxOrigin() const { return origin_; }
    const std::array<Vec, 3>& boxEdges() const { return edges_; }

    double circumradius(const Vec& center = {0, 0, 0}) const
    {
        double r = 0.0;
        for (const auto& v : vertices_) r = std::max(r, dist(v, center));
        return r;
    }

    double volume() const
    {
        if (dim_ == 3) return norm(edges_[0]) * norm(edges_[1]) * norm(edges_[2]);
        double a = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            a += cross2(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
        return 0.5 * a;
    }

    // Closed membership with a small absolute tolerance.
    bool contains(const Vec& x, double tol = kGeomTol) const
    {
        if (dim_ == 2) {
            const std::size_t m = vertices_.size();
            for (std::size_t i = 0; i < m; ++i) {
                const Vec& a = vertices_[i];
                const Vec& b = vertices_[(i + 1) % m];
                if (cross2(b - a, x - a) < -tol * norm(b - a)) return false;
            }
            return true;
        }
        const Vec d = x - origin_;
        for (int j = 0; j < 3; ++j) {
            const double len = norm(edges_[j]);
            const double t = dot(d, edges_[j]) / len;
            if (t < -tol || t > len + tol) return false;
        }
        return true;
    }

    // Euclidean distance from x to the closed polytope.
    double distanceTo(const Vec& x) const
    {
        if (dim_ == 3) {
            double s = 0.0;
            const Vec d = x - origin_;
            for (int j = 0; j < 3; ++j) {
                const double len = norm(edges_[j]);
                const double t = dot(d, edges_[j]) / len;
                const double o = t < 0.0 ? -t : (t > len ? t - len : 0.0);
                s += o * o;
            }
            return std::sqrt(s);
        }
        if (contains(x, 0.0)) return 0.0;
        double best = std::numeric_limits<double>::infinity();
        const std::size_t m = vertices_.size();
        for (std::size_t i = 0; i < m; ++i) best = std::min(best, segmentDistance(x, vertices_[i], vertices_[(i + 1) % m]));
        return best;
    }

    // Edges incident to vertex i, as unit directions pointing away from it.
    std::vector<Vec> edgeDirectionsAt(std::size_t i) const
    {
        if (dim_ == 2) {
            const std::size_t m = vertices_.size();
            return {normalized(vertices_[(i + 1) % m] - vertices_[i]), normalized(vertices_[(i + m - 1) % m] - vertices_[i])};
        }
        std::vector<Vec> out;
        const Vec c = centroid();
        for (int j = 0; j < 3; ++j) {
            Vec u = normalized(edges_[j]);
            if (dot(c - vertices_[i], u) < 0.0) u = -u;
            out.push_back(u);
        }
        return out;
    }

    // Interior angle at vertex i (2D); pi/2 for every cuboid corner.
    double angleAt(std::size_t i) const
    {
        if (dim_ == 3) return pi / 2;
        const auto d = edgeDirectionsAt(i);
        return std::acos(std::clamp(dot(d[0], d[1]), -1.0, 1.0));
    }

    static double segmentDistance(const Vec& x, const Vec& a, const Vec& b)
    {
        const Vec ab = b - a;
        const double L2 = dot(ab, ab);
        double t = L2 > 0.0 ? dot(x - a, ab) / L2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return dist(x, a + t * ab);
    }

private:
    int dim_ = 2;
    PolytopeKind kind_ = PolytopeKind::ConvexPolygon;
    std::vector<Vec> vertices_;
    Vec origin_{0, 0, 0};
    std::array<Vec, 3> edges_{};
};

enum class ConeKind { Polyhedral, Spherical };

// Cone with vertex x_c. Polyhedral: generators ordered counterclockwise
// (2D: interior sweeps from g0 to g1). Spherical: axis + half-angle.
struct PolyCone {
    Vec vertex{0, 0, 0};
    std::vector<Vec> generators;
    ConeKind kind = ConeKind::Polyhedral;
    double halfAngle = 0.0;
    Vec axis{1, 0, 0};
    int dim = 2;

    static PolyCone spherical(const Vec& vertex, const Vec& axis, double halfAngle, int dim)
    {
        PolyCone k;
        k.vertex = vertex;
        k.axis = normalized(axis);
        k.kind = ConeKind::Spherical;
        k.halfAngle = halfAngle;
        k.dim = dim;
        return k;
    }

    static PolyCone polyhedral(const Vec& vertex, std::vector<Vec> gens, int dim)
    {
        PolyCone k;
        k.vertex = vertex;
        k.dim = dim;
        k.kind = ConeKind::Polyhedral;
        for (auto& g : gens) k.generators.push_back(normalized(g));
        if (dim == 2) {
            if (k.generators.size() != 2) throw DomainError("2D cone needs two generators");
            const double c = cross2(k.generators[0], k.generators[1]);
            if (c <= 0.0) throw DomainError("2D cone generators must span an angle in (0, pi)");
        } else if (k.generators.size() < 3) {
            throw DomainError("3D polyhedral cone needs at least three generators");
        }
        Vec s{0, 0, 0};
        for (const auto& g : k.generators) s = s + g;
        k.axis = normalized(s);
        return k;
    }

    // Opening angle of a 2D polyhedral cone.
    double openingAngle() const
    {
        if (kind == ConeKind::Spherical) return 2 * halfAngle;
        return std::acos(std::clamp(dot(generators[0], generators[1]), -1.0, 1.0));
    }
};

// Closed-cone membership (the vertex itself belongs to the cone).
inline bool coneMembership(const PolyCone& K, const Vec& x, double tol = 1e-12)
{
    const Vec y = x - K.vertex;
    const double ny = norm(y);
    if (ny <= tol) return true;
    if (K.kind == ConeKind::Spherical) return dot(y, K.axis) >= ny * std::cos(K.halfAngle) - tol * ny;
    if (K.dim == 2)
        return cross2(K.generators[0], y) >= -tol * ny && cross2(y, K.generators[1]) >= -tol * ny;
    const std::size_t m = K.generators.size();
    for (std::size_t i = 0; i < m; ++i) {
        Vec nrm = cross(K.generators[i], K.generators[(i + 1) % m]);
        if (dot(nrm, K.axis) < 0.0) nrm = -nrm;
        if (dot(nrm, y) < -tol * ny * norm(nrm)) return false;
    }
    return true;
}

// Planar hull (Andrew's monotone chain); CCW, collinear points dropped.
inline std::vector<Vec> convexHull2D(std::vector<Vec> pts)
{
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

inline double directedDistance(const Polytope& P, const Polytope& Q)
{
    double d = 0.0;
    for (const auto& v : P.vertices()) d = std::max(d, Q.distanceTo(v));
    return d;
}

// d(., Q) is convex for convex Q, so the sup over P sits at a vertex of P.
inline double hausdorffDistance(const Polytope& P, const Polytope& Q)
{
    if (P.dim() != Q.dim()) throw DomainError("hausdorffDistance: dimension mismatch");
    return std::max(directedDistance(P, Q), directedDistance(Q, P));
}

struct FarthestVertex {
    std::size_t index = 0;
    Vec vertex{0, 0, 0};
    double distance = 0.0;
    bool realizesHausdorff = true;   // false: the max is attained from Q's side
};

inline FarthestVertex farthestVertex(const Polytope& P, const Polytope& Q)
{
    if (P.dim() != Q.dim()) throw DomainError("farthestVertex: dimension mismatch");
    FarthestVertex out;
    out.distance = -1.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double d = Q.distanceTo(P.vertex(i));
        if (d > out.distance) {   // strict: lowest index wins ties
            out.distance = d;
            out.index = i;
            out.vertex = P.vertex(i);
        }
    }
    out.realizesHausdorff = out.distance >= directedDistance(Q, P);
    return out;
}

struct SphericalCap {
    Vec axis{0, 0, 1};
    double halfAngle = 0.0;
};

namespace detail {

inline bool capContains(const SphericalCap& c, const Vec& d, double tol)
{
    return dot(c.axis, d) >= std::cos(c.halfAngle + tol);
}

inline SphericalCap capOf(const Vec& a) { return {a, 0.0}; }

inline SphericalCap capOf(const Vec& a, const Vec& b)
{
    const Vec m = a + b;
    if (norm(m) < 1e-15) return {a, pi};
    const Vec ax = normalized(m);
    return {ax, std::acos(std::clamp(dot(ax, a), -1.0, 1.0))};
}

inline SphericalCap capOf(const Vec& a, const Vec& b, const Vec& c)
{
    Vec nrm = cross(b - a, c - a);
    if (norm(nrm) < 1e-15) {
        // Collinear on the sphere: the widest pair decides.
        SphericalCap best = capOf(a, b);
        for (const auto& cap : {capOf(a, c), capOf(b, c)})
            if (cap.halfAngle > best.halfAngle) best = cap;
        return best;
    }
    nrm = normalized(nrm);
    if (dot(nrm, a) < 0.0) nrm = -nrm;
    return {nrm, std::acos(std::clamp(dot(nrm, a), -1.0, 1.0))};
}

} // namespace detail

// Smallest cap of the unit sphere holding all directions (iterative Welzl).
// Meaningful when the answer is below pi/2; otherwise halfAngle >= pi/2.
inline SphericalCap minimalEnclosingCap(const std::vector<Vec>& dirsIn, double tol = 1e-9)
{
    std::vector<Vec> d;
    for (const auto& v : dirsIn)
        if (norm(v) > 0.0) d.push_back(normalized(v));
    if (d.empty()) return {};
    SphericalCap c = detail::capOf(d[0]);
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (detail::capContains(c, d[i], tol)) continue;
        c = detail::capOf(d[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (detail::capContains(c, d[j], tol)) continue;
            c = detail::capOf(d[i], d[j]);
            for (std::size_t l = 0; l < j; ++l) {
                if (detail::capContains(c, d[l], tol)) continue;
                c = detail::capOf(d[i], d[j], d[l]);
            }
        }
    }
    // A cap must not exclude any point; a hemisphere violation means no pointed cone.
    for (const auto& v : d)
        if (!detail::capContains(c, v, 1e-7)) c.halfAngle = pi;
    return c;
}

namespace detail {

inline std::vector<Vec> unionVertices(const Polytope& P, const Polytope& Q)
{
    std::vector<Vec> pts = P.vertices();
    pts.insert(pts.end(), Q.vertices().begin(), Q.vertices().end());
    return pts;
}

inline std::vector<Vec> directionsFrom(const Vec& x, const std::vector<Vec>& pts, double tol)
{
    std::vector<Vec> dirs;
    for (const auto& p : pts)
        if (dist(p, x) > tol) dirs.push_back(normalized(p - x));
    return dirs;
}

// Orthonormal pair spanning the plane orthogonal to a; lowest-index convention.
inline std::array<Vec, 2> orthoFrame(const Vec& a)
{
    int j = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(a[i]) < std::abs(a[j])) j = i;
    Vec e{0, 0, 0};
    e[j] = 1.0;
    const Vec u = normalized(e - dot(e, a) * a);
    return {u, cross(a, u)};
}

} // namespace detail

// Cone at x_c generated by hull(P u Q).
inline PolyCone convexHullCone(const Polytope& P, const Polytope& Q, const Vec& xc, double tol = 1e-10)
{
    if (P.dim() != Q.dim()) throw DomainError("convexHullCone: dimension mismatch");
    const auto pts = detail::unionVertices(P, Q);
    if (P.dim() == 2) {
        const auto hull = convexHull2D(pts);
        const std::size_t m = hull.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (dist(hull[i], xc) > tol) continue;
            return PolyCone::polyhedral(xc, {hull[(i + 1) % m] - xc, hull[(i + m - 1) % m] - xc}, 2);
        }
        throw DomainError("convexHullCone: x_c is not a vertex of the hull");
    }
    const auto dirs = detail::directionsFrom(xc, pts, tol);
    const SphericalCap cap = minimalEnclosingCap(dirs);
    if (cap.halfAngle >= pi / 2 - 1e-12) throw DomainError("convexHullCone: x_c is not a vertex of the hull");
    // Gnomonic projection turns extreme rays into planar hull vertices.
    const auto frame = detail::orthoFrame(cap.axis);
    std::vector<Vec> proj;
    for (const auto& d : dirs) {
        const double s = dot(d, cap.axis);
        proj.push_back({dot(d, frame[0]) / s, dot(d, frame[1]) / s, 0.0});
    }
    const auto hull = convexHull2D(proj);
    std::vector<Vec> gens;
    for (const auto& p : hull) gens.push_back(cap.axis + p[0] * frame[0] + p[1] * frame[1]);
    PolyCone K = PolyCone::polyhedral(xc, gens, 3);
    K.axis = cap.axis;
    return K;
}

struct QangleReport {
    bool vertexOk = false;
    double angleBound = 0.0;    // 2D: (alpha+pi)/2; 3D: pi/2
    double angleActual = 0.0;   // 2D: hull angle at x_c; 3D: minimal enclosing half-angle
    double alpha = 0.0;         // angle of P at x_c
    std::size_t vertexIndex = 0;
    Vec xc{0, 0, 0};
    bool swapped = false;       // true: roles of P and Q exchanged to realize d_H
    bool parallelCase = false;  // nearest point direction orthogonal to an edge at x_c
    bool degenerate = false;    // d_H = 0
    bool ok = false;
    std::string detail;
};

inline QangleReport checkQangle(const Polytope& Pin, const Polytope& Qin)
{
    if (Pin.dim() != Qin.dim()) throw DomainError("checkQangle: dimension mismatch");
    QangleReport r;
    const bool swap = directedDistance(Qin, Pin) > directedDistance(Pin, Qin);
    const Polytope& P = swap ? Qin : Pin;
    const Polytope& Q = swap ? Pin : Qin;
    r.swapped = swap;
    const auto fv = farthestVertex(P, Q);
    r.vertexIndex = fv.index;
    r.xc = fv.vertex;
    r.alpha = P.angleAt(fv.index);
    const double scale = std::max(P.circumradius(P.centroid()), Q.circumradius(Q.centroid()));
    r.degenerate = fv.distance <= 1e-12 * scale;

    if (P.dim() == 2) {
        r.angleBound = 0.5 * (r.alpha + pi);
        if (r.degenerate) {
            r.vertexOk = true;
            r.angleActual = r.alpha;
        } else {
            const auto hull = convexHull2D(detail::unionVertices(P, Q));
            const std::size_t m = hull.size();
            for (std::size_t i = 0; i < m; ++i) {
                if (dist(hull[i], r.xc) > 1e-12 * scale) continue;
                r.vertexOk = true;
                const Vec a = normalized(hull[(i + 1) % m] - r.xc);
                const Vec b = normalized(hull[(i + m - 1) % m] - r.xc);
                r.angleActual = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
            }
            // Parallel case: nearest point C lies straight off an edge of P at x_c.
            Vec best{0, 0, 0};
            double bd = std::numeric_limits<double>::infinity();
            const std::size_t mq = Q.size();
            for (std::size_t i = 0; i < mq; ++i) {
                const Vec a = Q.vertex(i), b = Q.vertex((i + 1) % mq);
                const Vec ab = b - a;
                const double t = std::clamp(dot(r.xc - a, ab) / dot(ab, ab), 0.0, 1.0);
                const Vec c = a + t * ab;
                if (dist(c, r.xc) < bd) {
                    bd = dist(c, r.xc);
                    best = c;
                }
            }
            const Vec dc = normalized(best - r.xc);
            for (const auto& e : P.edgeDirectionsAt(fv.index))
                if (std::abs(dot(dc, e)) < 1e-9) r.parallelCase = true;
        }
        r.ok = r.vertexOk && r.angleActual <= r.angleBound + 1e-12;
    } else {
        r.angleBound = pi / 2;
        const auto dirs = detail::directionsFrom(r.xc, detail::unionVertices(P, Q), 1e-12 * scale);
        const SphericalCap cap = minimalEnclosingCap(dirs);
        r.angleActual = cap.halfAngle;
        r.vertexOk = cap.halfAngle < pi / 2;
        r.ok = r.vertexOk;
    }
    if (!r.ok) r.detail = "enclosing angle bound violated at vertex " + std::to_string(r.vertexIndex);
    return r;
}

// Fan triangulation from vertex 0: J simplices, each cut out by n+1 half-spaces.
// Upper bound for the triangulation norm when C dominates the multiplier constant.
inline double triangulationCost(const Polytope& P, double C)
{
    if (C < 1.0) throw DomainError("triangulationCost: C must be >= 1");
    const int n = P.dim();
    const double J = n == 2 ? static_cast<double>(P.size() - 2) : 6.0;
    return J * std::pow(C, n + 1);
}

struct AdmissibilityReport {
    double ell = 0.0;
    double alphaMin = 0.0;
    double alphaMax = 0.0;
    int hyperplanes = 0;
    bool ok = false;
    std::vector<std::string> violations;
};

inline AdmissibilityReport admissibility(const Polytope& P, double R)
{
    AdmissibilityReport a;
    const auto& V = P.vertices();
    double ell = std::numeric_limits<double>::infinity();
    if (P.dim() == 2) {
        const std::size_t m = V.size();
        a.hyperplanes = static_cast<int>(m);
        a.alphaMin = pi;
        a.alphaMax = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t e = 0; e < m; ++e) {
                if (e == i || (e + 1) % m == i) continue;
                ell = std::min(ell, Polytope::segmentDistance(V[i], V[e], V[(e + 1) % m]));
            }
            const double half = 0.5 * P.angleAt(i);
            a.alphaMin = std::min(a.alphaMin, half);
            a.alphaMax = std::max(a.alphaMax, half);
        }
    } else {
        a.hyperplanes = 6;
        a.alphaMin = a.alphaMax = pi / 4;
        for (const auto& e : P.boxEdges()) ell = std::min(ell, norm(e));
    }
    a.ell = std::min(ell, 1.0);
    for (const auto& v : V)
        if (norm(v) >= R) {
            a.violations.push_back("vertex outside B_R");
            break;
        }
    if (!(a.ell > 0.0)) a.violations.push_back("degenerate vertex separation");
    if (!(a.alphaMin > 0.0) || !(a.alphaMax < pi / 2)) a.violations.push_back("angle outside (0, pi)");
    a.ok = a.violations.empty();
    return a;
}

// Random convex polygon inscribed in a circle inside B(0, R); used by sampling checks.
template <class Rng>
Polytope randomConvexPolygon(Rng& rng, double R)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(3, 8);
    for (;;) {
        const int m = count(rng);
        const double rad = R * (0.2 + 0.35 * u(rng));
        const double off = (R - rad) * 0.9 * u(rng), dir = 2 * pi * u(rng);
        const Vec c{off * std::cos(dir), off * std::sin(dir), 0.0};
        std::vector<double> t(m);
        for (auto& x : t) x = 2 * pi * u(rng);
        std::sort(t.begin(), t.end());
        bool spread = true;
        for (int i = 0; i < m; ++i) {
            const double gap = (i + 1 < m ? t[i + 1] : t[0] + 2 * pi) - t[i];
            if (gap < 0.15 || gap > pi - 0.15) spread = false;
        }
        if (!spread) continue;
        std::vector<Vec> v;
        for (double x : t) v.push_back(c + rad * Vec{std::cos(x), std::sin(x), 0.0});
        return Polytope::polygon(std::move(v));
    }
}

// Random rotated box inside B(0, R).
template <class Rng>
Polytope randomCuboid(Rng& rng, double R)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    const Vec a = normalized({g(rng), g(rng), g(rng)});
    const auto [b0, c0] = detail::orthoFrame(a);
    const double phi = 2 * pi * u(rng);
    const Vec b = std::cos(phi) * b0 + std::sin(phi) * c0;
    const Vec c = cross(a, b);
    const double la = R * (0.15 + 0.3 * u(rng)), lb = R * (0.15 + 0.3 * u(rng)), lc = R * (0.15 + 0.3 * u(rng));
    const double half = 0.5 * std::sqrt(la * la + lb * lb + lc * lc);
    const double off = (R - half) * 0.9 * u(rng);
    const Vec centre = off * normalized({g(rng), g(rng), g(rng)});
    const Vec o = centre - 0.5 * (la * a + lb * b + lc * c);
    std::vector<Vec> v;
    for (int mask = 0; mask < 8; ++mask)
        v.push_back(o + ((mask & 1) ? la : 0.0) * a + ((mask & 2) ? lb : 0.0) * b + ((mask & 4) ? lc : 0.0) * c);
    return Polytope::cuboid(std::move(v));
}

} // namespace polyscat::geom
