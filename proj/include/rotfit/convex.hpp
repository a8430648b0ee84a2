// The pattern polygon P, placements of scaled rotated copies, the convex
// P-distance, contact predicates, and containment testing against a
// polygonal domain with obstacles.
#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "rotfit/geom.hpp"

namespace rotfit {

// ---------------------------------------------------------------------------
// Placements and contact handles

struct Placement {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // canonical in [0, 2*pi)
    double delta = 1.0;  // expansion factor, > 0

    Point center() const { return {x, y}; }
};

enum class ContactKind : std::uint8_t { Side, Corner };

// Side contact: a vertex of P against an edge of Q.
// Corner contact: an edge of P against a vertex of Q.
struct ContactPair {
    ContactKind kind = ContactKind::Side;
    int q_element = -1;  // edge index for Side, vertex index for Corner
    int p_element = -1;  // vertex index for Side, edge index for Corner

    bool operator==(const ContactPair&) const = default;
};

inline ContactPair side_contact(int q_edge, int p_vertex) {
    return {ContactKind::Side, q_edge, p_vertex};
}
inline ContactPair corner_contact(int q_vertex, int p_edge) {
    return {ContactKind::Corner, q_vertex, p_edge};
}

// A corner of Q pinned against a corner of P.
struct Hinge {
    int q_corner = -1;
    int p_corner = -1;
    bool operator==(const Hinge&) const = default;
};

struct Segment {
    Point a, b;

    Vec2 dir() const { return b - a; }
    double length() const { return dir().norm(); }
    Point at(double u) const { return a + dir() * u; }
    // Parameter of the projection of p onto the supporting line.
    double param_of(Point p) const { return dot(p - a, dir()) / dir().norm2(); }
};

inline double point_segment_distance(Point p, const Segment& s) {
    Vec2 d = s.dir();
    double n2 = d.norm2();
    double u = n2 > 0.0 ? std::clamp(dot(p - s.a, d) / n2, 0.0, 1.0) : 0.0;
    return distance(p, s.at(u));
}

// ---------------------------------------------------------------------------
// Convex pattern polygon

class ConvexPolygon {
  public:
    // Vertices must be in counterclockwise order and strictly convex.
    // The reference point is the vertex centroid.
    static ConvexPolygon from_vertices(std::vector<Point> verts) {
        if (verts.size() < 3) throw Error("pattern needs at least 3 vertices");
        double sx = 0.0, sy = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            if (!verts[i].finite()) throw Error("pattern vertex is not finite");
            sx += verts[i].x;
            sy += verts[i].y;
            scale = std::max(scale, distance(verts[i], verts[(i + 1) % verts.size()]));
        }
        for (std::size_t i = 0; i < verts.size(); ++i) {
            Point a = verts[i];
            Point b = verts[(i + 1) % verts.size()];
            Point c = verts[(i + 2) % verts.size()];
            if (orient(a, b, c) <= kCollinearEps * scale * scale)
                throw Error("pattern is not strictly convex counterclockwise");
        }
        ConvexPolygon p;
        p.verts_ = std::move(verts);
        p.ref_ = {sx / static_cast<double>(p.verts_.size()), sy / static_cast<double>(p.verts_.size())};
        p.build_support();
        return p;
    }

    int k() const { return static_cast<int>(verts_.size()); }
    const std::vector<Point>& vertices() const { return verts_; }
    Point vertex(int i) const { return verts_[wrap(i)]; }
    Point reference() const { return ref_; }

    // Vertex relative to the reference point.
    Vec2 offset(int i) const { return offsets_[wrap(i)]; }
    // Outward unit normal of edge i (from vertex i to vertex i+1) at theta=0.
    Vec2 edge_normal0(int i) const { return normals_[wrap(i)]; }
    // Support value of edge i: edge_normal0(i) . offset(i), always > 0.
    double edge_support(int i) const { return supports_[wrap(i)]; }
    // Direction angle of edge i at theta=0.
    double edge_angle0(int i) const { return edge_angles_[wrap(i)]; }

    int wrap(int i) const {
        int n = k();
        int r = i % n;
        return r < 0 ? r + n : r;
    }

    // Gauge of the rotated pattern: smallest mu >= 0 with w in mu * P_theta,
    // P_theta centered at the reference point. Equals the max over edges of
    // the normalized support evaluation, so it is exact and O(k).
    double gauge(double theta, Vec2 w) const {
        Vec2 wr = w.rotated(-theta);
        double best = 0.0;
        for (int i = 0; i < k(); ++i)
            best = std::max(best, dot(normals_[i], wr) / supports_[i]);
        return best;
    }

  private:
    void build_support() {
        int n = k();
        offsets_.resize(n);
        normals_.resize(n);
        supports_.resize(n);
        edge_angles_.resize(n);
        for (int i = 0; i < n; ++i) offsets_[i] = verts_[i] - ref_;
        for (int i = 0; i < n; ++i) {
            Vec2 e = verts_[(i + 1) % n] - verts_[i];
            normals_[i] = (-e.perp()).normalized();  // outward for CCW order
            supports_[i] = dot(normals_[i], offsets_[i]);
            edge_angles_[i] = std::atan2(e.y, e.x);
        }
    }

    std::vector<Point> verts_;
    Point ref_;
    std::vector<Vec2> offsets_;
    std::vector<Vec2> normals_;
    std::vector<double> supports_;
    std::vector<double> edge_angles_;
};

// Vertices of the placed copy: (x,y) + delta * Rot(theta) * (v_i - ref).
inline std::vector<Point> place(const ConvexPolygon& p, const Placement& pl) {
    std::vector<Point> out(static_cast<std::size_t>(p.k()));
    for (int i = 0; i < p.k(); ++i)
        out[static_cast<std::size_t>(i)] = pl.center() + p.offset(i).rotated(pl.theta) * pl.delta;
    return out;
}

inline Point placed_vertex(const ConvexPolygon& p, const Placement& pl, int i) {
    return pl.center() + p.offset(i).rotated(pl.theta) * pl.delta;
}

inline Segment placed_edge(const ConvexPolygon& p, const Placement& pl, int j) {
    return {placed_vertex(p, pl, j), placed_vertex(p, pl, j + 1)};
}

// ---------------------------------------------------------------------------
// P-distance

// d_P(p, q) = inf { mu : q in p + mu * P_theta }.
inline double p_distance(const ConvexPolygon& p, double theta, Point from, Point to) {
    return p.gauge(theta, to - from);
}

// Minimum of d_P(p, .) over a segment. The gauge restricted to the segment
// is a convex piecewise-linear function of the parameter, so the minimum is
// attained at an endpoint or at a breakpoint of the active-edge max.
inline double segment_p_distance(const ConvexPolygon& p, double theta, Point from,
                                 const Segment& seg, double* argmin_u = nullptr) {
    Vec2 a = (seg.a - from).rotated(-theta);
    Vec2 d = seg.dir().rotated(-theta);
    int k = p.k();
    // f(u) = max_i (alpha_i + beta_i * u)
    std::vector<double> alpha(static_cast<std::size_t>(k)), beta(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        alpha[static_cast<std::size_t>(i)] = dot(p.edge_normal0(i), a) / p.edge_support(i);
        beta[static_cast<std::size_t>(i)] = dot(p.edge_normal0(i), d) / p.edge_support(i);
    }
    auto eval = [&](double u) {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k; ++i)
            best = std::max(best, alpha[static_cast<std::size_t>(i)] + beta[static_cast<std::size_t>(i)] * u);
        return std::max(best, 0.0);
    };
    double best_u = 0.0, best = eval(0.0);
    double v1 = eval(1.0);
    if (v1 < best) {
        best = v1;
        best_u = 1.0;
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            double den = beta[static_cast<std::size_t>(i)] - beta[static_cast<std::size_t>(j)];
            if (std::fabs(den) < 1e-300) continue;
            double u = (alpha[static_cast<std::size_t>(j)] - alpha[static_cast<std::size_t>(i)]) / den;
            if (u <= 0.0 || u >= 1.0) continue;
            double v = eval(u);
            if (v < best) {
                best = v;
                best_u = u;
            }
        }
    }
    if (argmin_u) *argmin_u = best_u;
    return best;
}

// ---------------------------------------------------------------------------
// Sites (points and open segments of Q)

enum class SiteKind : std::uint8_t { Point, Segment };

struct Site {
    int id = -1;
    SiteKind kind = SiteKind::Point;
    Point point;       // PointSite geometry
    Segment segment;   // SegmentSite geometry
    int q_vertex = -1; // domain vertex handle (PointSite)
    int q_edge = -1;   // domain edge handle (SegmentSite)
    int end_a = -1;    // endpoint site ids (SegmentSite)
    int end_b = -1;
};

inline double site_distance(const ConvexPolygon& p, double theta, Point from, const Site& s,
                            double* argmin_u = nullptr) {
    if (s.kind == SiteKind::Point) {
        if (argmin_u) *argmin_u = 0.0;
        return p_distance(p, theta, from, s.point);
    }
    return segment_p_distance(p, theta, from, s.segment, argmin_u);
}

// ---------------------------------------------------------------------------
// Polygonal domain

namespace detail {

inline bool segments_properly_intersect(const Segment& s, const Segment& t) {
    double d1 = orient(s.a, s.b, t.a);
    double d2 = orient(s.a, s.b, t.b);
    double d3 = orient(t.a, t.b, s.a);
    double d4 = orient(t.a, t.b, s.b);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

inline bool polygon_is_simple(const std::vector<Point>& poly) {
    int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) {
        Segment si{poly[static_cast<std::size_t>(i)], poly[static_cast<std::size_t>((i + 1) % n)]};
        for (int j = i + 1; j < n; ++j) {
            bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            Segment sj{poly[static_cast<std::size_t>(j)], poly[static_cast<std::size_t>((j + 1) % n)]};
            if (adjacent) continue;
            if (segments_properly_intersect(si, sj)) return false;
        }
    }
    return true;
}

inline double polygon_signed_area(const std::vector<Point>& poly) {
    double s = 0.0;
    int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i)
        s += cross(poly[static_cast<std::size_t>(i)], poly[static_cast<std::size_t>((i + 1) % n)]);
    return 0.5 * s;
}

}  // namespace detail

// Crossing-number test; points within `tol` of the boundary are treated as
// inside. Callers that need a sharp verdict pass tol = 0 and resolve the
// boundary band with clearance checks.
inline bool point_in_polygon(Point p, const std::vector<Point>& poly, double tol = 0.0) {
    int n = static_cast<int>(poly.size());
    if (tol > 0.0) {
        for (int i = 0; i < n; ++i) {
            Segment s{poly[static_cast<std::size_t>(i)], poly[static_cast<std::size_t>((i + 1) % n)]};
            if (point_segment_distance(p, s) <= tol) return true;
        }
    }
    bool in = false;
    for (int i = 0, j = n - 1; i < n; j = i++) {
        Point a = poly[static_cast<std::size_t>(i)], b = poly[static_cast<std::size_t>(j)];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) in = !in;
        }
    }
    return in;
}

// Container polygon with polygonal, segment, and point obstacles. Exposes a
// flat handle space: vertices (corners of Q) and edges (sides of Q).
class PolygonalDomain {
  public:
    struct Edge {
        Segment seg;
        int v_from = -1;
        int v_to = -1;

        Line line() const { return Line::through(seg.a, seg.b); }
    };

    static PolygonalDomain make(std::vector<Point> outer,
                                std::vector<std::vector<Point>> obstacle_polys = {},
                                std::vector<Segment> obstacle_segments = {},
                                std::vector<Point> obstacle_points = {}) {
        PolygonalDomain q;
        if (outer.size() < 3) throw Error("container needs at least 3 vertices");
        if (!detail::polygon_is_simple(outer)) throw Error("container polygon is not simple");
        if (detail::polygon_signed_area(outer) < 0.0) std::reverse(outer.begin(), outer.end());
        q.outer_ = std::move(outer);

        for (auto& poly : obstacle_polys) {
            if (poly.size() < 3) throw Error("obstacle polygon needs at least 3 vertices");
            if (!detail::polygon_is_simple(poly)) throw Error("obstacle polygon is not simple");
            if (detail::polygon_signed_area(poly) > 0.0) std::reverse(poly.begin(), poly.end());
            q.obstacle_polys_.push_back(std::move(poly));
        }
        q.obstacle_segments_ = std::move(obstacle_segments);
        q.obstacle_points_ = std::move(obstacle_points);
        q.build_elements();
        q.validate_layout();
        return q;
    }

    const std::vector<Point>& outer() const { return outer_; }
    const std::vector<std::vector<Point>>& obstacle_polygons() const { return obstacle_polys_; }
    const std::vector<Segment>& obstacle_segments() const { return obstacle_segments_; }
    const std::vector<Point>& obstacle_points() const { return obstacle_points_; }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    Point vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    const Edge& edge(int i) const { return edges_[static_cast<std::size_t>(i)]; }

    // Total element count (edges + vertices across all features).
    int size() const { return static_cast<int>(vertices_.size() + edges_.size()); }
    // Largest bounding-box dimension; the tolerance scale of the instance.
    double scale() const { return scale_; }

    bool center_in_free_region(Point c) const {
        if (!point_in_polygon(c, outer_)) return false;
        for (const auto& poly : obstacle_polys_)
            if (point_in_polygon(c, poly)) return false;
        return true;
    }

  private:
    void build_elements() {
        auto add_vertex = [&](Point p) {
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                if (distance(vertices_[i], p) < 1e-12 * std::max(1.0, scale_)) return static_cast<int>(i);
            vertices_.push_back(p);
            return static_cast<int>(vertices_.size() - 1);
        };

        double lox = outer_[0].x, hix = outer_[0].x, loy = outer_[0].y, hiy = outer_[0].y;
        for (const auto& p : outer_) {
            lox = std::min(lox, p.x);
            hix = std::max(hix, p.x);
            loy = std::min(loy, p.y);
            hiy = std::max(hiy, p.y);
        }
        scale_ = std::max(hix - lox, hiy - loy);

        auto add_ring = [&](const std::vector<Point>& ring) {
            int n = static_cast<int>(ring.size());
            std::vector<int> ids(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = add_vertex(ring[static_cast<std::size_t>(i)]);
            for (int i = 0; i < n; ++i) {
                Edge e;
                e.seg = {ring[static_cast<std::size_t>(i)], ring[static_cast<std::size_t>((i + 1) % n)]};
                e.v_from = ids[static_cast<std::size_t>(i)];
                e.v_to = ids[static_cast<std::size_t>((i + 1) % n)];
                edges_.push_back(e);
            }
        };
        add_ring(outer_);
        for (const auto& poly : obstacle_polys_) add_ring(poly);
        for (const auto& s : obstacle_segments_) {
            Edge e;
            e.seg = s;
            e.v_from = add_vertex(s.a);
            e.v_to = add_vertex(s.b);
            edges_.push_back(e);
        }
        for (const auto& p : obstacle_points_) add_vertex(p);
    }

    void validate_layout() const {
        for (const auto& poly : obstacle_polys_)
            for (const auto& p : poly)
                if (!point_in_polygon(p, outer_, 1e-9 * scale_))
                    throw Error("obstacle polygon vertex outside container");
        for (const auto& s : obstacle_segments_)
            if (!point_in_polygon(s.a, outer_, 1e-9 * scale_) || !point_in_polygon(s.b, outer_, 1e-9 * scale_))
                throw Error("obstacle segment endpoint outside container");
        for (const auto& p : obstacle_points_)
            if (!point_in_polygon(p, outer_, 1e-9 * scale_))
                throw Error("obstacle point outside container");
        // Obstacles must not cross each other or the container boundary.
        int n = static_cast<int>(edges_.size());
        int outer_edges = static_cast<int>(outer_.size());
        for (int i = 0; i < n; ++i)
            for (int j = std::max(i + 1, outer_edges); j < n; ++j)
                if (detail::segments_properly_intersect(edges_[static_cast<std::size_t>(i)].seg,
                                                        edges_[static_cast<std::size_t>(j)].seg))
                    throw Error("obstacle features intersect");
    }

    std::vector<Point> outer_;
    std::vector<std::vector<Point>> obstacle_polys_;
    std::vector<Segment> obstacle_segments_;
    std::vector<Point> obstacle_points_;
    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    double scale_ = 1.0;
};

// ---------------------------------------------------------------------------
// Contact predicates and feasibility

inline bool satisfies_contact(const ConvexPolygon& p, const PolygonalDomain& q,
                              const Placement& pl, const ContactPair& c, double tol) {
    if (c.kind == ContactKind::Side) {
        Point v = placed_vertex(p, pl, c.p_element);
        return point_segment_distance(v, q.edge(c.q_element).seg) <= tol;
    }
    Point v = q.vertex(c.q_element);
    return point_segment_distance(v, placed_edge(p, pl, c.p_element)) <= tol;
}

// Clearance of a center against every element of Q under the P_theta
// distance. A placement is contained and obstacle-free exactly when its
// expansion factor does not exceed this value.
inline double domain_clearance(const ConvexPolygon& p, const PolygonalDomain& q, double theta,
                               Point center) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : q.vertices()) best = std::min(best, p_distance(p, theta, center, v));
    for (const auto& e : q.edges()) best = std::min(best, segment_p_distance(p, theta, center, e.seg));
    return best;
}

// Closed containment: grazing contact within tol still counts as feasible.
inline bool is_feasible(const ConvexPolygon& p, const Placement& pl, const PolygonalDomain& q,
                        double tol) {
    if (!(pl.delta > 0.0)) return false;
    Point c = pl.center();
    if (!point_in_polygon(c, q.outer(), tol)) return false;
    for (const auto& poly : q.obstacle_polygons()) {
        // Centers in the boundary band are resolved by the clearance test.
        if (point_in_polygon(c, poly) && domain_clearance(p, q, pl.theta, c) > tol) return false;
    }
    return domain_clearance(p, q, pl.theta, c) >= pl.delta - tol;
}

}  // namespace rotfit
