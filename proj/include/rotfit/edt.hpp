// Edge Voronoi structure of the domain's sites under the rotated pattern
// distance, held in its dual form: faces certified by empty-circle
// witnesses, typed generalized edges, and per-face contact labels. Also the
// fixed-orientation largest-homothet query built on the face witnesses.
#pragma once

#include <cstdint>
#include <map>
#include <set>

#include "rotfit/contact.hpp"

namespace rotfit {

// ---------------------------------------------------------------------------
// Sites

inline std::vector<Site> sites_of(const PolygonalDomain& q) {
    std::vector<Site> sites;
    // every domain vertex is a point site, every edge a segment site whose
    // endpoints refer back to the vertex sites
    for (int i = 0; i < static_cast<int>(q.vertices().size()); ++i) {
        Site s;
        s.id = static_cast<int>(sites.size());
        s.kind = SiteKind::Point;
        s.point = q.vertex(i);
        s.q_vertex = i;
        sites.push_back(s);
    }
    for (int e = 0; e < static_cast<int>(q.edges().size()); ++e) {
        Site s;
        s.id = static_cast<int>(sites.size());
        s.kind = SiteKind::Segment;
        s.segment = q.edge(e).seg;
        s.q_edge = e;
        s.end_a = q.edge(e).v_from;
        s.end_b = q.edge(e).v_to;
        sites.push_back(s);
    }
    return sites;
}

// ---------------------------------------------------------------------------
// Pattern-element classification at a contact

enum class PElemKind : std::uint8_t { Vertex, Edge };

struct PElem {
    PElemKind kind = PElemKind::Vertex;
    int index = 0;

    bool operator==(const PElem&) const = default;
    auto operator<=>(const PElem&) const = default;
};

// Element of the placed copy touching `at`, a point on its boundary.
// Contact within the vertex tolerance classifies as the vertex.
inline PElem classify_boundary_point(const ConvexPolygon& p, const Placement& pl, Point at,
                                     double vertex_tol) {
    for (int i = 0; i < p.k(); ++i)
        if (distance(placed_vertex(p, pl, i), at) <= vertex_tol) return {PElemKind::Vertex, i};
    // active edge of the gauge maximum
    Vec2 u = (at - pl.center()).rotated(-pl.theta);
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < p.k(); ++i) {
        double v = dot(p.edge_normal0(i), u) / p.edge_support(i);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return {PElemKind::Edge, best};
}

// Contact point of a placed copy's boundary with a site at clearance.
inline Point site_contact_point(const ConvexPolygon& p, double theta, Point center,
                                const Site& s) {
    if (s.kind == SiteKind::Point) return s.point;
    double u = 0.0;
    segment_p_distance(p, theta, center, s.segment, &u);
    return s.segment.at(u);
}

// ---------------------------------------------------------------------------
// Faces and generalized edges

enum class GedgeKind : std::uint8_t { Edge, Wedge, Ledge };

struct Gedge {
    int a = -1;  // site ids, a < b
    int b = -1;
    GedgeKind kind = GedgeKind::Edge;

    bool operator<(const Gedge& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
    bool operator==(const Gedge& o) const { return a == o.a && b == o.b; }
};

inline GedgeKind gedge_kind(const Site& sa, const Site& sb) {
    int segs = (sa.kind == SiteKind::Segment ? 1 : 0) + (sb.kind == SiteKind::Segment ? 1 : 0);
    return segs == 0 ? GedgeKind::Edge : (segs == 1 ? GedgeKind::Wedge : GedgeKind::Ledge);
}

struct Face {
    long id = -1;                    // unique across a structure's lifetime
    std::vector<int> sites;          // defining sites in angular order around the witness
    Point witness;
    double clearance = 0.0;
    std::vector<PElem> site_elements;  // touching element per defining site
    double interval_start = 0.0;       // orientation at which this face appeared
    std::uint64_t epoch = 0;

    std::vector<int> sorted_sites() const {
        std::vector<int> s = sites;
        std::sort(s.begin(), s.end());
        return s;
    }
    std::vector<PElem> label() const {
        std::vector<PElem> l = site_elements;
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        return l;
    }
};

struct EdgeDelaunay {
    double theta = 0.0;
    std::vector<Site> sites;
    std::vector<Gedge> gedges;
    std::vector<Face> faces;
    long next_face_id = 0;

    const Face* face_by_id(long id) const {
        for (const auto& f : faces)
            if (f.id == id) return &f;
        return nullptr;
    }
    Face* face_by_id(long id) {
        for (auto& f : faces)
            if (f.id == id) return &f;
        return nullptr;
    }
};

struct EdtBuildOptions {
    int all_triples_limit = 20;  // exhaustive triple enumeration up to this site count
    int grid = 0;                // 0: pick from site count
    double padding = 1.25;       // grid bbox expansion factor
};

namespace detail {

struct SiteDistanceFn {
    const ConvexPolygon* p;
    double theta;
    const std::vector<Site>* sites;

    double operator()(Point z, int site_id) const {
        return site_distance(*p, theta, z, (*sites)[static_cast<std::size_t>(site_id)]);
    }
};

// Damped Newton on the two equal-clearance equations of a site triple.
inline std::optional<Point> witness_newton(const SiteDistanceFn& dist, int s1, int s2, int s3,
                                           Point seed, double scale) {
    Point z = seed;
    auto F = [&](Point w, double& f1, double& f2) {
        double d1 = dist(w, s1), d2 = dist(w, s2), d3 = dist(w, s3);
        f1 = d1 - d2;
        f2 = d2 - d3;
    };
    double f1, f2;
    F(z, f1, f2);
    double h = 1e-7 * scale;
    for (int it = 0; it < 50; ++it) {
        if (std::max(std::fabs(f1), std::fabs(f2)) < 1e-11) break;
        double a1, a2, b1, b2, c1, c2, d1, d2;
        F({z.x + h, z.y}, a1, a2);
        F({z.x - h, z.y}, b1, b2);
        F({z.x, z.y + h}, c1, c2);
        F({z.x, z.y - h}, d1, d2);
        double j11 = (a1 - b1) / (2 * h), j12 = (c1 - d1) / (2 * h);
        double j21 = (a2 - b2) / (2 * h), j22 = (c2 - d2) / (2 * h);
        double det = j11 * j22 - j12 * j21;
        if (std::fabs(det) < 1e-18) return std::nullopt;
        Vec2 step{(f1 * j22 - f2 * j12) / det, (j11 * f2 - j21 * f1) / det};
        double lim = 0.5 * scale;  // keep steps inside the basin
        if (step.norm() > lim) step = step * (lim / step.norm());
        Point zn = z - step;
        double g1, g2;
        F(zn, g1, g2);
        int halvings = 0;
        while (std::max(std::fabs(g1), std::fabs(g2)) >
                   std::max(std::fabs(f1), std::fabs(f2)) &&
               halvings < 8) {
            step = step * 0.5;
            zn = z - step;
            F(zn, g1, g2);
            ++halvings;
        }
        z = zn;
        f1 = g1;
        f2 = g2;
        if (!z.finite() || std::fabs(z.x) > 20 * scale || std::fabs(z.y) > 20 * scale)
            return std::nullopt;
    }
    if (std::max(std::fabs(f1), std::fabs(f2)) > 1e-10 * std::max(scale, 1.0)) {
        // Newton stalls on kink vertices where a contact crosses a corner of
        // the copy; finish with a shrinking pattern search on the residual.
        auto res = [&](Point w) {
            double g1, g2;
            F(w, g1, g2);
            return std::max(std::fabs(g1), std::fabs(g2));
        };
        double cur = res(z);
        if (cur > 1e-3 * scale) return std::nullopt;
        double step = 64.0 * cur;
        for (int it = 0; it < 160 && cur > 1e-11; ++it) {
            bool improved = false;
            for (int d = 0; d < 8; ++d) {
                double a = kTau * d / 8.0;
                Point w{z.x + step * std::cos(a), z.y + step * std::sin(a)};
                double v = res(w);
                if (v < cur) {
                    cur = v;
                    z = w;
                    improved = true;
                    break;
                }
            }
            if (!improved) step *= 0.5;
            if (step < 1e-15 * scale) break;
        }
        if (cur > 1e-10 * std::max(scale, 1.0)) return std::nullopt;
    }
    return z;
}

}  // namespace detail

// Build the dual structure at a fixed orientation from an explicit site set.
// Faces are found by certifying empty-circle witnesses of candidate site
// triples: exhaustively for small site sets, seeded from a nearest-site grid
// otherwise. Cocircular witnesses within 1e-7 * scale merge into one face.
inline EdgeDelaunay build_edt_from_sites(std::vector<Site> sites, const ConvexPolygon& p,
                                         double theta, double scale,
                                         const EdtBuildOptions& opt = {}) {
    if (sites.size() < 3) throw TooFewSites("edge Delaunay structure needs at least 3 sites");
    EdgeDelaunay out;
    out.theta = wrap_tau(theta);
    out.sites = std::move(sites);
    const int n = static_cast<int>(out.sites.size());
    detail::SiteDistanceFn dist{&p, out.theta, &out.sites};

    // bounding box of the site geometry
    double lox = 1e300, hix = -1e300, loy = 1e300, hiy = -1e300;
    for (const auto& s : out.sites) {
        auto upd = [&](Point pt) {
            lox = std::min(lox, pt.x);
            hix = std::max(hix, pt.x);
            loy = std::min(loy, pt.y);
            hiy = std::max(hiy, pt.y);
        };
        if (s.kind == SiteKind::Point)
            upd(s.point);
        else {
            upd(s.segment.a);
            upd(s.segment.b);
        }
    }
    Point mid{0.5 * (lox + hix), 0.5 * (loy + hiy)};
    double span = std::max({hix - lox, hiy - loy, 1e-6});
    if (scale <= 0.0) scale = span;

    auto rep_point = [&](int id) {
        const Site& s = out.sites[static_cast<std::size_t>(id)];
        return s.kind == SiteKind::Point ? s.point : s.segment.at(0.5);
    };

    // candidate triples with seeds
    std::map<std::array<int, 3>, std::vector<Point>> candidates;
    auto add_candidate = [&](int a, int b, int c, Point seed) {
        std::array<int, 3> key{a, b, c};
        std::sort(key.begin(), key.end());
        if (key[0] == key[1] || key[1] == key[2]) return;
        auto& seeds = candidates[key];
        for (const auto& s : seeds)
            if (distance(s, seed) < 1e-3 * span) return;
        if (seeds.size() < 8) seeds.push_back(seed);
    };

    if (n <= opt.all_triples_limit) {
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                for (int c = b + 1; c < n; ++c) {
                    Point centroid = (rep_point(a) + rep_point(b) + rep_point(c)) / 3.0;
                    add_candidate(a, b, c, centroid);
                }
    }
    {
        int grid = opt.grid > 0 ? opt.grid : std::clamp(16 + 2 * n, 32, 96);
        double half = 0.5 * span * opt.padding;
        for (int gy = 0; gy <= grid; ++gy) {
            for (int gx = 0; gx <= grid; ++gx) {
                Point z{mid.x - half + 2 * half * gx / grid, mid.y - half + 2 * half * gy / grid};
                // three nearest sites seed a candidate junction
                std::array<int, 3> best{-1, -1, -1};
                std::array<double, 3> bd{1e300, 1e300, 1e300};
                for (int s = 0; s < n; ++s) {
                    double d = dist(z, s);
                    for (int r = 0; r < 3; ++r) {
                        if (d < bd[static_cast<std::size_t>(r)]) {
                            for (int m = 2; m > r; --m) {
                                bd[static_cast<std::size_t>(m)] = bd[static_cast<std::size_t>(m - 1)];
                                best[static_cast<std::size_t>(m)] = best[static_cast<std::size_t>(m - 1)];
                            }
                            bd[static_cast<std::size_t>(r)] = d;
                            best[static_cast<std::size_t>(r)] = s;
                            break;
                        }
                    }
                }
                if (best[2] >= 0 && bd[2] - bd[0] < 0.5 * span)
                    add_candidate(best[0], best[1], best[2], z);
            }
        }
    }

    // solve and certify
    struct RawFace {
        Point witness;
        double clearance;
        std::vector<int> defining;
    };
    std::vector<RawFace> raw;
    double certify_tol = 1e-8 * scale;
    for (const auto& [key, seeds] : candidates) {
        for (const auto& seed : seeds) {
            auto z = detail::witness_newton(dist, key[0], key[1], key[2], seed, span);
            if (!z) continue;
            double r = (dist(*z, key[0]) + dist(*z, key[1]) + dist(*z, key[2])) / 3.0;
            // zero-size junctions where an edge cell pinches at its endpoint
            // carry no structure beyond the sites themselves
            if (r < 1e-6 * scale) continue;
            bool empty = true;
            std::vector<int> defining;
            for (int s = 0; s < n && empty; ++s) {
                double d = dist(*z, s);
                if (d < r - certify_tol)
                    empty = false;
                else if (d <= r + certify_tol)
                    defining.push_back(s);
            }
            if (!empty || static_cast<int>(defining.size()) < 3) continue;
            // A Voronoi vertex is an isolated equal-distance point. When the
            // equal-clearance system is singular the candidate lies on a
            // one-dimensional shared boundary; confirm by stepping along the
            // null direction, where the defining spread stays first-order
            // zero for a family but grows for a vertex.
            {
                double h = 1e-6 * scale;
                auto F12 = [&](Point w, double& f1, double& f2) {
                    f1 = dist(w, key[0]) - dist(w, key[1]);
                    f2 = dist(w, key[1]) - dist(w, key[2]);
                };
                double a1, a2, b1, b2, c1, c2, d1, d2;
                F12({z->x + h, z->y}, a1, a2);
                F12({z->x - h, z->y}, b1, b2);
                F12({z->x, z->y + h}, c1, c2);
                F12({z->x, z->y - h}, d1, d2);
                Vec2 row1{(a1 - b1) / (2 * h), (c1 - d1) / (2 * h)};
                Vec2 row2{(a2 - b2) / (2 * h), (c2 - d2) / (2 * h)};
                double det = cross(row1, row2);
                double norms = std::max(row1.norm() * row2.norm(), 1e-12);
                if (std::fabs(det) < 1e-4 * norms) {
                    Vec2 tangent = row1.norm() > row2.norm() ? row1.perp().normalized()
                                                             : row2.perp().normalized();
                    double rho = 1e-5 * scale;
                    bool family = false;
                    for (double sgn : {1.0, -1.0}) {
                        Point w = *z + tangent * (sgn * rho);
                        double lo = 1e300, hi = -1e300;
                        for (int s : defining) {
                            double v = dist(w, s);
                            lo = std::min(lo, v);
                            hi = std::max(hi, v);
                        }
                        if (hi - lo < 1e-3 * rho) family = true;
                    }
                    if (family) continue;
                }
            }
            bool dup = false;
            for (auto& rf : raw) {
                if (distance(rf.witness, *z) < 1e-7 * scale) {
                    dup = true;
                    break;
                }
            }
            if (!dup) raw.push_back({*z, r, std::move(defining)});
        }
    }

    // faces with angular site order and labels
    for (auto& rf : raw) {
        Face f;
        f.id = out.next_face_id++;
        f.witness = rf.witness;
        f.clearance = rf.clearance;
        std::vector<std::pair<double, int>> order;
        for (int s : rf.defining) {
            Point cp = site_contact_point(p, out.theta, rf.witness, out.sites[static_cast<std::size_t>(s)]);
            order.emplace_back(std::atan2(cp.y - rf.witness.y, cp.x - rf.witness.x), s);
        }
        std::sort(order.begin(), order.end());
        Placement pl{rf.witness.x, rf.witness.y, out.theta, rf.clearance};
        for (auto& [ang, s] : order) {
            f.sites.push_back(s);
            Point cp = site_contact_point(p, out.theta, rf.witness, out.sites[static_cast<std::size_t>(s)]);
            f.site_elements.push_back(classify_boundary_point(p, pl, cp, 1e-8 * scale));
        }
        out.faces.push_back(std::move(f));
    }

    // generalized edges: circularly consecutive defining sites of each face
    std::set<Gedge> gedges;
    for (const auto& f : out.faces) {
        int m = static_cast<int>(f.sites.size());
        for (int i = 0; i < m; ++i) {
            int a = f.sites[static_cast<std::size_t>(i)];
            int b = f.sites[static_cast<std::size_t>((i + 1) % m)];
            if (a == b) continue;
            Gedge g{std::min(a, b), std::max(a, b), GedgeKind::Edge};
            g.kind = gedge_kind(out.sites[static_cast<std::size_t>(g.a)],
                                out.sites[static_cast<std::size_t>(g.b)]);
            gedges.insert(g);
        }
    }
    out.gedges.assign(gedges.begin(), gedges.end());
    return out;
}

inline EdgeDelaunay build_edt(const PolygonalDomain& q, const ConvexPolygon& p, double theta,
                              const EdtBuildOptions& opt = {}) {
    return build_edt_from_sites(sites_of(q), p, theta, q.scale(), opt);
}

// Label of a face: elements of the copy at the witness touching each
// defining site.
inline std::vector<PElem> face_label(const ConvexPolygon& p, double theta,
                                     const std::vector<Site>& sites, const Face& f,
                                     double scale) {
    Placement pl{f.witness.x, f.witness.y, wrap_tau(theta), f.clearance};
    std::vector<PElem> label;
    for (int s : f.sites) {
        const Site& site = sites[static_cast<std::size_t>(s)];
        double d = site_distance(p, pl.theta, f.witness, site);
        if (std::fabs(d - f.clearance) > 1e-7 * scale)
            throw NoContact("face witness does not touch a defining site");
        Point cp = site_contact_point(p, pl.theta, f.witness, site);
        label.push_back(classify_boundary_point(p, pl, cp, 1e-8 * scale));
    }
    std::sort(label.begin(), label.end());
    label.erase(std::unique(label.begin(), label.end()), label.end());
    return label;
}

// Largest homothetic (fixed-orientation) placement: the best face witness
// whose center lies in the free region. Ties resolve to the smallest (x, y).
inline Placement largest_homothet_at(const PolygonalDomain& q, const ConvexPolygon& p,
                                     double theta, const EdtBuildOptions& opt = {}) {
    EdgeDelaunay edt = build_edt(q, p, theta, opt);
    const Face* best = nullptr;
    for (const auto& f : edt.faces) {
        if (!q.center_in_free_region(f.witness)) continue;
        if (!best || f.clearance > best->clearance + 1e-12 ||
            (std::fabs(f.clearance - best->clearance) <= 1e-12 &&
             std::pair(f.witness.x, f.witness.y) < std::pair(best->witness.x, best->witness.y)))
            best = &f;
    }
    if (!best) throw Infeasible("no feasible placement at this orientation");
    return {best->witness.x, best->witness.y, wrap_tau(theta), best->clearance};
}

}  // namespace rotfit
