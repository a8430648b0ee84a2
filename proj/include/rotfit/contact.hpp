// Contact-driven algebra: triple-contact placements, expansion functions
// for hinged copies, instrumentation curves along restricted contacts, and
// the critical-orientation solvers for contact quadruples.
#pragma once

#include <array>
#include <optional>

#include "rotfit/convex.hpp"
#include "rotfit/envelope.hpp"

namespace rotfit {

// ---------------------------------------------------------------------------
// Types

struct RestrictedContact {
    ContactPair contact;
    ThetaInterval interval;
};

// Combinatorial type of a four-contact event: a side contacts, b corner
// contacts, a + b = 4.
struct QuadrupleType {
    int a = 0;
    int b = 0;
    bool operator==(const QuadrupleType&) const = default;
};

inline QuadrupleType classify_quadruple(const std::array<ContactPair, 4>& cs) {
    QuadrupleType t;
    for (const auto& c : cs) (c.kind == ContactKind::Side ? t.a : t.b)++;
    return t;
}

inline int critical_orientation_cap(QuadrupleType t) {
    switch (t.a) {
        case 4: return 1;
        case 3: return 2;
        case 2: return 4;
        case 1: return 2;
        default: return 2;
    }
}

inline bool shares_element(const ContactPair& a, const ContactPair& b) {
    bool same_q = a.kind == b.kind ? a.q_element == b.q_element : false;
    bool same_p = a.kind == b.kind ? a.p_element == b.p_element : false;
    return same_q || same_p;
}

// Position of a contact's P element in the cyclic vertex/edge order of P;
// vertices at even slots, edges at odd slots.
inline int p_cyclic_slot(const ConvexPolygon& p, const ContactPair& c) {
    if (c.kind == ContactKind::Side) return 2 * p.wrap(c.p_element);
    return 2 * p.wrap(c.p_element) + 1;
}

inline bool ccw_along_pattern(const ConvexPolygon& p, const ContactPair& c1,
                              const ContactPair& c2, const ContactPair& c3) {
    int n = 2 * p.k();
    int s1 = p_cyclic_slot(p, c1);
    int d2 = (p_cyclic_slot(p, c2) - s1 + n) % n;
    int d3 = (p_cyclic_slot(p, c3) - s1 + n) % n;
    return d2 != 0 && d3 != 0 && d2 < d3;
}

// ---------------------------------------------------------------------------
// Triple-contact linear system
//
// At a fixed orientation, each contact pins one degree of freedom of the
// placement (x, y, delta):
//   side contact  (edge of Q, vertex i of P):  n.(x,y) + delta * n.R u_i = h
//   corner contact (vertex v of Q, edge j of P):
//       m(theta).(x,y) + delta * h0_j = m(theta).v,  m(theta) = R m0_j
// Three contacts give a 3x3 system, generically with a unique solution.

struct ContactRowData {
    ContactKind kind;
    // side: fixed line normal n, offset h, vertex offset u
    // corner: pattern edge normal m0, support h0, fixed q vertex v
    Vec2 n;
    double h = 0.0;
    Vec2 u;
    Vec2 m0;
    double h0 = 0.0;
    Point v;
};

struct RawSolution {
    Vec2 center;
    double delta = 0.0;
    double det = 0.0;
    double cond = 0.0;
};

class TripleSystem {
  public:
    TripleSystem() = default;

    static TripleSystem make(const ConvexPolygon& p, const PolygonalDomain& q,
                             const std::array<ContactPair, 3>& contacts) {
        TripleSystem ts;
        ts.contacts_ = contacts;
        for (int i = 0; i < 3; ++i) {
            const ContactPair& c = contacts[static_cast<std::size_t>(i)];
            ContactRowData& r = ts.rows_[static_cast<std::size_t>(i)];
            r.kind = c.kind;
            if (c.kind == ContactKind::Side) {
                Line l = q.edge(c.q_element).line();
                r.n = l.normal();
                r.h = l.offset();
                r.u = p.offset(c.p_element);
            } else {
                r.m0 = p.edge_normal0(c.p_element);
                r.h0 = p.edge_support(c.p_element);
                r.v = q.vertex(c.q_element);
            }
        }
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (contacts[static_cast<std::size_t>(i)] == contacts[static_cast<std::size_t>(j)])
                    throw Error("triple system requires distinct contacts");
        return ts;
    }

    const std::array<ContactPair, 3>& contacts() const { return contacts_; }

    // Row coefficients of the system at orientation theta.
    void assemble(double theta, double a[3][3], double b[3]) const {
        double c = std::cos(theta), s = std::sin(theta);
        auto rot = [&](Vec2 w) { return Vec2{c * w.x - s * w.y, s * w.x + c * w.y}; };
        for (int i = 0; i < 3; ++i) {
            const ContactRowData& r = rows_[static_cast<std::size_t>(i)];
            if (r.kind == ContactKind::Side) {
                a[i][0] = r.n.x;
                a[i][1] = r.n.y;
                a[i][2] = dot(r.n, rot(r.u));
                b[i] = r.h;
            } else {
                Vec2 m = rot(r.m0);
                a[i][0] = m.x;
                a[i][1] = m.y;
                a[i][2] = r.h0;
                b[i] = dot(m, r.v);
            }
        }
    }

    std::optional<RawSolution> solve_raw(double theta) const {
        double a[3][3], b[3];
        assemble(theta, a, b);
        double det = det3(a);
        double norm = 0.0;
        for (auto& row : a)
            for (double v : row) norm = std::max(norm, std::fabs(v));
        if (std::fabs(det) < 1e-14 * norm * norm * norm) return std::nullopt;
        RawSolution sol;
        sol.det = det;
        double nx = replace_det(a, b, 0), ny = replace_det(a, b, 1), nd = replace_det(a, b, 2);
        sol.center = {nx / det, ny / det};
        sol.delta = nd / det;
        sol.cond = norm * norm * norm / std::fabs(det);  // coarse conditioning proxy
        return sol;
    }

    // Cramer numerators and determinant; finite even where the system turns
    // singular, so products with them stay polynomial in the trig basis.
    void numerators(double theta, double& nx, double& ny, double& nd, double& det) const {
        double a[3][3], b[3];
        assemble(theta, a, b);
        det = det3(a);
        nx = replace_det(a, b, 0);
        ny = replace_det(a, b, 1);
        nd = replace_det(a, b, 2);
    }

  private:
    static double det3(const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    }
    static double replace_det(const double a[3][3], const double b[3], int col) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = (j == col) ? b[i] : a[i][j];
        return det3(m);
    }

    std::array<ContactPair, 3> contacts_;
    std::array<ContactRowData, 3> rows_;
};

struct TripleSolveOptions {
    double extent_slack = 1e-9;   // relative slack on segment-extent parameters
    double cond_max = 1e12;
    bool require_positive_delta = true;
    bool validate_extents = true;
};

// Extent parameter of the contact at a solved placement: the position of the
// touching point along the relevant segment, in [0, 1] when inside.
inline double contact_extent_param(const ConvexPolygon& p, const PolygonalDomain& q,
                                   const Placement& pl, const ContactPair& c) {
    if (c.kind == ContactKind::Side) {
        Point v = placed_vertex(p, pl, c.p_element);
        return q.edge(c.q_element).seg.param_of(v);
    }
    Segment e = placed_edge(p, pl, c.p_element);
    return e.param_of(q.vertex(c.q_element));
}

inline std::optional<Placement> triple_placement(const ConvexPolygon& p, const PolygonalDomain& q,
                                                 const TripleSystem& ts, double theta,
                                                 const TripleSolveOptions& opt = {}) {
    auto raw = ts.solve_raw(theta);
    if (!raw || raw->cond > opt.cond_max) return std::nullopt;
    if (opt.require_positive_delta && !(raw->delta > 0.0)) return std::nullopt;
    Placement pl{raw->center.x, raw->center.y, wrap_tau(theta), raw->delta};
    if (opt.validate_extents) {
        for (const auto& c : ts.contacts()) {
            double t = contact_extent_param(p, q, pl, c);
            if (t < -opt.extent_slack || t > 1.0 + opt.extent_slack) return std::nullopt;
        }
    }
    return pl;
}

// ---------------------------------------------------------------------------
// Domain scanning shared by the theta -> value curve constructors

// Maximal subintervals of [lo, hi] where `ok` holds, boundaries located by
// bisection to 1e-11.
inline std::vector<ThetaInterval> scan_theta_domain(double lo, double hi, double resolution,
                                                    const std::function<bool(double)>& ok) {
    std::vector<ThetaInterval> out;
    int steps = std::max(2, static_cast<int>(std::ceil((hi - lo) / resolution)));
    auto locate = [&](double a, double b, bool va) {
        // boundary between differing predicate values
        for (int it = 0; it < 60 && b - a > 1e-11; ++it) {
            double m = 0.5 * (a + b);
            (ok(m) == va ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    double prev = lo;
    bool pv = ok(lo);
    std::optional<double> open = pv ? std::optional<double>(lo) : std::nullopt;
    for (int i = 1; i <= steps; ++i) {
        double t = lo + (hi - lo) * i / steps;
        bool v = ok(t);
        if (v != pv) {
            double edge = locate(prev, t, pv);
            if (pv) {
                out.push_back({*open, edge});
                open.reset();
            } else {
                open = edge;
            }
        }
        prev = t;
        pv = v;
    }
    if (open) out.push_back({*open, hi});
    // drop slivers thinner than the boundary-location tolerance model
    std::erase_if(out, [](const ThetaInterval& iv) { return iv.length() < 1e-8; });
    return out;
}

// ---------------------------------------------------------------------------
// Expansion functions of hinged copies
//
// A hinge pins a corner of the placed copy to a corner of Q; one more
// contact then determines the expansion factor in closed form per theta.

struct ExpansionFunction {
    Hinge hinge;
    ContactPair contact;
    Point q_corner;
    Vec2 u_h;  // pattern offset of the hinge corner
    // side contact data
    Vec2 n;
    double h = 0.0;
    Vec2 u_c;
    // corner contact data
    Vec2 m0;
    double h0 = 0.0;
    Point v;
    double den_corner = 0.0;

    double delta(double theta) const {
        if (contact.kind == ContactKind::Side) {
            double den = dot(n, (u_c - u_h).rotated(theta));
            if (std::fabs(den) < 1e-14) return std::numeric_limits<double>::infinity();
            return (h - dot(n, q_corner)) / den;
        }
        double num = dot(m0.rotated(theta), v - q_corner);
        return num / den_corner;
    }

    Placement placement(double theta) const {
        double d = delta(theta);
        Vec2 c = q_corner - u_h.rotated(theta) * d;
        return {c.x, c.y, wrap_tau(theta), d};
    }
};

inline ExpansionFunction make_expansion(const Hinge& hinge, const ContactPair& contact,
                                        const ConvexPolygon& p, const PolygonalDomain& q) {
    ExpansionFunction ef;
    ef.hinge = hinge;
    ef.contact = contact;
    ef.q_corner = q.vertex(hinge.q_corner);
    ef.u_h = p.offset(hinge.p_corner);
    if (contact.kind == ContactKind::Side) {
        Line l = q.edge(contact.q_element).line();
        ef.n = l.normal();
        ef.h = l.offset();
        ef.u_c = p.offset(contact.p_element);
        if ((ef.u_c - ef.u_h).norm() < 1e-15)
            throw EmptyDomain("hinge corner equals contact vertex");
    } else {
        ef.m0 = p.edge_normal0(contact.p_element);
        ef.h0 = p.edge_support(contact.p_element);
        ef.v = q.vertex(contact.q_element);
        ef.den_corner = ef.h0 - dot(ef.m0, ef.u_h);
        // zero denominator: the hinge corner lies on the contact edge line
        if (std::fabs(ef.den_corner) < 1e-12)
            throw EmptyDomain("hinge corner on the contact edge of P");
    }
    return ef;
}

inline PartialFunction expansion_function(const Hinge& hinge, const ContactPair& contact,
                                          const ConvexPolygon& p, const PolygonalDomain& q,
                                          int id = 0,
                                          double resolution = kDefaultEnvelopeResolution) {
    ExpansionFunction ef = make_expansion(hinge, contact, p, q);
    double scale = q.scale();
    auto ok = [ef, &p, &q, scale](double theta) {
        double d = ef.delta(theta);
        if (!std::isfinite(d) || d <= 1e-12 * scale || d > 1e12) return false;
        Placement pl = ef.placement(theta);
        double t = contact_extent_param(p, q, pl, ef.contact);
        return t >= -1e-9 && t <= 1.0 + 1e-9;
    };

    std::vector<ThetaInterval> domain = scan_theta_domain(0.0, kTau, resolution, ok);
    // merge across the wrap seam so the cut at zero is the only artifact
    if (domain.size() >= 2 && domain.front().lo <= 1e-11 && domain.back().hi >= kTau - 1e-11) {
        // keep as two intervals (cut at zero), which is the documented form
    }
    if (domain.empty()) throw EmptyDomain("no orientation admits the hinged contact");

    PartialFunction pf;
    pf.id = id;
    pf.domain = std::move(domain);
    pf.eval = [ef](double theta) { return ef.delta(theta); };
    return pf;
}

// Placement realizing the hinged contact at theta (for tests and labels).
inline Placement expansion_placement(const Hinge& hinge, const ContactPair& contact,
                                     const ConvexPolygon& p, const PolygonalDomain& q,
                                     double theta) {
    return make_expansion(hinge, contact, p, q).placement(theta);
}

// ---------------------------------------------------------------------------
// len curves along restricted contacts

// Point element of a contact in a placed copy: the P vertex for a side
// contact, the Q vertex for a corner contact.
inline Point contact_point_element(const ConvexPolygon& p, const PolygonalDomain& q,
                                   const Placement& pl, const ContactPair& c) {
    if (c.kind == ContactKind::Side) return placed_vertex(p, pl, c.p_element);
    return q.vertex(c.q_element);
}

// Side element endpoints: the Q edge for a side contact, the placed P edge
// for a corner contact.
inline Segment contact_side_element(const ConvexPolygon& p, const PolygonalDomain& q,
                                    const Placement& pl, const ContactPair& c) {
    if (c.kind == ContactKind::Side) return q.edge(c.q_element).seg;
    return placed_edge(p, pl, c.p_element);
}

inline PartialFunction len_function(const RestrictedContact& r, const ContactPair& c1,
                                    const ContactPair& c2, const ConvexPolygon& p,
                                    const PolygonalDomain& q, int id = 0,
                                    double resolution = kDefaultEnvelopeResolution) {
    TripleSystem ts = TripleSystem::make(p, q, {c1, c2, r.contact});
    double scale = q.scale();

    auto measure = [ts, &p, &q, c1, c2, scale](double theta) -> std::optional<double> {
        auto pl = triple_placement(p, q, ts, theta);
        if (!pl) return std::nullopt;
        Point p1 = contact_point_element(p, q, *pl, c1);
        Point p2 = contact_point_element(p, q, *pl, c2);
        Vec2 vc = p2 - p1;
        if (vc.norm() < 1e-9 * scale) return std::nullopt;  // zero-length ray excluded
        Segment side = contact_side_element(p, q, *pl, c2);
        double ca = cross(vc, side.a - p2);
        double cb = cross(vc, side.b - p2);
        if (std::fabs(ca) < 1e-12 * scale * scale && std::fabs(cb) < 1e-12 * scale * scale)
            return std::nullopt;  // ray collinear with the side element
        Point cw = ca < cb ? side.a : side.b;  // clockwise side has negative cross
        return distance(cw, p2);
    };

    // sign of the clockwise-endpoint choice; a flip splits a piece
    auto endpoint_sign = [ts, &p, &q, c1, c2](double theta) -> std::optional<bool> {
        auto pl = triple_placement(p, q, ts, theta);
        if (!pl) return std::nullopt;
        Point p1 = contact_point_element(p, q, *pl, c1);
        Point p2 = contact_point_element(p, q, *pl, c2);
        Segment side = contact_side_element(p, q, *pl, c2);
        return cross(p2 - p1, side.a - p2) < cross(p2 - p1, side.b - p2);
    };

    PartialFunction pf;
    pf.id = id;
    pf.domain = scan_theta_domain(r.interval.lo, r.interval.hi, resolution,
                                  [&measure](double t) { return measure(t).has_value(); });
    for (const auto& iv : pf.domain) {
        int steps = std::max(2, static_cast<int>(std::ceil(iv.length() / resolution)));
        std::optional<bool> prev;
        double prev_t = iv.lo;
        for (int i = 0; i <= steps; ++i) {
            double t = iv.lo + iv.length() * i / steps;
            auto s = endpoint_sign(t);
            if (prev && s && *s != *prev) {
                double a = prev_t, b = t;
                for (int it = 0; it < 50 && b - a > 1e-11; ++it) {
                    double m = 0.5 * (a + b);
                    auto sm = endpoint_sign(m);
                    if (sm && *sm == *prev)
                        a = m;
                    else
                        b = m;
                }
                pf.piece_boundaries.push_back(0.5 * (a + b));
            }
            if (s) {
                prev = s;
                prev_t = t;
            }
        }
    }
    pf.eval = [measure](double theta) {
        auto v = measure(theta);
        return v ? *v : std::numeric_limits<double>::quiet_NaN();
    };
    return pf;
}

// ---------------------------------------------------------------------------
// Critical orientations of contact quadruples
//
// The residual of the fourth contact against the three-contact solution is
// rational in (cos theta, sin theta) with denominator det(theta). Multiplied
// through by the determinant it becomes an exact trigonometric polynomial of
// low harmonic order, recovered here by discrete Fourier projection and
// rooted through the half-angle companion polynomial.

namespace detail {

struct TrigPoly {
    // value = sum_j a[j] cos(j t) + b[j] sin(j t)
    std::vector<double> a, b;

    double eval(double t) const {
        double v = a[0];
        for (std::size_t j = 1; j < a.size(); ++j)
            v += a[j] * std::cos(static_cast<double>(j) * t) + b[j] * std::sin(static_cast<double>(j) * t);
        return v;
    }
    double deriv(double t) const {
        double v = 0.0;
        for (std::size_t j = 1; j < a.size(); ++j) {
            double jj = static_cast<double>(j);
            v += -a[j] * jj * std::sin(jj * t) + b[j] * jj * std::cos(jj * t);
        }
        return v;
    }
    double coef_norm() const {
        double n = 0.0;
        for (double v : a) n = std::max(n, std::fabs(v));
        for (double v : b) n = std::max(n, std::fabs(v));
        return n;
    }
};

// Exact projection of a trig polynomial sampled on a uniform grid.
inline TrigPoly project_trig(const std::function<double(double)>& f, int max_harmonic,
                             int grid = 64) {
    TrigPoly tp;
    tp.a.assign(static_cast<std::size_t>(max_harmonic) + 1, 0.0);
    tp.b.assign(static_cast<std::size_t>(max_harmonic) + 1, 0.0);
    std::vector<double> vals(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) vals[static_cast<std::size_t>(k)] = f(kTau * k / grid);
    for (int j = 0; j <= max_harmonic; ++j) {
        double ca = 0.0, cb = 0.0;
        for (int k = 0; k < grid; ++k) {
            double t = kTau * k / grid;
            ca += vals[static_cast<std::size_t>(k)] * std::cos(j * t);
            cb += vals[static_cast<std::size_t>(k)] * std::sin(j * t);
        }
        tp.a[static_cast<std::size_t>(j)] = (j == 0 ? 1.0 : 2.0) * ca / grid;
        tp.b[static_cast<std::size_t>(j)] = (j == 0 ? 1.0 : 2.0) * cb / grid;
    }
    return tp;
}

inline std::vector<double> poly_mul(const std::vector<double>& p, const std::vector<double>& q) {
    std::vector<double> r(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

// Roots of the trig polynomial on [0, 2 pi) via t = tan(theta/2):
// multiply by (1 + t^2)^H and solve the real polynomial of degree 2H.
// theta = pi (t at infinity) is handled separately.
inline std::vector<double> trig_roots(const TrigPoly& tp) {
    int h = static_cast<int>(tp.a.size()) - 1;
    while (h > 0 && std::fabs(tp.a[static_cast<std::size_t>(h)]) < 1e-13 * tp.coef_norm() &&
           std::fabs(tp.b[static_cast<std::size_t>(h)]) < 1e-13 * tp.coef_norm())
        --h;

    // (1+it)^(2j) expansions once
    std::vector<std::vector<double>> re(static_cast<std::size_t>(h) + 1),
        im(static_cast<std::size_t>(h) + 1);
    std::vector<double> zr{1.0}, zi{0.0};  // (1+it)^0
    re[0] = zr;
    im[0] = zi;
    for (int j = 1; j <= h; ++j) {
        // multiply (zr + i zi) by (1+it)^2 = (1 - t^2) + i (2t)
        std::vector<double> f1{1.0, 0.0, -1.0};  // 1 - t^2
        std::vector<double> f2{0.0, 2.0};        // 2t
        std::vector<double> nr = poly_mul(zr, f1);
        std::vector<double> ni = poly_mul(zi, f1);
        std::vector<double> cr = poly_mul(zi, f2);
        std::vector<double> ci = poly_mul(zr, f2);
        nr.resize(std::max(nr.size(), cr.size()), 0.0);
        ni.resize(std::max(ni.size(), ci.size()), 0.0);
        for (std::size_t i = 0; i < cr.size(); ++i) nr[i] -= cr[i];
        for (std::size_t i = 0; i < ci.size(); ++i) ni[i] += ci[i];
        zr = nr;
        zi = ni;
        re[static_cast<std::size_t>(j)] = zr;
        im[static_cast<std::size_t>(j)] = zi;
    }
    std::vector<double> one_t2{1.0, 0.0, 1.0};  // 1 + t^2
    std::vector<double> poly{0.0};
    for (int j = 0; j <= h; ++j) {
        std::vector<double> term_r = re[static_cast<std::size_t>(j)];
        std::vector<double> term_i = im[static_cast<std::size_t>(j)];
        std::vector<double> pw{1.0};
        for (int e = 0; e < h - j; ++e) pw = poly_mul(pw, one_t2);
        std::vector<double> tr = poly_mul(term_r, pw);
        std::vector<double> ti = poly_mul(term_i, pw);
        poly.resize(std::max({poly.size(), tr.size(), ti.size()}), 0.0);
        for (std::size_t i = 0; i < tr.size(); ++i)
            poly[i] += tp.a[static_cast<std::size_t>(j)] * tr[i];
        for (std::size_t i = 0; i < ti.size(); ++i)
            poly[i] += tp.b[static_cast<std::size_t>(j)] * ti[i];
    }

    std::vector<double> roots;
    double norm = 0.0;
    for (double c : poly) norm = std::max(norm, std::fabs(c));
    if (norm > 0.0) {
        try {
            for (double t : solve_polynomial(poly)) roots.push_back(wrap_tau(2.0 * std::atan(t)));
        } catch (const DegeneratePolynomial&) {
        }
    }
    if (std::fabs(tp.eval(kPi)) < 1e-9 * std::max(tp.coef_norm(), 1e-300)) roots.push_back(kPi);

    // polish on the trig polynomial itself
    for (double& t : roots) {
        for (int it = 0; it < 4; ++it) {
            double f = tp.eval(t), df = tp.deriv(t);
            if (std::fabs(df) < 1e-300) break;
            double step = f / df;
            if (!std::isfinite(step) || std::fabs(step) > 0.1) break;
            t -= step;
        }
        t = wrap_tau(t);
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> dedup;
    for (double t : roots)
        if (dedup.empty() || t - dedup.back() > 1e-9) dedup.push_back(t);
    if (dedup.size() >= 2 && dedup.front() + kTau - dedup.back() <= 1e-9) dedup.pop_back();
    return dedup;
}

}  // namespace detail

struct CriticalOrientation {
    double theta = 0.0;
    Placement placement;
    QuadrupleType type;
};

// Residual of a fourth contact against the Cramer numerators of a triple:
// an exact trig polynomial (the contact condition times det).
inline double fourth_contact_numerator(const ConvexPolygon& p, const PolygonalDomain& q,
                                       const TripleSystem& ts, const ContactPair& c4,
                                       double theta) {
    double nx, ny, nd, det;
    ts.numerators(theta, nx, ny, nd, det);
    if (c4.kind == ContactKind::Side) {
        Line l = q.edge(c4.q_element).line();
        Vec2 n = l.normal();
        double h = l.offset();
        Vec2 u4 = p.offset(c4.p_element).rotated(theta);
        return n.x * nx + n.y * ny + nd * dot(n, u4) - h * det;
    }
    Vec2 m = p.edge_normal0(c4.p_element).rotated(theta);
    double h0 = p.edge_support(c4.p_element);
    Point v = q.vertex(c4.q_element);
    return dot(m, v) * det - (m.x * nx + m.y * ny) - nd * h0;
}

// Maximum harmonic order of the cleared residual by quadruple type; the
// trig-degree bookkeeping of the three row kinds.
inline int residual_harmonic_cap(QuadrupleType t) {
    switch (t.a) {
        case 4: return 1;
        case 3: return 2;
        case 2: return 3;
        case 1: return 4;
        default: return 3;
    }
}

// Every orientation in [0, 2 pi) at which a single placement satisfies all
// four contacts, each verified at tolerance 1e-7 * scale.
inline std::vector<CriticalOrientation> critical_orientations(
    const ContactPair& c1, const ContactPair& c2, const ContactPair& c3, const ContactPair& c4,
    const ConvexPolygon& p, const PolygonalDomain& q) {
    std::array<ContactPair, 4> cs{c1, c2, c3, c4};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (cs[static_cast<std::size_t>(i)] == cs[static_cast<std::size_t>(j)])
                throw Error("critical orientations need four distinct contacts");
    QuadrupleType type = classify_quadruple(cs);
    double scale = q.scale();

    // Canonical solving triple per type: side triples for mostly-side
    // quadruples, corner triples for mostly-corner ones, and for two-two the
    // corner pair plus one side. Remaining subsets are fallbacks when the
    // canonical system is singular for every orientation.
    std::vector<std::array<int, 4>> orders;
    auto push_order = [&orders, &cs](std::initializer_list<int> idx) {
        std::array<int, 4> o{};
        int n = 0;
        for (int i : idx) o[static_cast<std::size_t>(n++)] = i;
        (void)cs;
        orders.push_back(o);
    };
    {
        std::vector<int> sides, corners;
        for (int i = 0; i < 4; ++i)
            (cs[static_cast<std::size_t>(i)].kind == ContactKind::Side ? sides : corners).push_back(i);
        if (type.a == 4 || type.b == 4) {
            push_order({0, 1, 2, 3});
            push_order({0, 1, 3, 2});
            push_order({0, 2, 3, 1});
            push_order({1, 2, 3, 0});
        } else if (type.a == 3) {
            push_order({sides[0], sides[1], sides[2], corners[0]});
        } else if (type.b == 3) {
            push_order({corners[0], corners[1], corners[2], sides[0]});
        } else {
            push_order({corners[0], sides[0], corners[1], sides[1]});
            push_order({corners[0], sides[1], corners[1], sides[0]});
        }
    }

    for (const auto& order : orders) {
        TripleSystem ts = TripleSystem::make(
            p, q,
            {cs[static_cast<std::size_t>(order[0])], cs[static_cast<std::size_t>(order[1])],
             cs[static_cast<std::size_t>(order[2])]});
        const ContactPair& fourth = cs[static_cast<std::size_t>(order[3])];

        // determinant must not vanish identically
        detail::TrigPoly detp = detail::project_trig(
            [&ts](double t) {
                double nx, ny, nd, det;
                ts.numerators(t, nx, ny, nd, det);
                return det;
            },
            4);
        double det_norm = detp.coef_norm();
        if (det_norm < 1e-12) continue;  // singular subsystem; try another triple

        detail::TrigPoly num = detail::project_trig(
            [&](double t) { return fourth_contact_numerator(p, q, ts, fourth, t); },
            residual_harmonic_cap(type) + 2);
        if (num.coef_norm() < 1e-11 * std::max(1.0, scale * scale * scale)) {
            // fourth contact holds identically along the triple: a continuum,
            // not isolated critical orientations
            throw DegenerateConfiguration("fourth contact degenerate along the triple");
        }

        std::vector<CriticalOrientation> out;
        for (double theta : detail::trig_roots(num)) {
            auto pl = triple_placement(p, q, ts, theta,
                                       {.extent_slack = 1e-7, .cond_max = 1e12});
            if (!pl) continue;
            bool all_ok = true;
            for (const auto& c : cs)
                if (!satisfies_contact(p, q, *pl, c, 1e-7 * scale)) all_ok = false;
            if (!all_ok) continue;
            if (!out.empty() && theta - out.back().theta < 1e-9) continue;
            out.push_back({theta, *pl, type});
        }
        return out;
    }
    throw DegenerateConfiguration("every contact subsystem is singular for all orientations");
}

// ---------------------------------------------------------------------------
// Traces of pattern vertices under maintained triples

// Trace of a placed vertex while three side contacts are maintained: a line
// segment, reached through a fixed similarity about the Miquel point of the
// three contact lines.
struct VertexLineTrace {
    Point miquel;
    Segment span;      // extent over the valid orientations
    Point base;        // parameterization base + t * dir covers the trace line
    Vec2 dir;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

// Trace of a placed vertex while three corner contacts are maintained: an
// arc of a circle through the Miquel point of the configuration.
struct VertexCircleTrace {
    Circle circle;
    Point miquel;
    double psi_lo = 0.0;  // central-angle extent of the arc
    double psi_hi = 0.0;
};

namespace detail {

// Orientations across the whole circle where the triple admits a validated
// placement, thinned to at most `want` entries.
inline std::vector<double> valid_samples(const ConvexPolygon& p, const PolygonalDomain& q,
                                         const TripleSystem& ts, int want) {
    std::vector<double> all;
    for (int i = 0; i < 256; ++i) {
        double theta = kTau * i / 256.0;
        if (triple_placement(p, q, ts, theta)) all.push_back(theta);
    }
    if (static_cast<int>(all.size()) <= want) return all;
    std::vector<double> out;
    for (int i = 0; i < want; ++i)
        out.push_back(all[static_cast<std::size_t>(i) * all.size() / static_cast<std::size_t>(want)]);
    return out;
}

// Miquel pivot of three lines with marked points on them: second
// intersection of the available corner circumcircles. Lines may be pairwise
// parallel; at least two circles must survive.
inline Point miquel_of_lines(const std::array<Line, 3>& lines, const std::array<Point, 3>& marked,
                             double scale) {
    // corner between lines j and k carries the marked points of those lines
    std::array<std::optional<Circle>, 3> circles;
    std::array<Point, 3> shared;  // marked point shared by circle i and i+1
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        auto corner = line_intersection(lines[static_cast<std::size_t>(j)],
                                        lines[static_cast<std::size_t>(k)]);
        if (corner) {
            try {
                circles[static_cast<std::size_t>(i)] =
                    circumcircle(*corner, marked[static_cast<std::size_t>(j)],
                                 marked[static_cast<std::size_t>(k)]);
            } catch (const CollinearInput&) {
            }
        }
        shared[static_cast<std::size_t>(i)] = marked[static_cast<std::size_t>((i + 2) % 3)];
    }
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3;
        if (circles[static_cast<std::size_t>(i)] && circles[static_cast<std::size_t>(j)]) {
            Point g = circles_second_intersection(*circles[static_cast<std::size_t>(i)],
                                                  *circles[static_cast<std::size_t>(j)],
                                                  shared[static_cast<std::size_t>(i)]);
            (void)scale;
            return g;
        }
    }
    throw DegenerateConfiguration("no circumcircle pair available for the Miquel pivot");
}

}  // namespace detail

inline VertexLineTrace trace_of_vertex(const ContactPair& c1, const ContactPair& c2,
                                       const ContactPair& c3, int vertex,
                                       const ConvexPolygon& p, const PolygonalDomain& q) {
    if (c1.kind != ContactKind::Side || c2.kind != ContactKind::Side ||
        c3.kind != ContactKind::Side)
        throw Error("trace_of_vertex expects three side contacts");
    TripleSystem ts = TripleSystem::make(p, q, {c1, c2, c3});
    auto samples = detail::valid_samples(p, q, ts, 64);
    if (samples.size() < 3) throw DegenerateConfiguration("triple admits too few orientations");

    // refine the validity boundaries so the span covers the exact extent
    auto validity = scan_theta_domain(0.0, kTau, kPi / 512.0, [&](double th) {
        return triple_placement(p, q, ts, th).has_value();
    });
    std::vector<Point> pos;
    pos.reserve(samples.size() + 2 * validity.size());
    for (double t : samples) pos.push_back(placed_vertex(p, (*triple_placement(p, q, ts, t)), vertex));
    auto raw_pos = [&](double th) {
        auto raw = ts.solve_raw(th);
        if (!raw) return pos.front();
        Placement pl{raw->center.x, raw->center.y, wrap_tau(th), raw->delta};
        return placed_vertex(p, pl, vertex);
    };
    for (const auto& iv : validity) {
        pos.push_back(raw_pos(iv.lo));
        pos.push_back(raw_pos(iv.hi));
    }

    // farthest pair spans the direction
    double best = -1.0;
    std::size_t ia = 0, ib = 1;
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = i + 1; j < pos.size(); ++j)
            if (distance(pos[i], pos[j]) > best) {
                best = distance(pos[i], pos[j]);
                ia = i;
                ib = j;
            }
    double scale = q.scale();
    if (best < 1e-9 * scale) throw DegenerateConfiguration("vertex trace collapses to a point");
    Vec2 dir = (pos[ib] - pos[ia]).normalized();
    Point base = pos[ia];
    double t_lo = 0.0, t_hi = 0.0;
    for (const auto& pt : pos) {
        double t = dot(pt - base, dir);
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
        if (std::fabs(cross(dir, pt - base)) > 1e-7 * scale)
            throw DegenerateConfiguration("vertex trace is not collinear");
    }

    std::array<Line, 3> lines{q.edge(c1.q_element).line(), q.edge(c2.q_element).line(),
                              q.edge(c3.q_element).line()};
    Placement pl0 = (*triple_placement(p, q, ts, samples[0]));
    std::array<Point, 3> marked{placed_vertex(p, pl0, c1.p_element),
                                placed_vertex(p, pl0, c2.p_element),
                                placed_vertex(p, pl0, c3.p_element)};
    VertexLineTrace tr;
    tr.miquel = detail::miquel_of_lines(lines, marked, scale);
    tr.base = base;
    tr.dir = dir;
    tr.t_lo = t_lo;
    tr.t_hi = t_hi;
    tr.span = {base + dir * t_lo, base + dir * t_hi};
    return tr;
}

inline VertexCircleTrace trace_of_vertex_corner(const ContactPair& c1, const ContactPair& c2,
                                                const ContactPair& c3, int vertex,
                                                const ConvexPolygon& p,
                                                const PolygonalDomain& q) {
    if (c1.kind != ContactKind::Corner || c2.kind != ContactKind::Corner ||
        c3.kind != ContactKind::Corner)
        throw Error("trace_of_vertex_corner expects three corner contacts");
    double scale = q.scale();
    Point a1 = q.vertex(c1.q_element), a2 = q.vertex(c2.q_element), a3 = q.vertex(c3.q_element);
    if (std::fabs(orient(a1, a2, a3)) < kCollinearEps * scale * scale)
        throw DegenerateConfiguration("collinear contact corners");

    TripleSystem ts = TripleSystem::make(p, q, {c1, c2, c3});
    auto samples = detail::valid_samples(p, q, ts, 64);
    if (samples.size() < 3) throw DegenerateConfiguration("triple admits too few orientations");
    std::size_t n = samples.size();
    Point pa = placed_vertex(p, (*triple_placement(p, q, ts, samples[0])), vertex);
    Point pb = placed_vertex(p, (*triple_placement(p, q, ts, samples[n / 2])), vertex);
    Point pc = placed_vertex(p, (*triple_placement(p, q, ts, samples[n - 1])), vertex);
    Circle circle;
    try {
        circle = circumcircle(pa, pb, pc);
    } catch (const CollinearInput&) {
        throw DegenerateConfiguration("vertex trace did not span a circle");
    }

    VertexCircleTrace tr;
    tr.circle = circle;
    double lo = kTau, hi = -kTau;
    for (double t : samples) {
        Point pt = placed_vertex(p, (*triple_placement(p, q, ts, t)), vertex);
        if (std::fabs(distance(pt, circle.center) - circle.radius) > 1e-7 * scale)
            throw DegenerateConfiguration("vertex trace is not concyclic");
        double psi = std::atan2(pt.y - circle.center.y, pt.x - circle.center.x);
        lo = std::min(lo, psi);
        hi = std::max(hi, psi);
    }
    tr.psi_lo = lo;
    tr.psi_hi = hi;

    // Miquel pivot of the placed edge lines through the fixed corners.
    Placement pl0 = (*triple_placement(p, q, ts, samples[0]));
    auto edge_line = [&](const ContactPair& c) {
        Segment e = placed_edge(p, pl0, c.p_element);
        return Line::through(e.a, e.b);
    };
    std::array<Line, 3> lines{edge_line(c1), edge_line(c2), edge_line(c3)};
    tr.miquel = detail::miquel_of_lines(lines, {a1, a2, a3}, scale);
    return tr;
}

}  // namespace rotfit
