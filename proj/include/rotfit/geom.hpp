// Planar primitives shared by the placement engine: points, directed
// angles mod pi, lines, circles, scale-rotate maps, circumcircles, the
// Miquel point, and small real-root polynomial solvers.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace rotfit {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTau = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CollinearInput : Error {
    using Error::Error;
};
struct NotOnLine : Error {
    using Error::Error;
};
struct DegeneratePolynomial : Error {
    using Error::Error;
};
struct DegenerateConfiguration : Error {
    using Error::Error;
};
struct EmptyFamily : Error {
    using Error::Error;
};
struct UnequalDomains : Error {
    using Error::Error;
};
struct TooFewSites : Error {
    using Error::Error;
};
struct NoContact : Error {
    using Error::Error;
};
struct EmptyDomain : Error {
    using Error::Error;
};
struct Infeasible : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Vectors and points

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double xx, double yy) : x(xx), y(yy) {}

    constexpr Vec2 operator+(Vec2 r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(Vec2 r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 r) {
        x += r.x;
        y += r.y;
        return *this;
    }
    Vec2& operator-=(Vec2 r) {
        x -= r.x;
        y -= r.y;
        return *this;
    }
    constexpr bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
    constexpr double norm2() const { return x * x + y * y; }
    Vec2 normalized() const {
        double n = norm();
        return {x / n, y / n};
    }
    // counterclockwise quarter turn
    constexpr Vec2 perp() const { return {-y, x}; }
    Vec2 rotated(double theta) const {
        double c = std::cos(theta), s = std::sin(theta);
        return {c * x - s * y, s * x + c * y};
    }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

using Point = Vec2;

constexpr Vec2 operator*(double s, Vec2 v) { return {v.x * s, v.y * s}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline std::complex<double> to_complex(Vec2 v) { return {v.x, v.y}; }
inline Vec2 from_complex(std::complex<double> z) { return {z.real(), z.imag()}; }

// Signed doubled area of triangle abc; positive for counterclockwise turns.
constexpr double orient(Point a, Point b, Point c) {
    return cross(b - a, c - a);
}

inline double distance(Point a, Point b) { return (b - a).norm(); }

// ---------------------------------------------------------------------------
// Angle canonicalization

// Representative of an angle modulo pi in [0, pi).
inline double wrap_pi(double a) {
    double r = std::fmod(a, kPi);
    if (r < 0.0) r += kPi;
    if (r >= kPi) r = 0.0;
    return r;
}

// Representative of an angle modulo 2*pi in [0, 2*pi).
inline double wrap_tau(double a) {
    double r = std::fmod(a, kTau);
    if (r < 0.0) r += kTau;
    if (r >= kTau) r = 0.0;
    return r;
}

// Difference of two mod-pi representatives, folded into [0, pi/2].
inline double angle_gap_pi(double a, double b) {
    double d = std::fabs(wrap_pi(a) - wrap_pi(b));
    return std::min(d, kPi - d);
}

// ---------------------------------------------------------------------------
// Basic shapes

// Angle between two lines measured counterclockwise, canonical in [0, pi).
struct DirectedAngle {
    double value = 0.0;

    DirectedAngle() = default;
    explicit DirectedAngle(double v) : value(wrap_pi(v)) {}

    DirectedAngle operator+(DirectedAngle r) const { return DirectedAngle(value + r.value); }
    DirectedAngle operator-(DirectedAngle r) const { return DirectedAngle(value - r.value); }
};

struct Line {
    Point anchor;
    Vec2 direction;  // unit length

    static Line through(Point a, Point b) {
        Vec2 d = b - a;
        double n = d.norm();
        if (n == 0.0 || !std::isfinite(n))
            throw DegenerateConfiguration("line through coincident points");
        return {a, d / n};
    }

    // Unit normal and offset of the line in n.p = h form.
    Vec2 normal() const { return direction.perp(); }
    double offset() const { return dot(normal(), anchor); }

    double signed_distance(Point p) const { return dot(normal(), p) - offset(); }
    Point project(Point p) const {
        return anchor + direction * dot(p - anchor, direction);
    }
};

inline std::optional<Point> line_intersection(const Line& a, const Line& b) {
    double den = cross(a.direction, b.direction);
    if (std::fabs(den) < 1e-12) return std::nullopt;
    double t = cross(b.anchor - a.anchor, b.direction) / den;
    return a.anchor + a.direction * t;
}

struct Circle {
    Point center;
    double radius = 0.0;
};

// Similarity with scale factor s > 0 and counterclockwise rotation theta.
struct ScaleRotate {
    double s = 1.0;
    double theta = 0.0;
};

inline Vec2 apply(const ScaleRotate& t, Vec2 v) { return v.rotated(t.theta) * t.s; }

// ---------------------------------------------------------------------------
// Directed angles

inline DirectedAngle directed_angle(const Line& l1, const Line& l2) {
    double a = std::atan2(cross(l1.direction, l2.direction), dot(l1.direction, l2.direction));
    return DirectedAngle(a);
}

// Directed angle from line AO to line BO, measured around O.
inline DirectedAngle directed_angle(Point a, Point o, Point b) {
    return directed_angle(Line::through(a, o), Line::through(b, o));
}

// ---------------------------------------------------------------------------
// Circumcircles and the Miquel point

namespace detail {

inline double triple_scale(Point a, Point b, Point c) {
    double lox = std::min({a.x, b.x, c.x}), hix = std::max({a.x, b.x, c.x});
    double loy = std::min({a.y, b.y, c.y}), hiy = std::max({a.y, b.y, c.y});
    return std::max({hix - lox, hiy - loy, 1e-300});
}

}  // namespace detail

inline constexpr double kCollinearEps = 1e-12;

inline Circle circumcircle(Point a, Point b, Point c) {
    double scale = detail::triple_scale(a, b, c);
    double det = orient(a, b, c);
    if (std::fabs(det) < kCollinearEps * scale * scale)
        throw CollinearInput("circumcircle of collinear points");
    // Perpendicular-bisector intersection, written out against a shifted
    // origin to keep the cancellation mild.
    Vec2 ab = b - a, ac = c - a;
    double d = 2.0 * cross(ab, ac);
    double ab2 = ab.norm2(), ac2 = ac.norm2();
    Vec2 rel{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
    Point center = a + rel;
    return {center, rel.norm()};
}

// Second intersection of two circles known to pass through `shared`.
// Reflects the shared point across the line of centers; tangent circles
// return the shared point itself.
inline Point circles_second_intersection(const Circle& c1, const Circle& c2, Point shared) {
    Vec2 axis = c2.center - c1.center;
    double n2 = axis.norm2();
    if (n2 < 1e-30) throw DegenerateConfiguration("concentric circles");
    Vec2 rel = shared - c1.center;
    double t = dot(rel, axis) / n2;
    Point foot = c1.center + axis * t;
    return foot + (foot - shared);
}

// Common point of the circumcircles (E,A,F), (F,B,D), (D,C,E) where D, E, F
// lie on lines CB, AC, AB of triangle ABC.
inline Point miquel_point(Point a, Point b, Point c, Point d, Point e, Point f) {
    double scale = std::max({detail::triple_scale(a, b, c), detail::triple_scale(d, e, f)});
    double tol = 1e-9 * scale;
    if (std::fabs(Line::through(c, b).signed_distance(d)) > tol)
        throw NotOnLine("D is not on line CB");
    if (std::fabs(Line::through(a, c).signed_distance(e)) > tol)
        throw NotOnLine("E is not on line AC");
    if (std::fabs(Line::through(a, b).signed_distance(f)) > tol)
        throw NotOnLine("F is not on line AB");

    // The three circles pairwise share a marked point, so G is the second
    // intersection of any two of them. A marked point may coincide with a
    // triangle corner, which degenerates one circle; use the first valid
    // pair and confirm against the remaining circle when it exists.
    struct Cand {
        Point p0, p1, p2;  // circle through these
        Point shared_with_next;
    };
    Cand cands[3] = {
        {e, a, f, f},  // (EAF, FBD) share F
        {f, b, d, d},  // (FBD, DCE) share D
        {d, c, e, e},  // (DCE, EAF) share E
    };
    std::optional<Circle> circles[3];
    for (int i = 0; i < 3; ++i) {
        try {
            circles[i] = circumcircle(cands[i].p0, cands[i].p1, cands[i].p2);
        } catch (const CollinearInput&) {
        }
    }
    std::optional<Point> g;
    for (int i = 0; i < 3 && !g; ++i) {
        int j = (i + 1) % 3;
        if (circles[i] && circles[j])
            g = circles_second_intersection(*circles[i], *circles[j], cands[i].shared_with_next);
    }
    if (!g) throw CollinearInput("all Miquel circumcircles degenerate");
    for (int i = 0; i < 3; ++i) {
        if (!circles[i]) continue;
        double res = std::fabs(distance(*g, circles[i]->center) - circles[i]->radius);
        if (res > 1e-7 * scale)
            throw DegenerateConfiguration("Miquel residual too large: " + std::to_string(res));
    }
    return *g;
}

// ---------------------------------------------------------------------------
// Real roots of small polynomials

namespace detail {

inline double poly_eval(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
    return v;
}

inline double poly_eval_deriv(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * t + c[i] * static_cast<double>(i);
    return v;
}

}  // namespace detail

// All real roots of sum_i coeffs[i] * t^i, ascending, multiplicities
// collapsed. Roots come from the companion-matrix eigenvalues and are
// polished with a couple of Newton steps; only candidates whose residual
// clears the relative threshold are kept.
inline std::vector<double> solve_polynomial(std::vector<double> coeffs) {
    double maxc = 0.0;
    for (double c : coeffs) maxc = std::max(maxc, std::fabs(c));
    if (maxc < 1e-14) throw DegeneratePolynomial("all polynomial coefficients ~ 0");

    std::size_t deg = coeffs.size() - 1;
    while (deg > 0 && std::fabs(coeffs[deg]) < 1e-13 * maxc) --deg;
    coeffs.resize(deg + 1);
    if (deg == 0) return {};

    std::vector<double> roots;
    if (deg == 1) {
        roots.push_back(-coeffs[0] / coeffs[1]);
    } else if (deg == 2) {
        double a = coeffs[2], b = coeffs[1], c = coeffs[0];
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double q = -0.5 * (b + std::copysign(std::sqrt(disc), b == 0.0 ? 1.0 : b));
            if (q != 0.0) {
                roots.push_back(q / a);
                roots.push_back(c / q);
            } else {
                roots.push_back(0.0);
            }
        }
    } else {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<int>(deg), static_cast<int>(deg));
        for (std::size_t i = 0; i + 1 < deg; ++i) companion(static_cast<int>(i) + 1, static_cast<int>(i)) = 1.0;
        for (std::size_t i = 0; i < deg; ++i)
            companion(static_cast<int>(i), static_cast<int>(deg) - 1) = -coeffs[i] / coeffs[deg];
        Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            std::complex<double> z = es.eigenvalues()(i);
            if (std::fabs(z.imag()) > 1e-6 * (1.0 + std::fabs(z.real()))) continue;
            roots.push_back(z.real());
        }
    }

    std::vector<double> out;
    for (double r : roots) {
        for (int it = 0; it < 3; ++it) {
            double f = detail::poly_eval(coeffs, r);
            double df = detail::poly_eval_deriv(coeffs, r);
            if (std::fabs(df) < 1e-300) break;
            double step = f / df;
            if (!std::isfinite(step)) break;
            r -= step;
        }
        double bound = 1e-10 * maxc * std::max(1.0, std::pow(std::fabs(r), static_cast<double>(deg)));
        if (std::isfinite(r) && std::fabs(detail::poly_eval(coeffs, r)) < bound) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    std::vector<double> dedup;
    for (double r : out) {
        if (dedup.empty() || std::fabs(r - dedup.back()) > 1e-9 * std::max(1.0, std::fabs(r)))
            dedup.push_back(r);
    }
    return dedup;
}

// Real roots of c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0.
inline std::vector<double> solve_quartic(double c4, double c3, double c2, double c1, double c0) {
    return solve_polynomial({c0, c1, c2, c3, c4});
}

}  // namespace rotfit
