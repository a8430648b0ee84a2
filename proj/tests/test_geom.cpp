#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rotfit/geom.hpp"

using namespace rotfit;

namespace {

double rnd(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point rnd_point(std::mt19937& rng, double lo = -10.0, double hi = 10.0) {
    return {rnd(rng, lo, hi), rnd(rng, lo, hi)};
}

// Modulo-pi agreement of two angle values.
bool congruent_mod_pi(double a, double b, double tol) {
    return angle_gap_pi(a, b) <= tol;
}

}  // namespace

TEST_CASE("directed angle examples") {
    Line x_axis{{0, 0}, {1, 0}};
    Line diag = Line::through({0, 0}, {1, 1});
    Line anti = Line::through({0, 0}, {1, -1});

    CHECK(directed_angle(x_axis, diag).value == Catch::Approx(kPi / 4).margin(1e-15));
    CHECK(directed_angle(x_axis, x_axis).value == Catch::Approx(0.0).margin(1e-15));
    CHECK(directed_angle(x_axis, anti).value == Catch::Approx(3 * kPi / 4).margin(1e-15));
}

TEST_CASE("directed angle identities on random configurations") {
    std::mt19937 rng(7101);
    for (int trial = 0; trial < 2000; ++trial) {
        Point a = rnd_point(rng), b = rnd_point(rng), o = rnd_point(rng);
        if (distance(a, o) < 1e-3 || distance(b, o) < 1e-3) continue;
        double ab = directed_angle(a, o, b).value;
        double ba = directed_angle(b, o, a).value;
        // antisymmetry: sum vanishes mod pi
        CHECK(congruent_mod_pi(ab + ba, 0.0, 1e-12));
    }

    for (int trial = 0; trial < 2000; ++trial) {
        Line l1{rnd_point(rng), Vec2{1, 0}.rotated(rnd(rng, 0, kTau))};
        Line l2{rnd_point(rng), Vec2{1, 0}.rotated(rnd(rng, 0, kTau))};
        Line l3{rnd_point(rng), Vec2{1, 0}.rotated(rnd(rng, 0, kTau))};
        double a12 = directed_angle(l1, l2).value;
        double a23 = directed_angle(l2, l3).value;
        double a13 = directed_angle(l1, l3).value;
        double a31 = directed_angle(l3, l1).value;
        CHECK(congruent_mod_pi(a12 + a23, a13, 1e-12));
        CHECK(congruent_mod_pi(a12 + a23 + a31, 0.0, 1e-12));
    }
}

TEST_CASE("concyclicity criterion") {
    std::mt19937 rng(7102);
    int done = 0;
    while (done < 500) {
        Point c = rnd_point(rng);
        double r = rnd(rng, 0.5, 5.0);
        double ang[4];
        for (double& t : ang) t = rnd(rng, 0, kTau);
        std::sort(std::begin(ang), std::end(ang));
        // keep the four points angularly separated
        bool ok = true;
        for (int i = 0; i < 4; ++i) {
            double gap = (i < 3) ? ang[i + 1] - ang[i] : kTau - ang[3] + ang[0];
            if (gap < 0.2) ok = false;
        }
        if (!ok) continue;
        Point x = c + Vec2{r, 0}.rotated(ang[0]);
        Point a = c + Vec2{r, 0}.rotated(ang[1]);
        Point b = c + Vec2{r, 0}.rotated(ang[2]);
        Point y = c + Vec2{r, 0}.rotated(ang[3]);
        double xay = directed_angle(x, a, y).value;
        double xby = directed_angle(x, b, y).value;
        CHECK(congruent_mod_pi(xay, xby, 1e-9));

        Point y_off = y + (y - c).normalized() * (1e-3 * r);
        double xay2 = directed_angle(x, a, y_off).value;
        double xby2 = directed_angle(x, b, y_off).value;
        CHECK(angle_gap_pi(xay2, xby2) > 1e-6);
        ++done;
    }
}

TEST_CASE("circumcircle examples") {
    Circle c1 = circumcircle({0, 0}, {2, 0}, {0, 2});
    CHECK(c1.center.x == Catch::Approx(1.0).margin(1e-12));
    CHECK(c1.center.y == Catch::Approx(1.0).margin(1e-12));
    CHECK(c1.radius == Catch::Approx(std::sqrt(2.0)).margin(1e-12));

    CHECK_THROWS_AS(circumcircle({0, 0}, {1, 0}, {2, 0}), CollinearInput);

    Circle c2 = circumcircle({1, 0}, {4, 0}, {2, 2});
    CHECK(c2.center.x == Catch::Approx(2.5).margin(1e-12));
    CHECK(c2.center.y == Catch::Approx(0.5).margin(1e-12));
    CHECK(c2.radius == Catch::Approx(std::sqrt(2.5)).margin(1e-12));
    for (Point p : {Point{1, 0}, Point{4, 0}, Point{2, 2}})
        CHECK(distance(p, c2.center) == Catch::Approx(c2.radius).margin(1e-9 * std::max(1.0, c2.radius)));
}

TEST_CASE("miquel point examples") {
    Point a{0, 0}, b{4, 0}, c{0, 4};

    SECTION("fixed configuration") {
        Point g = miquel_point(a, b, c, {2, 2}, {0, 2}, {1, 0});
        CHECK(g.x == Catch::Approx(24.0 / 17.0).margin(1e-9));
        CHECK(g.y == Catch::Approx(28.0 / 17.0).margin(1e-9));
    }

    SECTION("medial configuration verified by residual") {
        Point d{2, 2}, e{0, 2}, f{2, 0};
        Point g = miquel_point(a, b, c, d, e, f);
        for (auto& tri : {std::array<Point, 3>{e, a, f}, std::array<Point, 3>{f, b, d},
                          std::array<Point, 3>{d, c, e}}) {
            Circle k = circumcircle(tri[0], tri[1], tri[2]);
            CHECK(std::fabs(distance(g, k.center) - k.radius) < 1e-8 * 4.0);
        }
    }

    SECTION("marked point at a triangle corner is allowed") {
        Point g = miquel_point(a, b, c, {2, 2}, {0, 2}, b);
        Circle k = circumcircle({0, 2}, a, b);
        CHECK(std::fabs(distance(g, k.center) - k.radius) < 1e-8 * 4.0);
    }

    SECTION("off-line marked point rejected") {
        CHECK_THROWS_AS(miquel_point(a, b, c, {2, 2}, {0.5, 2}, {1, 0}), NotOnLine);
    }
}

namespace {

// Family of triangles DEF inscribed in the lines CB, AC, AB with fixed
// directed angles, parameterized by the direction of side DE. Returns
// nullopt for directions where the construction degenerates.
struct InscribedFamily {
    Point a, b, c;
    double ang_d, ang_e;  // directed angles at D and E relative to line DE

    std::optional<std::array<Point, 3>> at(double omega) const {
        Line cb = Line::through(c, b);
        Line ac = Line::through(a, c);
        Line ab = Line::through(a, b);
        Vec2 dir{std::cos(omega), std::sin(omega)};
        auto build = [&](double offs) -> std::optional<std::array<Point, 3>> {
            Line l{Point{0, 0} + dir.perp() * offs, dir};
            auto d = line_intersection(l, cb);
            auto e = line_intersection(l, ac);
            if (!d || !e) return std::nullopt;
            Line fd{*d, dir.rotated(ang_d)};
            Line fe{*e, dir.rotated(ang_e)};
            auto f = line_intersection(fd, fe);
            if (!f) return std::nullopt;
            return std::array<Point, 3>{*d, *e, *f};
        };
        auto t0 = build(0.0);
        auto t1 = build(1.0);
        if (!t0 || !t1) return std::nullopt;
        // F moves affinely with the offset; pick the offset putting F on AB.
        double s0 = ab.signed_distance((*t0)[2]);
        double s1 = ab.signed_distance((*t1)[2]);
        if (std::fabs(s1 - s0) < 1e-12) return std::nullopt;
        double offs = -s0 / (s1 - s0);
        auto tri = build(offs);
        if (!tri) return std::nullopt;
        if (std::fabs(ab.signed_distance((*tri)[2])) > 1e-7) return std::nullopt;
        return tri;
    }
};

}  // namespace

TEST_CASE("miquel point invariant under sliding with fixed angles") {
    std::mt19937 rng(7103);
    int families = 0;
    while (families < 60) {
        Point a = rnd_point(rng), b = rnd_point(rng), c = rnd_point(rng);
        double scale = std::max({distance(a, b), distance(b, c), distance(c, a)});
        if (std::fabs(orient(a, b, c)) < 2.0) continue;
        InscribedFamily fam{a, b, c, rnd(rng, 0.4, kPi - 0.4), rnd(rng, 0.4, kPi - 0.4)};
        std::vector<Point> gs;
        for (double omega : {0.1, 0.7, 1.3, 2.0, 2.6}) {
            auto tri = fam.at(omega);
            if (!tri) continue;
            const auto& [d, e, f] = *tri;
            if (distance(d, e) < 1e-3 || distance(e, f) < 1e-3 || distance(d, f) < 1e-3) continue;
            try {
                gs.push_back(miquel_point(a, b, c, d, e, f));
            } catch (const Error&) {
                // degenerate sample; skip
            }
        }
        if (gs.size() < 3) continue;
        for (std::size_t i = 1; i < gs.size(); ++i)
            CHECK(distance(gs[0], gs[i]) < 1e-7 * scale);
        ++families;
    }
}

TEST_CASE("scale-rotate examples") {
    CHECK(apply({1.0, 0.0}, {3, 4}) == Vec2{3, 4});

    Vec2 q = apply({2.0, kPi / 2}, {1, 0});
    CHECK(q.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(q.y == Catch::Approx(2.0).margin(1e-15));

    Vec2 r = apply({std::sqrt(2.0), kPi / 4}, {1, 0});
    CHECK(r.x == Catch::Approx(1.0).margin(1e-15));
    CHECK(r.y == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("quartic solver examples") {
    auto r1 = solve_quartic(1, 0, 0, 0, -1);
    REQUIRE(r1.size() == 2);
    CHECK(r1[0] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(r1[1] == Catch::Approx(1.0).margin(1e-12));

    auto r2 = solve_quartic(0, 0, 1, -3, 2);
    REQUIRE(r2.size() == 2);
    CHECK(r2[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(r2[1] == Catch::Approx(2.0).margin(1e-12));

    // (t - 0.5)(t + 1.25)(t^2 + 1)
    auto r3 = solve_quartic(1, 0.75, 0.375, 0.75, -0.625);
    REQUIRE(r3.size() == 2);
    CHECK(r3[0] == Catch::Approx(-1.25).margin(1e-10));
    CHECK(r3[1] == Catch::Approx(0.5).margin(1e-10));

    CHECK_THROWS_AS(solve_quartic(0, 0, 0, 0, 0), DegeneratePolynomial);
}

TEST_CASE("quartic solver recovers planted roots") {
    std::mt19937 rng(7104);
    for (int trial = 0; trial < 500; ++trial) {
        double roots[4];
        bool separated;
        do {
            separated = true;
            for (double& r : roots) r = rnd(rng, -10, 10);
            std::sort(std::begin(roots), std::end(roots));
            for (int i = 0; i + 1 < 4; ++i)
                if (roots[i + 1] - roots[i] < 1e-3) separated = false;
        } while (!separated);

        // expand monic (t-r0)(t-r1)(t-r2)(t-r3), coefficients low-to-high
        std::vector<double> c{1.0};
        for (double r : roots) {
            std::vector<double> nc(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                nc[i + 1] += c[i];
                nc[i] -= r * c[i];
            }
            c = std::move(nc);
        }
        auto found = solve_quartic(c[4], c[3], c[2], c[1], c[0]);
        REQUIRE(found.size() == 4);
        for (int i = 0; i < 4; ++i) CHECK(std::fabs(found[static_cast<std::size_t>(i)] - roots[i]) < 1e-8);
    }
}
