#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rotfit/contact.hpp"

using namespace rotfit;

namespace {

double rnd(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

ConvexPolygon unit_square() {
    return ConvexPolygon::from_vertices({{1, -1}, {1, 1}, {-1, 1}, {-1, -1}});
}

PolygonalDomain box10() {
    return PolygonalDomain::make({{0, 0}, {10, 0}, {10, 10}, {0, 10}});
}
// box10 handles: edges 0=bottom 1=right 2=top 3=left; vertices 0=(0,0) 1=(10,0) 2=(10,10) 3=(0,10)
// unit_square handles: vertices 0=br 1=tr 2=tl 3=bl

ConvexPolygon rnd_pattern(std::mt19937& rng, int k) {
    while (true) {
        std::vector<double> angles;
        for (int i = 0; i < k; ++i) angles.push_back(rnd(rng, 0, kTau));
        std::sort(angles.begin(), angles.end());
        bool ok = true;
        for (int i = 0; i < k; ++i) {
            double gap = (i + 1 < k) ? angles[i + 1] - angles[i] : kTau - angles[k - 1] + angles[0];
            if (gap < 0.25 || gap > kPi - 0.25) ok = false;
        }
        if (!ok) continue;
        double ax = rnd(rng, 0.6, 1.8), ay = rnd(rng, 0.6, 1.8);
        std::vector<Point> pts;
        for (double t : angles) pts.push_back({ax * std::cos(t), ay * std::sin(t)});
        try {
            return ConvexPolygon::from_vertices(pts);
        } catch (const Error&) {
        }
    }
}

// A quadruple guaranteed satisfiable at a known orientation: Q features are
// planted against a reference placed copy, so theta* is always a root.
struct PlantedQuadruple {
    ConvexPolygon pattern;
    PolygonalDomain domain;
    std::array<ContactPair, 4> contacts;
    Placement witness;
};

std::optional<PlantedQuadruple> plant_quadruple(std::mt19937& rng, int sides, int k_max = 8,
                                                double coord_range = 100.0) {
    ConvexPolygon p = rnd_pattern(rng, 3 + static_cast<int>(rnd(rng, 0, k_max - 2)));
    Placement pl;
    pl.x = rnd(rng, -coord_range * 0.3, coord_range * 0.3);
    pl.y = rnd(rng, -coord_range * 0.3, coord_range * 0.3);
    pl.theta = rnd(rng, 0, kTau);
    pl.delta = rnd(rng, 0.5, coord_range * 0.05);

    // choose distinct P elements for the four contacts
    std::vector<int> p_vertices, p_edges;
    for (int i = 0; i < p.k(); ++i) {
        p_vertices.push_back(i);
        p_edges.push_back(i);
    }
    std::shuffle(p_vertices.begin(), p_vertices.end(), rng);
    std::shuffle(p_edges.begin(), p_edges.end(), rng);
    if (sides > static_cast<int>(p_vertices.size()) ||
        (4 - sides) > static_cast<int>(p_edges.size()))
        return std::nullopt;

    std::vector<Segment> obstacle_segments;
    std::vector<Point> obstacle_points;
    std::array<ContactPair, 4> contacts;
    int vi = 0, ei = 0;
    for (int c = 0; c < 4; ++c) {
        if (c < sides) {
            int pv = p_vertices[static_cast<std::size_t>(vi++)];
            Point at = placed_vertex(p, pl, pv);
            double ang = rnd(rng, 0, kTau);
            Vec2 d{std::cos(ang), std::sin(ang)};
            double la = rnd(rng, 0.2, coord_range * 0.2), lb = rnd(rng, 0.2, coord_range * 0.2);
            obstacle_segments.push_back({at - d * la, at + d * lb});
            contacts[static_cast<std::size_t>(c)] =
                side_contact(-1, pv);  // q handle resolved after domain build
        } else {
            int pe = p_edges[static_cast<std::size_t>(ei++)];
            Segment e = placed_edge(p, pl, pe);
            Point at = e.at(rnd(rng, 0.15, 0.85));
            obstacle_points.push_back(at);
            contacts[static_cast<std::size_t>(c)] = corner_contact(-1, pe);
        }
    }

    double r = coord_range * 1.2;
    PolygonalDomain q;
    try {
        q = PolygonalDomain::make({{-r, -r}, {r, -r}, {r, r}, {-r, r}}, {}, obstacle_segments,
                                  obstacle_points);
    } catch (const Error&) {
        return std::nullopt;  // planted features collided; resample
    }

    // resolve handles: obstacle segments follow the 4 outer edges; obstacle
    // points are appended to the vertex list after segment endpoints
    int seg_used = 0, pt_used = 0;
    for (auto& c : contacts) {
        if (c.kind == ContactKind::Side) {
            c.q_element = 4 + seg_used;
            ++seg_used;
        } else {
            Point want = obstacle_points[static_cast<std::size_t>(pt_used)];
            ++pt_used;
            for (int i = 0; i < static_cast<int>(q.vertices().size()); ++i)
                if (distance(q.vertex(i), want) < 1e-12) c.q_element = i;
        }
    }
    for (const auto& c : contacts)
        if (c.q_element < 0) return std::nullopt;

    for (const auto& c : contacts)
        if (!satisfies_contact(p, q, pl, c, 1e-7 * q.scale())) return std::nullopt;

    PlantedQuadruple out{std::move(p), std::move(q), contacts, pl};
    return out;
}

// Dense-theta sign-change oracle on the cleared fourth-contact residual.
std::vector<double> dense_oracle(const PlantedQuadruple& pq, int steps) {
    const auto& cs = pq.contacts;
    TripleSystem ts = TripleSystem::make(pq.pattern, pq.domain, {cs[0], cs[1], cs[2]});
    auto f = [&](double th) {
        return fourth_contact_numerator(pq.pattern, pq.domain, ts, cs[3], th);
    };
    std::vector<double> roots;
    double prev_t = 0.0, prev_v = f(0.0);
    for (int i = 1; i <= steps; ++i) {
        double t = kTau * i / steps;
        double v = f(t);
        if ((prev_v < 0) != (v < 0)) {
            double a = prev_t, b = t, fa = prev_v;
            for (int it = 0; it < 80; ++it) {
                double m = 0.5 * (a + b), fm = f(m);
                if ((fa < 0) != (fm < 0))
                    b = m;
                else {
                    a = m;
                    fa = fm;
                }
            }
            double root = wrap_tau(0.5 * (a + b));
            auto pl = triple_placement(pq.pattern, pq.domain, ts, root, {.extent_slack = 1e-7});
            if (pl) {
                bool ok = true;
                for (const auto& c : cs)
                    if (!satisfies_contact(pq.pattern, pq.domain, *pl, c, 1e-6 * pq.domain.scale()))
                        ok = false;
                if (ok) roots.push_back(root);
            }
        }
        prev_t = t;
        prev_v = v;
    }
    return roots;
}

}  // namespace

TEST_CASE("triple placement square-in-square") {
    auto p = unit_square();
    auto q = box10();

    SECTION("axis aligned exact fit") {
        TripleSystem ts =
            TripleSystem::make(p, q, {side_contact(3, 3), side_contact(0, 0), side_contact(1, 1)});
        auto pl = triple_placement(p, q, ts, 0.0);
        REQUIRE(pl.has_value());
        CHECK(pl->x == Catch::Approx(5.0).margin(1e-10));
        CHECK(pl->y == Catch::Approx(5.0).margin(1e-10));
        CHECK(pl->delta == Catch::Approx(5.0).margin(1e-10));
    }

    SECTION("rotated by pi/6") {
        // extreme vertices move around the square: left wall takes the top-left
        // vertex, bottom the bottom-left, right the bottom-right
        TripleSystem ts =
            TripleSystem::make(p, q, {side_contact(3, 2), side_contact(0, 3), side_contact(1, 0)});
        auto pl = triple_placement(p, q, ts, kPi / 6);
        REQUIRE(pl.has_value());
        double want = 5.0 / (std::cos(kPi / 6) + std::sin(kPi / 6));
        CHECK(pl->delta == Catch::Approx(want).margin(1e-9));
        for (const auto& c :
             {side_contact(3, 2), side_contact(0, 3), side_contact(1, 0)})
            CHECK(satisfies_contact(p, q, *pl, c, 1e-9));
    }

    SECTION("parallel degenerate triple has no solution") {
        // left wall with two different vertices plus right wall: the three
        // line constraints lose rank at theta = 0 (normals all horizontal)
        TripleSystem ts =
            TripleSystem::make(p, q, {side_contact(3, 3), side_contact(3, 2), side_contact(1, 1)});
        auto pl = ts.solve_raw(0.0);
        CHECK((!pl || pl->cond > 1e12));
    }
}

TEST_CASE("expansion function of a hinged square") {
    auto p = unit_square();
    auto q = box10();

    // hinge: Q corner (0,0) with P corner bl; contact: top wall with tl vertex
    Hinge h{0, 3};
    ContactPair c = side_contact(2, 2);
    PartialFunction e = expansion_function(h, c, p, q, 1);
    CHECK(e.eval(0.0) == Catch::Approx(5.0).margin(1e-12));
    CHECK(e.eval(kPi / 3) == Catch::Approx(10.0).margin(1e-11));
    REQUIRE(!e.domain.empty());
    // the formula's valid stretch keeps the vertex on the wall segment
    for (const auto& iv : e.domain) {
        double mid = 0.5 * (iv.lo + iv.hi);
        Placement pl = expansion_placement(h, c, p, q, mid);
        CHECK(satisfies_contact(p, q, pl, c, 1e-8 * q.scale()));
        CHECK(distance(placed_vertex(p, pl, h.p_corner), q.vertex(h.q_corner)) < 1e-9);
    }
}

TEST_CASE("expansion function with corner contact has extent-bounded domain") {
    auto p = unit_square();
    auto q = PolygonalDomain::make({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {}, {},
                                   {{6, 6}});
    // hinge at Q corner (0,0), corner contact: obstacle point against P edge 1 (top)
    int obstacle_vertex = 4;
    Hinge h{0, 3};
    ContactPair c = corner_contact(obstacle_vertex, 1);
    PartialFunction e = expansion_function(h, c, p, q, 2);
    REQUIRE(!e.domain.empty());
    for (const auto& iv : e.domain) {
        // at domain boundaries the obstacle point sits at an edge extent limit
        for (double t : {iv.lo, iv.hi}) {
            Placement pl = expansion_placement(h, c, p, q, t);
            double param = contact_extent_param(p, q, pl, c);
            bool interior_boundary = std::fabs(param) < 1e-5 || std::fabs(param - 1.0) < 1e-5;
            bool delta_floor = pl.delta < 1e-6 * q.scale();
            bool scan_edge = std::fabs(t) < 1e-9 || std::fabs(t - kTau) < 1e-9;
            CHECK((interior_boundary || delta_floor || scan_edge));
        }
    }
}

TEST_CASE("expansion function crossing caps") {
    std::mt19937 rng(11001);
    int same_kind = 0, mixed = 0;
    while (same_kind < 120 || mixed < 120) {
        auto pq = plant_quadruple(rng, static_cast<int>(rnd(rng, 0, 5)), 6, 40.0);
        if (!pq) continue;
        const auto& q = pq->domain;
        const auto& p = pq->pattern;
        // random hinge from the planted features
        int qv = static_cast<int>(rnd(rng, 0, static_cast<double>(q.vertices().size()) - 1e-9));
        int pv = static_cast<int>(rnd(rng, 0, p.k() - 1e-9));
        Hinge h{qv, pv};
        const auto& c1 = pq->contacts[static_cast<std::size_t>(static_cast<int>(rnd(rng, 0, 3.999)))];
        const auto& c2 = pq->contacts[static_cast<std::size_t>(static_cast<int>(rnd(rng, 0, 3.999)))];
        if (c1 == c2) continue;
        PartialFunction e1, e2;
        try {
            e1 = expansion_function(h, c1, p, q, 1);
            e2 = expansion_function(h, c2, p, q, 2);
        } catch (const EmptyDomain&) {
            continue;
        }
        // crossings of e1 - e2 on the common domain
        int crossings = 0;
        std::optional<double> prev;
        for (int i = 0; i <= 8192; ++i) {
            double t = kTau * i / 8192.0;
            if (!e1.defined_at(t) || !e2.defined_at(t)) {
                prev.reset();
                continue;
            }
            double d = e1.eval(t) - e2.eval(t);
            if (prev && ((*prev < 0) != (d < 0))) ++crossings;
            prev = d;
        }
        bool same = c1.kind == c2.kind;
        if (same) {
            CHECK(crossings <= 1);
            ++same_kind;
        } else {
            CHECK(crossings <= 2);
            ++mixed;
        }
    }
}

TEST_CASE("len curve of the square-in-square triple") {
    auto p = unit_square();
    auto q = box10();
    // ccw along P: (bottom, br), (top, tl), (left, bl)
    ContactPair c1 = side_contact(0, 0), c2 = side_contact(2, 2), c3 = side_contact(3, 3);
    RestrictedContact r{c3, {0.0, kTau}};
    PartialFunction len = len_function(r, c1, c2, p, q, 0);
    REQUIRE(!len.domain.empty());
    // at theta = 0 (reached as the 2*pi end of the valid run) the solved
    // placement is the exact fit (5,5,0,5); the ray from the br vertex to
    // the tl vertex marks (10,10) as the clockwise endpoint of the top
    // wall, at distance 10 from the point element
    REQUIRE(len.defined_at(kTau, 1e-9));
    CHECK(len.eval(kTau) == Catch::Approx(10.0).margin(1e-9));

    // continuity inside each maximal piece: steps stay Lipschitz-bounded
    double scale = q.scale();
    for (const auto& iv : len.domain) {
        if (iv.length() < 1e-4) continue;
        double dt = iv.length() * (1.0 - 2e-3) / 100.0;
        double prev = len.eval(iv.lo + iv.length() * 1e-3);
        for (int i = 1; i <= 100; ++i) {
            double t = iv.lo + iv.length() * 1e-3 + dt * i;
            double v = len.eval(t);
            CHECK(std::fabs(v - prev) < 5.0 * scale * dt + 1e-9);
            prev = v;
        }
    }

    // degenerate zero-width interval gives an empty domain
    RestrictedContact r0{c3, {1.0, 1.0}};
    PartialFunction empty = len_function(r0, c1, c2, p, q, 1);
    CHECK(empty.domain.empty());
}

TEST_CASE("critical orientations recover planted contacts") {
    std::mt19937 rng(11002);
    int found = 0, total = 0;
    for (int sides = 0; sides <= 4; ++sides) {
        int done = 0;
        while (done < 40) {
            auto pq = plant_quadruple(rng, sides);
            if (!pq) continue;
            ++done;
            ++total;
            std::vector<CriticalOrientation> roots;
            try {
                roots = critical_orientations(pq->contacts[0], pq->contacts[1], pq->contacts[2],
                                              pq->contacts[3], pq->pattern, pq->domain);
            } catch (const DegenerateConfiguration&) {
                continue;
            }
            QuadrupleType type{sides, 4 - sides};
            CHECK(static_cast<int>(roots.size()) <= critical_orientation_cap(type));
            double scale = pq->domain.scale();
            for (const auto& r : roots) {
                CHECK(r.type == type);
                for (const auto& c : pq->contacts)
                    CHECK(satisfies_contact(pq->pattern, pq->domain, r.placement, c, 1e-7 * scale));
            }
            for (const auto& r : roots)
                if (std::fabs(r.theta - pq->witness.theta) < 1e-6 ||
                    std::fabs(std::fabs(r.theta - pq->witness.theta) - kTau) < 1e-6)
                    ++found;
        }
    }
    // the planted orientation must be recovered essentially always
    CHECK(found >= total * 95 / 100);
}

TEST_CASE("critical orientations agree with the dense oracle") {
    std::mt19937 rng(11003);
    for (int sides = 0; sides <= 4; ++sides) {
        int done = 0;
        while (done < 8) {
            auto pq = plant_quadruple(rng, sides, 6, 50.0);
            if (!pq) continue;
            ++done;
            std::vector<CriticalOrientation> roots;
            try {
                roots = critical_orientations(pq->contacts[0], pq->contacts[1], pq->contacts[2],
                                              pq->contacts[3], pq->pattern, pq->domain);
            } catch (const DegenerateConfiguration&) {
                continue;
            }
            auto oracle = dense_oracle(*pq, 100000);
            for (double o : oracle) {
                double best = kTau;
                for (const auto& r : roots) {
                    double d = std::fabs(r.theta - o);
                    best = std::min({best, d, kTau - d});
                }
                CHECK(best < 1e-4);
            }
        }
    }
}

TEST_CASE("len equality at a critical orientation is a change witness") {
    std::mt19937 rng(11004);
    int done = 0;
    while (done < 25) {
        auto pq = plant_quadruple(rng, 2, 6, 40.0);
        if (!pq) continue;
        std::vector<CriticalOrientation> roots;
        try {
            roots = critical_orientations(pq->contacts[0], pq->contacts[1], pq->contacts[2],
                                          pq->contacts[3], pq->pattern, pq->domain);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        if (roots.empty()) continue;
        ++done;
        // shared fixed pair (c1, c2); the two triples through c3 and c4 must
        // solve to the same copy at the critical orientation
        TripleSystem t3 = TripleSystem::make(pq->pattern, pq->domain,
                                             {pq->contacts[0], pq->contacts[1], pq->contacts[2]});
        TripleSystem t4 = TripleSystem::make(pq->pattern, pq->domain,
                                             {pq->contacts[0], pq->contacts[1], pq->contacts[3]});
        double scale = pq->domain.scale();
        for (const auto& r : roots) {
            auto p3 = triple_placement(pq->pattern, pq->domain, t3, r.theta, {.extent_slack = 1e-6});
            auto p4 = triple_placement(pq->pattern, pq->domain, t4, r.theta, {.extent_slack = 1e-6});
            REQUIRE(p3.has_value());
            REQUIRE(p4.has_value());
            CHECK(std::fabs(p3->x - p4->x) < 1e-7 * scale);
            CHECK(std::fabs(p3->y - p4->y) < 1e-7 * scale);
            CHECK(std::fabs(p3->delta - p4->delta) < 1e-7 * scale);
        }
    }
}

TEST_CASE("vertex trace under three side contacts") {
    std::mt19937 rng(11005);
    int done = 0;
    while (done < 30) {
        auto pq = plant_quadruple(rng, 4, 6, 40.0);
        if (!pq) continue;
        VertexLineTrace tr;
        int v = pq->contacts[3].p_element;  // trace the fourth planted vertex
        try {
            tr = trace_of_vertex(pq->contacts[0], pq->contacts[1], pq->contacts[2], v,
                                 pq->pattern, pq->domain);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        ++done;
        double scale = pq->domain.scale();

        // collinearity of fresh samples against the returned line
        TripleSystem ts = TripleSystem::make(pq->pattern, pq->domain,
                                             {pq->contacts[0], pq->contacts[1], pq->contacts[2]});
        int checked = 0;
        std::vector<Point> marked_ref;
        for (int i = 0; i < 97 && checked < 10; ++i) {
            double th = kTau * i / 97.0;
            auto pl = triple_placement(pq->pattern, pq->domain, ts, th);
            if (!pl) continue;
            ++checked;
            Point pos = placed_vertex(pq->pattern, *pl, v);
            CHECK(std::fabs(cross(tr.dir, pos - tr.base)) < 1e-7 * scale);

            // Miquel pivot recomputed from this orientation's contact points
            std::array<Line, 3> lines{pq->domain.edge(pq->contacts[0].q_element).line(),
                                      pq->domain.edge(pq->contacts[1].q_element).line(),
                                      pq->domain.edge(pq->contacts[2].q_element).line()};
            std::array<Point, 3> marked{placed_vertex(pq->pattern, *pl, pq->contacts[0].p_element),
                                        placed_vertex(pq->pattern, *pl, pq->contacts[1].p_element),
                                        placed_vertex(pq->pattern, *pl, pq->contacts[2].p_element)};
            // independent reconstruction through two circumcircles
            auto g1 = line_intersection(lines[1], lines[2]);
            auto g2 = line_intersection(lines[0], lines[2]);
            if (!g1 || !g2) continue;
            try {
                Circle k1 = circumcircle(*g1, marked[1], marked[2]);
                Circle k2 = circumcircle(*g2, marked[0], marked[2]);
                Point g = circles_second_intersection(k1, k2, marked[2]);
                CHECK(distance(g, tr.miquel) < 1e-7 * scale);
            } catch (const CollinearInput&) {
            }
        }
    }
}

TEST_CASE("vertex trace in a symmetric triangle straddles the axis") {
    double big_r = 10.0 / std::sqrt(3.0);
    auto q = PolygonalDomain::make({{5, -big_r / 2}, {0, big_r}, {-5, -big_r / 2}});
    double r = 1.0 / std::sqrt(3.0);
    auto p = ConvexPolygon::from_vertices({{0.5, -r / 2}, {0, r}, {-0.5, -r / 2}});
    // edges of q: 0 = right, 1 = left, 2 = bottom; pattern at theta=pi points down
    ContactPair c1 = side_contact(2, 1);  // bottom wall, apex vertex
    ContactPair c2 = side_contact(1, 0);
    ContactPair c3 = side_contact(0, 2);
    VertexLineTrace tr = trace_of_vertex(c1, c2, c3, 1, p, q);
    Point mid = tr.span.at(0.5);
    CHECK(std::fabs(mid.x) < 1e-6);
}

TEST_CASE("vertex trace under three corner contacts") {
    std::mt19937 rng(11006);
    int done = 0;
    while (done < 30) {
        auto pq = plant_quadruple(rng, 0, 6, 40.0);
        if (!pq) continue;
        int v = pq->pattern.wrap(pq->contacts[3].p_element);  // a vertex handle
        VertexCircleTrace tr;
        try {
            tr = trace_of_vertex_corner(pq->contacts[0], pq->contacts[1], pq->contacts[2], v,
                                        pq->pattern, pq->domain);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        ++done;
        double scale = pq->domain.scale();
        CHECK(std::fabs(distance(tr.miquel, tr.circle.center) - tr.circle.radius) < 1e-6 * scale);

        TripleSystem ts = TripleSystem::make(pq->pattern, pq->domain,
                                             {pq->contacts[0], pq->contacts[1], pq->contacts[2]});
        int samples = 0;
        for (int i = 0; i < 197 && samples < 20; ++i) {
            double th = kTau * i / 197.0;
            auto pl = triple_placement(pq->pattern, pq->domain, ts, th);
            if (!pl) continue;
            ++samples;
            Point pos = placed_vertex(pq->pattern, *pl, v);
            CHECK(std::fabs(distance(pos, tr.circle.center) - tr.circle.radius) < 1e-7 * scale);
        }
    }
}

TEST_CASE("collinear corners are rejected for circle traces") {
    auto p = unit_square();
    auto q = PolygonalDomain::make({{-50, -50}, {50, -50}, {50, 50}, {-50, 50}}, {}, {},
                                   {{0, 0}, {3, 0}, {7, 0}});
    ContactPair c1 = corner_contact(4, 0), c2 = corner_contact(5, 1), c3 = corner_contact(6, 2);
    CHECK_THROWS_AS(trace_of_vertex_corner(c1, c2, c3, 3, p, q), DegenerateConfiguration);
}

TEST_CASE("cyclic contact order along the pattern") {
    auto p = unit_square();
    CHECK(ccw_along_pattern(p, side_contact(0, 0), side_contact(0, 1), side_contact(0, 2)));
    CHECK(ccw_along_pattern(p, side_contact(0, 3), side_contact(0, 0), side_contact(0, 1)));
    CHECK_FALSE(ccw_along_pattern(p, side_contact(0, 0), side_contact(0, 2), side_contact(0, 1)));
    CHECK(ccw_along_pattern(p, side_contact(0, 0), corner_contact(0, 0), side_contact(0, 1)));
}
