// Rotational event sweep: maintains the edge Delaunay structure over the
// orientation circle with a priority queue of edge and label changes,
// maximizes the triple-contact expansion over each face's maximal interval,
// and keeps per-type change statistics. A sampling mode over a fixed
// orientation grid provides an independent optimization route and the seed
// bound for hybrid runs.
#pragma once

#include <future>
#include <queue>
#include <thread>

#include "rotfit/edt.hpp"

namespace rotfit {

enum class SweepEventKind : std::uint8_t { EdgeChange, LabelChange };
enum class SolveMode : std::uint8_t { Sweep, Sample, Hybrid };

struct SweepEvent {
    double theta = 0.0;
    double probe = 0.0;  // representative orientation just past the event
    SweepEventKind kind = SweepEventKind::EdgeChange;
    std::vector<int> face_sites;    // sorted site ids of the primary face
    std::vector<int> partner_sites; // flip partner, empty otherwise
    int swap_out = -1;              // endpoint transition: site leaving
    int swap_in = -1;               //   site entering
    std::vector<ContactPair> contacts;  // inducing contact set
    QuadrupleType type;
    bool hinge_involved = false;
    int transition_q_vertex = -1;  // hinge bookkeeping for point-site label changes
    int transition_p_vertex = -1;
    std::uint64_t epoch = 0;
    std::uint64_t partner_epoch = 0;
    long seq = 0;
};

struct ChangeStats {
    std::array<long, 5> type_counts{};  // index a of an (a, 4-a) change
    long edge_changes = 0;
    long endpoint_transitions = 0;
    long label_changes = 0;
    long label_changes_point_sites = 0;
    long label_changes_edge_sites = 0;
    long reported_edge_changes = 0;
    long unreported_edge_changes = 0;
    long flip_mismatch_defects = 0;
    long starvation_defects = 0;
    std::map<std::pair<int, int>, long> hinge_breakpoints;

    long total_changes() const { return edge_changes + endpoint_transitions + label_changes; }
};

struct ChangeLogEntry {
    double theta = 0.0;
    SweepEventKind kind = SweepEventKind::EdgeChange;
    QuadrupleType type;
    bool reported = false;
};

struct SolveResult {
    Placement best;
    std::vector<ContactPair> active_contacts;
    ChangeStats stats;
    SolveMode mode = SolveMode::Sweep;
    std::vector<ChangeLogEntry> log;
};

struct SweepConfig {
    SolveMode mode = SolveMode::Hybrid;
    int samples = 4096;
    double tol = 1e-9;
    bool validate = false;
    bool collect_log = false;
    std::uint64_t seed = 0;
    EdtBuildOptions edt;
};

// ---------------------------------------------------------------------------
// Contacts of a face

// Contact pair of a defining site given the touching element; degenerate
// (hinge or flush) classifications resolve to an incident proper element
// that keeps the triple solvable.
inline std::optional<ContactPair> site_contact(const Site& site, PElem elem) {
    if (site.kind == SiteKind::Point && elem.kind == PElemKind::Edge)
        return corner_contact(site.q_vertex, elem.index);
    if (site.kind == SiteKind::Segment && elem.kind == PElemKind::Vertex)
        return side_contact(site.q_edge, elem.index);
    return std::nullopt;
}

inline std::vector<ContactPair> face_contacts(const ConvexPolygon& p,
                                              const std::vector<Site>& sites, const Face& f) {
    std::vector<ContactPair> out;
    for (std::size_t i = 0; i < f.sites.size(); ++i) {
        const Site& site = sites[static_cast<std::size_t>(f.sites[i])];
        PElem elem = f.site_elements[i];
        auto c = site_contact(site, elem);
        if (c) {
            out.push_back(*c);
            continue;
        }
        // hinge instant: a point site on a copy corner belongs to either
        // incident edge; flush contact of a segment belongs to either
        // endpoint vertex of the aligned edge
        if (site.kind == SiteKind::Point)
            out.push_back(corner_contact(site.q_vertex, p.wrap(elem.index - 1)));
        else
            out.push_back(side_contact(site.q_edge, p.wrap(elem.index)));
    }
    return out;
}

// A solvable triple drawn from the face's contacts (merged faces carry more
// than three; any non-singular triple of them pins the same copy).
inline std::optional<TripleSystem> face_triple(const ConvexPolygon& p, const PolygonalDomain& q,
                                               const std::vector<Site>& sites, const Face& f,
                                               double theta) {
    std::vector<ContactPair> cs = face_contacts(p, sites, f);
    int m = static_cast<int>(cs.size());
    if (m < 3) return std::nullopt;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            for (int k = j + 1; k < m; ++k) {
                std::array<ContactPair, 3> triple{cs[static_cast<std::size_t>(i)],
                                                  cs[static_cast<std::size_t>(j)],
                                                  cs[static_cast<std::size_t>(k)]};
                if (triple[0] == triple[1] || triple[1] == triple[2] || triple[0] == triple[2])
                    continue;
                TripleSystem ts = TripleSystem::make(p, q, triple);
                auto raw = ts.solve_raw(theta);
                if (raw && raw->cond < 1e10 && raw->delta > 0.0) return ts;
            }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Interval maximization

struct IntervalMax {
    double theta = 0.0;
    Placement placement;
};

// Maximize the expansion of the triple-contact placement over an interval.
// Unimodality is not assumed: a 256-sample scan locates candidate peaks and
// golden-section refinement sharpens each; infeasible interior maxima fall
// back to feasible samples and the interval endpoints. `floor` prunes
// refinement when the scan cannot beat an incumbent.
inline std::optional<IntervalMax> maximize_in_interval(
    const ConvexPolygon& p, const PolygonalDomain& q, const TripleSystem& ts,
    ThetaInterval interval, double tol = 1e-9,
    double floor_bound = -std::numeric_limits<double>::infinity()) {
    const int kScan = 256;
    if (interval.hi < interval.lo) return std::nullopt;

    auto delta_at = [&](double th) -> std::optional<double> {
        auto pl = triple_placement(p, q, ts, th, {.extent_slack = 1e-7});
        if (!pl) return std::nullopt;
        return pl->delta;
    };

    if (interval.length() < 1e-12) {
        auto pl = triple_placement(p, q, ts, interval.lo, {.extent_slack = 1e-7});
        if (!pl || !is_feasible(p, *pl, q, tol)) return std::nullopt;
        return IntervalMax{interval.lo, *pl};
    }

    std::vector<std::optional<double>> vals(kScan + 1);
    double scan_max = -std::numeric_limits<double>::infinity();
    double slope_max = 0.0;
    for (int i = 0; i <= kScan; ++i) {
        double th = interval.lo + interval.length() * i / kScan;
        vals[static_cast<std::size_t>(i)] = delta_at(th);
        if (vals[static_cast<std::size_t>(i)])
            scan_max = std::max(scan_max, *vals[static_cast<std::size_t>(i)]);
        if (i > 0 && vals[static_cast<std::size_t>(i)] && vals[static_cast<std::size_t>(i - 1)])
            slope_max = std::max(slope_max, std::fabs(*vals[static_cast<std::size_t>(i)] -
                                                      *vals[static_cast<std::size_t>(i - 1)]));
    }
    if (!std::isfinite(scan_max)) return std::nullopt;
    if (scan_max + 2.0 * slope_max + 1e-12 <= floor_bound) return std::nullopt;  // pruned

    // candidate peaks: local maxima of the scan plus both endpoints
    std::vector<double> cands{interval.lo, interval.hi};
    for (int i = 0; i <= kScan; ++i) {
        if (!vals[static_cast<std::size_t>(i)]) continue;
        double v = *vals[static_cast<std::size_t>(i)];
        auto left = i > 0 ? vals[static_cast<std::size_t>(i - 1)] : std::nullopt;
        auto right = i < kScan ? vals[static_cast<std::size_t>(i + 1)] : std::nullopt;
        bool peak = (!left || v >= *left) && (!right || v >= *right);
        if (peak) cands.push_back(interval.lo + interval.length() * i / kScan);
    }

    std::optional<IntervalMax> best;
    auto consider = [&](double th) {
        th = std::clamp(th, interval.lo, interval.hi);
        auto pl = triple_placement(p, q, ts, th, {.extent_slack = 1e-7});
        if (!pl || !is_feasible(p, *pl, q, tol)) return;
        if (!best || pl->delta > best->placement.delta + 1e-15 ||
            (std::fabs(pl->delta - best->placement.delta) <= 1e-15 && th < best->theta - 1e-15))
            best = IntervalMax{th, *pl};
    };

    double h = interval.length() / kScan;
    const double inv_phi = 0.6180339887498949;
    for (double c : cands) {
        double lo = std::max(interval.lo, c - h), hi = std::min(interval.hi, c + h);
        double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
        auto f1 = delta_at(x1), f2 = delta_at(x2);
        for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
            bool go_right = (f2 && (!f1 || *f2 >= *f1));
            if (go_right) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = delta_at(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = delta_at(x1);
            }
        }
        consider(0.5 * (lo + hi));
        consider(c);
    }
    // feasibility fallback over raw scan samples
    if (!best) {
        for (int i = 0; i <= kScan; ++i)
            if (vals[static_cast<std::size_t>(i)])
                consider(interval.lo + interval.length() * i / kScan);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Sampling mode

inline SolveResult run_sampling(const PolygonalDomain& q, const ConvexPolygon& p, int samples,
                                const EdtBuildOptions& edt_opt = {}) {
    if (samples < 1) throw Error("sampling needs at least one orientation");
    struct Best {
        double delta = -1.0;
        double theta = 0.0;
        Placement pl;
    };
    int hw = std::max(1u, std::thread::hardware_concurrency());
    int chunks = std::min(hw, samples);
    auto worker = [&](int chunk) {
        Best b;
        for (int i = chunk; i < samples; i += chunks) {
            double th = kTau * i / samples;
            try {
                Placement pl = largest_homothet_at(q, p, th, edt_opt);
                if (pl.delta > b.delta + 1e-15 ||
                    (std::fabs(pl.delta - b.delta) <= 1e-15 && th < b.theta)) {
                    b.delta = pl.delta;
                    b.theta = th;
                    b.pl = pl;
                }
            } catch (const Infeasible&) {
            }
        }
        return b;
    };
    std::vector<std::future<Best>> futs;
    for (int c = 1; c < chunks; ++c)
        futs.push_back(std::async(std::launch::async, worker, c));
    Best best = worker(0);
    for (auto& f : futs) {
        Best b = f.get();
        if (b.delta > best.delta + 1e-15 ||
            (std::fabs(b.delta - best.delta) <= 1e-15 && b.theta < best.theta))
            best = b;
    }
    if (best.delta < 0.0) throw Infeasible("no sampled orientation admits a placement");

    SolveResult out;
    out.best = best.pl;
    out.mode = SolveMode::Sample;
    return out;
}

// ---------------------------------------------------------------------------
// Event application (exposed for validation tests)

namespace detail {

// Rebuild one face in place from a site triple near a known witness.
inline std::optional<Face> recertify_face(const ConvexPolygon& p,
                                          const std::vector<Site>& sites,
                                          const std::vector<int>& triple, Point seed,
                                          double theta, double scale) {
    SiteDistanceFn dist{&p, theta, &sites};
    auto z = witness_newton(dist, triple[0], triple[1], triple[2], seed, scale);
    if (!z) return std::nullopt;
    double r = (dist(*z, triple[0]) + dist(*z, triple[1]) + dist(*z, triple[2])) / 3.0;
    if (r < 1e-6 * scale) return std::nullopt;
    double tol = 1e-8 * scale;
    std::vector<int> defining;
    for (int s = 0; s < static_cast<int>(sites.size()); ++s) {
        double d = dist(*z, s);
        if (d < r - tol) return std::nullopt;
        if (d <= r + tol) defining.push_back(s);
    }
    if (defining.size() < 3) return std::nullopt;
    Face f;
    f.witness = *z;
    f.clearance = r;
    std::vector<std::pair<double, int>> order;
    for (int s : defining) {
        Point cp = site_contact_point(p, theta, *z, sites[static_cast<std::size_t>(s)]);
        order.emplace_back(std::atan2(cp.y - z->y, cp.x - z->x), s);
    }
    std::sort(order.begin(), order.end());
    Placement pl{z->x, z->y, wrap_tau(theta), r};
    for (auto& [ang, s] : order) {
        f.sites.push_back(s);
        Point cp = site_contact_point(p, theta, *z, sites[static_cast<std::size_t>(s)]);
        f.site_elements.push_back(classify_boundary_point(p, pl, cp, 1e-8 * scale));
    }
    return f;
}

inline int find_face(const EdgeDelaunay& edt, const std::vector<int>& sorted_sites) {
    for (int i = 0; i < static_cast<int>(edt.faces.size()); ++i)
        if (edt.faces[static_cast<std::size_t>(i)].sorted_sites() == sorted_sites) return i;
    return -1;
}

inline void rebuild_gedges(EdgeDelaunay& edt) {
    std::set<Gedge> gs;
    for (const auto& f : edt.faces) {
        int m = static_cast<int>(f.sites.size());
        for (int i = 0; i < m; ++i) {
            int a = f.sites[static_cast<std::size_t>(i)];
            int b = f.sites[static_cast<std::size_t>((i + 1) % m)];
            if (a == b) continue;
            Gedge g{std::min(a, b), std::max(a, b), GedgeKind::Edge};
            g.kind = gedge_kind(edt.sites[static_cast<std::size_t>(g.a)],
                                edt.sites[static_cast<std::size_t>(g.b)]);
            gs.insert(g);
        }
    }
    edt.gedges.assign(gs.begin(), gs.end());
}

}  // namespace detail

// Apply one scheduled change to the structure: the quadrilateral diagonal
// exchange for a flip, a site swap for an endpoint transition, or a label
// rewrite. Faces are re-certified locally at the probe orientation.
inline EdgeDelaunay update_edt(const ConvexPolygon& p, const PolygonalDomain& q,
                               EdgeDelaunay edt, const SweepEvent& ev) {
    double scale = q.scale();
    double probe = ev.probe > ev.theta ? ev.probe : ev.theta + 1e-7;
    edt.theta = wrap_tau(probe);

    auto relabel_all = [&](Face& f) {
        Placement pl{f.witness.x, f.witness.y, edt.theta, f.clearance};
        for (std::size_t i = 0; i < f.sites.size(); ++i) {
            Point cp = site_contact_point(p, edt.theta, f.witness,
                                          edt.sites[static_cast<std::size_t>(f.sites[i])]);
            f.site_elements[i] = classify_boundary_point(p, pl, cp, 1e-8 * scale);
        }
    };

    if (ev.kind == SweepEventKind::LabelChange) {
        int fi = detail::find_face(edt, ev.face_sites);
        if (fi < 0) return edt;
        Face& f = edt.faces[static_cast<std::size_t>(fi)];
        auto fresh = detail::recertify_face(p, edt.sites,
                                            {f.sites[0], f.sites[1], f.sites[2]}, f.witness,
                                            probe, scale);
        if (fresh) {
            fresh->interval_start = ev.theta;
            fresh->epoch = f.epoch + 1;
            f = *fresh;
        } else {
            relabel_all(f);
            f.interval_start = ev.theta;
            ++f.epoch;
        }
        return edt;
    }

    if (ev.swap_out >= 0) {
        // endpoint transition: one defining site hands over to its neighbor
        int fi = detail::find_face(edt, ev.face_sites);
        if (fi < 0) return edt;
        Face& f = edt.faces[static_cast<std::size_t>(fi)];
        std::vector<int> tri;
        for (int s : f.sites) {
            if (s == ev.swap_out) continue;
            if (static_cast<int>(tri.size()) < 3) tri.push_back(s);
        }
        if (static_cast<int>(tri.size()) < 3 && ev.swap_in >= 0) tri.push_back(ev.swap_in);
        if (static_cast<int>(tri.size()) < 3) tri = {f.sites[0], f.sites[1], f.sites[2]};
        auto fresh = detail::recertify_face(p, edt.sites, tri, f.witness, probe, scale);
        if (fresh) {
            fresh->interval_start = ev.theta;
            fresh->epoch = f.epoch + 1;
            f = *fresh;
        }
        detail::rebuild_gedges(edt);
        return edt;
    }

    // flip: the two faces across a gedge exchange their private sites
    int f1 = detail::find_face(edt, ev.face_sites);
    int f2 = detail::find_face(edt, ev.partner_sites);
    if (f1 < 0 || f2 < 0) return edt;
    const Face fa = edt.faces[static_cast<std::size_t>(f1)];
    const Face fb = edt.faces[static_cast<std::size_t>(f2)];
    std::vector<int> sa = fa.sorted_sites(), sb = fb.sorted_sites();
    std::vector<int> shared, priv_a, priv_b;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(shared));
    std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(priv_a));
    std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(priv_b));

    Point seed = (fa.witness + fb.witness) / 2.0;
    std::uint64_t next_epoch = std::max(fa.epoch, fb.epoch) + 1;
    std::vector<Face> created;
    if (priv_a.size() == 1 && priv_b.size() == 1 && shared.size() == 2) {
        for (int keep : {0, 1}) {
            std::vector<int> tri{priv_a[0], priv_b[0], shared[static_cast<std::size_t>(keep)]};
            auto fresh = detail::recertify_face(p, edt.sites, tri, seed, probe, scale);
            if (fresh) {
                bool dup = false;
                for (const auto& g : created)
                    if (distance(g.witness, fresh->witness) < 1e-7 * scale) dup = true;
                if (!dup) created.push_back(*fresh);
            }
        }
    } else {
        // degenerate neighborhood (merged faces): re-solve every triple drawn
        // from the union with both old witnesses as seeds
        std::vector<int> pool = shared;
        pool.insert(pool.end(), priv_a.begin(), priv_a.end());
        pool.insert(pool.end(), priv_b.begin(), priv_b.end());
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = i + 1; j < pool.size(); ++j)
                for (std::size_t k = j + 1; k < pool.size(); ++k)
                    for (Point s : {fa.witness, fb.witness, seed}) {
                        auto fresh = detail::recertify_face(
                            p, edt.sites, {pool[i], pool[j], pool[k]}, s, probe, scale);
                        if (!fresh) continue;
                        bool dup = false;
                        for (const auto& g : created)
                            if (distance(g.witness, fresh->witness) < 1e-7 * scale) dup = true;
                        if (!dup) created.push_back(*fresh);
                    }
    }
    // drop the two old faces, keep survivors and additions
    std::vector<Face> faces;
    for (int i = 0; i < static_cast<int>(edt.faces.size()); ++i)
        if (i != f1 && i != f2) faces.push_back(edt.faces[static_cast<std::size_t>(i)]);
    for (auto& f : created) {
        bool dup = false;
        for (const auto& g : faces)
            if (distance(g.witness, f.witness) < 1e-7 * scale) dup = true;
        if (dup) continue;
        f.interval_start = ev.theta;
        f.epoch = next_epoch;
        faces.push_back(f);
    }
    edt.faces = std::move(faces);
    detail::rebuild_gedges(edt);
    return edt;
}

// Classification of an event's inducing contact set, plus the hinge flag
// for label changes at point sites.
inline std::pair<QuadrupleType, bool> classify_change(const SweepEvent& ev) {
    QuadrupleType t;
    for (const auto& c : ev.contacts) (c.kind == ContactKind::Side ? t.a : t.b)++;
    bool hinge = ev.hinge_involved;
    return {t, hinge};
}

// ---------------------------------------------------------------------------
// The sweep proper

namespace detail {

struct EventOrder {
    bool operator()(const SweepEvent& a, const SweepEvent& b) const {
        if (a.theta != b.theta) return a.theta > b.theta;
        if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
        return a.seq > b.seq;
    }
};

class SweepRunner {
  public:
    SweepRunner(const PolygonalDomain& q, const ConvexPolygon& p, const SweepConfig& cfg)
        : q_(q), p_(p), cfg_(cfg), scale_(q.scale()) {}

    SolveResult run() {
        SolveResult out;
        out.mode = cfg_.mode;
        double incumbent = -std::numeric_limits<double>::infinity();
        if (cfg_.mode == SolveMode::Hybrid) {
            try {
                SolveResult seeded = run_sampling(q_, p_, std::max(8, cfg_.samples / 8), cfg_.edt);
                incumbent = seeded.best.delta;
                best_ = seeded.best;
                best_contacts_.clear();
            } catch (const Infeasible&) {
            }
        }
        incumbent_ = incumbent;

        edt_ = build_edt(q_, p_, kStartProbe, cfg_.edt);
        for (auto& f : edt_.faces) f.interval_start = 0.0;
        theta_cur_ = 0.0;
        schedule_all();

        while (!queue_.empty()) {
            SweepEvent ev = queue_.top();
            queue_.pop();
            if (ev.theta > kTau + 1e-12) break;
            if (stale(ev)) continue;
            process(ev, out);
        }

        // close every face still alive at the full turn
        for (const auto& f : edt_.faces) close_interval(f, kTau);

        if (cfg_.validate) {
            EdgeDelaunay fresh = build_edt(q_, p_, wrap_tau(kTau - 1e-6), cfg_.edt);
            if (!combinatorially_equal(edt_, fresh)) out.stats.starvation_defects += 1;
        }

        out.stats.flip_mismatch_defects = stats_.flip_mismatch_defects;
        merge_stats(out.stats);
        if (!best_ || best_->delta <= 0.0) throw Infeasible("no feasible placement over the turn");
        out.best = *best_;
        out.best.theta = wrap_tau(out.best.theta);
        out.active_contacts = best_contacts_;
        if (cfg_.collect_log) out.log = log_;
        return out;
    }

  private:
    static constexpr double kStartProbe = 1e-7;
    static constexpr double kMinGap = 1e-9;

    bool stale(const SweepEvent& ev) const {
        int fi = find_face(edt_, ev.face_sites);
        if (fi < 0 || edt_.faces[static_cast<std::size_t>(fi)].epoch != ev.epoch) return true;
        if (!ev.partner_sites.empty()) {
            int fj = find_face(edt_, ev.partner_sites);
            if (fj < 0 || edt_.faces[static_cast<std::size_t>(fj)].epoch != ev.partner_epoch)
                return true;
        }
        return false;
    }

    void process(const SweepEvent& ev, SolveResult& out) {
        theta_cur_ = ev.theta;

        // close the intervals of the faces this event ends
        int f1 = find_face(edt_, ev.face_sites);
        if (f1 >= 0) close_interval(edt_.faces[static_cast<std::size_t>(f1)], ev.theta);
        if (!ev.partner_sites.empty()) {
            int f2 = find_face(edt_, ev.partner_sites);
            if (f2 >= 0) close_interval(edt_.faces[static_cast<std::size_t>(f2)], ev.theta);
        }

        EdgeDelaunay before = edt_;
        edt_ = update_edt(p_, q_, std::move(edt_), ev);

        if (cfg_.validate) {
            EdgeDelaunay fresh = build_edt(q_, p_, wrap_tau(ev.probe), cfg_.edt);
            if (!combinatorially_equal(edt_, fresh)) {
                stats_.flip_mismatch_defects += 1;
                // adopt the rebuilt structure to keep sweeping honestly
                for (auto& f : fresh.faces) {
                    f.interval_start = ev.theta;
                    f.epoch = next_epoch_++;
                }
                carry_interval_starts(before, fresh);
                edt_ = std::move(fresh);
            }
        }

        record(ev, out);
        schedule_all();
    }

    void record(const SweepEvent& ev, SolveResult& out) {
        auto [type, hinge] = classify_change(ev);
        bool reported = false;
        if (ev.kind == SweepEventKind::EdgeChange) {
            if (ev.swap_out >= 0) {
                stats_local_.endpoint_transitions += 1;
            } else {
                stats_local_.edge_changes += 1;
                if (static_cast<int>(ev.contacts.size()) == 4)
                    stats_local_.type_counts[static_cast<std::size_t>(type.a)] += 1;
                reported = edge_change_reported(ev);
                (reported ? stats_local_.reported_edge_changes
                          : stats_local_.unreported_edge_changes) += 1;
            }
        } else {
            stats_local_.label_changes += 1;
            if (hinge) {
                stats_local_.label_changes_point_sites += 1;
                if (ev.transition_q_vertex >= 0)
                    stats_local_.hinge_breakpoints[{ev.transition_q_vertex,
                                                    ev.transition_p_vertex}] += 1;
            } else {
                stats_local_.label_changes_edge_sites += 1;
            }
        }
        if (cfg_.collect_log) log_.push_back({ev.theta, ev.kind, type, reported});
        (void)out;
    }

    // Reported edges carry a hinge: some feasible hinged copy touches both
    // endpoint sites. Sampled existence check over the hinge's expansion
    // functions.
    bool edge_change_reported(const SweepEvent& ev) {
        std::vector<int> pool = ev.face_sites;
        pool.insert(pool.end(), ev.partner_sites.begin(), ev.partner_sites.end());
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        for (int sid : pool) {
            const Site& sh = edt_.sites[static_cast<std::size_t>(sid)];
            if (sh.kind != SiteKind::Point) continue;
            for (int other : pool) {
                if (other == sid) continue;
                const Site& sa = edt_.sites[static_cast<std::size_t>(other)];
                for (int ph = 0; ph < p_.k(); ++ph) {
                    Hinge h{sh.q_vertex, ph};
                    for (int pe = 0; pe < p_.k(); ++pe) {
                        ContactPair c = sa.kind == SiteKind::Point
                                            ? corner_contact(sa.q_vertex, pe)
                                            : side_contact(sa.q_edge, pe);
                        ExpansionFunction ef;
                        try {
                            ef = make_expansion(h, c, p_, q_);
                        } catch (const EmptyDomain&) {
                            continue;
                        }
                        for (int s = 0; s < 32; ++s) {
                            double th = kTau * s / 32.0;
                            double d = ef.delta(th);
                            if (!std::isfinite(d) || d <= 0.0 || d > 1e9) continue;
                            Placement pl = ef.placement(th);
                            double t = contact_extent_param(p_, q_, pl, c);
                            if (t < -1e-9 || t > 1.0 + 1e-9) continue;
                            if (is_feasible(p_, pl, q_, cfg_.tol * std::max(1.0, scale_)))
                                return true;
                        }
                    }
                }
            }
        }
        return false;
    }

    void close_interval(const Face& f, double theta_end) {
        if (theta_end <= f.interval_start + 1e-12) return;
        auto ts = face_triple(p_, q_, edt_.sites, f, probe_inside(f, theta_end));
        if (!ts) return;
        auto m = maximize_in_interval(p_, q_, *ts, {f.interval_start, theta_end},
                                      cfg_.tol * std::max(1.0, scale_),
                                      cfg_.mode == SolveMode::Hybrid ? incumbent_ : -1e300);
        if (!m) return;
        if (!best_ || m->placement.delta > best_->delta + 1e-15 ||
            (std::fabs(m->placement.delta - best_->delta) <= 1e-15 &&
             wrap_tau(m->theta) < wrap_tau(best_->theta))) {
            best_ = m->placement;
            incumbent_ = std::max(incumbent_, m->placement.delta);
            best_contacts_.clear();
            for (const auto& c : ts->contacts()) best_contacts_.push_back(c);
        }
    }

    double probe_inside(const Face& f, double theta_end) const {
        double mid = 0.5 * (f.interval_start + theta_end);
        return mid > f.interval_start ? mid : f.interval_start;
    }

    void schedule_all() {
        for (int i = 0; i < static_cast<int>(edt_.faces.size()); ++i) schedule_face(i);
    }

    void schedule_face(int fi) {
        const Face& f = edt_.faces[static_cast<std::size_t>(fi)];
        auto key = f.sorted_sites();
        auto probe_ts = face_triple(p_, q_, edt_.sites, f, probe_theta());
        if (!probe_ts) return;
        std::vector<ContactPair> cs = face_contacts(p_, edt_.sites, f);

        // flip events toward each neighboring face
        for (int fj = 0; fj < static_cast<int>(edt_.faces.size()); ++fj) {
            if (fj == fi) continue;
            const Face& g = edt_.faces[static_cast<std::size_t>(fj)];
            auto ga = f.sorted_sites();
            auto gb = g.sorted_sites();
            std::vector<int> shared;
            std::set_intersection(ga.begin(), ga.end(), gb.begin(), gb.end(),
                                  std::back_inserter(shared));
            if (shared.size() < 2) continue;
            if (key > gb) continue;  // schedule each pair once
            schedule_flip(fi, fj);
        }
        // contact transitions of the face itself
        schedule_transitions(fi, *probe_ts, cs);
    }

    double probe_theta() const { return std::max(theta_cur_ + kMinGap, kStartProbe); }

    void schedule_flip(int fi, int fj) {
        const Face& fa = edt_.faces[static_cast<std::size_t>(fi)];
        const Face& fb = edt_.faces[static_cast<std::size_t>(fj)];
        std::vector<ContactPair> base = face_contacts(p_, edt_.sites, fa);
        std::vector<int> sa = fa.sorted_sites(), sb = fb.sorted_sites();
        std::vector<int> extra_sites;
        std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(),
                            std::back_inserter(extra_sites));
        if (base.size() < 3 || extra_sites.empty()) return;

        // the fourth contact comes from a private site of the neighbor; its
        // element is taken from the neighbor's label plus adjacent fallbacks
        double best_theta = std::numeric_limits<double>::infinity();
        std::optional<SweepEvent> best_ev;
        for (int d : extra_sites) {
            const Site& sd = edt_.sites[static_cast<std::size_t>(d)];
            PElem labeled{};
            for (std::size_t i = 0; i < fb.sites.size(); ++i)
                if (fb.sites[i] == d) labeled = fb.site_elements[i];
            std::vector<ContactPair> fourth_cands;
            auto push_fourth = [&](PElem e) {
                auto c = site_contact(sd, e);
                if (c) fourth_cands.push_back(*c);
            };
            push_fourth(labeled);
            if (labeled.kind == PElemKind::Vertex) {
                push_fourth({PElemKind::Edge, p_.wrap(labeled.index)});
                push_fourth({PElemKind::Edge, p_.wrap(labeled.index - 1)});
            } else {
                push_fourth({PElemKind::Vertex, p_.wrap(labeled.index)});
                push_fourth({PElemKind::Vertex, p_.wrap(labeled.index + 1)});
            }
            for (std::size_t t0 = 0; t0 + 2 < base.size() && t0 < 2; ++t0) {
                std::array<ContactPair, 3> tri{base[t0], base[t0 + 1], base[t0 + 2]};
                for (const auto& c4 : fourth_cands) {
                    if (c4 == tri[0] || c4 == tri[1] || c4 == tri[2]) continue;
                    std::vector<CriticalOrientation> roots;
                    try {
                        roots = critical_orientations(tri[0], tri[1], tri[2], c4, p_, q_);
                    } catch (const Error&) {
                        continue;
                    }
                    for (const auto& r : roots) {
                        if (r.theta <= theta_cur_ + kMinGap || r.theta > kTau) continue;
                        if (r.theta < best_theta) {
                            best_theta = r.theta;
                            SweepEvent ev;
                            ev.theta = r.theta;
                            ev.kind = SweepEventKind::EdgeChange;
                            ev.face_sites = sa;
                            ev.partner_sites = sb;
                            ev.contacts = {tri[0], tri[1], tri[2], c4};
                            ev.type = r.type;
                            ev.epoch = fa.epoch;
                            ev.partner_epoch = fb.epoch;
                            best_ev = ev;
                        }
                    }
                }
            }
        }
        if (best_ev) push_event(*best_ev);
    }

    void schedule_transitions(int fi, const TripleSystem& ts,
                              const std::vector<ContactPair>& cs) {
        const Face& f = edt_.faces[static_cast<std::size_t>(fi)];
        auto key = f.sorted_sites();

        auto solvable = [&](double th) {
            return triple_placement(p_, q_, ts, th, {.extent_slack = 1e-6}).has_value();
        };
        auto param_of = [&](const ContactPair& c, double th) -> std::optional<double> {
            auto pl = triple_placement(p_, q_, ts, th, {.extent_slack = 1e-6});
            if (!pl) return std::nullopt;
            return contact_extent_param(p_, q_, *pl, c);
        };

        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
            const ContactPair& c = cs[ci];
            int site_id = f.sites[std::min(ci, f.sites.size() - 1)];
            const Site& site = edt_.sites[static_cast<std::size_t>(site_id)];

            // extent roots: the touching point reaches an end of its segment
            for (double target : {0.0, 1.0}) {
                auto root = scan_first_root(
                    [&](double th) -> std::optional<double> {
                        auto v = param_of(c, th);
                        if (!v) return std::nullopt;
                        return *v - target;
                    },
                    theta_cur_ + kMinGap, kTau);
                if (!root) continue;
                SweepEvent ev;
                ev.theta = *root;
                ev.face_sites = key;
                ev.epoch = f.epoch;
                ev.contacts = cs;
                if (c.kind == ContactKind::Side) {
                    // the copy vertex slides off the segment: defining site
                    // swaps to the endpoint point site
                    ev.kind = SweepEventKind::EdgeChange;
                    ev.swap_out = site_id;
                    ev.swap_in = site.kind == SiteKind::Segment
                                     ? (target == 0.0 ? seg_end_site(site, true)
                                                      : seg_end_site(site, false))
                                     : -1;
                } else {
                    // the corner reaches an endpoint of the copy edge: a
                    // label change at a point site, which is a hinge moment
                    ev.kind = SweepEventKind::LabelChange;
                    ev.hinge_involved = true;
                    ev.transition_q_vertex = site.q_vertex;
                    ev.transition_p_vertex =
                        target == 0.0 ? p_.wrap(c.p_element) : p_.wrap(c.p_element + 1);
                }
                push_event(ev);
            }

            // alignment roots: a copy edge turns parallel to the segment
            if (c.kind == ContactKind::Side && site.kind == SiteKind::Segment) {
                double seg_ang = std::atan2(site.segment.dir().y, site.segment.dir().x);
                for (int e : {c.p_element, p_.wrap(c.p_element - 1)}) {
                    for (int m = 0; m < 2; ++m) {
                        double th = wrap_tau(seg_ang - p_.edge_angle0(e) + m * kPi);
                        if (th <= theta_cur_ + kMinGap || th > kTau) continue;
                        if (!solvable(th)) continue;
                        SweepEvent ev;
                        ev.theta = th;
                        ev.kind = SweepEventKind::LabelChange;
                        ev.face_sites = key;
                        ev.epoch = f.epoch;
                        ev.contacts = cs;
                        push_event(ev);
                    }
                }
            }
            // a point site that ends a segment can hand back to the segment
            // when the touching copy edge aligns with it
            if (c.kind == ContactKind::Corner && site.kind == SiteKind::Point) {
                for (const auto& s2 : edt_.sites) {
                    if (s2.kind != SiteKind::Segment) continue;
                    if (s2.end_a != site.q_vertex && s2.end_b != site.q_vertex) continue;
                    double seg_ang = std::atan2(s2.segment.dir().y, s2.segment.dir().x);
                    for (int m = 0; m < 2; ++m) {
                        double th = wrap_tau(seg_ang - p_.edge_angle0(c.p_element) + m * kPi);
                        if (th <= theta_cur_ + kMinGap || th > kTau) continue;
                        if (!solvable(th)) continue;
                        SweepEvent ev;
                        ev.theta = th;
                        ev.kind = SweepEventKind::EdgeChange;
                        ev.face_sites = key;
                        ev.epoch = f.epoch;
                        ev.contacts = cs;
                        ev.swap_out = static_cast<int>(&edt_.sites[0] - &edt_.sites[0]);
                        ev.swap_out = site_id;
                        ev.swap_in = s2.id;
                        push_event(ev);
                    }
                }
            }
        }
    }

    int seg_end_site(const Site& seg, bool first) const {
        int qv = first ? seg.end_a : seg.end_b;
        for (const auto& s : edt_.sites)
            if (s.kind == SiteKind::Point && s.q_vertex == qv) return s.id;
        return -1;
    }

    // earliest sign change of fn over (lo, hi], scanned then bisected
    std::optional<double> scan_first_root(const std::function<std::optional<double>(double)>& fn,
                                          double lo, double hi) {
        const int steps = 1024;
        std::optional<double> prev;
        double prev_t = lo;
        for (int i = 0; i <= steps; ++i) {
            double t = lo + (hi - lo) * i / steps;
            auto v = fn(t);
            if (v && prev && ((*v < 0) != (*prev < 0))) {
                double a = prev_t, b = t;
                double fa = *prev;
                for (int it = 0; it < 60 && b - a > 1e-11; ++it) {
                    double m = 0.5 * (a + b);
                    auto fm = fn(m);
                    if (!fm) break;
                    if ((fa < 0) != (*fm < 0))
                        b = m;
                    else {
                        a = m;
                        fa = *fm;
                    }
                }
                return 0.5 * (a + b);
            }
            if (v) {
                prev = v;
                prev_t = t;
            } else {
                prev.reset();
            }
        }
        return std::nullopt;
    }

    void push_event(SweepEvent ev) {
        ev.seq = seq_++;
        ev.probe = ev.theta + 1e-7;
        std::sort(ev.face_sites.begin(), ev.face_sites.end());
        std::sort(ev.partner_sites.begin(), ev.partner_sites.end());
        queue_.push(std::move(ev));
    }

    static bool combinatorially_equal(const EdgeDelaunay& a, const EdgeDelaunay& b) {
        std::vector<std::vector<int>> fa, fb;
        for (const auto& f : a.faces) fa.push_back(f.sorted_sites());
        for (const auto& f : b.faces) fb.push_back(f.sorted_sites());
        std::sort(fa.begin(), fa.end());
        std::sort(fb.begin(), fb.end());
        return fa == fb;
    }

    void carry_interval_starts(const EdgeDelaunay& before, EdgeDelaunay& after) {
        for (auto& f : after.faces) {
            int idx = detail::find_face(before, f.sorted_sites());
            if (idx >= 0)
                f.interval_start = before.faces[static_cast<std::size_t>(idx)].interval_start;
        }
    }

    void merge_stats(ChangeStats& out) {
        out.type_counts = stats_local_.type_counts;
        out.edge_changes = stats_local_.edge_changes;
        out.endpoint_transitions = stats_local_.endpoint_transitions;
        out.label_changes = stats_local_.label_changes;
        out.label_changes_point_sites = stats_local_.label_changes_point_sites;
        out.label_changes_edge_sites = stats_local_.label_changes_edge_sites;
        out.reported_edge_changes = stats_local_.reported_edge_changes;
        out.unreported_edge_changes = stats_local_.unreported_edge_changes;
        out.hinge_breakpoints = stats_local_.hinge_breakpoints;
    }

    int find_face(const EdgeDelaunay& edt, const std::vector<int>& sorted) const {
        return detail::find_face(edt, sorted);
    }

    const PolygonalDomain& q_;
    const ConvexPolygon& p_;
    SweepConfig cfg_;
    double scale_;
    EdgeDelaunay edt_;
    double theta_cur_ = 0.0;
    double incumbent_ = -std::numeric_limits<double>::infinity();
    std::optional<Placement> best_;
    std::vector<ContactPair> best_contacts_;
    std::priority_queue<SweepEvent, std::vector<SweepEvent>, EventOrder> queue_;
    ChangeStats stats_;
    ChangeStats stats_local_;
    std::vector<ChangeLogEntry> log_;
    long seq_ = 0;
    std::uint64_t next_epoch_ = 1000000;
};

}  // namespace detail

inline SolveResult run_sweep(const PolygonalDomain& q, const ConvexPolygon& p,
                             const SweepConfig& cfg = {}) {
    detail::SweepRunner runner(q, p, cfg);
    return runner.run();
}

inline SolveResult solve(const PolygonalDomain& q, const ConvexPolygon& p,
                         const SweepConfig& cfg = {}) {
    if (cfg.mode == SolveMode::Sample) {
        SolveResult r = run_sampling(q, p, cfg.samples, cfg.edt);
        return r;
    }
    return run_sweep(q, p, cfg);
}

}  // namespace rotfit
