// Lower/upper envelopes of finite families of partially-defined piecewise
// continuous functions of theta, with breakpoint extraction.
#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "rotfit/geom.hpp"

namespace rotfit {

struct ThetaInterval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double t, double tol = 0.0) const { return t >= lo - tol && t <= hi + tol; }
};

struct PartialFunction {
    int id = 0;
    std::vector<ThetaInterval> domain;  // disjoint, ascending
    std::function<double(double)> eval;
    std::vector<double> piece_boundaries;  // known kinks interior to the domain

    bool defined_at(double t, double tol = 0.0) const {
        for (const auto& iv : domain)
            if (iv.contains(t, tol)) return true;
        return false;
    }
};

// Helper for domains expressed on the circle: an interval wrapping past
// 2*pi is cut at zero into two plain intervals.
inline std::vector<ThetaInterval> cut_wrapped_interval(double lo, double hi) {
    lo = wrap_tau(lo);
    double len = hi - lo;
    if (len >= kTau) return {{0.0, kTau}};
    hi = lo + len;
    if (hi <= kTau) return {{lo, hi}};
    return {{0.0, hi - kTau}, {lo, kTau}};
}

struct EnvelopeSegment {
    ThetaInterval interval;
    int winner = -1;
};

struct Envelope {
    std::vector<double> breakpoints;
    std::vector<EnvelopeSegment> segments;

    // Envelope value at t, or nullopt outside the union of domains.
    std::optional<int> winner_at(double t) const {
        for (const auto& s : segments)
            if (s.interval.contains(t)) return s.winner;
        return std::nullopt;
    }
};

// Segment boundaries: one breakpoint per winner transition, both edges of a
// domain gap.
inline std::vector<double> breakpoints_from_segments(const std::vector<EnvelopeSegment>& segs) {
    std::vector<double> bps;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i == 0 || segs[i].interval.lo - segs[i - 1].interval.hi > 1e-12)
            bps.push_back(segs[i].interval.lo);
        bps.push_back(segs[i].interval.hi);
    }
    bps.erase(std::unique(bps.begin(), bps.end(),
                          [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
              bps.end());
    return bps;
}

namespace detail {

struct EnvelopeBuilder {
    const std::vector<const PartialFunction*>& fs;
    bool upper = false;

    double value(int f, double t) const {
        double v = fs[static_cast<std::size_t>(f)]->eval(t);
        return upper ? -v : v;
    }

    // winner among functions defined at t (indices into fs); ties by id
    int winner(const std::vector<int>& active, double t) const {
        int best = -1;
        double best_v = std::numeric_limits<double>::infinity();
        for (int f : active) {
            double v = value(f, t);
            if (v < best_v ||
                (v == best_v && best >= 0 &&
                 fs[static_cast<std::size_t>(f)]->id < fs[static_cast<std::size_t>(best)]->id)) {
                best_v = v;
                best = f;
            }
        }
        return best;
    }
};

}  // namespace detail

// Shared core: computes winner runs over the union of domains. `resolution`
// is the crossing-isolation grid; within each grid step, winner changes are
// located by bisection to theta-tolerance 1e-11.
inline Envelope envelope_impl(const std::vector<const PartialFunction*>& fs, double resolution,
                              bool upper) {
    if (fs.empty()) throw EmptyFamily("envelope of an empty family");
    detail::EnvelopeBuilder eb{fs, upper};

    // Cut points: all domain endpoints and declared piece boundaries.
    std::vector<double> cuts;
    for (const auto* f : fs) {
        for (const auto& iv : f->domain) {
            cuts.push_back(iv.lo);
            cuts.push_back(iv.hi);
        }
        for (double b : f->piece_boundaries) cuts.push_back(b);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
               cuts.end());

    Envelope env;
    auto add_segment = [&](double lo, double hi, int winner_idx) {
        int id = fs[static_cast<std::size_t>(winner_idx)]->id;
        if (!env.segments.empty() && env.segments.back().winner == id &&
            std::fabs(env.segments.back().interval.hi - lo) < 1e-12) {
            env.segments.back().interval.hi = hi;  // continue the run
        } else {
            env.segments.push_back({{lo, hi}, id});
        }
    };

    for (std::size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
        double lo = cuts[ci], hi = cuts[ci + 1];
        if (hi - lo < 1e-12) continue;
        double mid = 0.5 * (lo + hi);
        std::vector<int> active;
        for (std::size_t i = 0; i < fs.size(); ++i)
            if (fs[i]->defined_at(mid, -1e-12) && fs[i]->defined_at(lo, 1e-9) &&
                fs[i]->defined_at(hi, 1e-9))
                active.push_back(static_cast<int>(i));
        if (active.empty()) continue;  // gap in the union of domains

        // sample the cell; recursively isolate winner changes
        int steps = std::max(1, static_cast<int>(std::ceil((hi - lo) / resolution)));
        double run_lo = lo;
        int run_w = eb.winner(active, lo);
        std::function<void(double, double, int, int)> refine = [&](double a, double b, int wa,
                                                                   int wb) {
            if (wa == wb) return;
            if (b - a <= 1e-11) {
                double t = 0.5 * (a + b);
                add_segment(run_lo, t, run_w);
                run_lo = t;
                run_w = wb;
                return;
            }
            double m = 0.5 * (a + b);
            int wm = eb.winner(active, m);
            refine(a, m, wa, wm);
            refine(m, b, wm, wb);
        };
        double prev_t = lo;
        int prev_w = run_w;
        for (int s = 1; s <= steps; ++s) {
            double t = (s == steps) ? hi : lo + (hi - lo) * s / steps;
            int w = eb.winner(active, t);
            refine(prev_t, t, prev_w, w);
            prev_t = t;
            prev_w = w;
        }
        add_segment(run_lo, hi, run_w);
    }
    env.breakpoints = breakpoints_from_segments(env.segments);
    return env;
}

inline std::vector<const PartialFunction*> ptrs(const std::vector<PartialFunction>& fs) {
    std::vector<const PartialFunction*> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(&f);
    return out;
}

inline constexpr double kDefaultEnvelopeResolution = kPi / 4096.0;

inline Envelope lower_envelope(const std::vector<PartialFunction>& fs,
                               double resolution = kDefaultEnvelopeResolution) {
    return envelope_impl(ptrs(fs), resolution, /*upper=*/false);
}

inline Envelope upper_envelope(const std::vector<PartialFunction>& fs,
                               double resolution = kDefaultEnvelopeResolution) {
    return envelope_impl(ptrs(fs), resolution, /*upper=*/true);
}

// Lower envelope computed through the equal-domain-length partition: the
// axis is cut into cells of the common domain length d, every function is
// clipped to the cells it meets (each domain meets at most two), per-cell
// envelopes are computed independently and merged. Requires every domain to
// be a single interval of identical length.
inline Envelope partitioned_envelope(const std::vector<PartialFunction>& fs, double c,
                                     double resolution = kDefaultEnvelopeResolution) {
    if (fs.empty()) throw EmptyFamily("envelope of an empty family");
    for (const auto& f : fs)
        if (f.domain.size() != 1) throw UnequalDomains("expected single-interval domains");
    double d = fs[0].domain[0].length();
    double left = std::numeric_limits<double>::infinity();
    double right = -std::numeric_limits<double>::infinity();
    for (const auto& f : fs) {
        if (std::fabs(f.domain[0].length() - d) > 1e-9 * d)
            throw UnequalDomains("domain lengths differ");
        left = std::min(left, f.domain[0].lo);
        right = std::max(right, f.domain[0].hi);
    }
    (void)c;  // the union-length bound c*d shapes the analysis, not the code path

    int cells = std::max(1, static_cast<int>(std::ceil((right - left) / d - 1e-12)));
    Envelope merged;
    for (int j = 0; j < cells; ++j) {
        double clo = left + d * j;
        double chi = std::min(right, clo + d);
        // clip members meeting this cell
        std::vector<PartialFunction> clipped;
        for (const auto& f : fs) {
            double lo = std::max(clo, f.domain[0].lo);
            double hi = std::min(chi, f.domain[0].hi);
            if (hi - lo < 1e-12) continue;
            PartialFunction g = f;
            g.domain = {{lo, hi}};
            clipped.push_back(std::move(g));
        }
        if (clipped.empty()) continue;
        Envelope cell_env = lower_envelope(clipped, resolution);
        for (const auto& seg : cell_env.segments) {
            if (!merged.segments.empty() && merged.segments.back().winner == seg.winner &&
                std::fabs(merged.segments.back().interval.hi - seg.interval.lo) < 1e-9) {
                merged.segments.back().interval.hi = seg.interval.hi;  // drop the grid cut
            } else {
                merged.segments.push_back(seg);
            }
        }
    }
    merged.breakpoints = breakpoints_from_segments(merged.segments);
    return merged;
}

}  // namespace rotfit
