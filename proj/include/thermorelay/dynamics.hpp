#pragma once

// Exact piecewise flow of the modal system
//
//   v0' = h K0,   vj' = -lambda_j vj + h Kj   (h = relay output, +-1)
//
// between switchings, plus event detection for threshold crossings of the
// mean temperature and full trajectory simulation of the switched system.
// All segment evaluation uses the closed-form solution; no time stepping.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thermorelay/common.hpp"
#include "thermorelay/relay.hpp"
#include "thermorelay/spectral_system.hpp"

namespace thermorelay {

struct ModeVector {
    std::vector<double> values;
    double time = 0.0;
};

/// Closed-form flow over dt >= 0 with constant relay output h:
///   v0 <- v0 + h K0 dt,   vj <- (vj - h Kj/lambda_j) e^{-lambda_j dt} + h Kj/lambda_j.
inline ModeVector advance_modes(const SpectralSystem& sys, const ModeVector& v, int h, double dt) {
    if (dt < 0.0) throw std::logic_error("advance_modes: dt must be nonnegative");
    ModeVector out = v;
    out.time = v.time + dt;
    out.values[0] = v.values[0] + h * sys.k_coeffs[0] * dt;
    for (std::size_t j = 1; j < sys.n_modes(); ++j) {
        const double c = (h * sys.k_coeffs[j]) / sys.lambdas[j];
        out.values[j] = (v.values[j] - c) * std::exp(-sys.lambdas[j] * dt) + c;
    }
    return out;
}

/// Mean temperature sum m_j v_j. Summation runs over the guiding indices
/// only; guided modes have m_j = 0 and must not enter the sum, so that
/// switching logic is structurally independent of guided components.
inline double mean_temperature(const SpectralSystem& sys, const ModeVector& v) {
    double acc = 0.0;
    for (std::size_t j : sys.guiding_indices) acc += sys.m_coeffs[j] * v.values[j];
    return acc;
}

/// Time derivative of the mean temperature under relay output h:
///   h m0 K0 + sum_{j in J} m_j (-lambda_j vj + h Kj).
inline double mean_rate(const SpectralSystem& sys, const ModeVector& v, int h) {
    double acc = h * sys.m0() * sys.k0();
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        acc += sys.m_coeffs[j] * (-sys.lambdas[j] * v.values[j] + h * sys.k_coeffs[j]);
    }
    return acc;
}

enum class EventStatus { Found, NoCrossing, Failure };

struct SwitchEvent {
    double t;          // absolute time of the threshold attainment
    ThresholdHit hit;  // which threshold was reached
    bool grazing;      // |mean rate| < graze tolerance at the event
};

struct EventResult {
    EventStatus status;
    std::optional<SwitchEvent> event;
    std::string detail;
};

namespace detail {

// g(dt) = signed distance of the mean temperature to the opposing threshold,
// oriented so the active region is g < 0 and a crossing is g = 0 from below.
struct EventGeometry {
    const SpectralSystem& sys;
    const ModeVector& v;
    int h;
    double target;

    double value(double dt) const {
        const ModeVector w = advance_modes(sys, v, h, dt);
        const double f = mean_temperature(sys, w) - target;
        return (h > 0) ? f : -f;
    }
    double slope(double dt) const {
        const ModeVector w = advance_modes(sys, v, h, dt);
        const double r = mean_rate(sys, w, h);
        return (h > 0) ? r : -r;
    }
};

// Safeguarded secant/bisection on a bracket with g(lo) < 0 <= g(hi);
// converges to absolute width tol in time.
inline double refine_crossing(const EventGeometry& g, double lo, double hi, double tol) {
    double flo = g.value(lo), fhi = g.value(hi);
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        double mid;
        const double denom = fhi - flo;
        if (denom != 0.0) {
            mid = lo - flo * (hi - lo) / denom;  // secant
            const double margin = 0.01 * (hi - lo);
            if (!(mid > lo + margin && mid < hi - margin)) mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fm = g.value(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return hi;
}

// Bisection on the slope over a bracket with slope(lo) > 0 > slope(hi):
// locates an interior maximum of g.
inline double refine_maximum(const EventGeometry& g, double lo, double hi, double tol) {
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g.slope(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Locates the first attainment of the opposing threshold (beta when the
/// relay output is +1, alpha when it is -1) in (v.time, t_max]. Tangential
/// attainments count as events and are flagged as grazing. Detection failure
/// is reported distinctly from the absence of a crossing.
inline EventResult next_switching(const SpectralSystem& sys, const ModeVector& v,
                                  const RelayState& relay, double t_max) {
    const int h = relay.output;
    const double target = (h > 0) ? relay.beta : relay.alpha;
    const double window = t_max - v.time;
    if (window <= 0.0) return {EventStatus::NoCrossing, std::nullopt, "empty window"};

    detail::EventGeometry geo{sys, v, h, target};
    const double attain_tol =
        kEventTol * std::max({1.0, std::abs(relay.alpha), std::abs(relay.beta)});

    // Scan resolution follows the fastest mode that feeds the mean
    // temperature; guided modes are invisible to the event function, so the
    // grid (and hence every located time) is independent of truncation.
    double lambda_max = 0.0;
    for (std::size_t j : sys.guiding_indices) lambda_max = std::max(lambda_max, sys.lambdas[j]);
    double step = window / 64.0;
    if (lambda_max > 0.0) step = std::min(step, 1.0 / lambda_max);

    // When starting exactly on a threshold, exclude t = 0 from the search;
    // constructed trajectories depart the threshold with nonzero rate.
    double t_prev = (geo.value(0.0) == 0.0) ? kEventTol : 0.0;
    double g_prev = geo.value(t_prev);
    double s_prev = geo.slope(t_prev);
    if (!std::isfinite(g_prev))
        return {EventStatus::Failure, std::nullopt, "non-finite mean temperature"};
    if (g_prev > attain_tol)
        return {EventStatus::Failure, std::nullopt, "start point outside active region"};

    auto make_event = [&](double dt) -> EventResult {
        const ModeVector w = advance_modes(sys, v, h, dt);
        const double rate = mean_rate(sys, w, h);
        SwitchEvent ev;
        ev.t = v.time + dt;
        ev.hit = (h > 0) ? ThresholdHit::AtBeta : ThresholdHit::AtAlpha;
        ev.grazing = std::abs(rate) < kGrazeTol;
        return {EventStatus::Found, ev, {}};
    };

    while (t_prev < window) {
        const double t_new = std::min(t_prev + step, window);
        const double g_new = geo.value(t_new);
        const double s_new = geo.slope(t_new);
        if (!std::isfinite(g_new) || !std::isfinite(s_new))
            return {EventStatus::Failure, std::nullopt, "non-finite evaluation during scan"};

        if (g_new >= 0.0) {
            // Sign change: transversal crossing inside [t_prev, t_new].
            if (g_new == 0.0) return make_event(t_new);
            return make_event(detail::refine_crossing(geo, t_prev, t_new, kEventTol));
        }
        if (s_prev > 0.0 && s_new < 0.0) {
            // Interior maximum of the approach: possible tangential touch.
            const double t_peak = detail::refine_maximum(geo, t_prev, t_new, kEventTol);
            const double g_peak = geo.value(t_peak);
            if (g_peak > 0.0)
                return make_event(detail::refine_crossing(geo, t_prev, t_peak, kEventTol));
            if (g_peak >= -attain_tol) return make_event(t_peak);
        }
        t_prev = t_new;
        g_prev = g_new;
        s_prev = s_new;
    }
    return {EventStatus::NoCrossing, std::nullopt, {}};
}

struct TrajectorySegment {
    double start_time;
    double end_time;
    int relay_output;
    ModeVector start;
};

struct Trajectory {
    std::vector<TrajectorySegment> segments;
    std::vector<double> switch_times;
    std::vector<bool> switch_grazing;
    ModeVector terminal;
};

/// Simulates the switched system from phi over the given horizon: alternating
/// closed-form segments separated by exactly located switchings. Aborts with
/// ZenoSuspected when two consecutive inter-switch gaps fall below the dwell
/// floor (1e-9 x horizon).
inline Trajectory simulate(const SpectralSystem& sys, const ModeVector& phi, double alpha,
                           double beta, double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("simulate: horizon must be positive");
    if (phi.values.size() != sys.n_modes())
        throw std::logic_error("simulate: mode vector length mismatch");

    RelayState relay = relay_init(mean_temperature(sys, phi), alpha, beta);
    const double t_end = phi.time + horizon;
    const double dwell_floor = 1e-9 * horizon;

    Trajectory traj;
    ModeVector v = phi;
    double last_event_time = phi.time;
    int subfloor_gaps = 0;

    while (true) {
        const EventResult res = next_switching(sys, v, relay, t_end);
        if (res.status == EventStatus::Failure)
            throw NumericError(NumericError::Kind::DetectionFailure,
                               "simulate: event detection failed: " + res.detail);
        if (res.status == EventStatus::NoCrossing) {
            traj.segments.push_back({v.time, t_end, relay.output, v});
            traj.terminal = advance_modes(sys, v, relay.output, t_end - v.time);
            return traj;
        }
        const SwitchEvent& ev = *res.event;
        traj.segments.push_back({v.time, ev.t, relay.output, v});
        v = advance_modes(sys, v, relay.output, ev.t - v.time);
        relay = relay_cross(relay, ev.hit, ev.t);
        traj.switch_times.push_back(ev.t);
        traj.switch_grazing.push_back(ev.grazing);

        if (ev.t - last_event_time < dwell_floor) {
            if (++subfloor_gaps >= 2)
                throw NumericError(NumericError::Kind::ZenoSuspected,
                                   "simulate: repeated switching gaps below dwell floor");
        } else {
            subfloor_gaps = 0;
        }
        last_event_time = ev.t;
    }
}

/// State at an arbitrary time inside a simulated trajectory, evaluated from
/// the closed form on the segment containing t.
inline ModeVector state_at(const SpectralSystem& sys, const Trajectory& traj, double t) {
    if (traj.segments.empty()) throw std::logic_error("state_at: empty trajectory");
    if (t < traj.segments.front().start_time || t > traj.segments.back().end_time)
        throw std::logic_error("state_at: time outside the simulated horizon");
    for (const TrajectorySegment& seg : traj.segments) {
        if (t <= seg.end_time)
            return advance_modes(sys, seg.start, seg.relay_output, t - seg.start_time);
    }
    return traj.terminal;
}

struct Decomposition {
    std::vector<double> guiding;  // full-length, zero on guided indices
    std::vector<double> guided;   // full-length, zero on guiding indices
    double guiding_norm;
    double guided_norm;
};

/// Splits a mode vector by the guiding/guided index partition; norms are the
/// (1+lambda)-weighted l2 norms of each part. Recombining the parts
/// reproduces the input exactly.
inline Decomposition decompose(const SpectralSystem& sys, const ModeVector& v) {
    Decomposition d;
    d.guiding.assign(sys.n_modes(), 0.0);
    d.guided.assign(sys.n_modes(), 0.0);
    for (std::size_t j : sys.guiding_indices) d.guiding[j] = v.values[j];
    for (std::size_t j : sys.guided_indices) d.guided[j] = v.values[j];
    d.guiding_norm = weighted_norm(sys.lambdas, d.guiding, sys.guiding_indices);
    d.guided_norm = weighted_norm(sys.lambdas, d.guided, sys.guided_indices);
    return d;
}

}  // namespace thermorelay
