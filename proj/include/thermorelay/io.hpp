#pragma once

// Serialization: JSON system descriptors (explicit spectra or the rod
// builder shorthand), JSON records for solutions / stability / bifurcation
// points, and CSV writers. CSV uses '.' decimals, LF line endings and 17
// significant digits so that values round-trip exactly.

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "thermorelay/bifurcation.hpp"
#include "thermorelay/characteristic.hpp"
#include "thermorelay/common.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/poincare.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"

namespace thermorelay {

/// 17-significant-digit decimal formatting (round-trip exact for doubles).
inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// System descriptor: either explicit {"lambdas": [...], "m": [...], "k": [...]}
/// or the builder shorthand {"rod": {"n_modes": N, "m": {"0": 2.0, ...}}}.
inline SpectralSystem parse_system(const nlohmann::json& j) {
    if (j.contains("rod")) {
        const auto& rod = j.at("rod");
        if (!rod.contains("n_modes"))
            throw ConfigError("system.rod: missing field 'n_modes'");
        const auto n = rod.at("n_modes").get<long long>();
        if (n < 1) throw ConfigError("system.rod.n_modes: must be a positive integer");
        std::map<std::size_t, double> overrides;
        if (rod.contains("m")) {
            for (const auto& [key, value] : rod.at("m").items()) {
                std::size_t idx = 0;
                try {
                    idx = static_cast<std::size_t>(std::stoul(key));
                } catch (const std::exception&) {
                    throw ConfigError("system.rod.m: non-integer index '" + key + "'");
                }
                if (!value.is_number())
                    throw ConfigError("system.rod.m." + key + ": must be a number");
                overrides[idx] = value.get<double>();
            }
        }
        return build_rod_model(static_cast<std::size_t>(n), overrides);
    }
    if (j.contains("lambdas")) {
        for (const char* field : {"lambdas", "m", "k"})
            if (!j.contains(field))
                throw ConfigError(std::string("system: missing field '") + field + "'");
        return make_system(j.at("lambdas").get<std::vector<double>>(),
                           j.at("m").get<std::vector<double>>(),
                           j.at("k").get<std::vector<double>>());
    }
    throw ConfigError("system: expected either 'rod' or explicit 'lambdas'/'m'/'k'");
}

inline nlohmann::json system_to_json(const SpectralSystem& sys) {
    return nlohmann::json{{"lambdas", sys.lambdas}, {"m", sys.m_coeffs}, {"k", sys.k_coeffs}};
}

inline nlohmann::json solution_to_json(const SpectralSystem& sys, const PeriodicSolution& sol) {
    nlohmann::json j;
    j["s"] = sol.s;
    j["T"] = 2.0 * sol.s;
    j["valid"] = sol.valid;
    j["grazing"] = sol.grazing;
    j["F_value"] = sol.F_value;
    j["min_H_margin"] = sol.min_H_margin;
    j["psi"] = sol.psi.values;
    j["F_prime"] = sol.F_prime;
    j["root_index"] = sol.root_index;
    j["n_modes"] = sys.n_modes();
    return j;
}

inline nlohmann::json stability_to_json(const StabilityReport& rep) {
    nlohmann::json j;
    j["s"] = rep.s;
    j["Q"] = rep.Q;
    j["A"] = rep.A.a;  // row-major
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& mu : rep.mus) mus.push_back({{"re", mu.real()}, {"im", mu.imag()}});
    j["mus"] = mus;
    j["classification"] = to_string(rep.classification);
    j["det_residual"] = rep.det_identity_residual;
    j["max_abs_mu"] = rep.max_abs_mu;
    return j;
}

inline nlohmann::json verification_to_json(const SimulationCheck& chk) {
    nlohmann::json j;
    j["ok"] = chk.ok;
    j["first_switch_time"] = chk.first_switch_time;
    j["first_switch_err"] = chk.first_switch_err;
    j["second_switch_err"] = chk.second_switch_err;
    j["return_err"] = chk.return_err;
    j["reflection_err"] = chk.reflection_err;
    if (!chk.message.empty()) j["message"] = chk.message;
    return j;
}

inline nlohmann::json point_to_json(const BifurcationPoint& p) {
    return nlohmann::json{
        {"s", p.s}, {"gap", p.gap}, {"kind", to_string(p.kind)}, {"detail", p.detail}};
}

inline nlohmann::json rate_to_json(const RateMeasurement& m, double predicted) {
    nlohmann::json j;
    j["measured_factor"] = m.factor;
    j["predicted_factor"] = predicted;
    j["seed"] = m.seed;
    j["initial_distance"] = m.initial_distance;
    j["fit_begin"] = m.fit_begin;
    j["fit_end"] = m.fit_end;
    j["diverged_while_stable"] = m.diverged_while_stable;
    return j;
}

/// Trajectory CSV: header `time,h,vhat,v_0..`; rows at multiples of `stride`
/// within each segment plus every exact switching time. The relay output is
/// right-continuous: the row at a switch carries the new output.
inline void write_trajectory_csv(std::ostream& os, const SpectralSystem& sys,
                                 const Trajectory& traj, double stride) {
    os << "time,h,vhat";
    for (std::size_t j = 0; j < sys.n_modes(); ++j) os << ",v_" << j;
    os << "\n";
    if (traj.segments.empty()) return;

    auto emit = [&](const ModeVector& v, int h) {
        os << format_real(v.time) << ',' << h << ',' << format_real(mean_temperature(sys, v));
        for (double x : v.values) os << ',' << format_real(x);
        os << "\n";
    };

    const double t0 = traj.segments.front().start_time;
    for (std::size_t i = 0; i < traj.segments.size(); ++i) {
        const TrajectorySegment& seg = traj.segments[i];
        // Grid samples inside [start, end), aligned to the global stride.
        double k = std::ceil((seg.start_time - t0) / stride - 1e-12);
        for (;; k += 1.0) {
            const double t = t0 + k * stride;
            if (t >= seg.end_time) break;
            if (t < seg.start_time) continue;
            if (i > 0 && t == seg.start_time) continue;  // already emitted as the switch row
            emit(advance_modes(sys, seg.start, seg.relay_output, t - seg.start_time),
                 seg.relay_output);
        }
        const bool is_switch = i + 1 < traj.segments.size();
        const ModeVector at_end =
            advance_modes(sys, seg.start, seg.relay_output, seg.end_time - seg.start_time);
        emit(at_end, is_switch ? traj.segments[i + 1].relay_output : seg.relay_output);
    }
}

/// Diagram CSV: columns s, F, Fprime, valid (0/1), grazing (0/1).
inline void write_diagram_csv(std::ostream& os, const std::vector<DiagramRow>& rows) {
    os << "s,F,Fprime,valid,grazing\n";
    for (const DiagramRow& r : rows)
        os << format_real(r.s) << ',' << format_real(r.F) << ',' << format_real(r.F_prime) << ','
           << (r.valid ? 1 : 0) << ',' << (r.grazing ? 1 : 0) << "\n";
}

/// Per-period section distances from a rate measurement.
inline void write_rate_csv(std::ostream& os, const RateMeasurement& m) {
    os << "period,distance\n";
    for (std::size_t i = 0; i < m.distances.size(); ++i)
        os << i << ',' << format_real(m.distances[i]) << "\n";
}

inline std::string config_fingerprint(const nlohmann::json& config) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

}  // namespace thermorelay
