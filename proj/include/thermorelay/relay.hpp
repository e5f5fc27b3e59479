#pragma once

// Two-threshold relay (non-ideal relay / thermostat switch). The relay never
// samples the continuous signal itself: it consumes discrete threshold-hit
// events produced by the dynamics module's exact event detection.

#include <optional>
#include <stdexcept>

#include "thermorelay/common.hpp"

namespace thermorelay {

enum class ThresholdHit { AtAlpha, AtBeta };

struct RelayState {
    double alpha;
    double beta;
    int output;  // +1 or -1
    std::optional<double> last_switch_time;
};

/// Initial relay output for input value g0: +1 below beta, -1 at or above.
inline RelayState relay_init(double g0, double alpha, double beta) {
    if (!(alpha < beta)) throw ConfigError("relay_init: requires alpha < beta");
    RelayState st;
    st.alpha = alpha;
    st.beta = beta;
    st.output = (g0 < beta) ? +1 : -1;
    return st;
}

/// Applies a threshold-hit event at time t. A hit at alpha forces output +1,
/// a hit at beta forces -1; the switch time is recorded only when the output
/// actually changes.
inline RelayState relay_cross(const RelayState& state, ThresholdHit hit, double t) {
    if (state.last_switch_time && t < *state.last_switch_time)
        throw std::logic_error("relay_cross: non-monotone event time");
    RelayState next = state;
    const int forced = (hit == ThresholdHit::AtAlpha) ? +1 : -1;
    if (forced != state.output) {
        next.output = forced;
        next.last_switch_time = t;
    }
    return next;
}

}  // namespace thermorelay
