#pragma once

namespace peerpred {

/// Numerical thresholds shared by every module.
struct Tolerances {
    double prob = 1e-9;    ///< probabilities sum to one, Delta rows/columns sum to zero
    double sign = 1e-12;   ///< Delta entries at or below this count as non-positive
    double eq = 1e-9;      ///< expected scores this close to truthful count as ties
    double feas = 1e-7;    ///< LP margin needed to call a strongly truthful score feasible
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace peerpred
