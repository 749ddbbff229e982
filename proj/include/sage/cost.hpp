#pragma once

#include "sage/errors.hpp"

namespace sage {

// Abstract per-call costs: c_d for one draft expansion, c_t for one target
// verification pass. Speedups are ratios of these units, never wall clock.
struct CostModel {
    double c_d = 0.05;
    double c_t = 1.0;

    // c_d = 0 is a legitimate limit (free drafting); c_t anchors the unit and
    // must stay positive or every ratio divides by zero
    void validate() const {
        if (!(c_d >= 0.0) || !(c_t > 0.0)) {
            throw ConfigError("cost model: need c_d >= 0 and c_t > 0");
        }
    }
};

} // namespace sage
