#pragma once

#include <algorithm>
#include <cmath>

#include "ftreg/errors.hpp"

namespace ftreg {

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
    double lo = -1.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return std::min(hi, std::max(lo, x)); }
    double midpoint() const { return 0.5 * (lo + hi); }

    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }

    void validate() const {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw ConfigError("invalid interval: lo must be finite and < hi");
    }
};

} // namespace ftreg
