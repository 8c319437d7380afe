#pragma once

#include <cmath>

#include "gardner/grid.hpp"

namespace gardner {

/// a exp(-((x - x0)/w)^2)
inline RealGridFunction gaussian_profile(GridSpec grid, double amplitude, double width, double center) {
    if (!(width > 0.0)) throw InvalidInput("gaussian width must be positive");
    return RealGridFunction::sample(grid, [&](double x) {
        const double z = (x - center) / width;
        return amplitude * std::exp(-z * z);
    });
}

/// a sech((x - x0)/w)
inline RealGridFunction sech_profile(GridSpec grid, double amplitude, double width, double center) {
    if (!(width > 0.0)) throw InvalidInput("sech width must be positive");
    return RealGridFunction::sample(grid, [&](double x) { return amplitude / std::cosh((x - center) / width); });
}

}  // namespace gardner
