#pragma once

#include <random>
#include <vector>

#include "gardner/grid.hpp"

namespace gardner::testing {

inline RealGridFunction random_field(const GridSpec& g, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(g.size());
    for (auto& x : v) x = dist(rng);
    return RealGridFunction(g, std::move(v));
}

inline SpectralFunction random_spectrum(const GridSpec& g, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Complex> c(g.size());
    for (auto& z : c) z = {dist(rng), dist(rng)};
    return SpectralFunction(g, std::move(c));
}

/// Largest |a_j - b_j| over coefficients.
inline double max_coeff_distance(const SpectralFunction& a, const SpectralFunction& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

}  // namespace gardner::testing
