#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gardner/detail/fft.hpp"
#include "gardner/grid.hpp"

namespace gardner {

/// Relative tolerance on Hermitian symmetry accepted by inverse().
inline constexpr double kHermitianTolerance = 1e-10;

namespace detail {

// Compensated summation in storage order, so sums are reproducible bit for bit.
class KahanSum {
public:
    void add(double x) noexcept {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline double sobolev_weight(double xi, int s) noexcept {
    const double base = 1.0 + xi * xi;
    double w = 1.0;
    for (int i = 0; i < s; ++i) w *= base;
    return w;
}

}  // namespace detail

struct HermitianDefect {
    double relative = 0.0;  ///< worst |c_k - conj(c_-k)| / max |c|
    long mode = 0;          ///< wavenumber where it occurs
};

/// Worst violation of c_{-k} = conj(c_k). The Nyquist mode has no partner on
/// the grid and is skipped; inverse() drops its imaginary part.
inline HermitianDefect hermitian_defect(const SpectralFunction& F) {
    const auto& g = F.grid();
    const auto c = F.coeffs();
    const std::size_t n = c.size();
    double scale2 = 0.0;
    for (const auto& z : c) scale2 = std::max(scale2, std::norm(z));
    HermitianDefect worst;
    if (scale2 == 0.0) return worst;
    double worst2 = 0.0;
    std::size_t worst_j = 0;
    // Pairs (j, n - j) for j = 0..n/2 - 1; j = 0 pairs with itself.
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double d2 = std::norm(c[j] - std::conj(c[(n - j) % n]));
        if (d2 > worst2) {
            worst2 = d2;
            worst_j = j;
        }
    }
    if (worst2 > 0.0) worst = {std::sqrt(worst2 / scale2), g.wavenumber(worst_j)};
    return worst;
}

/// Unitary DFT: c_k = N^{-1/2} sum_n f_n e^{-2 pi i k n / N}.
inline SpectralFunction forward(const RealGridFunction& f) {
    const std::size_t n = f.size();
    std::vector<Complex> in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = f[i];
    detail::dft(in, out, true);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    // Project onto exact conjugate symmetry. Roundoff asymmetry would
    // otherwise be amplified by high-order derivative multipliers.
    std::vector<Complex> sym(n);
    for (std::size_t j = 0; j < n; ++j) sym[j] = 0.5 * norm * (out[j] + std::conj(out[(n - j) % n]));
    return SpectralFunction(f.grid(), std::move(sym));
}

/// Inverse of forward(). Rejects coefficients that are not Hermitian within
/// kHermitianTolerance, naming the worst mode.
inline RealGridFunction inverse(const SpectralFunction& F) {
    const auto defect = hermitian_defect(F);
    if (defect.relative > kHermitianTolerance) {
        throw SymmetryError(defect.mode, defect.relative,
                            "spectral data is not Hermitian: worst mode k = " + std::to_string(defect.mode) +
                                ", relative defect " + std::to_string(defect.relative));
    }
    const std::size_t n = F.size();
    std::vector<Complex> out(n);
    detail::dft(F.coeffs(), out, false);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = out[i].real() * norm;
    return RealGridFunction(F.grid(), std::move(samples));
}

/// Multiplies mode k by (i xi_k)^order. Odd orders zero the Nyquist mode,
/// whose partner +N/2 is not on the grid.
inline SpectralFunction spectral_derivative(const SpectralFunction& F, int order) {
    if (order < 0) throw InvalidInput("derivative order must be nonnegative");
    const auto& g = F.grid();
    std::vector<Complex> c(F.coeffs().begin(), F.coeffs().end());
    static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const Complex unit = kIPow[order % 4];
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double xi = g.xi(j);
        double mag = 1.0;
        for (int p = 0; p < order; ++p) mag *= xi;
        c[j] *= unit * mag;
    }
    if (order % 2 == 1) c[g.nyquist_index()] = 0.0;
    return SpectralFunction(g, std::move(c));
}

/// Multiplier e^{i xi_k^3 t}: the linear flow of u_t + u_xxx = 0.
inline SpectralFunction airy_propagator(const SpectralFunction& F, double t) {
    if (!std::isfinite(t)) throw InvalidInput("propagation time must be finite");
    const auto& g = F.grid();
    std::vector<Complex> c(F.coeffs().begin(), F.coeffs().end());
    if (t != 0.0) {
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double xi = g.xi(j);
            const double phase = xi * xi * xi * t;
            c[j] *= Complex(std::cos(phase), std::sin(phase));
        }
    }
    return SpectralFunction(g, std::move(c));
}

/// Keeps |k| <= N/4 and zeroes the rest. Products up to cubic order of the
/// retained modes alias only onto the cutoff mode itself.
inline SpectralFunction dealias_cubic(const SpectralFunction& F) {
    const auto& g = F.grid();
    const long cutoff = static_cast<long>(g.size() / 4);
    std::vector<Complex> c(F.coeffs().begin(), F.coeffs().end());
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (std::abs(g.wavenumber(j)) > cutoff) c[j] = 0.0;
    }
    return SpectralFunction(g, std::move(c));
}

/// Quadrature of the Bessel-potential norm (int (1+xi^2)^s |f^(xi)|^2 dxi)^{1/2}.
/// With unitary coefficients this is (h sum_k (1+xi_k^2)^s |c_k|^2)^{1/2}.
inline double h_norm(const SpectralFunction& F, int s) {
    const auto& g = F.grid();
    const auto c = F.coeffs();
    detail::KahanSum acc;
    for (std::size_t j = 0; j < c.size(); ++j) acc.add(detail::sobolev_weight(g.xi(j), s) * std::norm(c[j]));
    return std::sqrt(g.spacing() * acc.value());
}

inline double h_norm(const SpectralFunction& F, SobolevIndex s) { return h_norm(F, s.value()); }

/// h_norm(a - b, s) without forming the difference.
inline double h_distance(const SpectralFunction& a, const SpectralFunction& b, int s) {
    require_same_grid(a.grid(), b.grid(), "h_distance");
    const auto& g = a.grid();
    detail::KahanSum acc;
    for (std::size_t j = 0; j < a.size(); ++j) acc.add(detail::sobolev_weight(g.xi(j), s) * std::norm(a[j] - b[j]));
    return std::sqrt(g.spacing() * acc.value());
}

/// Grid L^2 norm (h sum u_i^2)^{1/2}.
inline double l2_norm(const RealGridFunction& f) {
    detail::KahanSum acc;
    for (double v : f.samples()) acc.add(v * v);
    return std::sqrt(f.grid().spacing() * acc.value());
}

inline double sup_norm(const RealGridFunction& f) {
    double m = 0.0;
    for (double v : f.samples()) m = std::max(m, std::abs(v));
    return m;
}

inline double sup_distance(const RealGridFunction& a, const RealGridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "sup_distance");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace gardner
