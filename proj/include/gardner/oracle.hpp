#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gardner/grid.hpp"
#include "gardner/spectral.hpp"

// Independent reference path: integrating-factor RK4 and exact traveling
// waves. Shares the transform and multiplier kernels with the main solver
// but none of the Picard or quadrature code.

namespace gardner::oracle {

/// Stationary-ODE residual gate applied when a soliton is built.
inline constexpr double kSolitonResidualTolerance = 1e-9;

/// Traveling wave u(x, t) = U(x - c t - x0) with U'' = c U - U^2/2 - U^3/3.
///
/// With U' -> 0 at infinity the first integral is U'^2 = U^2 (c - U/3 - U^2/6),
/// and the substitution U = 1/w linearizes it to w'^2 = c w^2 - w/3 - 1/6, so
///   U(z) = 2c / (1/3 + sqrt(1/9 + 2c/3) cosh(sqrt(c) z)).
class GardnerSoliton {
public:
    GardnerSoliton(GridSpec grid, double speed, double center = 0.0)
        : grid_(grid), speed_(speed), center_(center) {
        if (!(speed > 0.0) || !std::isfinite(speed)) throw InvalidInput("soliton speed must be positive");
        if (!std::isfinite(center)) throw InvalidInput("soliton center must be finite");
        numerator_ = 2.0 * speed;
        offset_ = 1.0 / 3.0;
        stretch_ = std::sqrt(1.0 / 9.0 + 2.0 * speed / 3.0);
        rate_ = std::sqrt(speed);
        const double res = residual(0.0);
        if (!(res <= kSolitonResidualTolerance)) {
            throw InvalidInput("soliton profile fails the stationary-ODE residual check: " + std::to_string(res));
        }
    }

    double speed() const noexcept { return speed_; }
    double center() const noexcept { return center_; }
    double amplitude() const noexcept { return numerator_ / (offset_ + stretch_); }

    double profile(double z) const noexcept {
        return numerator_ / (offset_ + stretch_ * std::cosh(rate_ * z));
    }

    /// U'' from the closed form, not from the ODE.
    double profile_second_derivative(double z) const noexcept {
        const double ch = std::cosh(rate_ * z);
        const double sh = std::sinh(rate_ * z);
        const double den = offset_ + stretch_ * ch;
        return -numerator_ * stretch_ * rate_ * rate_ * (ch * den - 2.0 * stretch_ * sh * sh) / (den * den * den);
    }

    /// Nearest periodic image of x - c t - x0 in [-L, L).
    double moving_coordinate(double x, double t) const noexcept {
        const double L = grid_.half_length();
        double z = x - speed_ * t - center_;
        z = std::fmod(z + L, 2.0 * L);
        if (z < 0.0) z += 2.0 * L;
        return z - L;
    }

    RealGridFunction sample(double t) const {
        return RealGridFunction::sample(grid_, [&](double x) { return profile(moving_coordinate(x, t)); });
    }

    /// sup over the grid of |U'' - c U + U^2/2 + U^3/3|.
    double residual(double t) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double z = moving_coordinate(grid_.x(i), t);
            const double u = profile(z);
            const double r = profile_second_derivative(z) - speed_ * u + 0.5 * u * u + u * u * u / 3.0;
            worst = std::max(worst, std::abs(r));
        }
        return worst;
    }

    /// Largest |U| at the box edge, i.e. the periodic truncation level.
    double boundary_magnitude(double t) const {
        return profile(moving_coordinate(grid_.x(0), t));
    }

private:
    GridSpec grid_;
    double speed_;
    double center_;
    double numerator_ = 0.0;
    double offset_ = 0.0;
    double stretch_ = 0.0;
    double rate_ = 0.0;
};

inline RealGridFunction gardner_soliton(GridSpec grid, double speed, double center, double t) {
    return GardnerSoliton(grid, speed, center).sample(t);
}

/// Right-hand side -F[ d/dx (u^2/2 + u^3/3) ] for the reference integrator.
inline SpectralFunction reference_rhs(const SpectralFunction& v) {
    const auto& g = v.grid();
    const auto u = inverse(dealias_cubic(v));
    std::vector<double> flux(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u[i];
        flux[i] = -(x * x / 2.0 + x * x * x / 3.0);
    }
    const auto F = forward(RealGridFunction(g, std::move(flux)));
    std::vector<Complex> c(F.size());
    const long cutoff = static_cast<long>(g.size() / 4);
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (std::abs(g.wavenumber(j)) <= cutoff && j != g.nyquist_index()) c[j] = Complex(0.0, g.xi(j)) * F[j];
    }
    return SpectralFunction(g, std::move(c));
}

namespace detail {

// One classical RK4 step for w = e^{-i xi^3 t} u^, written back in u^ variables.
inline SpectralFunction ifrk4_step(const SpectralFunction& v, double h) {
    const auto& g = v.grid();
    auto axpy = [](const SpectralFunction& a, double s, const SpectralFunction& b) {
        std::vector<Complex> c(a.size());
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = a[j] + s * b[j];
        return SpectralFunction(a.grid(), std::move(c));
    };
    const auto k1 = reference_rhs(v);
    const auto k2 = reference_rhs(airy_propagator(axpy(v, h / 2, k1), h / 2));
    const auto k3 = reference_rhs(axpy(airy_propagator(v, h / 2), h / 2, k2));
    const auto k4 = reference_rhs(axpy(airy_propagator(v, h), h, airy_propagator(k3, h / 2)));
    const auto Ev = airy_propagator(v, h);
    const auto Ek1 = airy_propagator(k1, h);
    const auto Ek23 = airy_propagator(k2 + k3, h / 2);
    std::vector<Complex> next(v.size());
    for (std::size_t j = 0; j < next.size(); ++j) next[j] = Ev[j] + (h / 6.0) * (Ek1[j] + 2.0 * Ek23[j] + k4[j]);
    return SpectralFunction(g, std::move(next));
}

}  // namespace detail

struct Ifrk4Diagnostics {
    bool dt_warning = false;   ///< dt exceeded 0.4 / max|xi|^3
    double dt_used = 0.0;
    std::size_t steps = 0;
};

/// Classical integrating-factor RK4 on w = e^{-i xi^3 t} u^. Takes
/// ceil(t / dt) equal steps so it lands on t exactly.
inline RealGridFunction ifrk4_solve(const RealGridFunction& phi, double t, double dt,
                                    Ifrk4Diagnostics* diagnostics = nullptr) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("ifrk4_solve: time must be finite and >= 0");
    if (!(dt > 0.0)) throw InvalidInput("ifrk4_solve: dt must be positive");
    const auto& g = phi.grid();
    double xi_max = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) xi_max = std::max(xi_max, std::abs(g.xi(j)));
    const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-12));
    const double h = steps == 0 ? 0.0 : t / static_cast<double>(steps);
    if (diagnostics) {
        diagnostics->dt_warning = dt > 0.4 / (xi_max * xi_max * xi_max);
        diagnostics->dt_used = h;
        diagnostics->steps = steps;
    }
    if (steps == 0) return phi;

    auto v = forward(phi);
    for (std::size_t n = 0; n < steps; ++n) {
        try {
            v = detail::ifrk4_step(v, h);
        } catch (const NonFiniteSample&) {
            throw BlowUpError("reference integrator blew up at t = " + std::to_string(h * static_cast<double>(n + 1)));
        }
    }
    return inverse(v);
}

/// int u dx by the trapezoidal rule (exact for trigonometric polynomials).
inline double invariant_mass(const RealGridFunction& u) {
    gardner::detail::KahanSum acc;
    for (double x : u.samples()) acc.add(x);
    return u.grid().spacing() * acc.value();
}

/// int u^2 dx.
inline double invariant_momentum(const RealGridFunction& u) {
    gardner::detail::KahanSum acc;
    for (double x : u.samples()) acc.add(x * x);
    return u.grid().spacing() * acc.value();
}

}  // namespace gardner::oracle
