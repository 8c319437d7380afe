#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gardner/errors.hpp"

namespace gardner {

using Complex = std::complex<double>;

/// Periodic box [-L, L) sampled at N equispaced points.
///
/// Spectral coefficients are stored in FFT order: storage index j holds the
/// wavenumber k = j for j < N/2 and k = j - N otherwise, so the Nyquist mode
/// k = -N/2 lives at j = N/2.
class GridSpec {
public:
    GridSpec(double half_length, std::size_t num_points)
        : half_length_(half_length), num_points_(num_points) {
        if (!(half_length > 0.0) || !std::isfinite(half_length)) {
            throw InvalidInput("grid half-length must be positive and finite, got " +
                               std::to_string(half_length));
        }
        if (num_points < 8 || (num_points & (num_points - 1)) != 0) {
            throw InvalidInput("grid point count must be a power of two >= 8, got " +
                               std::to_string(num_points));
        }
    }

    double half_length() const noexcept { return half_length_; }
    std::size_t size() const noexcept { return num_points_; }

    /// h = 2L/N; exact because N is a power of two.
    double spacing() const noexcept { return 2.0 * half_length_ / static_cast<double>(num_points_); }

    double x(std::size_t i) const noexcept { return -half_length_ + static_cast<double>(i) * spacing(); }

    long wavenumber(std::size_t j) const noexcept {
        const auto n = static_cast<long>(num_points_);
        const auto jj = static_cast<long>(j);
        return jj < n / 2 ? jj : jj - n;
    }

    std::size_t index_of(long k) const noexcept {
        const auto n = static_cast<long>(num_points_);
        return static_cast<std::size_t>(((k % n) + n) % n);
    }

    /// xi_k = pi k / L
    double xi(std::size_t j) const noexcept {
        return std::numbers::pi * static_cast<double>(wavenumber(j)) / half_length_;
    }

    /// Spacing of the frequency lattice, pi / L.
    double frequency_spacing() const noexcept { return std::numbers::pi / half_length_; }

    std::size_t nyquist_index() const noexcept { return num_points_ / 2; }

    /// Factor relating unitary DFT coefficients to samples of the continuum
    /// transform (1/sqrt(2 pi)) int e^{-i x xi} f(x) dx, up to the phase
    /// e^{i xi L} contributed by the box origin at -L.
    double continuum_scale() const noexcept {
        return std::sqrt(spacing() * half_length_ / std::numbers::pi);
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    double half_length_;
    std::size_t num_points_;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* context) {
    if (!(a == b)) {
        throw InvalidInput(std::string(context) + ": operands live on different grids");
    }
}

/// Real samples u(-L + i h), i = 0..N-1. Every sample is finite.
class RealGridFunction {
public:
    RealGridFunction(GridSpec grid, std::vector<double> samples)
        : grid_(grid), samples_(std::move(samples)) {
        if (samples_.size() != grid_.size()) {
            throw InvalidInput("sample count " + std::to_string(samples_.size()) +
                               " does not match grid size " + std::to_string(grid_.size()));
        }
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (!std::isfinite(samples_[i])) {
                throw NonFiniteSample(i, "non-finite sample at index " + std::to_string(i));
            }
        }
    }

    static RealGridFunction zeros(GridSpec grid) {
        return RealGridFunction(grid, std::vector<double>(grid.size(), 0.0));
    }

    template <class F>
    static RealGridFunction sample(GridSpec grid, F&& f) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.x(i));
        return RealGridFunction(grid, std::move(v));
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }

    friend bool operator==(const RealGridFunction&, const RealGridFunction&) = default;

private:
    GridSpec grid_;
    std::vector<double> samples_;
};

/// Unitary DFT coefficients of a grid function, in FFT storage order.
class SpectralFunction {
public:
    SpectralFunction(GridSpec grid, std::vector<Complex> coeffs)
        : grid_(grid), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != grid_.size()) {
            throw InvalidInput("coefficient count " + std::to_string(coeffs_.size()) +
                               " does not match grid size " + std::to_string(grid_.size()));
        }
        for (std::size_t j = 0; j < coeffs_.size(); ++j) {
            if (!std::isfinite(coeffs_[j].real()) || !std::isfinite(coeffs_[j].imag())) {
                throw NonFiniteSample(j, "non-finite coefficient for wavenumber " +
                                             std::to_string(grid_.wavenumber(j)));
            }
        }
    }

    static SpectralFunction zeros(GridSpec grid) {
        return SpectralFunction(grid, std::vector<Complex>(grid.size()));
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const Complex> coeffs() const noexcept { return coeffs_; }
    Complex operator[](std::size_t j) const noexcept { return coeffs_[j]; }
    Complex mode(long k) const noexcept { return coeffs_[grid_.index_of(k)]; }
    std::size_t size() const noexcept { return coeffs_.size(); }

    SpectralFunction& operator+=(const SpectralFunction& o) {
        require_same_grid(grid_, o.grid_, "spectral addition");
        for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] += o.coeffs_[j];
        return *this;
    }
    SpectralFunction& operator-=(const SpectralFunction& o) {
        require_same_grid(grid_, o.grid_, "spectral subtraction");
        for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] -= o.coeffs_[j];
        return *this;
    }
    SpectralFunction& operator*=(double a) {
        for (auto& c : coeffs_) c *= a;
        return *this;
    }
    friend SpectralFunction operator+(SpectralFunction a, const SpectralFunction& b) { return a += b; }
    friend SpectralFunction operator-(SpectralFunction a, const SpectralFunction& b) { return a -= b; }
    friend SpectralFunction operator*(double s, SpectralFunction a) { return a *= s; }

    friend bool operator==(const SpectralFunction&, const SpectralFunction&) = default;

private:
    GridSpec grid_;
    std::vector<Complex> coeffs_;
};

/// Integer Sobolev index. Certified solving needs s >= 3; diagnostic runs
/// accept any s >= 0 and carry a flag saying the certificate does not apply.
class SobolevIndex {
public:
    static SobolevIndex certified(int s) {
        if (s < 3) {
            throw InvalidInput("certified mode requires an integer Sobolev index s >= 3, got " +
                               std::to_string(s));
        }
        return SobolevIndex(s, false);
    }
    static SobolevIndex diagnostic(int s) {
        if (s < 0) throw InvalidInput("Sobolev index must be nonnegative, got " + std::to_string(s));
        return SobolevIndex(s, s < 3);
    }

    int value() const noexcept { return s_; }
    /// True when s < 3, i.e. outside the range the certificates cover.
    bool below_certified_range() const noexcept { return diagnostic_; }

private:
    SobolevIndex(int s, bool diagnostic) : s_(s), diagnostic_(diagnostic) {}
    int s_;
    bool diagnostic_;
};

}  // namespace gardner
