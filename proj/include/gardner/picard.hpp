#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gardner/grid.hpp"
#include "gardner/plan.hpp"
#include "gardner/spectral.hpp"

namespace gardner {

/// A Picard iterate on one step [t_start, t_start + T], held at M + 1
/// equispaced quadrature nodes (offsets from t_start).
struct TimeSlab {
    double t_start = 0.0;
    double length = 0.0;
    std::vector<double> nodes;
    std::vector<SpectralFunction> values;

    static TimeSlab uniform(double t_start, double T, int M, const SpectralFunction& fill) {
        if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("slab length must be positive and finite");
        if (M < 1) throw InvalidInput("slab needs at least one quadrature interval");
        TimeSlab slab{t_start, T, {}, {}};
        slab.nodes.resize(static_cast<std::size_t>(M) + 1);
        for (int m = 0; m <= M; ++m) slab.nodes[m] = T * m / M;
        slab.nodes.back() = T;
        slab.values.assign(slab.nodes.size(), fill);
        return slab;
    }

    int intervals() const noexcept { return static_cast<int>(nodes.size()) - 1; }
    const GridSpec& grid() const { return values.front().grid(); }

    void validate() const {
        if (nodes.size() < 2 || nodes.size() != values.size()) {
            throw InvalidInput("slab node count must match value count and be at least 2");
        }
        if (nodes.front() != 0.0) throw InvalidInput("slab nodes must start at offset 0");
        for (std::size_t m = 1; m < nodes.size(); ++m) {
            if (!(nodes[m] > nodes[m - 1])) throw InvalidInput("slab nodes must be strictly increasing");
            require_same_grid(values[m].grid(), values[0].grid(), "time slab");
        }
    }
};

/// Measured Picard differences against the geometric bound 2^{-j}(3+T)^{1/2} r.
/// Differences are sup-over-nodes H^s distances, a proxy for the space-time norm.
struct IterationReport {
    std::vector<double> diffs;            ///< diffs[j] = sup_m ||v^{j+1}(tau_m) - v^j(tau_m)||_s
    std::vector<double> ratios;           ///< diffs[j+1] / diffs[j]
    std::vector<double> predicted_bound;  ///< 2^{-j} (3+T)^{1/2} r
    int J_used = 0;
    double data_norm = 0.0;               ///< r = ||phi||_s
    bool within_bound = true;             ///< diffs[j] <= (1 + slack) predicted_bound[j] for all j
    double quadrature_estimate = 0.0;     ///< Richardson estimate of the time-quadrature error at T
};

struct PicardResult {
    TimeSlab slab;
    IterationReport report;
};

struct PicardOptions {
    double slack = 0.25;           ///< certified: tolerated excess over the geometric bound
    double fast_tolerance = 0.0;   ///< fast: stop once diffs[j] <= this
    int max_fast_iterations = 64;
    double t_start = 0.0;
};

/// Largest |u| for which u^3 stays comfortably inside the double range.
inline constexpr double kMaxPointwiseMagnitude = 1e100;

/// F[ d/dx (u^2/2 + u^3/3) ] evaluated pseudospectrally with the 1/2 rule on
/// both input and output. The k = 0 coefficient is exactly zero.
inline SpectralFunction nonlinearity(const SpectralFunction& v) {
    const auto u = inverse(dealias_cubic(v));
    const auto s = u.samples();
    double max_abs = 0.0;
    for (double x : s) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs > kMaxPointwiseMagnitude) {
        throw OverflowError(max_abs, "pointwise powers overflow in nonlinearity: max |u| = " + std::to_string(max_abs));
    }
    std::vector<double> flux(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) flux[i] = s[i] * s[i] * (0.5 + s[i] / 3.0);
    return dealias_cubic(spectral_derivative(forward(RealGridFunction(u.grid(), std::move(flux))), 1));
}

namespace detail {

// Weights (per unit node spacing) of the cumulative integral over
// [tau_0, tau_m] for every m: composite Simpson for even m, Simpson plus the
// 3/8 rule for odd m >= 3, and the quadratic-interpolation rule through
// nodes 0, 1, 2 for m = 1.
inline std::vector<std::vector<double>> cumulative_weights(int M) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(M) + 1,
                                       std::vector<double>(static_cast<std::size_t>(M) + 1, 0.0));
    auto simpson = [&](std::vector<double>& row, int upto) {
        for (int i = 0; i < upto; i += 2) {
            row[i] += 1.0 / 3.0;
            row[i + 1] += 4.0 / 3.0;
            row[i + 2] += 1.0 / 3.0;
        }
    };
    for (int m = 1; m <= M; ++m) {
        auto& row = w[m];
        if (m == 1) {
            row[0] = 5.0 / 12.0;
            row[1] = 8.0 / 12.0;
            row[2] = -1.0 / 12.0;
        } else if (m % 2 == 0) {
            simpson(row, m);
        } else {
            simpson(row, m - 3);
            row[m - 3] += 3.0 / 8.0;
            row[m - 2] += 9.0 / 8.0;
            row[m - 1] += 9.0 / 8.0;
            row[m] += 3.0 / 8.0;
        }
    }
    return w;
}

inline void require_uniform_even(const std::vector<double>& nodes) {
    const int M = static_cast<int>(nodes.size()) - 1;
    if (M < 2 || M % 2 != 0) {
        throw InvalidInput("composite Simpson needs an even number of intervals, got " + std::to_string(M));
    }
    const double T = nodes.back();
    for (int m = 0; m <= M; ++m) {
        if (std::abs(nodes[m] - T * m / M) > 1e-12 * T) throw InvalidInput("quadrature nodes must be equispaced");
    }
}

// Multipliers e^{i xi^3 d dt} for lags d = 0..M.
inline std::vector<std::vector<Complex>> lag_multipliers(const GridSpec& g, double dt, int M) {
    std::vector<std::vector<Complex>> E(static_cast<std::size_t>(M) + 1, std::vector<Complex>(g.size()));
    for (int d = 0; d <= M; ++d) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double xi = g.xi(j);
            const double phase = xi * xi * xi * (d * dt);
            E[d][j] = d == 0 ? Complex(1.0, 0.0) : Complex(std::cos(phase), std::sin(phase));
        }
    }
    return E;
}

// Lags 0..M plus one backward lag (slot M + 1), which the m = 1 rule needs
// because it reaches node 2, after tau_1.
// Fixed-step marches reuse one table, so the last one built is kept per thread.
inline std::vector<std::vector<Complex>> lag_table(const GridSpec& g, double dt, int M) {
    struct Cached {
        GridSpec grid;
        double dt;
        int M;
        std::vector<std::vector<Complex>> table;
    };
    thread_local std::optional<Cached> last;
    if (last && last->grid == g && last->dt == dt && last->M == M) return last->table;
    auto E = lag_multipliers(g, dt, M);
    E.push_back(lag_multipliers(g, -dt, 1)[1]);
    last = Cached{g, dt, M, E};
    return E;
}

inline std::size_t lag_slot(int m, int i, int M) {
    return i <= m ? static_cast<std::size_t>(m - i) : static_cast<std::size_t>(M + 1);
}

// Plain complex product; skips the C99 Annex G NaN recovery of operator*.
inline Complex cmul(Complex a, Complex b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// sum_i w_i E(lag_i) g_i
inline SpectralFunction weighted_propagated_sum(const GridSpec& g, const std::vector<double>& weights,
                                                const std::vector<std::size_t>& lags,
                                                const std::vector<const SpectralFunction*>& integrands,
                                                const std::vector<std::vector<Complex>>& E, double spacing) {
    std::vector<Complex> acc(g.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double w = weights[i] * spacing;
        const auto& gi = *integrands[i];
        const auto& Ei = E[lags[i]];
        for (std::size_t j = 0; j < g.size(); ++j) acc[j] += w * cmul(Ei[j], gi[j]);
    }
    return SpectralFunction(g, std::move(acc));
}

}  // namespace detail

/// Quadrature of int_0^{tau_m} e^{i xi^3 (tau_m - tau)} g(tau) dtau per mode,
/// from integrand samples g(tau_i) at equispaced nodes (even interval count).
inline SpectralFunction propagated_integral(const std::vector<double>& nodes,
                                            const std::vector<SpectralFunction>& integrand, int m) {
    detail::require_uniform_even(nodes);
    if (integrand.size() != nodes.size()) throw InvalidInput("integrand samples must match nodes");
    const int M = static_cast<int>(nodes.size()) - 1;
    if (m < 0 || m > M) throw InvalidInput("node index out of range");
    const auto& g = integrand.front().grid();
    const double dt = nodes.back() / M;
    const auto W = detail::cumulative_weights(M);
    const auto E = detail::lag_table(g, dt, M);
    std::vector<double> weights;
    std::vector<std::size_t> lags;
    std::vector<const SpectralFunction*> ptrs;
    for (int i = 0; i <= M; ++i) {
        if (W[m][i] == 0.0) continue;
        weights.push_back(W[m][i]);
        lags.push_back(detail::lag_slot(m, i, M));
        ptrs.push_back(&integrand[i]);
    }
    return detail::weighted_propagated_sum(g, weights, lags, ptrs, E, dt);
}

/// The Duhamel map S(., phi) on a fixed node grid. Holds the lag multipliers,
/// the free Airy evolution of phi and the nonlinearity of phi, which is the
/// value of every iterate at tau = 0.
class DuhamelOperator {
public:
    DuhamelOperator(const SpectralFunction& phi, double T, int M)
        : grid_(phi.grid()), phi_(phi), M_(M), dt_(0.0) {
        nodes_ = TimeSlab::uniform(0.0, T, M, phi).nodes;
        detail::require_uniform_even(nodes_);
        dt_ = T / M;
        weights_ = detail::cumulative_weights(M);
        E_ = detail::lag_table(grid_, dt_, M);
        free_.reserve(nodes_.size());
        for (int m = 0; m <= M; ++m) free_.push_back(multiply(E_[m], phi_));
        free_[0] = phi_;
        phi_nonlinearity_ = nonlinearity(phi_);
    }

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<SpectralFunction>& free_evolution() const noexcept { return free_; }

    /// Nonlinearity at every node; node 0 reuses the cached value when it holds phi.
    std::vector<SpectralFunction> nonlinear_terms(const std::vector<SpectralFunction>& values) const {
        std::vector<SpectralFunction> out;
        out.reserve(values.size());
        out.push_back(values[0] == phi_ ? phi_nonlinearity_ : nonlinearity(values[0]));
        for (std::size_t m = 1; m < values.size(); ++m) out.push_back(nonlinearity(values[m]));
        return out;
    }

    /// Duhamel integrals I_m for all nodes from precomputed nonlinear terms.
    std::vector<SpectralFunction> integrals(const std::vector<SpectralFunction>& terms) const {
        std::vector<SpectralFunction> out;
        out.reserve(terms.size());
        for (int m = 0; m <= M_; ++m) out.push_back(integral_at(terms, m));
        return out;
    }

    SpectralFunction integral_at(const std::vector<SpectralFunction>& terms, int m) const {
        if (m == 0) return SpectralFunction::zeros(grid_);
        std::vector<double> w;
        std::vector<std::size_t> lags;
        std::vector<const SpectralFunction*> ptrs;
        for (int i = 0; i <= M_; ++i) {
            if (weights_[m][i] == 0.0) continue;
            w.push_back(weights_[m][i]);
            lags.push_back(detail::lag_slot(m, i, M_));
            ptrs.push_back(&terms[i]);
        }
        return detail::weighted_propagated_sum(grid_, w, lags, ptrs, E_, dt_);
    }

    /// One application of S: values[m] = E(tau_m) phi - I_m, values[0] = phi.
    std::vector<SpectralFunction> apply(const std::vector<SpectralFunction>& values,
                                        std::vector<SpectralFunction>* terms_out = nullptr) const {
        auto terms = nonlinear_terms(values);
        auto out = free_;
        for (int m = 1; m <= M_; ++m) out[m] -= integral_at(terms, m);
        if (terms_out) *terms_out = std::move(terms);
        return out;
    }

    /// Richardson estimate |I_M - I_{M/2}|_s / 15 of the quadrature error at T,
    /// using only the even nodes for the coarse rule. Zero when M/2 < 2.
    double quadrature_estimate(const std::vector<SpectralFunction>& terms, int s) const {
        const int half = M_ / 2;
        if (half < 2) return 0.0;
        const auto fine = integral_at(terms, M_);
        const auto coarse_w = detail::cumulative_weights(half);
        std::vector<Complex> acc(grid_.size());
        for (int i = 0; i <= half; ++i) {
            const double w = coarse_w[half][i] * 2.0 * dt_;
            const auto& Ei = E_[static_cast<std::size_t>(M_ - 2 * i)];
            const auto& gi = terms[static_cast<std::size_t>(2 * i)];
            for (std::size_t j = 0; j < grid_.size(); ++j) acc[j] += w * detail::cmul(Ei[j], gi[j]);
        }
        return h_distance(fine, SpectralFunction(grid_, std::move(acc)), s) / 15.0;
    }

private:
    static SpectralFunction multiply(const std::vector<Complex>& E, const SpectralFunction& f) {
        std::vector<Complex> c(f.size());
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = detail::cmul(E[j], f[j]);
        return SpectralFunction(f.grid(), std::move(c));
    }

    GridSpec grid_;
    SpectralFunction phi_;
    int M_;
    double dt_;
    std::vector<double> nodes_;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<Complex>> E_;
    std::vector<SpectralFunction> free_;
    SpectralFunction phi_nonlinearity_ = SpectralFunction::zeros(grid_);
};

/// Quadrature of int_0^t e^{i xi^3 (t - tau)} N(v(tau)) dtau, with t a node of the slab.
inline SpectralFunction duhamel_integral(const TimeSlab& slab, double t) {
    slab.validate();
    detail::require_uniform_even(slab.nodes);
    const auto it = std::find(slab.nodes.begin(), slab.nodes.end(), t);
    if (it == slab.nodes.end()) {
        throw InvalidInput("Duhamel integral is only evaluated at slab nodes; t = " + std::to_string(t) +
                           " is not a node");
    }
    const int m = static_cast<int>(it - slab.nodes.begin());
    std::vector<SpectralFunction> terms;
    terms.reserve(slab.values.size());
    const int needed = m == 1 ? 2 : m;
    for (int i = 0; i < static_cast<int>(slab.values.size()); ++i) {
        terms.push_back(i <= needed ? nonlinearity(slab.values[i]) : SpectralFunction::zeros(slab.grid()));
    }
    return propagated_integral(slab.nodes, terms, m);
}

/// S(v, phi) on the slab's nodes: E(tau_m) phi^ minus the Duhamel integral.
inline TimeSlab s_operator(const TimeSlab& slab, const SpectralFunction& phi) {
    slab.validate();
    require_same_grid(slab.grid(), phi.grid(), "s_operator");
    detail::require_uniform_even(slab.nodes);
    DuhamelOperator op(phi, slab.length, slab.intervals());
    TimeSlab out = slab;
    out.values = op.apply(slab.values);
    return out;
}

/// Smallest J >= 0 with 2^{-J} (3+T)^{1/2} r <= eps.
inline int required_iterations(double r, double T, double eps) {
    if (!(eps > 0.0)) throw InvalidInput("error tolerance must be positive");
    if (!(r >= 0.0) || !std::isfinite(r) || !(T > 0.0)) throw InvalidInput("required_iterations: bad r or T");
    const double base = std::sqrt(3.0 + T) * r;
    int J = 0;
    while (std::ldexp(base, -J) > eps) ++J;
    return J;
}

/// Geometric bound on ||v^{j+1} - v^j||_s.
inline double picard_bound(int j, double T, double r) { return std::ldexp(std::sqrt(3.0 + T) * r, -j); }

/// Runs the Picard iteration v^0 = S(0, phi), v^{j+1} = S(v^j, phi) on one step.
///
/// Certified plans run exactly plan.J iterations and compare every measured
/// difference with the geometric bound. Fast plans iterate until the measured
/// difference drops below options.fast_tolerance (at least one correction).
/// Three consecutive increases above the roundoff floor raise DivergenceError.
inline PicardResult picard_solve(const SpectralFunction& phi, const StepPlan& plan, int s,
                                 const PicardOptions& options = {}) {
    if (plan.J < 0) throw InvalidInput("iteration count must be nonnegative");
    DuhamelOperator op(phi, plan.T, plan.M);
    IterationReport report;
    report.data_norm = h_norm(phi, s);
    const double noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * report.data_norm;

    std::vector<SpectralFunction> current = op.free_evolution();
    std::vector<SpectralFunction> last_terms;
    int increases = 0;
    const bool certified = plan.mode == Mode::certified;
    const int limit = certified ? plan.J : options.max_fast_iterations;
    bool stalled = false;

    for (int j = 0; j < limit; ++j) {
        auto next = op.apply(current, &last_terms);
        double d = 0.0;
        for (std::size_t m = 0; m < next.size(); ++m) d = std::max(d, h_distance(next[m], current[m], s));
        report.diffs.push_back(d);
        current = std::move(next);

        const std::size_t n = report.diffs.size();
        if (n >= 2 && d > report.diffs[n - 2] && d > noise_floor) {
            if (++increases >= 3) {
                throw DivergenceError("Picard iteration diverging at j = " + std::to_string(j) +
                                      " (difference " + std::to_string(d) + "); reduce the step length");
            }
        } else {
            increases = 0;
        }
        if (d == 0.0) {
            // Bitwise fixed point: every further iterate is identical.
            stalled = true;
            break;
        }
        if (!certified && d <= options.fast_tolerance) break;
        if (!certified && j + 1 == limit) {
            throw DivergenceError("Picard iteration did not reach tolerance " + std::to_string(options.fast_tolerance) +
                                  " within " + std::to_string(limit) + " iterations");
        }
    }
    if (certified && stalled) report.diffs.resize(static_cast<std::size_t>(plan.J), 0.0);
    report.J_used = certified ? plan.J : static_cast<int>(report.diffs.size());

    for (std::size_t j = 0; j < report.diffs.size(); ++j) {
        report.predicted_bound.push_back(picard_bound(static_cast<int>(j), plan.T, report.data_norm));
        if (certified && report.diffs[j] > (1.0 + options.slack) * report.predicted_bound[j]) {
            report.within_bound = false;
        }
    }
    for (std::size_t j = 0; j + 1 < report.diffs.size(); ++j) {
        report.ratios.push_back(report.diffs[j] > 0.0 ? report.diffs[j + 1] / report.diffs[j] : 0.0);
    }
    if (!last_terms.empty()) report.quadrature_estimate = op.quadrature_estimate(last_terms, s);

    TimeSlab slab{options.t_start, plan.T, op.nodes(), std::move(current)};
    return {std::move(slab), std::move(report)};
}

inline PicardResult picard_solve(const SpectralFunction& phi, const StepPlan& plan, SobolevIndex s,
                                 const PicardOptions& options = {}) {
    return picard_solve(phi, plan, s.value(), options);
}

}  // namespace gardner
