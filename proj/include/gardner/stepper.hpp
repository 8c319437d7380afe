#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gardner/grid.hpp"
#include "gardner/picard.hpp"
#include "gardner/plan.hpp"
#include "gardner/spectral.hpp"

namespace gardner {

/// alpha_T^s = sqrt(s) 2^s sqrt(T) + 1
inline double alpha_const(int s, double T) {
    if (!(T > 0.0)) throw InvalidInput("alpha_const needs T > 0");
    return std::sqrt(static_cast<double>(s)) * std::ldexp(1.0, s) * std::sqrt(T) + 1.0;
}

/// Contraction hypothesis of the Picard estimate:
/// alpha sqrt(T) [8 (3+T)^{3/2} r^2 + 4 (3+T) r] <= 1/2.
inline bool condition_prop22(int s, double T, double r) {
    const double lhs = alpha_const(s, T) * std::sqrt(T) *
                       (8.0 * std::pow(3.0 + T, 1.5) * r * r + 4.0 * (3.0 + T) * r);
    return lhs <= 0.5;
}

/// Hypothesis of the data-stability estimate:
/// alpha sqrt(T) (3+T)^{3/2} (12 r^2 + 16 r + 6) <= 1/2.
inline bool condition_prop23(int s, double T, double r) {
    const double lhs = alpha_const(s, T) * std::sqrt(T) * std::pow(3.0 + T, 1.5) * (12.0 * r * r + 16.0 * r + 6.0);
    return lhs <= 0.5;
}

inline constexpr int kMaxStepExponent = 60;

/// Largest T = 2^{-q}, 0 <= q <= 60, satisfying both step conditions at (s, r).
/// Both conditions are monotone in T, so a bisection over q is exact.
inline double choose_step(int s, double r) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidInput("choose_step: norm bound must be finite and >= 0");
    auto passes = [&](int q) {
        const double T = std::ldexp(1.0, -q);
        return condition_prop22(s, T, r) && condition_prop23(s, T, r);
    };
    if (!passes(kMaxStepExponent)) {
        throw StepSelectionError("no dyadic step 2^-q with q <= 60 satisfies the contraction conditions for r = " +
                                 std::to_string(r) + "; data norm too large for certified mode");
    }
    if (passes(0)) return 1.0;
    int lo = 0, hi = kMaxStepExponent;  // passes(lo) false, passes(hi) true
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (passes(mid) ? hi : lo) = mid;
    }
    return std::ldexp(1.0, -hi);
}

/// Uncertified quantities reported next to the certified bounds.
struct LedgerDiagnostics {
    double boundary_leakage = 0.0;     ///< max |u| near the box edges over the march
    double aliasing_residual = 0.0;    ///< max relative H^s weight above the dealiasing cutoff
    double quadrature_estimate = 0.0;  ///< summed Richardson estimates of time-quadrature error
};

/// Additive error accounting. In certified mode picard and data are bounds
/// from the contraction estimates; in fast mode picard holds measured final
/// Picard differences. Floating-point rounding is not included.
struct ErrorLedger {
    double picard = 0.0;
    double data = 0.0;
    int steps_taken = 0;
    LedgerDiagnostics diagnostics;

    double total() const noexcept { return picard + data; }
};

struct MarchOptions {
    Mode mode = Mode::fast;
    double fast_dt = 1e-3;
    int M = 8;
    double slack = 0.25;
    /// Abort when ||u(t)||_s exceeds this multiple of ||phi||_s.
    double norm_cap_factor = 10.0;
    /// Added to the measured norm before choosing a certified step.
    double norm_margin = 1.0;
    /// Asserts ||phi - phi_exact||_s <= 2^{-n}; seeds the data term.
    std::optional<int> input_uncertainty_bits;
    /// Requested output times; empty means {t_target}.
    std::vector<double> snapshot_times;
    int max_fast_iterations = 64;
};

struct SolveResult {
    Mode mode = Mode::fast;
    std::vector<double> times;
    std::vector<RealGridFunction> snapshots;
    std::vector<double> norms;
    std::vector<ErrorLedger> ledgers;      ///< ledger state at each snapshot
    std::vector<bool> certified;           ///< no bound violation up to each snapshot
    std::vector<std::size_t> plans_until;  ///< plan_log prefix length at each snapshot
    std::vector<StepPlan> plan_log;
    std::vector<IterationReport> reports;  ///< one per step
    ErrorLedger ledger;
    int uncertified_steps = 0;

    bool all_certified() const noexcept {
        return mode == Mode::certified && uncertified_steps == 0;
    }
};

/// R(f)(x) = f(-x): sample i maps to (N - i) mod N.
inline RealGridFunction reflect(const RealGridFunction& f) {
    const std::size_t n = f.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[(n - i) % n] = f[i];
    return RealGridFunction(f.grid(), std::move(out));
}

namespace detail {

inline double edge_magnitude(const RealGridFunction& u) {
    const std::size_t n = u.size();
    const std::size_t band = std::max<std::size_t>(1, n / 32);
    double m = 0.0;
    for (std::size_t i = 0; i < band; ++i) m = std::max({m, std::abs(u[i]), std::abs(u[n - 1 - i])});
    return m;
}

inline double aliasing_fraction(const SpectralFunction& F, int s) {
    const auto& g = F.grid();
    const long cutoff = static_cast<long>(g.size() / 4);
    KahanSum high, all;
    for (std::size_t j = 0; j < F.size(); ++j) {
        const double e = sobolev_weight(g.xi(j), s) * std::norm(F[j]);
        all.add(e);
        if (std::abs(g.wavenumber(j)) > cutoff) high.add(e);
    }
    return all.value() > 0.0 ? std::sqrt(high.value() / all.value()) : 0.0;
}

}  // namespace detail

/// Marches u(0) = phi forward to t_target by restarting the Picard solver from
/// each step endpoint.
///
/// Certified mode re-measures r = ||psi||_s at every restart, takes
/// T = choose_step(s, r + norm_margin), and J = required_iterations(r, T, eps T / t_target).
/// Fast mode uses the fixed step fast_dt and stops iterating once the measured
/// difference drops below the same per-step budget. Steps are shortened to land
/// exactly on requested snapshot times.
inline SolveResult march_forward(const RealGridFunction& phi, double t_target, double eps, SobolevIndex s,
                                 const MarchOptions& options = {}) {
    if (!(t_target >= 0.0) || !std::isfinite(t_target)) throw InvalidInput("target time must be finite and >= 0");
    if (!(eps > 0.0)) throw InvalidInput("error tolerance must be positive");
    if (options.mode == Mode::certified && s.below_certified_range()) {
        throw InvalidInput("certified mode requires an integer Sobolev index s >= 3");
    }
    if (options.mode == Mode::fast && !(options.fast_dt > 0.0)) throw InvalidInput("fast mode needs dt > 0");
    if (options.M < 2 || options.M % 2 != 0) throw InvalidInput("quadrature interval count M must be even");

    std::vector<double> wanted = options.snapshot_times;
    if (wanted.empty()) wanted.push_back(t_target);
    std::sort(wanted.begin(), wanted.end());
    for (double ts : wanted) {
        if (!(ts >= 0.0) || ts > t_target) {
            throw InvalidInput("snapshot time " + std::to_string(ts) + " outside [0, " + std::to_string(t_target) + "]");
        }
    }

    const int si = s.value();
    SolveResult result;
    result.mode = options.mode;
    ErrorLedger ledger;
    if (options.input_uncertainty_bits) ledger.data = std::ldexp(1.0, -*options.input_uncertainty_bits);

    SpectralFunction state = forward(phi);
    const double r0 = h_norm(state, si);
    const double cap = options.norm_cap_factor * r0;
    bool ok = options.mode == Mode::certified;
    double t = 0.0;

    for (double ts : wanted) {
        while (t < ts) {
            const double r = h_norm(state, si);
            if (r > cap) {
                throw NormCapExceeded(r, cap, "H^" + std::to_string(si) + " norm " + std::to_string(r) +
                                                  " exceeded the safety cap " + std::to_string(cap) +
                                                  " at t = " + std::to_string(t));
            }
            const double full = options.mode == Mode::certified ? choose_step(si, r + options.norm_margin)
                                                                : options.fast_dt;
            // Relative slack absorbs drift in the accumulated time.
            const bool lands = ts - t <= full * (1.0 + 1e-9);
            const double T = lands ? ts - t : full;
            const double eps_step = eps * T / t_target;

            StepPlan plan{T, 0, options.M, options.mode};
            PicardOptions popts;
            popts.slack = options.slack;
            popts.t_start = t;
            popts.max_fast_iterations = options.max_fast_iterations;
            if (options.mode == Mode::certified) {
                plan.J = required_iterations(r, T, eps_step);
            } else {
                popts.fast_tolerance = eps_step;
            }
            auto step = picard_solve(state, plan, si, popts);
            plan.J = step.report.J_used;

            if (options.mode == Mode::certified) {
                ledger.picard += picard_bound(plan.J, T, r);
                if (!step.report.within_bound) {
                    ok = false;
                    ++result.uncertified_steps;
                }
            } else {
                ledger.picard += step.report.diffs.empty() ? 0.0 : step.report.diffs.back();
            }
            ledger.data *= 2.0 * std::sqrt(3.0 + T);
            ++ledger.steps_taken;
            ledger.diagnostics.quadrature_estimate += step.report.quadrature_estimate;

            state = std::move(step.slab.values.back());
            ledger.diagnostics.aliasing_residual =
                std::max(ledger.diagnostics.aliasing_residual, detail::aliasing_fraction(state, si));
            ledger.diagnostics.boundary_leakage =
                std::max(ledger.diagnostics.boundary_leakage, detail::edge_magnitude(inverse(state)));

            result.plan_log.push_back(plan);
            result.reports.push_back(std::move(step.report));
            t = lands ? ts : t + T;
        }
        result.times.push_back(ts);
        result.snapshots.push_back(ts == 0.0 ? phi : inverse(state));
        result.norms.push_back(ts == 0.0 ? r0 : h_norm(state, si));
        result.ledgers.push_back(ledger);
        result.certified.push_back(ok);
        result.plans_until.push_back(result.plan_log.size());
    }
    result.ledger = ledger;
    return result;
}

/// Solves for any real t. Negative times use u(t) = R K(R phi, -t): march the
/// reflected data forward and reflect every snapshot back.
inline SolveResult solve_ivp(const RealGridFunction& phi, double t, double eps, SobolevIndex s,
                             const MarchOptions& options = {}) {
    if (!std::isfinite(t)) throw InvalidInput("target time must be finite");
    if (t >= 0.0) return march_forward(phi, t, eps, s, options);

    MarchOptions mirrored = options;
    for (double& ts : mirrored.snapshot_times) {
        if (ts > 0.0 || ts < t) {
            throw InvalidInput("snapshot time " + std::to_string(ts) + " outside [" + std::to_string(t) + ", 0]");
        }
        ts = -ts;
    }
    SolveResult r = march_forward(reflect(phi), -t, eps, s, mirrored);
    for (auto& ts : r.times) ts = -ts;
    for (auto& f : r.snapshots) f = reflect(f);
    std::reverse(r.times.begin(), r.times.end());
    std::reverse(r.snapshots.begin(), r.snapshots.end());
    std::reverse(r.norms.begin(), r.norms.end());
    std::reverse(r.ledgers.begin(), r.ledgers.end());
    std::reverse(r.certified.begin(), r.certified.end());
    std::reverse(r.plans_until.begin(), r.plans_until.end());
    return r;
}

}  // namespace gardner
