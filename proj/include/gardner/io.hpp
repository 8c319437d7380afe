#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gardner/grid.hpp"
#include "gardner/oracle.hpp"
#include "gardner/profiles.hpp"
#include "gardner/spectral.hpp"
#include "gardner/stepper.hpp"

namespace gardner::io {

inline constexpr const char* kSchema = "gardner-certified/1";

/// Snapshots with more samples than this go to side files.
inline constexpr std::size_t kInlineSampleLimit = 4096;

enum class ProfileKind { gaussian, sech, soliton, file };
enum class OutputFormat { json_lines, csv };

struct ProfileSpec {
    ProfileKind kind = ProfileKind::gaussian;
    std::vector<double> params;  ///< (a, w, x0) for gaussian/sech, (c, x0) for soliton
    std::string path;            ///< file profiles only
};

struct RunConfig {
    ProfileSpec profile;
    int s = 3;
    double t_target = 0.0;
    double eps = 1e-4;
    double half_length = 30.0;
    std::size_t num_points = 512;
    Mode mode = Mode::fast;
    double dt = 1e-3;
    std::vector<double> snapshot_times;
    std::string output = "-";
    OutputFormat format = OutputFormat::json_lines;
    bool compare = false;
    std::optional<int> uncertainty_bits;
    double slack = 0.25;
    double norm_cap_factor = 10.0;
};

/// Every violated constraint of a command line, one per entry.
class UsageError : public InvalidInput {
public:
    explicit UsageError(std::vector<std::string> violations)
        : InvalidInput(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "usage error:";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::vector<double>> parse_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) {
        auto v = parse_number(part);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses the command line (without the program name) into a validated config.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Certified solver for u_t + u u_x + u^2 u_x + u_xxx = 0"};
    std::string profile, grid = "30,512", mode = "fast:1e-3", snapshots, format = "json-lines";
    RunConfig cfg;
    std::optional<double> t;
    std::optional<int> uncertainty;
    app.add_option("--profile", profile, "gaussian:a,w,x0 | sech:a,w,x0 | soliton:c,x0 | file:PATH");
    app.add_option("--s", cfg.s, "Sobolev index (>= 3 in certified mode)");
    app.add_option("--t", t, "target time (negative times use reflection)");
    app.add_option("--eps", cfg.eps, "error budget over the whole run");
    app.add_option("--grid", grid, "L,N: box [-L, L) with N points");
    app.add_option("--mode", mode, "certified | fast:DT");
    app.add_option("--snapshots", snapshots, "t1,t2,... output times");
    app.add_option("--out", cfg.output, "output path, '-' for stdout");
    app.add_option("--format", format, "json-lines | csv");
    app.add_flag("--compare", cfg.compare, "append distances to the reference RK4 solution");
    app.add_option("--uncertainty", uncertainty, "n: file data is within 2^-n of the true profile in H^s");
    app.add_option("--contraction-slack", cfg.slack, "tolerated excess of measured Picard differences over the bound");
    app.add_option("--norm-cap", cfg.norm_cap_factor, "abort when ||u(t)||_s exceeds this multiple of ||phi||_s");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw UsageError({app.help()});
    } catch (const CLI::ParseError& e) {
        throw UsageError({e.what()});
    }

    std::vector<std::string> bad;
    if (profile.empty()) {
        bad.emplace_back("--profile is required");
    } else {
        const auto colon = profile.find(':');
        const std::string kind = profile.substr(0, colon);
        const std::string rest = colon == std::string::npos ? "" : profile.substr(colon + 1);
        if (kind == "file") {
            cfg.profile.kind = ProfileKind::file;
            cfg.profile.path = rest;
            if (rest.empty()) bad.emplace_back("file profile needs a path: file:PATH");
        } else {
            const auto params = detail::parse_list(rest);
            std::size_t want = 0;
            if (kind == "gaussian") {
                cfg.profile.kind = ProfileKind::gaussian;
                want = 3;
            } else if (kind == "sech") {
                cfg.profile.kind = ProfileKind::sech;
                want = 3;
            } else if (kind == "soliton") {
                cfg.profile.kind = ProfileKind::soliton;
                want = 2;
            } else {
                bad.push_back("unknown profile kind '" + kind + "'");
            }
            if (want != 0) {
                if (!params || params->size() != want) {
                    bad.push_back("profile " + kind + " needs " + std::to_string(want) + " comma-separated numbers");
                } else {
                    cfg.profile.params = *params;
                    if (cfg.profile.kind != ProfileKind::soliton && !((*params)[1] > 0.0)) {
                        bad.emplace_back("profile width must be positive");
                    }
                    if (cfg.profile.kind == ProfileKind::soliton && !((*params)[0] > 0.0)) {
                        bad.emplace_back("soliton speed must be positive");
                    }
                }
            }
        }
    }

    if (!t) {
        bad.emplace_back("--t is required");
    } else {
        cfg.t_target = *t;
    }
    if (!(cfg.eps > 0.0)) bad.emplace_back("--eps must be positive");

    if (auto g = detail::split(grid, ','); g.size() != 2) {
        bad.emplace_back("--grid expects L,N");
    } else {
        const auto L = detail::parse_number(g[0]);
        const auto N = detail::parse_number(g[1]);
        if (!L || !(*L > 0.0)) bad.emplace_back("grid half-length L must be positive");
        else cfg.half_length = *L;
        if (!N || *N < 8 || *N != std::floor(*N) || (static_cast<std::size_t>(*N) & (static_cast<std::size_t>(*N) - 1)) != 0) {
            bad.push_back("grid point count N must be a power of two >= 8, got '" + g[1] + "'");
        } else {
            cfg.num_points = static_cast<std::size_t>(*N);
        }
    }

    if (mode == "certified") {
        cfg.mode = Mode::certified;
    } else if (mode.rfind("fast:", 0) == 0) {
        cfg.mode = Mode::fast;
        const auto dt = detail::parse_number(mode.substr(5));
        if (!dt || !(*dt > 0.0)) bad.emplace_back("fast mode step must be positive: fast:DT");
        else cfg.dt = *dt;
    } else {
        bad.push_back("--mode must be 'certified' or 'fast:DT', got '" + mode + "'");
    }

    if (cfg.mode == Mode::certified && cfg.s < 3) {
        bad.push_back("certified mode requires an integer Sobolev index s >= 3 (got s = " + std::to_string(cfg.s) + ")");
    }
    if (cfg.s < 0) bad.emplace_back("--s must be nonnegative");

    if (!snapshots.empty()) {
        auto list = detail::parse_list(snapshots);
        if (!list) {
            bad.emplace_back("--snapshots expects comma-separated numbers");
        } else {
            std::sort(list->begin(), list->end());
            cfg.snapshot_times = *list;
            if (t) {
                const double lo = std::min(0.0, *t), hi = std::max(0.0, *t);
                for (double ts : *list) {
                    if (ts < lo || ts > hi) {
                        bad.push_back("snapshot time " + detail::format_double(ts) + " outside [" +
                                      detail::format_double(lo) + ", " + detail::format_double(hi) + "]");
                    }
                }
            }
        }
    }

    if (format == "json-lines") cfg.format = OutputFormat::json_lines;
    else if (format == "csv") cfg.format = OutputFormat::csv;
    else bad.push_back("--format must be json-lines or csv, got '" + format + "'");

    if (uncertainty) {
        if (cfg.profile.kind != ProfileKind::file) bad.emplace_back("--uncertainty applies to file profiles only");
        if (*uncertainty < 0) bad.emplace_back("--uncertainty must be nonnegative");
        cfg.uncertainty_bits = uncertainty;
    }
    if (!(cfg.slack >= -1.0)) bad.emplace_back("--contraction-slack must be >= -1");
    if (!(cfg.norm_cap_factor > 0.0)) bad.emplace_back("--norm-cap must be positive");

    if (!bad.empty()) throw UsageError(std::move(bad));
    return cfg;
}

inline RunConfig parse_config(int argc, const char* const* argv) {
    return parse_config(std::vector<std::string>(argv + 1, argv + argc));
}

/// Reads a profile on the run grid: either two columns (x u) with x matching
/// the grid within 1e-12, or one column of N samples. '#' lines are comments.
inline RealGridFunction read_profile_file(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open profile file '" + path + "'");
    std::vector<double> samples;
    std::string line;
    std::size_t line_no = 0;
    int columns = -1;
    const double x_tol = 1e-12 * std::max(1.0, grid.half_length());
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::vector<double> vals;
        std::string tok;
        while (fields >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) {
                throw InvalidInput(path + ":" + std::to_string(line_no) + ": cannot parse '" + tok + "'");
            }
            if (!std::isfinite(v)) {
                throw NonFiniteSample(samples.size(), path + ":" + std::to_string(line_no) + ": non-finite value '" + tok + "'");
            }
            vals.push_back(v);
        }
        if (vals.size() != 1 && vals.size() != 2) {
            throw InvalidInput(path + ":" + std::to_string(line_no) + ": expected 1 or 2 columns");
        }
        if (columns == -1) columns = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != columns) {
            throw InvalidInput(path + ":" + std::to_string(line_no) + ": inconsistent column count");
        }
        if (samples.size() >= grid.size()) {
            throw InvalidInput(path + ": more than " + std::to_string(grid.size()) + " samples");
        }
        if (columns == 2) {
            const double expect = grid.x(samples.size());
            if (std::abs(vals[0] - expect) > x_tol) {
                throw InvalidInput(path + ":" + std::to_string(line_no) + ": x = " + detail::format_double(vals[0]) +
                                   " does not match grid point " + detail::format_double(expect));
            }
        }
        samples.push_back(vals.back());
    }
    if (samples.size() != grid.size()) {
        throw InvalidInput(path + ": found " + std::to_string(samples.size()) + " samples, grid has " +
                           std::to_string(grid.size()));
    }
    return RealGridFunction(grid, std::move(samples));
}

/// Writes "x u" lines with 17 significant digits, so reading back is exact.
inline void write_profile_file(const std::string& path, const RealGridFunction& f) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write profile file '" + path + "'");
    for (std::size_t i = 0; i < f.size(); ++i) {
        out << detail::format_double(f.grid().x(i)) << ' ' << detail::format_double(f[i]) << '\n';
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

inline RealGridFunction build_profile(const RunConfig& cfg, const GridSpec& grid) {
    const auto& p = cfg.profile.params;
    switch (cfg.profile.kind) {
        case ProfileKind::gaussian: return gaussian_profile(grid, p[0], p[1], p[2]);
        case ProfileKind::sech: return sech_profile(grid, p[0], p[1], p[2]);
        case ProfileKind::soliton: return oracle::gardner_soliton(grid, p[0], p[1], 0.0);
        case ProfileKind::file: return read_profile_file(cfg.profile.path, grid);
    }
    throw InvalidInput("unknown profile kind");
}

namespace detail {

struct OracleComparison {
    double sup_distance = 0.0;
    double h_distance = 0.0;
    double oracle_dt = 0.0;
};

// Reference solutions at each snapshot time, advancing the RK4 state in
// order of |t|; negative times run on reflected data.
inline std::vector<OracleComparison> compare_with_oracle(const RealGridFunction& phi, const SolveResult& result,
                                                         double dt, int s) {
    std::vector<std::size_t> order(result.times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(result.times[a]) < std::abs(result.times[b]); });
    std::vector<OracleComparison> out(order.size());
    RealGridFunction state_pos = phi, state_neg = reflect(phi);
    double t_pos = 0.0, t_neg = 0.0;
    for (std::size_t idx : order) {
        const double t = result.times[idx];
        RealGridFunction ref = phi;
        oracle::Ifrk4Diagnostics diag;
        if (t >= 0.0) {
            state_pos = oracle::ifrk4_solve(state_pos, t - t_pos, dt, &diag);
            t_pos = t;
            ref = state_pos;
        } else {
            state_neg = oracle::ifrk4_solve(state_neg, -t - t_neg, dt, &diag);
            t_neg = -t;
            ref = reflect(state_neg);
        }
        out[idx] = {sup_distance(result.snapshots[idx], ref),
                    h_distance(forward(result.snapshots[idx]), forward(ref), s), diag.dt_used};
    }
    return out;
}

inline nlohmann::ordered_json ledger_json(const ErrorLedger& l) {
    return {{"picard", l.picard},
            {"data", l.data},
            {"total", l.total()},
            {"steps_taken", l.steps_taken},
            {"diagnostics",
             {{"boundary_leakage", l.diagnostics.boundary_leakage},
              {"aliasing_residual", l.diagnostics.aliasing_residual},
              {"quadrature_estimate", l.diagnostics.quadrature_estimate}}}};
}

// Run-length encoded plans taken in [begin, end).
inline nlohmann::ordered_json plan_log_json(const std::vector<StepPlan>& plans, std::size_t begin, std::size_t end) {
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t i = begin; i < end;) {
        std::size_t j = i + 1;
        while (j < end && plans[j] == plans[i]) ++j;
        arr.push_back({{"T", plans[i].T},
                       {"J", plans[i].J},
                       {"M", plans[i].M},
                       {"mode", std::string(to_string(plans[i].mode))},
                       {"count", j - i}});
        i = j;
    }
    return arr;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
    static constexpr const char* kinds[] = {"gaussian", "sech", "soliton", "file"};
    nlohmann::ordered_json j;
    j["profile"] = {{"kind", kinds[static_cast<int>(c.profile.kind)]}, {"params", c.profile.params}, {"path", c.profile.path}};
    j["s"] = c.s;
    j["t"] = c.t_target;
    j["eps"] = c.eps;
    j["grid"] = {{"L", c.half_length}, {"N", c.num_points}};
    j["mode"] = std::string(to_string(c.mode));
    if (c.mode == Mode::fast) j["dt"] = c.dt;
    j["snapshots"] = c.snapshot_times;
    j["compare"] = c.compare;
    if (c.uncertainty_bits) j["uncertainty_bits"] = *c.uncertainty_bits;
    return j;
}

}  // namespace detail

/// Solves the configured problem and writes one record per snapshot.
/// Returns 0 on success, 2 when a certified run has a flagged step, 1 on error.
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    try {
        const GridSpec grid(cfg.half_length, cfg.num_points);
        const auto phi = build_profile(cfg, grid);
        const auto s = cfg.mode == Mode::certified ? SobolevIndex::certified(cfg.s) : SobolevIndex::diagnostic(cfg.s);
        if (s.below_certified_range()) log << "warning: s = " << cfg.s << " is below the certified range s >= 3\n";

        MarchOptions opts;
        opts.mode = cfg.mode;
        opts.fast_dt = cfg.dt;
        opts.slack = cfg.slack;
        opts.norm_cap_factor = cfg.norm_cap_factor;
        opts.input_uncertainty_bits = cfg.uncertainty_bits;
        opts.snapshot_times = cfg.snapshot_times;
        const auto result = solve_ivp(phi, cfg.t_target, cfg.eps, s, opts);

        std::vector<detail::OracleComparison> cmp;
        const double oracle_dt = cfg.mode == Mode::fast ? cfg.dt : 1e-3;
        if (cfg.compare) cmp = detail::compare_with_oracle(phi, result, oracle_dt, cfg.s);

        std::ofstream file;
        std::ostream* out = &std::cout;
        if (cfg.output != "-") {
            file.open(cfg.output);
            if (!file) throw Error("cannot open output '" + cfg.output + "'");
            out = &file;
        }
        const std::string side_prefix = cfg.output == "-" ? std::string("gardner") : cfg.output;

        if (cfg.format == OutputFormat::json_lines) {
            nlohmann::ordered_json meta;
            meta["schema"] = kSchema;
            meta["kind"] = "metadata";
            meta["generated_at"] = detail::utc_timestamp();
            meta["config"] = detail::config_json(cfg);
            meta["note"] = "ledger bounds exclude floating-point rounding and spatial truncation; "
                           "contraction is measured in sup over nodes of the H^s norm";
            *out << meta.dump() << '\n';
        } else {
            *out << "# " << kSchema << " generated_at=" << detail::utc_timestamp() << '\n';
            *out << "t,h_norm_s,ledger_picard,ledger_data,ledger_total,steps_taken,certified";
            if (cfg.compare) *out << ",oracle_sup_distance,oracle_h_distance";
            *out << '\n';
        }

        // Plan log ranges follow march order, which is reversed for negative time.
        const bool backward = cfg.t_target < 0.0;
        for (std::size_t i = 0; i < result.times.size(); ++i) {
            const ErrorLedger& L = result.ledgers[i];
            const bool certified = result.mode == Mode::certified && result.certified[i] && !s.below_certified_range();
            if (cfg.format == OutputFormat::csv) {
                *out << detail::format_double(result.times[i]) << ',' << detail::format_double(result.norms[i]) << ','
                     << detail::format_double(L.picard) << ',' << detail::format_double(L.data) << ','
                     << detail::format_double(L.total()) << ',' << L.steps_taken << ',' << (certified ? 1 : 0);
                if (cfg.compare) {
                    *out << ',' << detail::format_double(cmp[i].sup_distance) << ','
                         << detail::format_double(cmp[i].h_distance);
                }
                *out << '\n';
                continue;
            }
            nlohmann::ordered_json rec;
            rec["schema"] = kSchema;
            rec["kind"] = "snapshot";
            rec["index"] = i;
            rec["t"] = result.times[i];
            rec["s"] = cfg.s;
            rec["h_norm_s"] = result.norms[i];
            rec["ledger"] = detail::ledger_json(L);
            const std::size_t end = result.plans_until[i];
            std::size_t begin = 0;
            if (!backward && i > 0) begin = result.plans_until[i - 1];
            if (backward && i + 1 < result.times.size()) begin = result.plans_until[i + 1];
            rec["plan_log"] = detail::plan_log_json(result.plan_log, begin, end);
            rec["flags"] = {{"mode", std::string(to_string(result.mode))},
                            {"certified", certified},
                            {"uncertified_steps", result.uncertified_steps},
                            {"sobolev_below_certified_range", s.below_certified_range()}};
            if (cfg.compare) {
                rec["compare"] = {{"oracle", "ifrk4"},
                                  {"oracle_dt", cmp[i].oracle_dt},
                                  {"sup_distance", cmp[i].sup_distance},
                                  {"h_distance", cmp[i].h_distance}};
            }
            const auto& snap = result.snapshots[i];
            if (snap.size() > kInlineSampleLimit) {
                const std::string side = side_prefix + ".snapshot-" + std::to_string(i) + ".txt";
                write_profile_file(side, snap);
                rec["samples_file"] = side;
            } else {
                rec["samples"] = std::vector<double>(snap.samples().begin(), snap.samples().end());
            }
            *out << rec.dump() << '\n';
        }
        out->flush();
        if (!*out) throw Error("write failed for output '" + cfg.output + "'");
        return result.mode == Mode::certified && !result.all_certified() ? 2 : 0;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace gardner::io
