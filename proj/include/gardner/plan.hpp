#pragma once

#include <string_view>

namespace gardner {

enum class Mode { certified, fast };

constexpr std::string_view to_string(Mode m) noexcept {
    return m == Mode::certified ? "certified" : "fast";
}

/// One time step: slab length T, Picard iteration count J and M quadrature
/// intervals. In fast mode J is the count actually used by the stopping rule.
struct StepPlan {
    double T = 0.0;
    int J = 0;
    int M = 8;
    Mode mode = Mode::fast;

    friend bool operator==(const StepPlan&, const StepPlan&) = default;
};

}  // namespace gardner
