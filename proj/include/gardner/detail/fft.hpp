#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>

namespace gardner::detail {

// Plans are created once per size with FFTW_ESTIMATE | FFTW_UNALIGNED so the
// same codelets run for every array; results are bitwise reproducible.
// Planning is serialized, execution is thread safe.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                 bool forward) {
        fftw_plan p = plan_for(in.size(), forward);
        // fftw_execute_dft does not modify the input of an out-of-place plan.
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
    }

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

    fftw_plan plan_for(std::size_t n, bool forward) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(n, forward);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* a = fftw_alloc_complex(n);
        auto* b = fftw_alloc_complex(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), a, b, forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        plans_.emplace(key, p);
        return p;
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

/// Unnormalized DFT, sign -1 for forward and +1 for backward.
inline void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, bool forward) {
    FftPlans::instance().execute(in, out, forward);
}

}  // namespace gardner::detail
