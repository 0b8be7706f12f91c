#pragma once

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "vec.hpp"

namespace polyscat {

namespace detail {
inline std::mutex& fftwPlannerMutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

// In-place complex FFT on a fixed n-d shape. FFTW_ESTIMATE keeps plans
// independent of timing, so results are reproducible run to run.
class FftPlan {
public:
    // dims in row-major order (slowest first).
    explicit FftPlan(std::vector<int> dims) : dims_(std::move(dims))
    {
        n_ = 1;
        for (int d : dims_) n_ *= static_cast<std::size_t>(d);
        data_ = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * n_));
        if (!data_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(detail::fftwPlannerMutex());
        auto* p = reinterpret_cast<fftw_complex*>(data_);
        fwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan()
    {
        std::lock_guard<std::mutex> lock(detail::fftwPlannerMutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(data_);
    }

    cplx* data() { return data_; }
    const cplx* data() const { return data_; }
    std::size_t size() const { return n_; }
    const std::vector<int>& dims() const { return dims_; }

    void forward() { fftw_execute(fwd_); }
    // Unnormalized; callers divide by size().
    void backward() { fftw_execute(bwd_); }

private:
    std::vector<int> dims_;
    std::size_t n_ = 0;
    cplx* data_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

} // namespace polyscat
