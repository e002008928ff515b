#include "convolver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "error.hpp"

namespace graydose {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

Convolver::Convolver(const DiscreteKernel& kernel, std::size_t cols, std::size_t rows, Boundary boundary)
    : cols_(cols), rows_(rows) {
    require(cols > 0 && rows > 0, ErrorCode::invalid_parameter, "convolution grid must be non-empty");
    const std::size_t h = kernel.half_width();
    if (boundary == Boundary::periodic) {
        nx_ = cols;
        ny_ = rows;
    } else {
        // Wrap-around from index distance N - d only reaches the kernel when N - (n - 1) <= h.
        nx_ = fft_friendly_size(cols + h);
        ny_ = fft_friendly_size(rows + h);
    }
    const std::size_t nxc = nx_ / 2 + 1;

    real_ = fftw_alloc_real(nx_ * ny_);
    spectrum_ = fftw_alloc_complex(ny_ * nxc);
    auto* spec = static_cast<fftw_complex*>(spectrum_);
    {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_2d(static_cast<int>(ny_), static_cast<int>(nx_), real_, spec, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_2d(static_cast<int>(ny_), static_cast<int>(nx_), spec, real_, FFTW_ESTIMATE);
    }

    // Kernel laid out circularly around (0, 0); periodic grids smaller than the
    // kernel accumulate the wrapped tails.
    std::fill(real_, real_ + nx_ * ny_, 0.0);
    const long n = static_cast<long>(h);
    const long lx = static_cast<long>(nx_);
    const long ly = static_cast<long>(ny_);
    for (long dy = -n; dy <= n; ++dy) {
        const long y = ((dy % ly) + ly) % ly;
        for (long dx = -n; dx <= n; ++dx) {
            const long x = ((dx % lx) + lx) % lx;
            real_[y * lx + x] += kernel.at(dy, dx);
        }
    }
    fftw_execute(static_cast<fftw_plan>(forward_));
    kernel_spectrum_.resize(ny_ * nxc);
    const double norm = 1.0 / static_cast<double>(nx_ * ny_);
    for (std::size_t i = 0; i < ny_ * nxc; ++i) kernel_spectrum_[i] = {spec[i][0] * norm, spec[i][1] * norm};
}

Convolver::~Convolver() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    if (inverse_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_));
    fftw_free(real_);
    fftw_free(spectrum_);
}

void Convolver::apply(std::span<const double> in, std::span<double> out) {
    require(in.size() == cols_ * rows_ && out.size() == cols_ * rows_, ErrorCode::incompatible_grid,
            "convolution input does not match the planned grid");
    std::fill(real_, real_ + nx_ * ny_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) std::copy_n(in.data() + r * cols_, cols_, real_ + r * nx_);
    fftw_execute(static_cast<fftw_plan>(forward_));
    auto* spec = static_cast<fftw_complex*>(spectrum_);
    const std::size_t count = ny_ * (nx_ / 2 + 1);
    for (std::size_t i = 0; i < count; ++i) {
        const std::complex<double> v = std::complex<double>(spec[i][0], spec[i][1]) * kernel_spectrum_[i];
        spec[i][0] = v.real();
        spec[i][1] = v.imag();
    }
    fftw_execute(static_cast<fftw_plan>(inverse_));
    for (std::size_t r = 0; r < rows_; ++r) std::copy_n(real_ + r * nx_, cols_, out.data() + r * cols_);
}

}  // namespace graydose
