#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kernel.hpp"

namespace graydose {

enum class Boundary {
    zero_pad,  // no exposure outside the grid
    periodic,  // grid tiles the plane
};

/// Repeated convolution of grid-sized fields with one kernel via real FFTs.
/// The kernel spectrum is computed once; each apply() costs one forward and
/// one inverse transform on the padded lattice.
class Convolver {
public:
    Convolver(const DiscreteKernel& kernel, std::size_t cols, std::size_t rows, Boundary boundary);
    ~Convolver();
    Convolver(const Convolver&) = delete;
    Convolver& operator=(const Convolver&) = delete;

    /// out = in (*) kernel, both row-major cols x rows.
    void apply(std::span<const double> in, std::span<double> out);

    std::size_t padded_cols() const noexcept { return nx_; }
    std::size_t padded_rows() const noexcept { return ny_; }

private:
    std::size_t cols_, rows_;
    std::size_t nx_, ny_;
    double* real_ = nullptr;
    void* spectrum_ = nullptr;
    void* forward_ = nullptr;
    void* inverse_ = nullptr;
    std::vector<std::complex<double>> kernel_spectrum_;
};

/// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t fft_friendly_size(std::size_t n);

}  // namespace graydose
