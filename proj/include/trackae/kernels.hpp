#pragma once

#include <cstddef>
#include <string_view>

namespace trackae::kern {

// Flat double-precision kernels behind the tensor ops. Each entry has a scalar
// reference implementation and, on x86-64 with AVX2, a vectorized variant.
// The two are equivalence-tested against each other; selection happens once at
// startup and can be forced for reproducibility experiments.
struct Table {
    const char* name;

    // y[i] += a * x[i*sx]
    void (*axpy_gather)(double a, const double* x, std::size_t sx, double* y, std::size_t n);
    // y[i*sy] += a * x[i]
    void (*axpy_scatter)(double a, const double* x, double* y, std::size_t sy, std::size_t n);
    // sum_i x[i] * y[i*sy]
    double (*dot_gather)(const double* x, const double* y, std::size_t sy, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_abs_diff)(const double* x, const double* y, std::size_t n);
    void (*relu_fwd)(const double* x, double* y, std::size_t n);
    // gx[i] += gy[i] * (x[i] > 0)
    void (*relu_bwd)(const double* x, const double* gy, double* gx, std::size_t n);
    // g[i] += s * sign(x[i] - y[i]), sign(0) = 0
    void (*sign_scaled)(const double* x, const double* y, double s, double* g, std::size_t n);
    // In-place Adam update with precomputed bias corrections bc1 = 1-beta1^t, bc2 = 1-beta2^t.
    void (*adam_update)(double* p, const double* g, double* m, double* v, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bc1, double bc2);
};

const Table& scalar_table();

// True when the binary carries AVX2 kernels and the CPU supports them.
bool avx2_available();
const Table& avx2_table(); // falls back to scalar_table() when unavailable

// Active table; honors TRACKAE_KERNELS=scalar|avx2|auto on first use.
const Table& active();
// "scalar", "avx2" (throws std::invalid_argument if unsupported) or "auto".
void set_active(std::string_view which);

} // namespace trackae::kern
