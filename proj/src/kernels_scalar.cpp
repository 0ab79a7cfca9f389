#include "trackae/kernels.hpp"

#include <cmath>

namespace trackae::kern {
namespace {

void axpy_gather_s(double a, const double* x, std::size_t sx, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i * sx];
}

void axpy_scatter_s(double a, const double* x, double* y, std::size_t sy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i * sy] += a * x[i];
}

double dot_gather_s(const double* x, const double* y, std::size_t sy, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i * sy];
    return acc;
}

double sum_s(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sum_abs_diff_s(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i] - y[i]);
    return acc;
}

void relu_fwd_s(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_s(const double* x, const double* gy, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) gx[i] += gy[i];
}

void sign_scaled_s(const double* x, const double* y, double s, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        if (d > 0.0) g[i] += s;
        else if (d < 0.0) g[i] -= s;
    }
}

void adam_update_s(double* p, const double* g, double* m, double* v, std::size_t n,
                   double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

const Table& scalar_table() {
    static const Table t{
        "scalar",        axpy_gather_s, axpy_scatter_s, dot_gather_s, sum_s,
        sum_abs_diff_s,  relu_fwd_s,    relu_bwd_s,     sign_scaled_s, adam_update_s,
    };
    return t;
}

} // namespace trackae::kern
