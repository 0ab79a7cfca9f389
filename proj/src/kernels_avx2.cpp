// AVX2/FMA variants of the flat kernels. This translation unit is compiled
// with -mavx2 -mfma and only ever entered after a runtime cpuid check.

#include "trackae/kernels.hpp"

#ifdef TRACKAE_AVX2_BUILD

#include <cmath>
#include <immintrin.h>

namespace trackae::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline __m256i gather_index(std::size_t s) {
    const long long ss = static_cast<long long>(s);
    return _mm256_set_epi64x(3 * ss, 2 * ss, ss, 0);
}

void axpy_gather_v(double a, const double* x, std::size_t sx, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    if (sx == 1) {
        for (; i + 4 <= n; i += 4) {
            __m256d vy = _mm256_loadu_pd(y + i);
            vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
            _mm256_storeu_pd(y + i, vy);
        }
    } else {
        const __m256i idx = gather_index(sx);
        for (; i + 4 <= n; i += 4) {
            __m256d vx = _mm256_i64gather_pd(x + i * sx, idx, 8);
            __m256d vy = _mm256_loadu_pd(y + i);
            _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
        }
    }
    for (; i < n; ++i) y[i] += a * x[i * sx];
}

void axpy_scatter_v(double a, const double* x, double* y, std::size_t sy, std::size_t n) {
    if (sy == 1) {
        axpy_gather_v(a, x, 1, y, n);
        return;
    }
    // AVX2 has no scatter store; strided writes stay scalar.
    for (std::size_t i = 0; i < n; ++i) y[i * sy] += a * x[i];
}

double dot_gather_v(const double* x, const double* y, std::size_t sy, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    if (sy == 1) {
        for (; i + 4 <= n; i += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    } else {
        const __m256i idx = gather_index(sy);
        for (; i + 4 <= n; i += 4) {
            __m256d vy = _mm256_i64gather_pd(y + i * sy, idx, 8);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), vy, acc);
        }
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i] * y[i * sy];
    return total;
}

double sum_v(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

double sum_abs_diff_v(const double* x, const double* y, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += std::fabs(x[i] - y[i]);
    return total;
}

void relu_fwd_v(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_v(const double* x, const double* gy, double* gx, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(gy + i));
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), add));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) gx[i] += gy[i];
}

void sign_scaled_v(const double* x, const double* y, double s, double* g, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d vs = _mm256_set1_pd(s);
    const __m256d vns = _mm256_set1_pd(-s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        __m256d pos = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ), vs);
        __m256d neg = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_LT_OQ), vns);
        __m256d add = _mm256_or_pd(pos, neg);
        _mm256_storeu_pd(g + i, _mm256_add_pd(_mm256_loadu_pd(g + i), add));
    }
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        if (d > 0.0) g[i] += s;
        else if (d < 0.0) g[i] -= s;
    }
}

void adam_update_v(double* p, const double* g, double* m, double* v, std::size_t n,
                   double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d vibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_fmadd_pd(v1mb1, vg, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(v1mb2, _mm256_mul_pd(vg, vg),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(vm, vibc1);
        __m256d vhat = _mm256_mul_pd(vv, vibc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

} // namespace

const Table& avx2_impl_table() {
    static const Table t{
        "avx2",          axpy_gather_v, axpy_scatter_v, dot_gather_v, sum_v,
        sum_abs_diff_v,  relu_fwd_v,    relu_bwd_v,     sign_scaled_v, adam_update_v,
    };
    return t;
}

} // namespace trackae::kern

#endif // TRACKAE_AVX2_BUILD
