#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackae/kernels.hpp"
#include "trackae/rng.hpp"

using namespace trackae;

namespace {

std::vector<double> random_vec(std::size_t n, CounterRng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

// The AVX2 variants must agree with the scalar reference on every kernel.
// Reductions may reorder sums, so those compare within 1e-12 relative.
TEST_CASE("kernel tables: scalar vs simd equivalence") {
    if (!kern::avx2_available()) {
        MESSAGE("avx2 unavailable on this host, scalar-only");
        return;
    }
    const auto& ks = kern::scalar_table();
    const auto& kv = kern::avx2_table();
    CounterRng rng(0xfeed);

    for (int it = 0; it < 200; ++it) {
        const std::size_t n = 1 + rng.next_below(70);
        const std::size_t stride = 1 + rng.next_below(3);
        const double a = rng.uniform(-2.0, 2.0);

        auto x = random_vec(n * stride + 4, rng);
        auto y1 = random_vec(n, rng);
        auto y2 = y1;
        ks.axpy_gather(a, x.data(), stride, y1.data(), n);
        kv.axpy_gather(a, x.data(), stride, y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-12));

        auto s1 = random_vec(n * stride + 4, rng);
        auto s2 = s1;
        auto xc = random_vec(n, rng);
        ks.axpy_scatter(a, xc.data(), s1.data(), stride, n);
        kv.axpy_scatter(a, xc.data(), s2.data(), stride, n);
        for (std::size_t i = 0; i < s1.size(); ++i) CHECK(close(s1[i], s2[i], 1e-12));

        CHECK(close(ks.dot_gather(xc.data(), x.data(), stride, n),
                    kv.dot_gather(xc.data(), x.data(), stride, n), 1e-12));
        CHECK(close(ks.sum(x.data(), x.size()), kv.sum(x.data(), x.size()), 1e-12));

        auto b = random_vec(x.size(), rng);
        CHECK(close(ks.sum_abs_diff(x.data(), b.data(), x.size()),
                    kv.sum_abs_diff(x.data(), b.data(), x.size()), 1e-12));
    }
}

TEST_CASE("kernel tables: elementwise ops match exactly") {
    if (!kern::avx2_available()) return;
    const auto& ks = kern::scalar_table();
    const auto& kv = kern::avx2_table();
    CounterRng rng(0xbeef);
    for (int it = 0; it < 50; ++it) {
        const std::size_t n = 1 + rng.next_below(130);
        auto x = random_vec(n, rng);
        auto g = random_vec(n, rng);

        std::vector<double> r1(n), r2(n);
        ks.relu_fwd(x.data(), r1.data(), n);
        kv.relu_fwd(x.data(), r2.data(), n);
        CHECK(r1 == r2);

        auto g1 = random_vec(n, rng);
        auto g2 = g1;
        ks.relu_bwd(x.data(), g.data(), g1.data(), n);
        kv.relu_bwd(x.data(), g.data(), g2.data(), n);
        CHECK(g1 == g2);

        auto y = random_vec(n, rng);
        auto a1 = random_vec(n, rng);
        auto a2 = a1;
        ks.sign_scaled(x.data(), y.data(), 0.37, a1.data(), n);
        kv.sign_scaled(x.data(), y.data(), 0.37, a2.data(), n);
        CHECK(a1 == a2);
    }
}

TEST_CASE("kernel tables: adam update equivalence") {
    if (!kern::avx2_available()) return;
    const auto& ks = kern::scalar_table();
    const auto& kv = kern::avx2_table();
    CounterRng rng(0xadab);
    const std::size_t n = 97;
    auto p1 = random_vec(n, rng);
    auto p2 = p1;
    auto g = random_vec(n, rng);
    std::vector<double> m1(n, 0), v1(n, 0), m2(n, 0), v2(n, 0);
    for (int step = 1; step <= 5; ++step) {
        const double bc1 = 1.0 - std::pow(0.9, step);
        const double bc2 = 1.0 - std::pow(0.999, step);
        ks.adam_update(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
        kv.adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2);
    }
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(close(p1[i], p2[i], 1e-12));
        CHECK(close(m1[i], m2[i], 1e-12));
        CHECK(close(v1[i], v2[i], 1e-12));
    }
}

TEST_CASE("kernel selection override") {
    kern::set_active("scalar");
    CHECK(std::string(kern::active().name) == "scalar");
    kern::set_active("auto");
    CHECK_THROWS_AS(kern::set_active("bogus"), std::invalid_argument);
}
