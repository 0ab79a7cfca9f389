#include "trackae/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace trackae::kern {

#ifdef TRACKAE_AVX2_BUILD
const Table& avx2_impl_table(); // kernels_avx2.cpp

bool avx2_available() {
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
}

const Table& avx2_table() { return avx2_available() ? avx2_impl_table() : scalar_table(); }
#else
bool avx2_available() { return false; }
const Table& avx2_table() { return scalar_table(); }
#endif

namespace {

std::atomic<const Table*> g_active{nullptr};

const Table* pick_auto() { return avx2_available() ? &avx2_table() : &scalar_table(); }

const Table* initial_pick() {
    if (const char* env = std::getenv("TRACKAE_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return &scalar_table();
        if (v == "avx2" && avx2_available()) return &avx2_table();
    }
    return pick_auto();
}

} // namespace

const Table& active() {
    const Table* t = g_active.load(std::memory_order_acquire);
    if (!t) {
        t = initial_pick();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

void set_active(std::string_view which) {
    if (which == "scalar") {
        g_active.store(&scalar_table(), std::memory_order_release);
    } else if (which == "avx2") {
        if (!avx2_available()) throw std::invalid_argument("avx2 kernels not available on this host");
        g_active.store(&avx2_table(), std::memory_order_release);
    } else if (which == "auto") {
        g_active.store(pick_auto(), std::memory_order_release);
    } else {
        throw std::invalid_argument("unknown kernel set: " + std::string(which));
    }
}

} // namespace trackae::kern
