#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trackae {

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_err = 0.0;
    double limit = 0.0;
};

// Numerical self-checks: convolution brute-force oracle, adjoint identity and
// finite-difference gradient checks for every primitive plus a small composed
// autoencoder. `corrupt_backward` perturbs one analytic gradient before the
// comparison, as a negative control for the harness itself.
std::vector<CheckResult> run_self_checks(std::uint64_t seed, bool corrupt_backward = false);

} // namespace trackae
