#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trackae/tensor.hpp"

namespace trackae {

// Named trainable tensor. Frozen parameters receive no updates and their
// Adam moments stay untouched.
struct Parameter {
    std::string name;
    Tensor value;
    bool frozen = false;
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<Tensor> m, v; // per-parameter moments, indexed like the parameter list

    void reset(const std::vector<Parameter>& params);
};

// One Adam step with bias correction. `grads` is indexed like `params`.
void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, AdamState& state);

} // namespace trackae
