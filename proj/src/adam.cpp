#include "trackae/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "trackae/kernels.hpp"

namespace trackae {

void AdamState::reset(const std::vector<Parameter>& params) {
    step_count = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.value.shape);
        v.emplace_back(p.value.shape);
    }
}

void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, AdamState& state) {
    if (grads.size() != params.size())
        throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) + " grads for " +
                                    std::to_string(params.size()) + " parameters");
    if (state.m.size() != params.size()) state.reset(params);
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    const auto& k = kern::active();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (p.frozen) continue;
        if (!grads[i].same_shape(p.value))
            throw std::invalid_argument("adam_step: grad shape " + grads[i].shape_str() +
                                        " != param shape " + p.value.shape_str() + " for " + p.name);
        k.adam_update(p.value.data.data(), grads[i].data.data(), state.m[i].data.data(),
                      state.v[i].data.data(), p.value.numel(), state.lr, state.beta1, state.beta2,
                      state.eps, bc1, bc2);
    }
}

} // namespace trackae
