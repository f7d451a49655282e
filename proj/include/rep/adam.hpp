#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "rep/errors.hpp"
#include "rep/params.hpp"

namespace rep {

template <typename S>
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<std::vector<S>> m;  // first moments, one per parameter
    std::vector<std::vector<S>> v;  // second moments

    static AdamState init(const ParamRegistry<S>& params, double lr) {
        AdamState st;
        st.lr = lr;
        for (const auto& p : params.all()) {
            st.m.emplace_back(p.value.data.size(), S(0));
            st.v.emplace_back(p.value.data.size(), S(0));
        }
        return st;
    }
};

// One bias-corrected Adam update over all registered parameters.
template <typename S>
void adam_step(ParamRegistry<S>& params, AdamState<S>& state) {
    if (state.m.size() != params.size())
        throw DataError("adam_step: optimizer state does not match parameters");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param<S>& p = params.at(static_cast<int32_t>(pi));
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (size_t i = 0; i < p.value.data.size(); ++i) {
            S g = p.grad.data[i];
            if (!std::isfinite(static_cast<double>(g)))
                throw DataError("adam_step: non-finite gradient in parameter '" +
                                p.name + "'");
            m[i] = static_cast<S>(state.beta1 * m[i] + (1.0 - state.beta1) * g);
            v[i] = static_cast<S>(state.beta2 * v[i] + (1.0 - state.beta2) * g * g);
            double mhat = static_cast<double>(m[i]) / bc1;
            double vhat = static_cast<double>(v[i]) / bc2;
            p.value.data[i] -= static_cast<S>(state.lr * mhat /
                                              (std::sqrt(vhat) + state.eps));
        }
    }
}

}  // namespace rep
