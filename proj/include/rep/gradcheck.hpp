#pragma once
#include <cmath>
#include <functional>
#include <vector>

#include "rep/params.hpp"
#include "rep/rng.hpp"

namespace rep {

// A loss evaluation: computes the scalar loss for the current parameter
// values and fills every parameter's grad buffer (forward + backward).
// Must be deterministic in the parameters (dropout off).
template <typename S>
using LossFn = std::function<S(ParamRegistry<S>&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central finite differences on a deterministic coordinate subsample,
// compared against the supplied analytic gradients.
template <typename S>
GradCheckResult fd_compare(const LossFn<S>& fn, ParamRegistry<S>& params,
                           const std::vector<Tensor<S>>& analytic, double eps,
                           int64_t max_coords, uint64_t seed) {
    std::vector<std::pair<size_t, int64_t>> coords;
    for (size_t pi = 0; pi < params.size(); ++pi)
        for (int64_t i = 0; i < params.at(static_cast<int32_t>(pi)).value.numel(); ++i)
            coords.emplace_back(pi, i);
    Rng rng(seed);
    rng.shuffle(coords);
    if (max_coords > 0 && static_cast<int64_t>(coords.size()) > max_coords)
        coords.resize(static_cast<size_t>(max_coords));

    GradCheckResult result;
    for (const auto& [pi, i] : coords) {
        Param<S>& p = params.at(static_cast<int32_t>(pi));
        S saved = p.value.data[static_cast<size_t>(i)];
        p.value.data[static_cast<size_t>(i)] = saved + static_cast<S>(eps);
        double lp = static_cast<double>(fn(params));
        p.value.data[static_cast<size_t>(i)] = saved - static_cast<S>(eps);
        double lm = static_cast<double>(fn(params));
        p.value.data[static_cast<size_t>(i)] = saved;
        double fd = (lp - lm) / (2.0 * eps);
        double an = static_cast<double>(analytic[pi].data[static_cast<size_t>(i)]);
        // Central differences resolve gradients down to roughly
        // machine_eps / eps (~1e-11 absolute here); the floor keeps
        // sub-resolution gradients from registering as spurious error.
        double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        double rel = std::abs(fd - an) / denom;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_param = p.name;
            result.worst_index = i;
            result.analytic = an;
            result.numeric = fd;
        }
    }
    return result;
}

// Full check: one analytic pass, then finite differences on a subsample.
template <typename S>
GradCheckResult grad_check(const LossFn<S>& fn, ParamRegistry<S>& params,
                           double eps = 1e-5, int64_t max_coords = 0,
                           uint64_t seed = 7) {
    fn(params);  // fills analytic gradients
    std::vector<Tensor<S>> analytic;
    for (const auto& p : params.all()) analytic.push_back(p.grad);
    return fd_compare(fn, params, analytic, eps, max_coords, seed);
}

}  // namespace rep
