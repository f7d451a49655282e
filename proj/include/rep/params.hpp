#pragma once
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "rep/rng.hpp"
#include "rep/tape.hpp"
#include "rep/tensor.hpp"

namespace rep {

template <typename S>
struct Param {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
};

// Named trainable tensors in registration order. The registration order is
// part of the model definition: checkpoints and optimizer state follow it.
template <typename S>
class ParamRegistry {
public:
    int32_t add(const std::string& name, Tensor<S> init) {
        if (index_.count(name)) throw DataError("duplicate parameter " + name);
        int32_t id = static_cast<int32_t>(params_.size());
        Tensor<S> grad(init.shape);
        params_.push_back({name, std::move(init), std::move(grad)});
        index_.emplace(name, id);
        return id;
    }

    size_t size() const { return params_.size(); }
    int64_t total_scalars() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.value.numel();
        return n;
    }

    Param<S>& at(int32_t id) { return params_[static_cast<size_t>(id)]; }
    const Param<S>& at(int32_t id) const { return params_[static_cast<size_t>(id)]; }
    Param<S>* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &params_[static_cast<size_t>(it->second)];
    }

    std::vector<Param<S>>& all() { return params_; }
    const std::vector<Param<S>>& all() const { return params_; }

    void zero_grads() {
        for (auto& p : params_)
            std::fill(p.grad.data.begin(), p.grad.data.end(), S(0));
    }

    // Registers every parameter as a tape leaf; vars[i] matches params()[i].
    std::vector<typename Tape<S>::Var> bind(Tape<S>& tape, bool requires_grad) const {
        std::vector<typename Tape<S>::Var> vars;
        vars.reserve(params_.size());
        for (const auto& p : params_) vars.push_back(tape.leaf(p.value, requires_grad));
        return vars;
    }

    // Copies tape gradients back; untouched parameters keep zero gradients.
    void collect(const Tape<S>& tape, const std::vector<typename Tape<S>::Var>& vars) {
        for (size_t i = 0; i < params_.size(); ++i)
            params_[i].grad = tape.grad(vars[i]);
    }

    template <typename T>
    ParamRegistry<T> cast() const {
        ParamRegistry<T> out;
        for (const auto& p : params_) out.add(p.name, p.value.template cast<T>());
        return out;
    }

private:
    std::vector<Param<S>> params_;
    std::unordered_map<std::string, int32_t> index_;
};

// ---- initializers ----------------------------------------------------------

template <typename S>
Tensor<S> init_normal(const Shape& shape, Rng& rng, double stddev) {
    Tensor<S> t(shape);
    for (auto& x : t.data) x = static_cast<S>(rng.normal() * stddev);
    return t;
}

template <typename S>
Tensor<S> init_xavier(int64_t fan_in, int64_t fan_out, Rng& rng) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<S> t({fan_in, fan_out});
    for (auto& x : t.data) x = static_cast<S>((rng.unit() * 2.0 - 1.0) * a);
    return t;
}

template <typename S>
Tensor<S> init_const(const Shape& shape, S v) {
    Tensor<S> t(shape);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

}  // namespace rep
