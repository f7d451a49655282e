#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rep/tensor.hpp"

namespace rep {

namespace detail {

// C(m,n) += A(m,k) * B(k,n)
template <typename S>
void gemm_nn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            S av = arow[p];
            if (av == S(0)) continue;
            const S* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m,n) += A(m,k) * B(n,k)^T
template <typename S>
void gemm_nt(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const S* brow = b + j * k;
            S acc = S(0);
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C(k,n) += A(m,k)^T * B(m,n)
template <typename S>
void gemm_tn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        const S* brow = b + i * n;
        for (int64_t p = 0; p < k; ++p) {
            S av = arow[p];
            if (av == S(0)) continue;
            S* crow = c + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

// Records every operation whose inputs require gradients; backward() walks
// the record in reverse creation order, which is a topological order by
// construction. One tape per forward pass; tapes are not thread-safe.
template <typename S>
class Tape {
public:
    using Var = int32_t;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor<S> value, bool requires_grad) {
        return push(std::move(value), requires_grad, {});
    }

    const Tensor<S>& value(Var v) const { return nodes_[check(v)].value; }
    const Tensor<S>& grad(Var v) const {
        const Node& n = nodes_[check(v)];
        if (!n.needs || n.grad.data.empty())
            throw ShapeError("grad: variable has no gradient");
        return n.grad;
    }
    size_t size() const { return nodes_.size(); }

    // ---- arithmetic -------------------------------------------------------

    Var add(Var a, Var b) {
        require(value(a).shape == value(b).shape, "add", a, b);
        Tensor<S> out = value(a);
        const Tensor<S>& vb = value(b);
        for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
        Var o = push(std::move(out), needs_grad(a) || needs_grad(b), [this, a, b](Var o) {
            const auto& g = nodes_[o].grad;
            accumulate(a, g.data);
            accumulate(b, g.data);
        });
        return o;
    }

    Var scale(Var a, S c) {
        Tensor<S> out = value(a);
        for (auto& x : out.data) x *= c;
        return push(std::move(out), needs_grad(a), [this, a, c](Var o) {
            const auto& g = nodes_[o].grad;
            if (!needs_grad(a)) return;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += c * g.data[i];
        });
    }

    Var mul(Var a, Var b) {
        require(value(a).shape == value(b).shape, "mul", a, b);
        Tensor<S> out = value(a);
        const Tensor<S>& vb = value(b);
        for (int64_t i = 0; i < out.numel(); ++i) out.data[i] *= vb.data[i];
        return push(std::move(out), needs_grad(a) || needs_grad(b), [this, a, b](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& va = nodes_[a].value;
            const auto& vb2 = nodes_[b].value;
            if (needs_grad(a)) {
                auto& ga = nodes_[a].grad;
                for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * vb2.data[i];
            }
            if (needs_grad(b)) {
                auto& gb = nodes_[b].grad;
                for (int64_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * va.data[i];
            }
        });
    }

    // Elementwise product with a constant tensor (e.g. a padding mask).
    Var mul_const(Var a, Tensor<S> m) {
        require(value(a).shape == m.shape, "mul_const", a, a);
        Tensor<S> out = value(a);
        for (int64_t i = 0; i < out.numel(); ++i) out.data[i] *= m.data[i];
        auto mask = std::make_shared<Tensor<S>>(std::move(m));
        return push(std::move(out), needs_grad(a), [this, a, mask](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * mask->data[i];
        });
    }

    // ---- matrix products --------------------------------------------------

    // (m,k)x(k,n); (B,m,k)x(B,k,n); (B,m,k)x(k,n)
    Var matmul(Var a, Var b) {
        const Tensor<S>& va = value(a);
        const Tensor<S>& vb = value(b);
        int64_t batch = 1, m, k, n;
        bool b_shared = false;
        if (va.rank() == 2 && vb.rank() == 2) {
            m = va.dim(0); k = va.dim(1);
            require(vb.dim(0) == k, "matmul", a, b);
            n = vb.dim(1);
        } else if (va.rank() == 3 && vb.rank() == 3) {
            batch = va.dim(0); m = va.dim(1); k = va.dim(2);
            require(vb.dim(0) == batch && vb.dim(1) == k, "matmul", a, b);
            n = vb.dim(2);
        } else if (va.rank() == 3 && vb.rank() == 2) {
            batch = va.dim(0); m = va.dim(1); k = va.dim(2);
            require(vb.dim(0) == k, "matmul", a, b);
            n = vb.dim(1);
            b_shared = true;
        } else {
            require(false, "matmul", a, b);
            return -1;
        }
        Shape out_shape = va.rank() == 2 ? Shape{m, n} : Shape{batch, m, n};
        Tensor<S> out(out_shape);
        for (int64_t bi = 0; bi < batch; ++bi)
            detail::gemm_nn(va.ptr() + bi * m * k,
                            vb.ptr() + (b_shared ? 0 : bi * k * n),
                            out.ptr() + bi * m * n, m, k, n);
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [this, a, b, batch, m, k, n, b_shared](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& va2 = nodes_[a].value;
            const auto& vb2 = nodes_[b].value;
            for (int64_t bi = 0; bi < batch; ++bi) {
                const S* gp = g.ptr() + bi * m * n;
                const S* ap = va2.ptr() + bi * m * k;
                const S* bp = vb2.ptr() + (b_shared ? 0 : bi * k * n);
                if (needs_grad(a))  // dA += dC * B^T
                    detail::gemm_nt(gp, bp, nodes_[a].grad.ptr() + bi * m * k, m, n, k);
                if (needs_grad(b))  // dB += A^T * dC
                    detail::gemm_tn(ap, gp,
                                    nodes_[b].grad.ptr() + (b_shared ? 0 : bi * k * n),
                                    m, k, n);
            }
        });
    }

    // A * B^T: (B,m,k)x(B,n,k)->(B,m,n), or 2D.
    Var matmul_nt(Var a, Var b) {
        const Tensor<S>& va = value(a);
        const Tensor<S>& vb = value(b);
        int64_t batch = 1, m, k, n;
        if (va.rank() == 2 && vb.rank() == 2) {
            m = va.dim(0); k = va.dim(1);
            require(vb.dim(1) == k, "matmul_nt", a, b);
            n = vb.dim(0);
        } else if (va.rank() == 3 && vb.rank() == 3) {
            batch = va.dim(0); m = va.dim(1); k = va.dim(2);
            require(vb.dim(0) == batch && vb.dim(2) == k, "matmul_nt", a, b);
            n = vb.dim(1);
        } else {
            require(false, "matmul_nt", a, b);
            return -1;
        }
        Shape out_shape = va.rank() == 2 ? Shape{m, n} : Shape{batch, m, n};
        Tensor<S> out(out_shape);
        for (int64_t bi = 0; bi < batch; ++bi)
            detail::gemm_nt(va.ptr() + bi * m * k, vb.ptr() + bi * n * k,
                            out.ptr() + bi * m * n, m, k, n);
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [this, a, b, batch, m, k, n](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& va2 = nodes_[a].value;
            const auto& vb2 = nodes_[b].value;
            for (int64_t bi = 0; bi < batch; ++bi) {
                const S* gp = g.ptr() + bi * m * n;
                if (needs_grad(a))  // dA += dC * B
                    detail::gemm_nn(gp, vb2.ptr() + bi * n * k,
                                    nodes_[a].grad.ptr() + bi * m * k, m, n, k);
                if (needs_grad(b))  // dB += dC^T * A
                    detail::gemm_tn(gp, va2.ptr() + bi * m * k,
                                    nodes_[b].grad.ptr() + bi * n * k, m, n, k);
            }
        });
    }

    // ---- broadcasts -------------------------------------------------------

    // x(..., d) + bias(d)
    Var add_bias(Var x, Var b) {
        const Tensor<S>& vx = value(x);
        const Tensor<S>& vb = value(b);
        require(vb.rank() == 1 && vx.rank() >= 1 &&
                    vx.dim(vx.rank() - 1) == vb.dim(0),
                "add_bias", x, b);
        int64_t d = vb.dim(0), rows = vx.numel() / d;
        Tensor<S> out = vx;
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < d; ++j) out.data[r * d + j] += vb.data[j];
        return push(std::move(out), needs_grad(x) || needs_grad(b),
                    [this, x, b, rows, d](Var o) {
            const auto& g = nodes_[o].grad;
            if (needs_grad(x)) accumulate(x, g.data);
            if (needs_grad(b)) {
                auto& gb = nodes_[b].grad;
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < d; ++j) gb.data[j] += g.data[r * d + j];
            }
        });
    }

    // x(B,T,d) + m(T,d), broadcast over the batch.
    Var add_seq(Var x, Var m) {
        const Tensor<S>& vx = value(x);
        const Tensor<S>& vm = value(m);
        require(vx.rank() == 3 && vm.rank() == 2 && vx.dim(1) == vm.dim(0) &&
                    vx.dim(2) == vm.dim(1),
                "add_seq", x, m);
        int64_t batch = vx.dim(0), td = vm.numel();
        Tensor<S> out = vx;
        for (int64_t bi = 0; bi < batch; ++bi)
            for (int64_t i = 0; i < td; ++i) out.data[bi * td + i] += vm.data[i];
        return push(std::move(out), needs_grad(x) || needs_grad(m),
                    [this, x, m, batch, td](Var o) {
            const auto& g = nodes_[o].grad;
            if (needs_grad(x)) accumulate(x, g.data);
            if (needs_grad(m)) {
                auto& gm = nodes_[m].grad;
                for (int64_t bi = 0; bi < batch; ++bi)
                    for (int64_t i = 0; i < td; ++i) gm.data[i] += g.data[bi * td + i];
            }
        });
    }

    // ---- nonlinearities ----------------------------------------------------

    Var tanh_op(Var a) {
        Tensor<S> out = value(a);
        for (auto& x : out.data) x = std::tanh(x);
        return push(std::move(out), needs_grad(a), [this, a](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            const auto& y = nodes_[o].value;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i)
                ga.data[i] += g.data[i] * (S(1) - y.data[i] * y.data[i]);
        });
    }

    Var relu(Var a) {
        Tensor<S> out = value(a);
        for (auto& x : out.data) x = x > S(0) ? x : S(0);
        return push(std::move(out), needs_grad(a), [this, a](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            const auto& vx = nodes_[a].value;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i)
                if (vx.data[i] > S(0)) ga.data[i] += g.data[i];
        });
    }

    Var softmax_last(Var a) {
        const Tensor<S>& vx = value(a);
        require(vx.rank() >= 1, "softmax_last", a, a);
        int64_t n = vx.dim(vx.rank() - 1), rows = vx.numel() / n;
        Tensor<S> out = vx;
        for (int64_t r = 0; r < rows; ++r) {
            S* row = out.ptr() + r * n;
            S mx = row[0];
            for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
            S sum = S(0);
            for (int64_t j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            for (int64_t j = 0; j < n; ++j) row[j] /= sum;
        }
        return push(std::move(out), needs_grad(a), [this, a, rows, n](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            const auto& y = nodes_[o].value;
            auto& ga = nodes_[a].grad;
            for (int64_t r = 0; r < rows; ++r) {
                const S* gr = g.ptr() + r * n;
                const S* yr = y.ptr() + r * n;
                S dot = S(0);
                for (int64_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
                S* gar = ga.ptr() + r * n;
                for (int64_t j = 0; j < n; ++j) gar[j] += yr[j] * (gr[j] - dot);
            }
        });
    }

    Var log_softmax_last(Var a) {
        const Tensor<S>& vx = value(a);
        require(vx.rank() >= 1, "log_softmax_last", a, a);
        int64_t n = vx.dim(vx.rank() - 1), rows = vx.numel() / n;
        Tensor<S> out = vx;
        for (int64_t r = 0; r < rows; ++r) {
            S* row = out.ptr() + r * n;
            S mx = row[0];
            for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
            S sum = S(0);
            for (int64_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
            S lse = mx + std::log(sum);
            for (int64_t j = 0; j < n; ++j) row[j] -= lse;
        }
        return push(std::move(out), needs_grad(a), [this, a, rows, n](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            const auto& y = nodes_[o].value;
            auto& ga = nodes_[a].grad;
            for (int64_t r = 0; r < rows; ++r) {
                const S* gr = g.ptr() + r * n;
                const S* yr = y.ptr() + r * n;
                S gsum = S(0);
                for (int64_t j = 0; j < n; ++j) gsum += gr[j];
                S* gar = ga.ptr() + r * n;
                for (int64_t j = 0; j < n; ++j)
                    gar[j] += gr[j] - std::exp(yr[j]) * gsum;
            }
        });
    }

    // Normalizes over the last axis, then applies elementwise gain and bias.
    Var layer_norm(Var x, Var gain, Var bias, S eps = S(1e-5)) {
        const Tensor<S>& vx = value(x);
        const Tensor<S>& vg = value(gain);
        const Tensor<S>& vb = value(bias);
        int64_t d = vx.dim(vx.rank() - 1);
        require(vg.rank() == 1 && vb.rank() == 1 && vg.dim(0) == d && vb.dim(0) == d,
                "layer_norm", x, gain);
        int64_t rows = vx.numel() / d;
        Tensor<S> out(vx.shape);
        auto xhat = std::make_shared<Tensor<S>>(vx.shape);
        auto inv_sigma = std::make_shared<std::vector<S>>(static_cast<size_t>(rows));
        for (int64_t r = 0; r < rows; ++r) {
            const S* row = vx.ptr() + r * d;
            S mean = S(0);
            for (int64_t j = 0; j < d; ++j) mean += row[j];
            mean /= S(d);
            S var = S(0);
            for (int64_t j = 0; j < d; ++j) {
                S c = row[j] - mean;
                var += c * c;
            }
            var /= S(d);
            S inv = S(1) / std::sqrt(var + eps);
            (*inv_sigma)[static_cast<size_t>(r)] = inv;
            S* hrow = xhat->ptr() + r * d;
            S* orow = out.ptr() + r * d;
            for (int64_t j = 0; j < d; ++j) {
                hrow[j] = (row[j] - mean) * inv;
                orow[j] = hrow[j] * vg.data[j] + vb.data[j];
            }
        }
        return push(std::move(out), needs_grad(x) || needs_grad(gain) || needs_grad(bias),
                    [this, x, gain, bias, rows, d, xhat, inv_sigma](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& vg2 = nodes_[gain].value;
            for (int64_t r = 0; r < rows; ++r) {
                const S* gr = g.ptr() + r * d;
                const S* hr = xhat->ptr() + r * d;
                if (needs_grad(gain)) {
                    auto& gg = nodes_[gain].grad;
                    for (int64_t j = 0; j < d; ++j) gg.data[j] += gr[j] * hr[j];
                }
                if (needs_grad(bias)) {
                    auto& gb = nodes_[bias].grad;
                    for (int64_t j = 0; j < d; ++j) gb.data[j] += gr[j];
                }
                if (needs_grad(x)) {
                    S m1 = S(0), m2 = S(0);
                    for (int64_t j = 0; j < d; ++j) {
                        S dh = gr[j] * vg2.data[j];
                        m1 += dh;
                        m2 += dh * hr[j];
                    }
                    m1 /= S(d);
                    m2 /= S(d);
                    S inv = (*inv_sigma)[static_cast<size_t>(r)];
                    S* gx = nodes_[x].grad.ptr() + r * d;
                    for (int64_t j = 0; j < d; ++j) {
                        S dh = gr[j] * vg2.data[j];
                        gx[j] += inv * (dh - m1 - hr[j] * m2);
                    }
                }
            }
        });
    }

    // ---- structure --------------------------------------------------------

    // table(V,d) rows selected by ids; out gets shape lead + {d}.
    Var embedding(Var table, std::vector<int32_t> ids, Shape lead) {
        const Tensor<S>& vt = value(table);
        require(vt.rank() == 2, "embedding_gather", table, table);
        if (shape_numel(lead) != static_cast<int64_t>(ids.size()))
            throw ShapeError("embedding_gather: lead shape " + shape_str(lead) +
                             " does not cover " + std::to_string(ids.size()) + " ids");
        int64_t v = vt.dim(0), d = vt.dim(1);
        for (int32_t id : ids)
            if (id < 0 || id >= v)
                throw ShapeError("embedding_gather: id " + std::to_string(id) +
                                 " out of range for table " + shape_str(vt.shape));
        Shape out_shape = lead;
        out_shape.push_back(d);
        Tensor<S> out(out_shape);
        for (size_t i = 0; i < ids.size(); ++i)
            std::copy_n(vt.ptr() + static_cast<int64_t>(ids[i]) * d, d,
                        out.ptr() + static_cast<int64_t>(i) * d);
        auto idv = std::make_shared<std::vector<int32_t>>(std::move(ids));
        return push(std::move(out), needs_grad(table), [this, table, idv, d](Var o) {
            if (!needs_grad(table)) return;
            const auto& g = nodes_[o].grad;
            auto& gt = nodes_[table].grad;
            for (size_t i = 0; i < idv->size(); ++i) {
                S* dst = gt.ptr() + static_cast<int64_t>((*idv)[i]) * d;
                const S* src = g.ptr() + static_cast<int64_t>(i) * d;
                for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }

    // Concatenate two rank-3 tensors along axis 1.
    Var concat1(Var a, Var b) {
        const Tensor<S>& va = value(a);
        const Tensor<S>& vb = value(b);
        require(va.rank() == 3 && vb.rank() == 3 && va.dim(0) == vb.dim(0) &&
                    va.dim(2) == vb.dim(2),
                "concat", a, b);
        int64_t batch = va.dim(0), ta = va.dim(1), tb = vb.dim(1), d = va.dim(2);
        Tensor<S> out({batch, ta + tb, d});
        for (int64_t bi = 0; bi < batch; ++bi) {
            std::copy_n(va.ptr() + bi * ta * d, ta * d, out.ptr() + bi * (ta + tb) * d);
            std::copy_n(vb.ptr() + bi * tb * d, tb * d,
                        out.ptr() + bi * (ta + tb) * d + ta * d);
        }
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [this, a, b, batch, ta, tb, d](Var o) {
            const auto& g = nodes_[o].grad;
            for (int64_t bi = 0; bi < batch; ++bi) {
                if (needs_grad(a)) {
                    S* ga = nodes_[a].grad.ptr() + bi * ta * d;
                    const S* src = g.ptr() + bi * (ta + tb) * d;
                    for (int64_t i = 0; i < ta * d; ++i) ga[i] += src[i];
                }
                if (needs_grad(b)) {
                    S* gb = nodes_[b].grad.ptr() + bi * tb * d;
                    const S* src = g.ptr() + bi * (ta + tb) * d + ta * d;
                    for (int64_t i = 0; i < tb * d; ++i) gb[i] += src[i];
                }
            }
        });
    }

    // Rows [start, start+len) of axis 1 of a rank-3 tensor.
    Var slice1(Var x, int64_t start, int64_t len) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 3 && start >= 0 && len >= 0 && start + len <= vx.dim(1),
                "split", x, x);
        int64_t batch = vx.dim(0), t = vx.dim(1), d = vx.dim(2);
        Tensor<S> out({batch, len, d});
        for (int64_t bi = 0; bi < batch; ++bi)
            std::copy_n(vx.ptr() + (bi * t + start) * d, len * d, out.ptr() + bi * len * d);
        return push(std::move(out), needs_grad(x), [this, x, start, len, batch, t, d](Var o) {
            if (!needs_grad(x)) return;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (int64_t bi = 0; bi < batch; ++bi) {
                S* dst = gx.ptr() + (bi * t + start) * d;
                const S* src = g.ptr() + bi * len * d;
                for (int64_t i = 0; i < len * d; ++i) dst[i] += src[i];
            }
        });
    }

    // (B,T,d) -> (B*h,T,d/h): column blocks become separate batch entries.
    Var split_heads(Var x, int64_t h) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 3 && h > 0 && vx.dim(2) % h == 0, "split", x, x);
        int64_t batch = vx.dim(0), t = vx.dim(1), d = vx.dim(2), dk = d / h;
        Tensor<S> out({batch * h, t, dk});
        for (int64_t bi = 0; bi < batch; ++bi)
            for (int64_t k = 0; k < h; ++k)
                for (int64_t i = 0; i < t; ++i)
                    std::copy_n(vx.ptr() + (bi * t + i) * d + k * dk, dk,
                                out.ptr() + ((bi * h + k) * t + i) * dk);
        return push(std::move(out), needs_grad(x), [this, x, batch, t, d, h](Var o) {
            if (!needs_grad(x)) return;
            int64_t dk = d / h;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t k = 0; k < h; ++k)
                    for (int64_t i = 0; i < t; ++i) {
                        const S* src = g.ptr() + ((bi * h + k) * t + i) * dk;
                        S* dst = gx.ptr() + (bi * t + i) * d + k * dk;
                        for (int64_t j = 0; j < dk; ++j) dst[j] += src[j];
                    }
        });
    }

    // Inverse of split_heads.
    Var merge_heads(Var x, int64_t h) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 3 && h > 0 && vx.dim(0) % h == 0, "concat", x, x);
        int64_t batch = vx.dim(0) / h, t = vx.dim(1), dk = vx.dim(2), d = dk * h;
        Tensor<S> out({batch, t, d});
        for (int64_t bi = 0; bi < batch; ++bi)
            for (int64_t k = 0; k < h; ++k)
                for (int64_t i = 0; i < t; ++i)
                    std::copy_n(vx.ptr() + ((bi * h + k) * t + i) * dk, dk,
                                out.ptr() + (bi * t + i) * d + k * dk);
        return push(std::move(out), needs_grad(x), [this, x, batch, t, dk, h](Var o) {
            if (!needs_grad(x)) return;
            int64_t d = dk * h;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t k = 0; k < h; ++k)
                    for (int64_t i = 0; i < t; ++i) {
                        const S* src = g.ptr() + (bi * t + i) * d + k * dk;
                        S* dst = gx.ptr() + ((bi * h + k) * t + i) * dk;
                        for (int64_t j = 0; j < dk; ++j) dst[j] += src[j];
                    }
        });
    }

    // x(N,d) -> rows[i] selected -> (M,d)
    Var gather_rows(Var x, std::vector<int64_t> rows) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 2, "embedding_gather", x, x);
        int64_t n = vx.dim(0), d = vx.dim(1);
        for (int64_t r : rows)
            if (r < 0 || r >= n)
                throw ShapeError("gather_rows: row " + std::to_string(r) +
                                 " out of range for " + shape_str(vx.shape));
        Tensor<S> out({static_cast<int64_t>(rows.size()), d});
        for (size_t i = 0; i < rows.size(); ++i)
            std::copy_n(vx.ptr() + rows[i] * d, d, out.ptr() + static_cast<int64_t>(i) * d);
        auto rv = std::make_shared<std::vector<int64_t>>(std::move(rows));
        return push(std::move(out), needs_grad(x), [this, x, rv, d](Var o) {
            if (!needs_grad(x)) return;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (size_t i = 0; i < rv->size(); ++i) {
                S* dst = gx.ptr() + (*rv)[i] * d;
                const S* src = g.ptr() + static_cast<int64_t>(i) * d;
                for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }

    // (B,1,d) -> (B,n,d)
    Var repeat1(Var x, int64_t n) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 3 && vx.dim(1) == 1 && n > 0, "repeat", x, x);
        int64_t batch = vx.dim(0), d = vx.dim(2);
        Tensor<S> out({batch, n, d});
        for (int64_t bi = 0; bi < batch; ++bi)
            for (int64_t i = 0; i < n; ++i)
                std::copy_n(vx.ptr() + bi * d, d, out.ptr() + (bi * n + i) * d);
        return push(std::move(out), needs_grad(x), [this, x, batch, n, d](Var o) {
            if (!needs_grad(x)) return;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t i = 0; i < n; ++i) {
                    const S* src = g.ptr() + (bi * n + i) * d;
                    S* dst = gx.ptr() + bi * d;
                    for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
                }
        });
    }

    Var reshape(Var x, Shape shape) {
        const Tensor<S>& vx = value(x);
        require(shape_numel(shape) == vx.numel(), "reshape", x, x);
        Tensor<S> out(shape, vx.data);
        return push(std::move(out), needs_grad(x), [this, x](Var o) {
            if (!needs_grad(x)) return;
            accumulate(x, nodes_[o].grad.data);
        });
    }

    // ---- reductions & distances -------------------------------------------

    Var sum_last(Var a) {
        const Tensor<S>& vx = value(a);
        require(vx.rank() >= 1, "sum_last", a, a);
        int64_t n = vx.dim(vx.rank() - 1), rows = vx.numel() / n;
        Shape out_shape(vx.shape.begin(), vx.shape.end() - 1);
        Tensor<S> out(out_shape);
        for (int64_t r = 0; r < rows; ++r) {
            S acc = S(0);
            const S* row = vx.ptr() + r * n;
            for (int64_t j = 0; j < n; ++j) acc += row[j];
            out.data[static_cast<size_t>(r)] = acc;
        }
        return push(std::move(out), needs_grad(a), [this, a, rows, n](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (int64_t r = 0; r < rows; ++r) {
                S gv = g.data[static_cast<size_t>(r)];
                S* row = ga.ptr() + r * n;
                for (int64_t j = 0; j < n; ++j) row[j] += gv;
            }
        });
    }

    Var sum_all(Var a) {
        const Tensor<S>& vx = value(a);
        S acc = S(0);
        for (S v : vx.data) acc += v;
        return push(Tensor<S>::scalar(acc), needs_grad(a), [this, a](Var o) {
            if (!needs_grad(a)) return;
            S gv = nodes_[o].grad.data[0];
            for (auto& x : nodes_[a].grad.data) x += gv;
        });
    }

    Var sum_squares(Var a) {
        const Tensor<S>& vx = value(a);
        S acc = S(0);
        for (S v : vx.data) acc += v * v;
        return push(Tensor<S>::scalar(acc), needs_grad(a), [this, a](Var o) {
            if (!needs_grad(a)) return;
            S gv = nodes_[o].grad.data[0];
            const auto& vx2 = nodes_[a].value;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < vx2.numel(); ++i)
                ga.data[i] += S(2) * gv * vx2.data[i];
        });
    }

    // L2 distance over the last axis; exact zero for identical inputs, with a
    // guarded subgradient at the singular point.
    Var euclidean_distance(Var a, Var b) {
        const Tensor<S>& va = value(a);
        const Tensor<S>& vb = value(b);
        require(va.shape == vb.shape && va.rank() >= 1, "euclidean_distance", a, b);
        int64_t n = va.dim(va.rank() - 1), rows = va.numel() / n;
        Shape out_shape(va.shape.begin(), va.shape.end() - 1);
        Tensor<S> out(out_shape);
        for (int64_t r = 0; r < rows; ++r) {
            const S* ra = va.ptr() + r * n;
            const S* rb = vb.ptr() + r * n;
            S acc = S(0);
            for (int64_t j = 0; j < n; ++j) {
                S c = ra[j] - rb[j];
                acc += c * c;
            }
            out.data[static_cast<size_t>(r)] = std::sqrt(acc);
        }
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [this, a, b, rows, n](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& y = nodes_[o].value;
            const auto& va2 = nodes_[a].value;
            const auto& vb2 = nodes_[b].value;
            for (int64_t r = 0; r < rows; ++r) {
                S dist = y.data[static_cast<size_t>(r)];
                S coef = g.data[static_cast<size_t>(r)] /
                         std::max(dist, S(1e-12));
                const S* ra = va2.ptr() + r * n;
                const S* rb = vb2.ptr() + r * n;
                if (needs_grad(a)) {
                    S* ga = nodes_[a].grad.ptr() + r * n;
                    for (int64_t j = 0; j < n; ++j) ga[j] += coef * (ra[j] - rb[j]);
                }
                if (needs_grad(b)) {
                    S* gb = nodes_[b].grad.ptr() + r * n;
                    for (int64_t j = 0; j < n; ++j) gb[j] -= coef * (ra[j] - rb[j]);
                }
            }
        });
    }

    // Dot product over the last axis.
    Var rowwise_dot(Var a, Var b) {
        const Tensor<S>& va = value(a);
        const Tensor<S>& vb = value(b);
        require(va.shape == vb.shape && va.rank() >= 1, "rowwise_dot", a, b);
        int64_t n = va.dim(va.rank() - 1), rows = va.numel() / n;
        Shape out_shape(va.shape.begin(), va.shape.end() - 1);
        Tensor<S> out(out_shape);
        for (int64_t r = 0; r < rows; ++r) {
            const S* ra = va.ptr() + r * n;
            const S* rb = vb.ptr() + r * n;
            S acc = S(0);
            for (int64_t j = 0; j < n; ++j) acc += ra[j] * rb[j];
            out.data[static_cast<size_t>(r)] = acc;
        }
        return push(std::move(out), needs_grad(a) || needs_grad(b),
                    [this, a, b, rows, n](Var o) {
            const auto& g = nodes_[o].grad;
            const auto& va2 = nodes_[a].value;
            const auto& vb2 = nodes_[b].value;
            for (int64_t r = 0; r < rows; ++r) {
                S gv = g.data[static_cast<size_t>(r)];
                if (needs_grad(a)) {
                    S* ga = nodes_[a].grad.ptr() + r * n;
                    const S* rb = vb2.ptr() + r * n;
                    for (int64_t j = 0; j < n; ++j) ga[j] += gv * rb[j];
                }
                if (needs_grad(b)) {
                    S* gb = nodes_[b].grad.ptr() + r * n;
                    const S* ra = va2.ptr() + r * n;
                    for (int64_t j = 0; j < n; ++j) gb[j] += gv * ra[j];
                }
            }
        });
    }

    // Selects x[i, cols[i]] per row of a rank-2 tensor.
    Var pick(Var x, std::vector<int32_t> cols) {
        const Tensor<S>& vx = value(x);
        require(vx.rank() == 2 &&
                    static_cast<int64_t>(cols.size()) == vx.dim(0),
                "pick", x, x);
        int64_t n = vx.dim(1);
        for (int32_t c : cols)
            if (c < 0 || c >= n)
                throw ShapeError("pick: column " + std::to_string(c) +
                                 " out of range for " + shape_str(vx.shape));
        Tensor<S> out({vx.dim(0)});
        for (size_t i = 0; i < cols.size(); ++i)
            out.data[i] = vx.data[static_cast<int64_t>(i) * n + cols[i]];
        auto cv = std::make_shared<std::vector<int32_t>>(std::move(cols));
        return push(std::move(out), needs_grad(x), [this, x, cv, n](Var o) {
            if (!needs_grad(x)) return;
            const auto& g = nodes_[o].grad;
            auto& gx = nodes_[x].grad;
            for (size_t i = 0; i < cv->size(); ++i)
                gx.data[static_cast<int64_t>(i) * n + (*cv)[i]] += g.data[i];
        });
    }

    // ---- stochastic / masking ----------------------------------------------

    // Inverted dropout with an explicit keep-mask so passes are replayable.
    Var dropout(Var a, std::vector<uint8_t> keep, S rate) {
        const Tensor<S>& vx = value(a);
        if (static_cast<int64_t>(keep.size()) != vx.numel())
            throw ShapeError("dropout: mask size " + std::to_string(keep.size()) +
                             " != tensor numel " + std::to_string(vx.numel()));
        if (rate < S(0) || rate >= S(1))
            throw ShapeError("dropout: rate must be in [0, 1)");
        S scale_keep = S(1) / (S(1) - rate);
        Tensor<S> out = vx;
        for (int64_t i = 0; i < out.numel(); ++i)
            out.data[i] = keep[static_cast<size_t>(i)] ? out.data[i] * scale_keep : S(0);
        auto kv = std::make_shared<std::vector<uint8_t>>(std::move(keep));
        return push(std::move(out), needs_grad(a), [this, a, kv, scale_keep](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i)
                if ((*kv)[static_cast<size_t>(i)]) ga.data[i] += g.data[i] * scale_keep;
        });
    }

    // Overwrites masked entries with `value` (largest-negative surrogate for
    // -inf ahead of softmax); gradients do not flow through filled slots.
    Var masked_fill(Var a, std::vector<uint8_t> fill, S value_) {
        const Tensor<S>& vx = value(a);
        if (static_cast<int64_t>(fill.size()) != vx.numel())
            throw ShapeError("masked_fill: mask size " + std::to_string(fill.size()) +
                             " != tensor numel " + std::to_string(vx.numel()));
        Tensor<S> out = vx;
        for (int64_t i = 0; i < out.numel(); ++i)
            if (fill[static_cast<size_t>(i)]) out.data[i] = value_;
        auto fv = std::make_shared<std::vector<uint8_t>>(std::move(fill));
        return push(std::move(out), needs_grad(a), [this, a, fv](Var o) {
            if (!needs_grad(a)) return;
            const auto& g = nodes_[o].grad;
            auto& ga = nodes_[a].grad;
            for (int64_t i = 0; i < g.numel(); ++i)
                if (!(*fv)[static_cast<size_t>(i)]) ga.data[i] += g.data[i];
        });
    }

    // ---- backward -----------------------------------------------------------

    void backward(Var loss) {
        Node& ln = nodes_[check(loss)];
        if (ln.value.numel() != 1)
            throw ShapeError("backward: loss must be scalar, got " +
                             shape_str(ln.value.shape));
        for (Var i = 0; i <= loss; ++i)
            if (nodes_[static_cast<size_t>(i)].needs)
                nodes_[static_cast<size_t>(i)].grad =
                    Tensor<S>(nodes_[static_cast<size_t>(i)].value.shape);
        if (!ln.needs) return;  // nothing depends on parameters
        ln.grad.data[0] = S(1);
        for (Var i = loss; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.needs && n.backprop) n.backprop(i);
        }
    }

private:
    struct Node {
        Tensor<S> value;
        Tensor<S> grad;
        bool needs = false;
        std::function<void(Var)> backprop;
    };

    size_t check(Var v) const {
        if (v < 0 || static_cast<size_t>(v) >= nodes_.size())
            throw ShapeError("invalid tape variable " + std::to_string(v));
        return static_cast<size_t>(v);
    }

    bool needs_grad(Var v) const { return nodes_[check(v)].needs; }

    void accumulate(Var v, const std::vector<S>& g) {
        if (!needs_grad(v)) return;
        auto& gd = nodes_[check(v)].grad.data;
        for (size_t i = 0; i < g.size(); ++i) gd[i] += g[i];
    }

    void require(bool ok, const char* op, Var a, Var b) const {
        if (ok) return;
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_str(nodes_[check(a)].value.shape) + " x " +
                         shape_str(nodes_[check(b)].value.shape));
    }

    Var push(Tensor<S> value, bool req, std::function<void(Var)> backprop) {
        Node n;
        n.value = std::move(value);
        n.needs = req;
        if (req) n.backprop = std::move(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

}  // namespace rep
