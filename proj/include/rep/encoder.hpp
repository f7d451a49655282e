#pragma once
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rep/params.hpp"
#include "rep/rng.hpp"
#include "rep/tape.hpp"

namespace rep {

struct EncoderConfig {
    int64_t d_w = 300;
    int64_t d_e = 128;
    int64_t layers = 2;
    int64_t heads = 8;
    int64_t d_ff = 1024;
    bool tied_projections = true;  // share W1/W2/b between predicate and arguments
    bool use_types = true;         // false drops the type term (and its table)
    double dropout = 0.1;

    void check() const {
        if (d_e % heads != 0)
            throw DataError("encoder: d_e (" + std::to_string(d_e) +
                            ") not divisible by heads (" + std::to_string(heads) + ")");
    }
};

// Registry ids of the encoder's parameters.
struct EncoderModel {
    EncoderConfig cfg;
    int32_t E_v = -1, E_r = -1, E_w = -1, E_t = -1;
    int32_t W1 = -1, W2 = -1, W3 = -1, b = -1;
    int32_t W1p = -1, W2p = -1, bp = -1;  // untied predicate projections
    struct Layer {
        int32_t Wq, Wk, Wv, Wo;
        int32_t ln1g, ln1b;
        int32_t fW1, fb1, fW2, fb2;
        int32_t ln2g, ln2b;
    };
    std::vector<Layer> layers;
};

struct VocabSizes {
    int32_t verb_sense = 0;
    int32_t role = 0;
    int32_t headword = 0;
    int32_t type = 0;
};

template <typename S>
EncoderModel register_encoder(ParamRegistry<S>& reg, const EncoderConfig& cfg,
                              const VocabSizes& sizes, Rng& rng) {
    cfg.check();
    EncoderModel m;
    m.cfg = cfg;
    m.E_v = reg.add("enc.E_v", init_normal<S>({sizes.verb_sense, cfg.d_w}, rng, 0.02));
    m.E_r = reg.add("enc.E_r", init_normal<S>({sizes.role, cfg.d_w}, rng, 0.02));
    m.E_w = reg.add("enc.E_w", init_normal<S>({sizes.headword, cfg.d_w}, rng, 0.02));
    if (cfg.use_types)
        m.E_t = reg.add("enc.E_t", init_normal<S>({sizes.type, cfg.d_w}, rng, 0.02));
    m.W1 = reg.add("enc.W1", init_xavier<S>(cfg.d_w, cfg.d_e, rng));
    m.W2 = reg.add("enc.W2", init_xavier<S>(cfg.d_w, cfg.d_e, rng));
    if (cfg.use_types) m.W3 = reg.add("enc.W3", init_xavier<S>(cfg.d_w, cfg.d_e, rng));
    m.b = reg.add("enc.b", init_const<S>({cfg.d_e}, S(0)));
    if (!cfg.tied_projections) {
        m.W1p = reg.add("enc.W1p", init_xavier<S>(cfg.d_w, cfg.d_e, rng));
        m.W2p = reg.add("enc.W2p", init_xavier<S>(cfg.d_w, cfg.d_e, rng));
        m.bp = reg.add("enc.bp", init_const<S>({cfg.d_e}, S(0)));
    }
    for (int64_t l = 0; l < cfg.layers; ++l) {
        std::string p = "enc.L" + std::to_string(l) + ".";
        EncoderModel::Layer layer;
        layer.Wq = reg.add(p + "Wq", init_xavier<S>(cfg.d_e, cfg.d_e, rng));
        layer.Wk = reg.add(p + "Wk", init_xavier<S>(cfg.d_e, cfg.d_e, rng));
        layer.Wv = reg.add(p + "Wv", init_xavier<S>(cfg.d_e, cfg.d_e, rng));
        layer.Wo = reg.add(p + "Wo", init_xavier<S>(cfg.d_e, cfg.d_e, rng));
        layer.ln1g = reg.add(p + "ln1.g", init_const<S>({cfg.d_e}, S(1)));
        layer.ln1b = reg.add(p + "ln1.b", init_const<S>({cfg.d_e}, S(0)));
        layer.fW1 = reg.add(p + "ffn.W1", init_xavier<S>(cfg.d_e, cfg.d_ff, rng));
        layer.fb1 = reg.add(p + "ffn.b1", init_const<S>({cfg.d_ff}, S(0)));
        layer.fW2 = reg.add(p + "ffn.W2", init_xavier<S>(cfg.d_ff, cfg.d_e, rng));
        layer.fb2 = reg.add(p + "ffn.b2", init_const<S>({cfg.d_e}, S(0)));
        layer.ln2g = reg.add(p + "ln2.g", init_const<S>({cfg.d_e}, S(1)));
        layer.ln2b = reg.add(p + "ln2.b", init_const<S>({cfg.d_e}, S(0)));
        m.layers.push_back(layer);
    }
    return m;
}

// Index-mapped events padded to a common argument count.
struct EventBatch {
    int64_t n = 0;
    int64_t max_args = 0;
    std::vector<int32_t> verb;       // n
    std::vector<int32_t> prot_role;  // n
    std::vector<int32_t> arg_role;   // n * max_args, PAD where masked
    std::vector<int32_t> arg_head;
    std::vector<int32_t> arg_type;
    std::vector<uint8_t> arg_mask;   // 1 = real argument
};

namespace detail {

template <typename S>
std::vector<uint8_t> make_dropout_mask(int64_t numel, double rate, Rng& rng) {
    std::vector<uint8_t> keep(static_cast<size_t>(numel));
    for (auto& k : keep) k = rng.unit() >= rate ? 1 : 0;
    return keep;
}

// Key-padding mask expanded to attention-score shape (n*h, T, T): 1 marks
// slots to fill with the large-negative surrogate before softmax.
inline std::vector<uint8_t> expand_key_mask(const std::vector<uint8_t>& seq_mask,
                                            int64_t n, int64_t heads, int64_t t) {
    std::vector<uint8_t> fill(static_cast<size_t>(n * heads * t * t), 0);
    for (int64_t b = 0; b < n; ++b) {
        bool any = false;
        for (int64_t k = 0; k < t; ++k)
            if (!seq_mask[static_cast<size_t>(b * t + k)]) any = true;
        if (!any) continue;
        for (int64_t h = 0; h < heads; ++h)
            for (int64_t q = 0; q < t; ++q)
                for (int64_t k = 0; k < t; ++k)
                    if (!seq_mask[static_cast<size_t>(b * t + k)])
                        fill[static_cast<size_t>(((b * heads + h) * t + q) * t + k)] = 1;
    }
    return fill;
}

}  // namespace detail

// One post-norm transformer encoder layer over X (n,T,d): self-attention with
// key-padding mask, residual + layer norm, ReLU feed-forward, residual +
// layer norm. Dropout on both sublayer outputs when rng is given.
template <typename S>
typename Tape<S>::Var encoder_layer(Tape<S>& tape,
                                    const std::vector<typename Tape<S>::Var>& vars,
                                    const EncoderModel::Layer& lp, int64_t heads,
                                    typename Tape<S>::Var x,
                                    const std::vector<uint8_t>& seq_mask,
                                    double dropout_rate, Rng* dropout_rng,
                                    Tensor<S>* attention_out) {
    using Var = typename Tape<S>::Var;
    const auto& xs = tape.value(x).shape;
    int64_t n = xs[0], t = xs[1], d = xs[2];
    int64_t dk = d / heads;

    Var q = tape.split_heads(tape.matmul(x, vars[lp.Wq]), heads);
    Var k = tape.split_heads(tape.matmul(x, vars[lp.Wk]), heads);
    Var v = tape.split_heads(tape.matmul(x, vars[lp.Wv]), heads);
    Var scores = tape.scale(tape.matmul_nt(q, k),
                            S(1) / static_cast<S>(std::sqrt(static_cast<double>(dk))));
    auto fill = detail::expand_key_mask(seq_mask, n, heads, t);
    bool any_fill = false;
    for (uint8_t f : fill)
        if (f) { any_fill = true; break; }
    if (any_fill) scores = tape.masked_fill(scores, std::move(fill), S(-1e30));
    Var attn = tape.softmax_last(scores);
    if (attention_out) *attention_out = tape.value(attn);
    Var ctx = tape.matmul(tape.merge_heads(tape.matmul(attn, v), heads), vars[lp.Wo]);
    if (dropout_rng && dropout_rate > 0)
        ctx = tape.dropout(ctx,
                           detail::make_dropout_mask<S>(tape.value(ctx).numel(),
                                                        dropout_rate, *dropout_rng),
                           static_cast<S>(dropout_rate));
    Var x1 = tape.layer_norm(tape.add(x, ctx), vars[lp.ln1g], vars[lp.ln1b]);

    Var f = tape.add_bias(tape.matmul(x1, vars[lp.fW1]), vars[lp.fb1]);
    f = tape.relu(f);
    f = tape.add_bias(tape.matmul(f, vars[lp.fW2]), vars[lp.fb2]);
    if (dropout_rng && dropout_rate > 0)
        f = tape.dropout(f,
                         detail::make_dropout_mask<S>(tape.value(f).numel(),
                                                      dropout_rate, *dropout_rng),
                         static_cast<S>(dropout_rate));
    return tape.layer_norm(tape.add(x1, f), vars[lp.ln2g], vars[lp.ln2b]);
}

// Predicate and argument representations (the projection stage shared by both
// encoders): p = W1'v + W2'd + b, a_j = W1'r_j + W2'w_j + W3't_j + b.
template <typename S>
std::pair<typename Tape<S>::Var, typename Tape<S>::Var> embed_batch(
    Tape<S>& tape, const std::vector<typename Tape<S>::Var>& vars,
    const EncoderModel& m, const EventBatch& batch) {
    using Var = typename Tape<S>::Var;
    int64_t n = batch.n, L = batch.max_args;
    int32_t w1 = m.cfg.tied_projections ? m.W1 : m.W1p;
    int32_t w2 = m.cfg.tied_projections ? m.W2 : m.W2p;
    int32_t bb = m.cfg.tied_projections ? m.b : m.bp;

    Var verb = tape.embedding(vars[m.E_v], batch.verb, {n, 1});
    Var drole = tape.embedding(vars[m.E_r], batch.prot_role, {n, 1});
    Var p = tape.add_bias(tape.add(tape.matmul(verb, vars[w1]),
                                   tape.matmul(drole, vars[w2])),
                          vars[bb]);

    Var role = tape.embedding(vars[m.E_r], batch.arg_role, {n, L});
    Var head = tape.embedding(vars[m.E_w], batch.arg_head, {n, L});
    Var a = tape.add(tape.matmul(role, vars[m.W1]), tape.matmul(head, vars[m.W2]));
    if (m.cfg.use_types) {
        Var type = tape.embedding(vars[m.E_t], batch.arg_type, {n, L});
        a = tape.add(a, tape.matmul(type, vars[m.W3]));
    }
    a = tape.add_bias(a, vars[m.b]);
    return {p, a};
}

template <typename S>
struct AttentionTrace {
    std::vector<Tensor<S>> layers;  // each (n*heads, T, T), softmaxed
    int64_t heads = 0;
    int64_t seq_len = 0;
};

// Transformer event encoder: stacks layers over [p, a_1..a_L] and returns the
// predicate-position output, shape (n, d_e). No positional encodings; the
// arguments are a set.
template <typename S>
typename Tape<S>::Var encode_events_rich(Tape<S>& tape,
                                         const std::vector<typename Tape<S>::Var>& vars,
                                         const EncoderModel& m, const EventBatch& batch,
                                         Rng* dropout_rng = nullptr,
                                         AttentionTrace<S>* trace = nullptr) {
    using Var = typename Tape<S>::Var;
    auto [p, a] = embed_batch(tape, vars, m, batch);
    Var x = tape.concat1(p, a);
    int64_t n = batch.n, t = batch.max_args + 1;
    std::vector<uint8_t> seq_mask(static_cast<size_t>(n * t), 1);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t j = 0; j < batch.max_args; ++j)
            seq_mask[static_cast<size_t>(b * t + 1 + j)] =
                batch.arg_mask[static_cast<size_t>(b * batch.max_args + j)];
    if (trace) {
        trace->layers.resize(static_cast<size_t>(m.cfg.layers));
        trace->heads = m.cfg.heads;
        trace->seq_len = t;
    }
    for (size_t l = 0; l < m.layers.size(); ++l)
        x = encoder_layer(tape, vars, m.layers[l], m.cfg.heads, x, seq_mask,
                          m.cfg.dropout, dropout_rng,
                          trace ? &trace->layers[l] : nullptr);
    return tape.reshape(tape.slice1(x, 0, 1), {n, m.cfg.d_e});
}

// Additive baseline: tanh(p + sum of argument representations).
template <typename S>
typename Tape<S>::Var encode_events_fusion(Tape<S>& tape,
                                           const std::vector<typename Tape<S>::Var>& vars,
                                           const EncoderModel& m, const EventBatch& batch) {
    using Var = typename Tape<S>::Var;
    auto [p, a] = embed_batch(tape, vars, m, batch);
    int64_t n = batch.n, L = batch.max_args;
    // Masked sum over argument slots as a (n,1,L)x(n,L,d) product with the
    // mask as constant left factor.
    Tensor<S> mask_row({n, 1, L});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t j = 0; j < L; ++j)
            mask_row.data[static_cast<size_t>(b * L + j)] =
                batch.arg_mask[static_cast<size_t>(b * L + j)] ? S(1) : S(0);
    Var mask_leaf = tape.leaf(std::move(mask_row), false);
    Var asum = tape.matmul(mask_leaf, a);  // (n,1,d)
    return tape.tanh_op(
        tape.reshape(tape.add(p, asum), {n, m.cfg.d_e}));
}

// Single-event conveniences used by tests and the attention inspector.

struct EventIndices {
    int32_t verb = 0;
    int32_t prot_role = 0;
    std::vector<std::array<int32_t, 3>> args;  // (role, headword, type)
};

inline EventBatch single_event_batch(const EventIndices& e) {
    EventBatch b;
    b.n = 1;
    b.max_args = static_cast<int64_t>(e.args.size());
    b.verb = {e.verb};
    b.prot_role = {e.prot_role};
    for (const auto& a : e.args) {
        b.arg_role.push_back(a[0]);
        b.arg_head.push_back(a[1]);
        b.arg_type.push_back(a[2]);
        b.arg_mask.push_back(1);
    }
    return b;
}

// Predicate vector (d_e) and argument matrix (L, d_e) for one event.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> embed_event(const ParamRegistry<S>& reg,
                                            const EncoderModel& m,
                                            const EventIndices& e) {
    Tape<S> tape;
    auto vars = reg.bind(tape, false);
    EventBatch batch = single_event_batch(e);
    auto [p, a] = embed_batch(tape, vars, m, batch);
    Tensor<S> pv(Shape{m.cfg.d_e}, tape.value(p).data);
    Tensor<S> av(Shape{batch.max_args, m.cfg.d_e}, tape.value(a).data);
    return {pv, av};
}

template <typename S>
Tensor<S> encode_event_rich(const ParamRegistry<S>& reg, const EncoderModel& m,
                            const EventIndices& e, AttentionTrace<S>* trace = nullptr) {
    Tape<S> tape;
    auto vars = reg.bind(tape, false);
    EventBatch batch = single_event_batch(e);
    auto out = encode_events_rich(tape, vars, m, batch, nullptr, trace);
    return Tensor<S>(Shape{m.cfg.d_e}, tape.value(out).data);
}

template <typename S>
Tensor<S> encode_event_fusion(const ParamRegistry<S>& reg, const EncoderModel& m,
                              const EventIndices& e) {
    Tape<S> tape;
    auto vars = reg.bind(tape, false);
    EventBatch batch = single_event_batch(e);
    auto out = encode_events_fusion(tape, vars, m, batch);
    return Tensor<S>(Shape{m.cfg.d_e}, tape.value(out).data);
}

}  // namespace rep
