#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "rep/dataset.hpp"
#include "rep/encoder.hpp"
#include "rep/parallel.hpp"

namespace rep {

struct PredictorConfig {
    int64_t n_history = 8;     // N_e
    int64_t n_candidates = 5;  // N_c
    int64_t layers = 2;
    int64_t heads = 16;
    int64_t d_ff = 1024;
    double dropout = 0.1;
    bool score_temporal = true;  // score on temporal-aware vectors (default)
                                 // or on the raw encoder outputs
};

struct PredictorModel {
    PredictorConfig cfg;
    int64_t d_e = 0;
    int32_t pos = -1;  // positional embeddings, (N_e+1, d_e)
    std::vector<EncoderModel::Layer> layers;
};

template <typename S>
PredictorModel register_predictor(ParamRegistry<S>& reg, const PredictorConfig& cfg,
                                  int64_t d_e, Rng& rng) {
    if (cfg.layers > 0 && d_e % cfg.heads != 0)
        throw DataError("predictor: d_e (" + std::to_string(d_e) +
                        ") not divisible by heads (" + std::to_string(cfg.heads) + ")");
    PredictorModel m;
    m.cfg = cfg;
    m.d_e = d_e;
    m.pos = reg.add("pred.pos", init_normal<S>({cfg.n_history + 1, d_e}, rng, 0.02));
    for (int64_t l = 0; l < cfg.layers; ++l) {
        std::string p = "pred.L" + std::to_string(l) + ".";
        EncoderModel::Layer layer;
        layer.Wq = reg.add(p + "Wq", init_xavier<S>(d_e, d_e, rng));
        layer.Wk = reg.add(p + "Wk", init_xavier<S>(d_e, d_e, rng));
        layer.Wv = reg.add(p + "Wv", init_xavier<S>(d_e, d_e, rng));
        layer.Wo = reg.add(p + "Wo", init_xavier<S>(d_e, d_e, rng));
        layer.ln1g = reg.add(p + "ln1.g", init_const<S>({d_e}, S(1)));
        layer.ln1b = reg.add(p + "ln1.b", init_const<S>({d_e}, S(0)));
        layer.fW1 = reg.add(p + "ffn.W1", init_xavier<S>(d_e, cfg.d_ff, rng));
        layer.fb1 = reg.add(p + "ffn.b1", init_const<S>({cfg.d_ff}, S(0)));
        layer.fW2 = reg.add(p + "ffn.W2", init_xavier<S>(cfg.d_ff, d_e, rng));
        layer.fb2 = reg.add(p + "ffn.b2", init_const<S>({d_e}, S(0)));
        layer.ln2g = reg.add(p + "ln2.g", init_const<S>({d_e}, S(1)));
        layer.ln2b = reg.add(p + "ln2.b", init_const<S>({d_e}, S(0)));
        m.layers.push_back(layer);
    }
    return m;
}

// Positional embeddings plus the stacked transformer over each
// [e_1..e_{N_e}, e_c] sequence. seqs is (B, N_e+1, d_e); every candidate gets
// its own independent pass (own batch row).
template <typename S>
typename Tape<S>::Var temporal_integrate(Tape<S>& tape,
                                         const std::vector<typename Tape<S>::Var>& vars,
                                         const PredictorModel& m,
                                         typename Tape<S>::Var seqs,
                                         Rng* dropout_rng = nullptr) {
    const auto& shape = tape.value(seqs).shape;
    if (shape.size() != 3 || shape[1] != m.cfg.n_history + 1)
        throw ShapeError("temporal_integrate: expected (B," +
                         std::to_string(m.cfg.n_history + 1) + ",d), got " +
                         shape_str(shape));
    auto x = tape.add_seq(seqs, vars[m.pos]);
    std::vector<uint8_t> no_mask(static_cast<size_t>(shape[0] * shape[1]), 1);
    for (const auto& layer : m.layers)
        x = encoder_layer(tape, vars, layer, m.cfg.heads, x, no_mask, m.cfg.dropout,
                          dropout_rng, static_cast<Tensor<S>*>(nullptr));
    return x;
}

// Candidate scores from per-candidate sequences H (B, N_e+1, d_e):
// s_i = -||h_i - h_c||, alpha_i = h_i . h_c / sqrt(d_e), score = sum alpha_i s_i.
template <typename S>
typename Tape<S>::Var score_sequences(Tape<S>& tape, typename Tape<S>::Var h,
                                      int64_t n_history, int64_t d_e) {
    using Var = typename Tape<S>::Var;
    Var hist = tape.slice1(h, 0, n_history);
    Var cand = tape.repeat1(tape.slice1(h, n_history, 1), n_history);
    Var sims = tape.scale(tape.euclidean_distance(hist, cand), S(-1));
    Var alpha = tape.scale(tape.rowwise_dot(hist, cand),
                           S(1) / static_cast<S>(std::sqrt(static_cast<double>(d_e))));
    return tape.sum_last(tape.mul(alpha, sims));  // (B)
}

// Softmax over candidate scores.
template <typename S>
std::vector<S> candidate_distribution(const std::vector<S>& scores) {
    if (scores.size() < 2) throw DataError("candidate_distribution: need >= 2 scores");
    S mx = scores[0];
    for (S s : scores) mx = std::max(mx, s);
    std::vector<S> out(scores.size());
    S sum = S(0);
    for (size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
    return out;
}

struct ScoreOutput {
    int32_t scores = -1;  // tape var, (n, N_c)
};

// Full forward pass for a batch of indexed instances: encode all events,
// assemble per-candidate sequences, integrate, score.
template <typename S>
ScoreOutput forward_scores(Tape<S>& tape, const std::vector<typename Tape<S>::Var>& vars,
                           const EncoderModel& enc, const PredictorModel& pred,
                           const std::vector<const IndexedInstance*>& batch,
                           const std::string& variant, Rng* dropout_rng) {
    using Var = typename Tape<S>::Var;
    const int64_t ne = pred.cfg.n_history;
    const int64_t nc = pred.cfg.n_candidates;
    const int64_t per = ne + nc;
    const int64_t n = static_cast<int64_t>(batch.size());

    std::vector<const IndexedEvent*> events;
    events.reserve(static_cast<size_t>(n * per));
    for (const auto* inst : batch) {
        if (static_cast<int64_t>(inst->events.size()) != per)
            throw DataError("forward_scores: instance has " +
                            std::to_string(inst->events.size()) + " events, expected " +
                            std::to_string(per));
        for (const auto& e : inst->events) events.push_back(&e);
    }
    EventBatch eb = make_event_batch(events);
    Var evts = variant == "fusion"
                   ? encode_events_fusion(tape, vars, enc, eb)
                   : encode_events_rich(tape, vars, enc, eb, dropout_rng);

    std::vector<int64_t> rows;
    rows.reserve(static_cast<size_t>(n * nc * (ne + 1)));
    for (int64_t i = 0; i < n; ++i)
        for (int64_t c = 0; c < nc; ++c) {
            for (int64_t t = 0; t < ne; ++t) rows.push_back(i * per + t);
            rows.push_back(i * per + ne + c);
        }
    Var seqs = tape.reshape(tape.gather_rows(evts, std::move(rows)),
                            {n * nc, ne + 1, enc.cfg.d_e});

    Var h = pred.cfg.score_temporal
                ? temporal_integrate(tape, vars, pred, seqs, dropout_rng)
                : seqs;
    Var flat = score_sequences(tape, h, ne, enc.cfg.d_e);
    ScoreOutput out;
    out.scores = tape.reshape(flat, {n, nc});
    return out;
}

// Mean cross-entropy over the batch plus lambda * sum of squared parameters.
template <typename S>
typename Tape<S>::Var batch_loss(Tape<S>& tape,
                                 const std::vector<typename Tape<S>::Var>& vars,
                                 typename Tape<S>::Var scores,
                                 const std::vector<int32_t>& answers, double lambda) {
    using Var = typename Tape<S>::Var;
    int64_t n = tape.value(scores).dim(0);
    Var logp = tape.log_softmax_last(scores);
    Var picked = tape.pick(logp, answers);
    Var loss = tape.scale(tape.sum_all(picked), S(-1) / static_cast<S>(n));
    if (lambda != 0) {
        Var reg = tape.sum_squares(vars[0]);
        for (size_t i = 1; i < vars.size(); ++i)
            reg = tape.add(reg, tape.sum_squares(vars[static_cast<int32_t>(i)]));
        loss = tape.add(loss, tape.scale(reg, static_cast<S>(lambda)));
    }
    return loss;
}

struct Prediction {
    int64_t instance_id = 0;
    std::vector<double> probabilities;
    int32_t predicted = 0;
    int32_t answer = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<Prediction> predictions;
};

// Dropout-free scoring of a full dataset. Instances are processed in fixed
// blocks and reduced in index order, so the result is independent of the
// worker count and identical across repeated calls.
template <typename S>
EvalResult evaluate(const ParamRegistry<S>& reg, const EncoderModel& enc,
                    const PredictorModel& pred,
                    const std::vector<IndexedInstance>& instances,
                    const std::string& variant, int64_t batch_size = 256,
                    int workers = 1) {
    EvalResult result;
    result.predictions.resize(instances.size());
    if (instances.empty()) return result;
    int64_t blocks = (static_cast<int64_t>(instances.size()) + batch_size - 1) / batch_size;
    parallel_for(blocks, workers, [&](int64_t bi) {
        int64_t lo = bi * batch_size;
        int64_t hi = std::min<int64_t>(static_cast<int64_t>(instances.size()),
                                       lo + batch_size);
        std::vector<const IndexedInstance*> block;
        for (int64_t i = lo; i < hi; ++i) block.push_back(&instances[static_cast<size_t>(i)]);
        Tape<S> tape;
        auto vars = reg.bind(tape, false);
        auto out = forward_scores(tape, vars, enc, pred, block, variant, nullptr);
        const Tensor<S>& scores = tape.value(out.scores);
        int64_t nc = scores.dim(1);
        for (int64_t i = lo; i < hi; ++i) {
            std::vector<S> row(scores.ptr() + (i - lo) * nc,
                               scores.ptr() + (i - lo + 1) * nc);
            auto probs = candidate_distribution(row);
            Prediction p;
            p.instance_id = i;
            p.answer = instances[static_cast<size_t>(i)].answer;
            p.predicted = 0;
            for (size_t c = 0; c < probs.size(); ++c) {
                p.probabilities.push_back(static_cast<double>(probs[c]));
                if (probs[c] > probs[static_cast<size_t>(p.predicted)])
                    p.predicted = static_cast<int32_t>(c);
            }
            result.predictions[static_cast<size_t>(i)] = std::move(p);
        }
    });
    int64_t correct = 0;
    for (const auto& p : result.predictions)
        if (p.predicted == p.answer) ++correct;
    result.accuracy = static_cast<double>(correct) / static_cast<double>(instances.size());
    return result;
}

}  // namespace rep
