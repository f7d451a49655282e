#pragma once
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "rep/adam.hpp"
#include "rep/checkpoint.hpp"
#include "rep/predictor.hpp"

namespace rep {

struct TrainConfig {
    double lr = 1e-3;
    int64_t batch = 64;       // large-batch 1000 reachable by flag
    double lambda = 1e-5;
    double dropout = 0.1;
    int64_t epochs = 10;
    uint64_t seed = 42;
    std::string variant = "rich";  // rich | fusion
    AblationSet ablate;
    bool score_temporal = true;

    void check() const {
        if (lr <= 0 || batch <= 0 || epochs <= 0 || lambda < 0 || dropout < 0 ||
            dropout >= 1)
            throw DataError("train config: lr, batch, epochs must be positive; "
                            "lambda >= 0; dropout in [0,1)");
        if (variant != "rich" && variant != "fusion")
            throw DataError("train config: variant must be rich or fusion");
    }
};

struct EpochLog {
    int64_t epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
    double wall_seconds = 0.0;

    Json to_json() const {
        return Json{{"epoch", epoch},
                    {"train_loss", train_loss},
                    {"dev_accuracy", dev_accuracy},
                    {"wall_seconds", wall_seconds}};
    }
};

struct TrainResult {
    std::vector<Tensor<float>> best_values;  // parameter snapshot, registry order
    int64_t best_epoch = -1;
    double best_dev_accuracy = -1.0;
    std::vector<EpochLog> log;
    AdamState<float> optimizer;  // state at the end of training
};

// Mini-batch Adam training with per-epoch shuffling and dev-based model
// selection (ties keep the earlier epoch). Deterministic in (data, seed).
template <typename EpochCallback>
TrainResult train(ParamRegistry<float>& reg, const EncoderModel& enc,
                  const PredictorModel& pred,
                  const std::vector<IndexedInstance>& train_set,
                  const std::vector<IndexedInstance>& dev_set,
                  const TrainConfig& cfg, EpochCallback&& on_epoch) {
    cfg.check();
    if (train_set.empty()) throw DataError("train: empty training set");

    AdamState<float> opt = AdamState<float>::init(reg, cfg.lr);
    TrainResult result;
    Rng shuffle_rng = Rng(cfg.seed).fork(0x5u);
    Rng dropout_base = Rng(cfg.seed).fork(0xd0u);

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        Rng epoch_rng = dropout_base.fork(static_cast<uint64_t>(epoch));
        double loss_sum = 0.0;
        int64_t batches = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            std::vector<const IndexedInstance*> batch;
            std::vector<int32_t> answers;
            for (size_t i = start; i < end; ++i) {
                batch.push_back(&train_set[order[i]]);
                answers.push_back(train_set[order[i]].answer);
            }
            Tape<float> tape;
            auto vars = reg.bind(tape, true);
            Rng* drop = cfg.dropout > 0 ? &epoch_rng : nullptr;
            auto scored = forward_scores(tape, vars, enc, pred, batch, cfg.variant, drop);
            auto loss = batch_loss(tape, vars, scored.scores, answers, cfg.lambda);
            double loss_value = static_cast<double>(tape.value(loss).data[0]);
            if (!std::isfinite(loss_value))
                throw DataError("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(batches) + " (instances " +
                                std::to_string(start) + ".." + std::to_string(end) + ")");
            tape.backward(loss);
            reg.collect(tape, vars);
            adam_step(reg, opt);
            loss_sum += loss_value;
            ++batches;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(std::max<int64_t>(1, batches));
        log.dev_accuracy =
            dev_set.empty()
                ? 0.0
                : evaluate(reg, enc, pred, dev_set, cfg.variant).accuracy;
        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(log);
        on_epoch(log);

        // With no dev set, fall back to the lowest training loss.
        double score = dev_set.empty() ? -log.train_loss : log.dev_accuracy;
        double best = dev_set.empty()
                          ? (result.best_epoch < 0 ? -1e300 : -result.log[static_cast<size_t>(
                                result.best_epoch)].train_loss)
                          : result.best_dev_accuracy;
        if (result.best_epoch < 0 || score > best) {
            result.best_epoch = epoch;
            result.best_dev_accuracy = log.dev_accuracy;
            result.best_values.clear();
            for (const auto& p : reg.all()) result.best_values.push_back(p.value);
        }
    }

    // Leave the registry at the selected parameters.
    for (size_t i = 0; i < reg.size(); ++i)
        reg.at(static_cast<int32_t>(i)).value = result.best_values[i];
    result.optimizer = std::move(opt);
    return result;
}

}  // namespace rep
