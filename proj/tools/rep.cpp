// Command-line front end: extraction, dataset construction, synthetic corpus
// generation, training, evaluation, and attention inspection.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rep/rep.hpp"

namespace fs = std::filesystem;
using rep::Json;

namespace {

// All tunables in one place; flag > config file > default.
struct RunConfig {
    std::string input;
    std::string output;
    std::string checkpoint;
    std::string event_file;
    std::string config_file;
    uint64_t seed = 42;
    int64_t ne = 8;
    int64_t nc = 5;
    int64_t layers = 2;       // rich event encoder layers
    int64_t ffn_dim = 1024;   // rich event encoder feed-forward size
    int64_t heads = 8;        // rich event encoder heads
    int64_t dw = 300;
    int64_t de = 128;
    int64_t temporal_layers = 2;
    int64_t temporal_heads = 16;
    int64_t temporal_ffn = 1024;
    double lr = 1e-3;
    int64_t batch = 64;
    double lambda = 1e-5;
    double dropout = 0.1;
    int64_t epochs = 10;
    std::string variant = "rich";
    std::vector<std::string> ablate;
    std::string score_space = "temporal";
    int workers = 1;
    // generator
    int64_t scripts = 5;
    int64_t entities = 50;
    int64_t docs = 100;
    double noise = 0.0;
    int64_t script_len = 12;
    // dataset build
    std::string split = "0.8,0.1,0.1";
    int64_t stride = 1;
    int64_t max_per_doc = 0;

    Json echo() const {
        return Json{{"seed", seed},
                    {"ne", ne},
                    {"nc", nc},
                    {"layers", layers},
                    {"ffn_dim", ffn_dim},
                    {"heads", heads},
                    {"dw", dw},
                    {"de", de},
                    {"temporal_layers", temporal_layers},
                    {"temporal_heads", temporal_heads},
                    {"temporal_ffn", temporal_ffn},
                    {"lr", lr},
                    {"batch", batch},
                    {"lambda", lambda},
                    {"dropout", dropout},
                    {"epochs", epochs},
                    {"variant", variant},
                    {"ablate", ablate},
                    {"score_space", score_space},
                    {"workers", workers},
                    {"scripts", scripts},
                    {"entities", entities},
                    {"docs", docs},
                    {"noise", noise},
                    {"script_len", script_len},
                    {"split", split},
                    {"stride", stride},
                    {"max_per_doc", max_per_doc}};
    }
};

// Values from --config fill in any flag the user did not pass explicitly.
void apply_config_file(CLI::App* cmd, RunConfig& cfg) {
    if (cfg.config_file.empty()) return;
    Json j = Json::parse(rep::read_file(cfg.config_file));
    auto unset = [&](const std::string& flag) {
        auto* opt = cmd->get_option_no_throw("--" + flag);
        return opt != nullptr && opt->count() == 0 && j.contains(flag);
    };
    if (unset("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (unset("ne")) cfg.ne = j["ne"].get<int64_t>();
    if (unset("nc")) cfg.nc = j["nc"].get<int64_t>();
    if (unset("layers")) cfg.layers = j["layers"].get<int64_t>();
    if (unset("ffn-dim")) cfg.ffn_dim = j["ffn-dim"].get<int64_t>();
    if (unset("heads")) cfg.heads = j["heads"].get<int64_t>();
    if (unset("dw")) cfg.dw = j["dw"].get<int64_t>();
    if (unset("de")) cfg.de = j["de"].get<int64_t>();
    if (unset("temporal-layers")) cfg.temporal_layers = j["temporal-layers"].get<int64_t>();
    if (unset("temporal-heads")) cfg.temporal_heads = j["temporal-heads"].get<int64_t>();
    if (unset("temporal-ffn")) cfg.temporal_ffn = j["temporal-ffn"].get<int64_t>();
    if (unset("lr")) cfg.lr = j["lr"].get<double>();
    if (unset("batch")) cfg.batch = j["batch"].get<int64_t>();
    if (unset("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (unset("dropout")) cfg.dropout = j["dropout"].get<double>();
    if (unset("epochs")) cfg.epochs = j["epochs"].get<int64_t>();
    if (unset("variant")) cfg.variant = j["variant"].get<std::string>();
    if (unset("ablate")) cfg.ablate = j["ablate"].get<std::vector<std::string>>();
    if (unset("score-space")) cfg.score_space = j["score-space"].get<std::string>();
    if (unset("workers")) cfg.workers = j["workers"].get<int>();
    if (unset("scripts")) cfg.scripts = j["scripts"].get<int64_t>();
    if (unset("entities")) cfg.entities = j["entities"].get<int64_t>();
    if (unset("docs")) cfg.docs = j["docs"].get<int64_t>();
    if (unset("noise")) cfg.noise = j["noise"].get<double>();
    if (unset("script-len")) cfg.script_len = j["script-len"].get<int64_t>();
    if (unset("split")) cfg.split = j["split"].get<std::string>();
    if (unset("stride")) cfg.stride = j["stride"].get<int64_t>();
    if (unset("max-per-doc")) cfg.max_per_doc = j["max-per-doc"].get<int64_t>();
}

Json model_config_json(const RunConfig& cfg) {
    return Json{{"ne", cfg.ne},
                {"nc", cfg.nc},
                {"layers", cfg.layers},
                {"ffn_dim", cfg.ffn_dim},
                {"heads", cfg.heads},
                {"dw", cfg.dw},
                {"de", cfg.de},
                {"temporal_layers", cfg.temporal_layers},
                {"temporal_heads", cfg.temporal_heads},
                {"temporal_ffn", cfg.temporal_ffn},
                {"variant", cfg.variant},
                {"ablate", cfg.ablate},
                {"score_space", cfg.score_space},
                {"dropout", cfg.dropout}};
}

rep::EncoderConfig encoder_config_from_json(const Json& j) {
    rep::EncoderConfig ec;
    ec.d_w = j.at("dw").get<int64_t>();
    ec.d_e = j.at("de").get<int64_t>();
    ec.layers = j.at("layers").get<int64_t>();
    ec.heads = j.at("heads").get<int64_t>();
    ec.d_ff = j.at("ffn_dim").get<int64_t>();
    ec.dropout = j.at("dropout").get<double>();
    auto ablate = rep::AblationSet::parse(j.at("ablate").get<std::vector<std::string>>());
    ec.use_types = !ablate.drop_types;
    return ec;
}

rep::PredictorConfig predictor_config_from_json(const Json& j) {
    rep::PredictorConfig pc;
    pc.n_history = j.at("ne").get<int64_t>();
    pc.n_candidates = j.at("nc").get<int64_t>();
    pc.layers = j.at("temporal_layers").get<int64_t>();
    pc.heads = j.at("temporal_heads").get<int64_t>();
    pc.d_ff = j.at("temporal_ffn").get<int64_t>();
    pc.dropout = j.at("dropout").get<double>();
    pc.score_temporal = j.at("score_space").get<std::string>() != "raw";
    return pc;
}

std::vector<rep::IndexedInstance> index_all(const rep::DatasetIndexer& indexer,
                                            const std::vector<rep::McncInstance>& set,
                                            int64_t ne, int64_t nc,
                                            const std::string& name) {
    std::vector<rep::IndexedInstance> out;
    out.reserve(set.size());
    for (size_t i = 0; i < set.size(); ++i) {
        const auto& inst = set[i];
        if (static_cast<int64_t>(inst.history.size()) != ne ||
            static_cast<int64_t>(inst.candidates.size()) != nc ||
            inst.answer < 0 || inst.answer >= static_cast<int32_t>(inst.candidates.size()))
            throw rep::DataError(name + "[" + std::to_string(i) +
                                 "]: instance shape does not match ne=" +
                                 std::to_string(ne) + " nc=" + std::to_string(nc));
        out.push_back(indexer.index_instance(inst));
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const RunConfig& cfg) {
    rep::SyntheticConfig sc;
    sc.n_scripts = static_cast<int32_t>(cfg.scripts);
    sc.n_entities = static_cast<int32_t>(cfg.entities);
    sc.n_docs = static_cast<int32_t>(cfg.docs);
    sc.script_len = static_cast<int32_t>(cfg.script_len);
    sc.noise = cfg.noise;
    sc.seed = cfg.seed;
    rep::SyntheticCorpus corpus = rep::generate_synthetic(sc);

    rep::JsonlWriter out(cfg.output);
    for (const auto& d : corpus.docs) out.write(rep::to_json(d));
    Json meta{{"config", cfg.echo()},
              {"documents", corpus.docs.size()},
              {"script_of_doc", corpus.script_of_doc}};
    rep::write_json_file(cfg.output + ".meta.json", meta);
    std::cout << "wrote " << corpus.docs.size() << " documents to " << cfg.output << "\n";
    return 0;
}

int cmd_extract(const RunConfig& cfg) {
    std::vector<rep::Document> docs;
    rep::for_each_jsonl(cfg.input, [&](const Json& j, size_t) {
        docs.push_back(rep::document_from_json(j));
    });
    for (const auto& d : docs) {
        auto problems = rep::validate_document(d);
        if (!problems.empty())
            throw rep::DataError(d.doc_id + ": " + problems.front());
    }
    rep::ExtractionConfig ec;
    ec.negatives_per_instance = static_cast<int32_t>(cfg.nc - 1);
    rep::ExtractionReport report;
    auto results = rep::extract_corpus(docs, ec, cfg.workers, &report);

    rep::JsonlWriter out(cfg.output);
    for (const auto& r : results)
        for (const auto& c : r.chains) out.write(rep::to_json(c));
    Json rj = report.to_json();
    rj["config"] = cfg.echo();
    rep::write_json_file(cfg.output + ".report.json", rj);
    std::cout << "extracted " << report.events << " events, " << report.chains
              << " chains from " << report.documents << " documents\n";
    return 0;
}

std::vector<double> parse_split(const std::string& s) {
    std::vector<double> fracs;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) fracs.push_back(std::stod(part));
    if (fracs.size() != 3)
        throw rep::DataError("--split needs three comma-separated fractions");
    double sum = fracs[0] + fracs[1] + fracs[2];
    if (fracs[0] < 0 || fracs[1] < 0 || fracs[2] < 0 || sum > 1.0 + 1e-9)
        throw rep::DataError("--split fractions must be non-negative and sum to <= 1");
    return fracs;
}

int cmd_build_dataset(const RunConfig& cfg) {
    std::vector<rep::NarrativeChain> chains;
    rep::for_each_jsonl(cfg.input, [&](const Json& j, size_t) {
        chains.push_back(rep::chain_from_json(j));
    });
    if (chains.empty()) throw rep::DataError("no chains in " + cfg.input);

    // Split by document so no narrative straddles two splits.
    std::vector<std::string> doc_order;
    std::map<std::string, int> doc_split;
    for (const auto& c : chains) {
        const std::string& id = c.events.front().anchor.doc_id;
        if (!doc_split.count(id)) {
            doc_split[id] = 0;
            doc_order.push_back(id);
        }
    }
    auto fracs = parse_split(cfg.split);
    size_t n_docs = doc_order.size();
    size_t n_train = static_cast<size_t>(fracs[0] * static_cast<double>(n_docs) + 0.5);
    size_t n_dev = static_cast<size_t>(fracs[1] * static_cast<double>(n_docs) + 0.5);
    for (size_t i = 0; i < n_docs; ++i)
        doc_split[doc_order[i]] = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);

    std::vector<rep::NarrativeChain> parts[3];
    for (const auto& c : chains)
        parts[doc_split[c.events.front().anchor.doc_id]].push_back(c);

    // Distractors come from the corpus-wide pool.
    auto pool = rep::build_event_pool(chains);
    rep::ExtractionConfig ec;
    ec.negatives_per_instance = static_cast<int32_t>(cfg.nc - 1);
    ec.window_stride = static_cast<int32_t>(cfg.stride);
    ec.max_instances_per_doc = static_cast<int32_t>(cfg.max_per_doc);

    fs::create_directories(cfg.output);
    const char* names[3] = {"train", "dev", "test"};
    std::vector<rep::McncInstance> splits[3];
    for (int s = 0; s < 3; ++s) {
        ec.seed = cfg.seed + static_cast<uint64_t>(s);
        splits[s] = rep::build_mcnc(parts[s], pool, static_cast<int32_t>(cfg.ne), ec);
        rep::JsonlWriter out(cfg.output + "/" + names[s] + ".jsonl");
        for (const auto& inst : splits[s]) out.write(rep::to_json(inst));
    }

    auto vocabs = rep::build_vocabs(splits[0]);
    vocabs.save_dir(cfg.output);
    Json meta{{"config", cfg.echo()},
              {"vocab_digest", rep::vocab_digest(vocabs)},
              {"documents", n_docs},
              {"chains", chains.size()},
              {"instances",
               Json{{"train", splits[0].size()},
                    {"dev", splits[1].size()},
                    {"test", splits[2].size()}}}};
    rep::write_json_file(cfg.output + "/dataset.meta.json", meta);
    std::cout << "dataset: " << splits[0].size() << " train, " << splits[1].size()
              << " dev, " << splits[2].size() << " test instances\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    auto vocabs = rep::VocabSet::load_dir(cfg.input);
    uint64_t digest = rep::vocab_digest(vocabs);
    auto ablate = rep::AblationSet::parse(cfg.ablate);
    rep::DatasetIndexer indexer(vocabs, ablate);

    auto train_raw = rep::load_instances(cfg.input + "/train.jsonl");
    auto dev_raw = rep::load_instances(cfg.input + "/dev.jsonl");
    auto train_set = index_all(indexer, train_raw, cfg.ne, cfg.nc, "train");
    auto dev_set = index_all(indexer, dev_raw, cfg.ne, cfg.nc, "dev");

    Json model_json = model_config_json(cfg);
    rep::EncoderConfig enc_cfg = encoder_config_from_json(model_json);
    rep::PredictorConfig pred_cfg = predictor_config_from_json(model_json);

    rep::ParamRegistry<float> reg;
    rep::Rng init_rng(cfg.seed);
    auto enc = rep::register_encoder(reg, enc_cfg, indexer.sizes(), init_rng);
    auto pred = rep::register_predictor(reg, pred_cfg, enc_cfg.d_e, init_rng);

    rep::TrainConfig tc;
    tc.lr = cfg.lr;
    tc.batch = cfg.batch;
    tc.lambda = cfg.lambda;
    tc.dropout = cfg.dropout;
    tc.epochs = cfg.epochs;
    tc.seed = cfg.seed;
    tc.variant = cfg.variant;
    tc.ablate = ablate;
    tc.score_temporal = cfg.score_space != "raw";

    fs::create_directories(cfg.output);
    std::ofstream log_out(cfg.output + "/train_log.jsonl");
    if (!log_out) throw rep::DataError("cannot write " + cfg.output + "/train_log.jsonl");

    auto result = rep::train(reg, enc, pred, train_set, dev_set, tc,
                             [&](const rep::EpochLog& log) {
                                 log_out << log.to_json().dump() << "\n";
                                 log_out.flush();
                                 std::cout << "epoch " << log.epoch << " loss "
                                           << log.train_loss << " dev_acc "
                                           << log.dev_accuracy << "\n";
                             });

    Json ck_config = model_json;
    ck_config["train"] = Json{{"lr", cfg.lr},
                              {"batch", cfg.batch},
                              {"lambda", cfg.lambda},
                              {"epochs", cfg.epochs},
                              {"seed", cfg.seed},
                              {"best_epoch", result.best_epoch},
                              {"best_dev_accuracy", result.best_dev_accuracy}};
    rep::save_checkpoint(cfg.output + "/checkpoint.bin", reg, digest, ck_config,
                         &result.optimizer);
    Json meta{{"config", cfg.echo()},
              {"best_epoch", result.best_epoch},
              {"best_dev_accuracy", result.best_dev_accuracy},
              {"vocab_digest", digest}};
    rep::write_json_file(cfg.output + "/train.meta.json", meta);
    std::cout << "best epoch " << result.best_epoch << " dev accuracy "
              << result.best_dev_accuracy << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    auto ck = rep::load_checkpoint(cfg.checkpoint);
    std::string dataset_dir = fs::path(cfg.input).parent_path().string();
    if (dataset_dir.empty()) dataset_dir = ".";
    auto vocabs = rep::VocabSet::load_dir(dataset_dir);
    uint64_t digest = rep::vocab_digest(vocabs);
    if (digest != ck.digest)
        throw rep::DataError("vocabulary digest mismatch: dataset " +
                             std::to_string(digest) + " vs checkpoint " +
                             std::to_string(ck.digest));

    auto ablate = rep::AblationSet::parse(
        ck.config.at("ablate").get<std::vector<std::string>>());
    rep::DatasetIndexer indexer(vocabs, ablate);
    rep::EncoderConfig enc_cfg = encoder_config_from_json(ck.config);
    rep::PredictorConfig pred_cfg = predictor_config_from_json(ck.config);

    rep::ParamRegistry<float> reg;
    rep::Rng init_rng(1);
    auto enc = rep::register_encoder(reg, enc_cfg, indexer.sizes(), init_rng);
    auto pred = rep::register_predictor(reg, pred_cfg, enc_cfg.d_e, init_rng);
    rep::restore_params(reg, ck);

    auto raw = rep::load_instances(cfg.input);
    auto instances = index_all(indexer, raw, pred_cfg.n_history, pred_cfg.n_candidates,
                               "eval");
    std::string variant = ck.config.at("variant").get<std::string>();
    auto result = rep::evaluate(reg, enc, pred, instances, variant, 256, cfg.workers);

    if (!cfg.output.empty()) {
        rep::JsonlWriter out(cfg.output);
        for (const auto& p : result.predictions)
            out.write(Json{{"instance_id", p.instance_id},
                           {"probabilities", p.probabilities},
                           {"predicted", p.predicted},
                           {"answer", p.answer}});
        Json meta{{"config", cfg.echo()},
                  {"accuracy", result.accuracy},
                  {"instances", instances.size()}};
        rep::write_json_file(cfg.output + ".meta.json", meta);
    }
    std::cout << "accuracy " << result.accuracy << " over " << instances.size()
              << " instances\n";
    return 0;
}

int cmd_inspect_attention(const RunConfig& cfg) {
    auto ck = rep::load_checkpoint(cfg.checkpoint);
    auto vocabs = rep::VocabSet::load_dir(cfg.input);
    uint64_t digest = rep::vocab_digest(vocabs);
    if (digest != ck.digest)
        throw rep::DataError("vocabulary digest mismatch between dataset and checkpoint");

    auto ablate = rep::AblationSet::parse(
        ck.config.at("ablate").get<std::vector<std::string>>());
    rep::DatasetIndexer indexer(vocabs, ablate);
    rep::EncoderConfig enc_cfg = encoder_config_from_json(ck.config);
    rep::PredictorConfig pred_cfg = predictor_config_from_json(ck.config);

    rep::ParamRegistry<float> reg;
    rep::Rng init_rng(1);
    auto enc = rep::register_encoder(reg, enc_cfg, indexer.sizes(), init_rng);
    rep::register_predictor(reg, pred_cfg, enc_cfg.d_e, init_rng);
    rep::restore_params(reg, ck);

    auto records = rep::read_jsonl(cfg.event_file);
    if (records.empty()) throw rep::DataError("no event in " + cfg.event_file);
    rep::RichEvent event = rep::event_from_json(records.front());

    auto indexed = indexer.index_event(event);
    rep::EventIndices idx;
    idx.verb = indexed.verb;
    idx.prot_role = indexed.prot_role;
    for (const auto& a : indexed.args) idx.args.push_back(a);
    rep::AttentionTrace<float> trace;
    rep::encode_event_rich(reg, enc, idx, &trace);

    Json j = rep::attention_to_json(event, trace);
    j["config"] = cfg.echo();
    rep::write_json_file(cfg.output, j);
    std::string csv_path = fs::path(cfg.output).replace_extension(".csv").string();
    std::ofstream csv(csv_path);
    csv << rep::attention_to_csv(event, trace);
    std::cout << "wrote " << cfg.output << " and " << csv_path << "\n";
    return 0;
}

void add_model_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--ne", cfg.ne, "history length N_e")->capture_default_str();
    cmd->add_option("--nc", cfg.nc, "candidate count N_c")->capture_default_str();
    cmd->add_option("--layers", cfg.layers, "event encoder layers")->capture_default_str();
    cmd->add_option("--ffn-dim", cfg.ffn_dim, "event encoder feed-forward dim")
        ->capture_default_str();
    cmd->add_option("--heads", cfg.heads, "event encoder heads")->capture_default_str();
    cmd->add_option("--dw", cfg.dw, "word embedding dim")->capture_default_str();
    cmd->add_option("--de", cfg.de, "event embedding dim")->capture_default_str();
    cmd->add_option("--temporal-layers", cfg.temporal_layers, "temporal layers")
        ->capture_default_str();
    cmd->add_option("--temporal-heads", cfg.temporal_heads, "temporal heads")
        ->capture_default_str();
    cmd->add_option("--temporal-ffn", cfg.temporal_ffn, "temporal feed-forward dim")
        ->capture_default_str();
    cmd->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    cmd->add_option("--batch", cfg.batch, "mini-batch size")->capture_default_str();
    cmd->add_option("--lambda", cfg.lambda, "L2 regularization factor")
        ->capture_default_str();
    cmd->add_option("--dropout", cfg.dropout, "dropout rate")->capture_default_str();
    cmd->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--variant", cfg.variant, "event encoder: rich or fusion")
        ->check(CLI::IsMember({"rich", "fusion"}))
        ->capture_default_str();
    cmd->add_option("--ablate", cfg.ablate, "ablations: S, T, RT")
        ->delimiter(',');
    cmd->add_option("--score-space", cfg.score_space,
                    "score on temporal or raw event vectors")
        ->check(CLI::IsMember({"temporal", "raw"}))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rich event prediction pipeline"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic corpus");
    gen->add_option("--output", cfg.output, "documents JSONL to write")->required();
    gen->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    gen->add_option("--scripts", cfg.scripts, "number of latent scripts")
        ->capture_default_str();
    gen->add_option("--entities", cfg.entities, "entity pool size")->capture_default_str();
    gen->add_option("--docs", cfg.docs, "number of documents")->capture_default_str();
    gen->add_option("--noise", cfg.noise, "per-event type corruption rate")
        ->capture_default_str();
    gen->add_option("--script-len", cfg.script_len, "events per script")
        ->capture_default_str();
    gen->add_option("--config", cfg.config_file, "JSON config file");

    auto* extract = app.add_subcommand("extract", "documents JSONL -> chains JSONL");
    extract->add_option("--input", cfg.input, "documents JSONL")->required();
    extract->add_option("--output", cfg.output, "chains JSONL to write")->required();
    extract->add_option("--nc", cfg.nc, "candidate count N_c")->capture_default_str();
    extract->add_option("--workers", cfg.workers, "parallel workers")
        ->capture_default_str();
    extract->add_option("--config", cfg.config_file, "JSON config file");

    auto* build = app.add_subcommand("build-dataset",
                                     "chains JSONL -> train/dev/test + vocab");
    build->add_option("--input", cfg.input, "chains JSONL")->required();
    build->add_option("--output", cfg.output, "dataset directory")->required();
    build->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    build->add_option("--ne", cfg.ne, "history length N_e")->capture_default_str();
    build->add_option("--nc", cfg.nc, "candidate count N_c")->capture_default_str();
    build->add_option("--split", cfg.split, "train,dev,test doc fractions")
        ->capture_default_str();
    build->add_option("--stride", cfg.stride, "window stride")->capture_default_str();
    build->add_option("--max-per-doc", cfg.max_per_doc,
                      "cap on instances per document (0 = unlimited)")
        ->capture_default_str();
    build->add_option("--config", cfg.config_file, "JSON config file");

    auto* train = app.add_subcommand("train", "dataset dir -> checkpoint + log");
    train->add_option("--input", cfg.input, "dataset directory")->required();
    train->add_option("--output", cfg.output, "model directory")->required();
    train->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    train->add_option("--workers", cfg.workers, "evaluation workers")
        ->capture_default_str();
    add_model_flags(train, cfg);
    train->add_option("--config", cfg.config_file, "JSON config file");

    auto* eval = app.add_subcommand("eval", "checkpoint + instances -> accuracy");
    eval->add_option("--checkpoint", cfg.checkpoint, "checkpoint file")->required();
    eval->add_option("--input", cfg.input,
                     "instances JSONL (vocab loaded from its directory)")
        ->required();
    eval->add_option("--output", cfg.output, "predictions JSONL to write");
    eval->add_option("--workers", cfg.workers, "parallel workers")->capture_default_str();
    eval->add_option("--config", cfg.config_file, "JSON config file");

    auto* inspect = app.add_subcommand("inspect-attention",
                                       "checkpoint + event -> attention matrices");
    inspect->add_option("--checkpoint", cfg.checkpoint, "checkpoint file")->required();
    inspect->add_option("--input", cfg.input, "dataset directory (for vocabulary)")
        ->required();
    inspect->add_option("--event", cfg.event_file, "JSONL file with the event")
        ->required();
    inspect->add_option("--output", cfg.output, "attention JSON to write")->required();
    inspect->add_option("--config", cfg.config_file, "JSON config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        apply_config_file(sub, cfg);
        if (sub == gen) return cmd_gen_synthetic(cfg);
        if (sub == extract) return cmd_extract(cfg);
        if (sub == build) return cmd_build_dataset(cfg);
        if (sub == train) return cmd_train(cfg);
        if (sub == eval) return cmd_eval(cfg);
        if (sub == inspect) return cmd_inspect_attention(cfg);
        std::cerr << "unknown subcommand\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
