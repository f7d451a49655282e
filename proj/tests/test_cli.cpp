#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rep/jsonl.hpp"

namespace fs = std::filesystem;
using rep::Json;

namespace {

const std::string kCli = REP_CLI_PATH;

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() /
              ("rep_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& capture = "") {
    std::string cmd = kCli + " " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >" + capture + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("help exists for every subcommand and documents the flags") {
    Workspace ws;
    CHECK(run("--help", ws.path("h.txt")) == 0);
    std::string top = slurp(ws.path("h.txt"));
    for (const char* sub : {"extract", "build-dataset", "gen-synthetic", "train",
                            "eval", "inspect-attention"})
        CHECK(top.find(sub) != std::string::npos);

    CHECK(run("train --help", ws.path("t.txt")) == 0);
    std::string train_help = slurp(ws.path("t.txt"));
    for (const char* flag :
         {"--input", "--output", "--seed", "--ne", "--nc", "--layers", "--ffn-dim",
          "--heads", "--dw", "--de", "--lr", "--batch", "--lambda", "--dropout",
          "--epochs", "--variant", "--ablate", "--score-space", "--workers"})
        CHECK(train_help.find(flag) != std::string::npos);

    for (const char* sub : {"extract", "build-dataset", "gen-synthetic", "eval",
                            "inspect-attention"})
        CHECK(run(std::string(sub) + " --help") == 0);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("train --input x --output y --bogus-flag 1") == 1);
    CHECK(run("eval") == 1);                    // missing required flags
    CHECK(run("no-such-command") == 1);
    CHECK(run("") == 1);                        // subcommand required
}

TEST_CASE("data errors exit 2") {
    Workspace ws;
    CHECK(run("extract --input " + ws.path("missing.jsonl") + " --output " +
              ws.path("out.jsonl")) == 2);
    // malformed documents file
    std::ofstream(ws.path("bad.jsonl")) << "{not json}\n";
    CHECK(run("extract --input " + ws.path("bad.jsonl") + " --output " +
              ws.path("out.jsonl")) == 2);
}

TEST_CASE("gen-synthetic is deterministic per seed") {
    Workspace ws;
    REQUIRE(run("gen-synthetic --output " + ws.path("a.jsonl") +
                " --seed 9 --docs 12") == 0);
    REQUIRE(run("gen-synthetic --output " + ws.path("b.jsonl") +
                " --seed 9 --docs 12") == 0);
    REQUIRE(run("gen-synthetic --output " + ws.path("c.jsonl") +
                " --seed 10 --docs 12") == 0);
    CHECK(slurp(ws.path("a.jsonl")) == slurp(ws.path("b.jsonl")));
    CHECK(slurp(ws.path("a.jsonl")) != slurp(ws.path("c.jsonl")));
    REQUIRE(fs::exists(ws.path("a.jsonl") + ".meta.json"));

    // the echoed configuration carries the standard defaults
    Json cfg = Json::parse(slurp(ws.path("a.jsonl") + ".meta.json"))["config"];
    CHECK(cfg["ne"] == 8);
    CHECK(cfg["nc"] == 5);
    CHECK(cfg["dw"] == 300);
    CHECK(cfg["de"] == 128);
    CHECK(cfg["layers"] == 2);
    CHECK(cfg["ffn_dim"] == 1024);
    CHECK(cfg["heads"] == 8);
    CHECK(cfg["temporal_layers"] == 2);
    CHECK(cfg["temporal_heads"] == 16);
    CHECK(cfg["temporal_ffn"] == 1024);
    CHECK(cfg["lr"] == 1e-3);
    CHECK(cfg["lambda"] == 1e-5);
    CHECK(cfg["dropout"] == 0.1);
    CHECK(cfg["variant"] == "rich");
    CHECK(cfg["score_space"] == "temporal");
}

namespace {

// The pipeline is expensive; run it once and share the workspace across the
// sections below.
const Workspace& pipeline_fixture() {
    static Workspace ws;
    static bool ran = false;
    if (ran) return ws;
    ran = true;

    REQUIRE(run("gen-synthetic --output " + ws.path("docs.jsonl") +
                " --seed 7 --scripts 5 --entities 20 --docs 250") == 0);
    REQUIRE(run("extract --input " + ws.path("docs.jsonl") + " --output " +
                ws.path("chains.jsonl") + " --workers 2") == 0);
    REQUIRE(run("build-dataset --input " + ws.path("chains.jsonl") + " --output " +
                ws.path("data") + " --seed 7 --split 0.8,0.1,0.1") == 0);
    REQUIRE(run("train --input " + ws.path("data") + " --output " + ws.path("model") +
                " --seed 7 --dw 32 --de 32 --layers 1 --heads 4 --ffn-dim 64"
                " --temporal-layers 2 --temporal-heads 4 --temporal-ffn 64"
                " --batch 64 --epochs 20") == 0);
    REQUIRE(run("eval --checkpoint " + ws.path("model/checkpoint.bin") + " --input " +
                ws.path("data/test.jsonl") + " --output " + ws.path("preds.jsonl")) == 0);
    return ws;
}

}  // namespace

TEST_CASE("full pipeline reaches 0.9 accuracy on the synthetic corpus") {
    const Workspace& ws = pipeline_fixture();

    SECTION("extraction report") {
        Json report = Json::parse(slurp(ws.path("chains.jsonl") + ".report.json"));
        CHECK(report["documents"] == 250);
        CHECK(report["events"] == 3000);
    }

    SECTION("dataset artifacts") {
        Json meta = Json::parse(slurp(ws.path("data/dataset.meta.json")));
        CHECK(meta["instances"]["train"] == 800);
        CHECK(meta["instances"]["test"] == 100);
        for (const char* v : {"verb_sense.vocab", "role.vocab", "headword.vocab",
                              "type.vocab"})
            CHECK(fs::exists(ws.path("data/") + v));
    }

    SECTION("training log format: one record per epoch, four fields") {
        auto log = rep::read_jsonl(ws.path("model/train_log.jsonl"));
        REQUIRE(log.size() == 20);
        for (const auto& e : log) {
            CHECK(e.contains("epoch"));
            CHECK(e.contains("train_loss"));
            CHECK(e.contains("dev_accuracy"));
            CHECK(e.contains("wall_seconds"));
        }
    }

    SECTION("accuracy and prediction records") {
        Json emeta = Json::parse(slurp(ws.path("preds.jsonl") + ".meta.json"));
        CHECK(emeta["accuracy"].get<double>() >= 0.9);

        auto preds = rep::read_jsonl(ws.path("preds.jsonl"));
        REQUIRE(preds.size() == 100);
        for (const auto& p : preds) {
            CHECK(p.contains("instance_id"));
            CHECK(p.contains("predicted"));
            CHECK(p.contains("answer"));
            double sum = 0;
            for (double v : p["probabilities"].get<std::vector<double>>()) sum += v;
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }

    SECTION("evaluating twice gives identical predictions") {
        REQUIRE(run("eval --checkpoint " + ws.path("model/checkpoint.bin") +
                    " --input " + ws.path("data/test.jsonl") + " --output " +
                    ws.path("preds2.jsonl") + " --workers 3") == 0);
        CHECK(slurp(ws.path("preds.jsonl")) == slurp(ws.path("preds2.jsonl")));
    }

    SECTION("digest mismatch refuses to evaluate and writes nothing") {
        fs::create_directories(ws.path("tampered"));
        for (const auto& entry : fs::directory_iterator(ws.path("data")))
            fs::copy(entry.path(), ws.path("tampered/") +
                                       entry.path().filename().string());
        std::ofstream(ws.path("tampered/headword.vocab"), std::ios::app) << "sneaky\n";
        CHECK(run("eval --checkpoint " + ws.path("model/checkpoint.bin") + " --input " +
                  ws.path("tampered/test.jsonl") + " --output " +
                  ws.path("nope.jsonl")) == 2);
        CHECK_FALSE(fs::exists(ws.path("nope.jsonl")));
    }

    SECTION("inspect-attention exports normalized matrices") {
        std::ofstream(ws.path("event.jsonl"))
            << rep::read_jsonl(ws.path("data/test.jsonl")).front()["history"][0].dump()
            << "\n";
        REQUIRE(run("inspect-attention --checkpoint " + ws.path("model/checkpoint.bin") +
                    " --input " + ws.path("data") + " --event " + ws.path("event.jsonl") +
                    " --output " + ws.path("attn.json")) == 0);
        Json attn = Json::parse(slurp(ws.path("attn.json")));
        REQUIRE(attn.contains("layers"));
        REQUIRE(attn.contains("labels"));
        for (const auto& layer : attn["layers"])
            for (const auto& head : layer["heads"])
                for (const auto& row : head) {
                    double sum = 0;
                    for (double v : row.get<std::vector<double>>()) sum += v;
                    CHECK(std::abs(sum - 1.0) < 1e-6);
                }
        CHECK(fs::exists(ws.path("attn.csv")));
        std::string csv = slurp(ws.path("attn.csv"));
        CHECK(csv.rfind("layer,row,col,weight", 0) == 0);
    }
}

TEST_CASE("config file fills unset flags; explicit flags win") {
    Workspace ws;
    REQUIRE(run("gen-synthetic --output " + ws.path("docs.jsonl") +
                " --seed 3 --docs 30") == 0);
    REQUIRE(run("extract --input " + ws.path("docs.jsonl") + " --output " +
                ws.path("chains.jsonl")) == 0);
    REQUIRE(run("build-dataset --input " + ws.path("chains.jsonl") + " --output " +
                ws.path("data") + " --seed 3") == 0);

    std::ofstream(ws.path("cfg.json"))
        << R"({"epochs": 2, "dw": 16, "de": 16, "layers": 1, "heads": 2,
               "ffn-dim": 32, "temporal-layers": 1, "temporal-heads": 2,
               "temporal-ffn": 32})";

    REQUIRE(run("train --input " + ws.path("data") + " --output " + ws.path("m1") +
                " --seed 3 --config " + ws.path("cfg.json")) == 0);
    CHECK(rep::read_jsonl(ws.path("m1/train_log.jsonl")).size() == 2);

    REQUIRE(run("train --input " + ws.path("data") + " --output " + ws.path("m2") +
                " --seed 3 --config " + ws.path("cfg.json") + " --epochs 1") == 0);
    CHECK(rep::read_jsonl(ws.path("m2/train_log.jsonl")).size() == 1);
}
