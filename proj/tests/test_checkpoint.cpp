#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rep/checkpoint.hpp"
#include "rep/dataset.hpp"

using namespace rep;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ParamRegistry<float> sample_registry(uint64_t seed) {
    ParamRegistry<float> reg;
    Rng rng(seed);
    reg.add("enc.E_v", init_normal<float>({5, 3}, rng, 0.5));
    reg.add("enc.W1", init_xavier<float>(3, 4, rng));
    reg.add("pred.pos", init_normal<float>({9, 4}, rng, 0.1));
    return reg;
}

}  // namespace

TEST_CASE("checkpoint round-trips parameters, config, digest, and optimizer") {
    std::string path = temp_path("rep_ckpt_test.bin");
    auto reg = sample_registry(3);
    Json config{{"de", 4}, {"variant", "rich"}, {"ablate", Json::array()}};
    AdamState<float> opt = AdamState<float>::init(reg, 2e-3);
    opt.step = 17;
    Rng rng(5);
    for (auto& m : opt.m)
        for (auto& v : m) v = static_cast<float>(rng.unit());
    for (auto& mv : opt.v)
        for (auto& v : mv) v = static_cast<float>(rng.unit());

    save_checkpoint(path, reg, 0xabcdef1234ULL, config, &opt);
    Checkpoint ck = load_checkpoint(path);

    CHECK(ck.digest == 0xabcdef1234ULL);
    CHECK(ck.config == config);
    REQUIRE(ck.params.size() == 3);
    for (const auto& p : reg.all()) {
        REQUIRE(ck.params.count(p.name) == 1);
        CHECK(ck.params.at(p.name).shape == p.value.shape);
        CHECK(ck.params.at(p.name).data == p.value.data);  // bit-exact
    }
    REQUIRE(ck.has_optimizer);
    CHECK(ck.lr == 2e-3);
    CHECK(ck.step == 17);
    for (size_t i = 0; i < reg.size(); ++i) {
        const auto& name = reg.at(static_cast<int32_t>(i)).name;
        CHECK(ck.moments.at(name).first == opt.m[i]);
        CHECK(ck.moments.at(name).second == opt.v[i]);
    }
    std::remove(path.c_str());
}

TEST_CASE("restore_params copies by name and validates shapes") {
    std::string path = temp_path("rep_ckpt_restore.bin");
    auto reg = sample_registry(7);
    save_checkpoint(path, reg, 1, Json::object());
    Checkpoint ck = load_checkpoint(path);

    SECTION("round trip into a freshly initialized registry") {
        auto fresh = sample_registry(999);  // different values, same structure
        restore_params(fresh, ck);
        for (size_t i = 0; i < reg.size(); ++i)
            CHECK(fresh.at(static_cast<int32_t>(i)).value.data ==
                  reg.at(static_cast<int32_t>(i)).value.data);
    }
    SECTION("missing parameter") {
        ParamRegistry<float> other;
        Rng rng(1);
        other.add("enc.E_v", init_normal<float>({5, 3}, rng, 0.5));
        other.add("enc.W1", init_xavier<float>(3, 4, rng));
        other.add("pred.other", init_normal<float>({9, 4}, rng, 0.1));
        CHECK_THROWS_AS(restore_params(other, ck), DataError);
    }
    SECTION("shape mismatch") {
        ParamRegistry<float> other;
        Rng rng(1);
        other.add("enc.E_v", init_normal<float>({5, 3}, rng, 0.5));
        other.add("enc.W1", init_xavier<float>(3, 4, rng));
        other.add("pred.pos", init_normal<float>({8, 4}, rng, 0.1));
        CHECK_THROWS_AS(restore_params(other, ck), DataError);
    }
    SECTION("count mismatch") {
        ParamRegistry<float> other;
        Rng rng(1);
        other.add("enc.E_v", init_normal<float>({5, 3}, rng, 0.5));
        CHECK_THROWS_AS(restore_params(other, ck), DataError);
    }
    std::remove(path.c_str());
}

TEST_CASE("garbage files are rejected") {
    std::string path = temp_path("rep_ckpt_garbage.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "definitely not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    CHECK_THROWS_AS(load_checkpoint(temp_path("rep_missing_ckpt.bin")), DataError);
    std::remove(path.c_str());
}

TEST_CASE("vocab digest is stable and content-sensitive") {
    VocabSet a;
    a.verb_sense.intern("fall-01", false);
    a.role.intern("ARG0", false);
    VocabSet b;
    b.verb_sense.intern("fall-01", false);
    b.role.intern("ARG0", false);
    CHECK(vocab_digest(a) == vocab_digest(b));

    b.headword.intern("jack", false);
    CHECK(vocab_digest(a) != vocab_digest(b));

    // moving a symbol between namespaces must change the digest
    VocabSet c;
    c.verb_sense.intern("fall-01", false);
    c.headword.intern("ARG0", false);
    CHECK(vocab_digest(a) != vocab_digest(c));
}
