#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "rep/events.hpp"
#include "rep/rng.hpp"
#include "rep/vocab.hpp"

using namespace rep;

namespace {

RichEvent make_event(const std::string& verb, const std::string& d,
                     std::vector<Argument> args) {
    RichEvent e;
    e.verb_sense = verb;
    e.protagonist_role = d;
    e.args = std::move(args);
    e.anchor = {"doc0", 0, 1};
    return e;
}

McncInstance well_formed_instance() {
    McncInstance inst;
    for (int i = 0; i < 8; ++i)
        inst.history.push_back(
            make_event("fall-01", "ARG0", {{"ARG0", "jack", "person", 3}}));
    for (int i = 0; i < 5; ++i)
        inst.candidates.push_back(
            make_event("see-01", "ARG1", {{"ARG1", "jack", "person", 3}}));
    inst.answer = 2;
    return inst;
}

// Independent re-statement of the instance invariants, used to cross-check
// validate_instance on randomized mutations.
bool brute_force_valid(const McncInstance& m, const TaskConfig& cfg) {
    if (m.history.size() != static_cast<size_t>(cfg.n_history)) return false;
    if (m.candidates.size() != static_cast<size_t>(cfg.n_candidates)) return false;
    if (m.answer < 0 || static_cast<size_t>(m.answer) >= m.candidates.size()) return false;
    std::vector<const RichEvent*> all;
    for (const auto& e : m.history) all.push_back(&e);
    for (const auto& e : m.candidates) all.push_back(&e);
    for (const auto* e : all) {
        if (e->protagonist_role.empty()) return false;
        if (!cfg.allow_bare_lemma) {
            if (!is_verb_sense_symbol(e->verb_sense)) return false;
        } else if (e->verb_sense.empty()) {
            return false;
        }
        for (const auto& a : e->args) {
            if (reserved_roles().find(a.role) == reserved_roles().end()) return false;
            if (a.headword.empty() || a.type.empty()) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("intern is idempotent and dense") {
    SymbolVocab v(VocabKind::verb_sense);
    int32_t a = v.intern("fall-01", false);
    int32_t b = v.intern("fall-01", false);
    CHECK(a == b);
    CHECK(a == 2);  // after <pad>, <unk>

    SECTION("frozen miss returns UNK") {
        CHECK(v.intern("zzz-99", true) == SymbolVocab::kUnk);
        CHECK_FALSE(v.contains("zzz-99"));
    }

    SECTION("1000 distinct symbols round-trip") {
        SymbolVocab w(VocabKind::headword);
        std::vector<int32_t> ids;
        for (int i = 0; i < 1000; ++i)
            ids.push_back(w.intern("sym" + std::to_string(i), false));
        std::set<int32_t> unique(ids.begin(), ids.end());
        CHECK(unique.size() == 1000);
        for (int i = 0; i < 1000; ++i) {
            CHECK(w.symbol(ids[static_cast<size_t>(i)]) == "sym" + std::to_string(i));
            CHECK(w.intern("sym" + std::to_string(i), true) == ids[static_cast<size_t>(i)]);
        }
    }
}

TEST_CASE("vocab pad and unk are reserved") {
    SymbolVocab v(VocabKind::role);
    CHECK(v.symbol(SymbolVocab::kPad) == "<pad>");
    CHECK(v.symbol(SymbolVocab::kUnk) == "<unk>");
    CHECK(v.size() == 2);
    CHECK_THROWS_AS(v.intern("", false), DataError);
}

TEST_CASE("vocab save/load round-trip") {
    std::string path = (std::filesystem::temp_directory_path() / "rep_vocab_test.txt").string();
    SymbolVocab v(VocabKind::type);
    for (int i = 0; i < 50; ++i) v.intern("type" + std::to_string(i * 7), false);
    v.save(path);
    SymbolVocab loaded = SymbolVocab::load(path, VocabKind::type);
    REQUIRE(loaded.size() == v.size());
    for (int32_t i = 0; i < v.size(); ++i) CHECK(loaded.symbol(i) == v.symbol(i));
    for (const auto& s : v.entries()) CHECK(loaded.lookup(s) == v.lookup(s));
    std::remove(path.c_str());
}

TEST_CASE("verb sense pattern") {
    CHECK(is_verb_sense_symbol("fall-01"));
    CHECK(is_verb_sense_symbol("have-org-role-91"));
    CHECK_FALSE(is_verb_sense_symbol("boat"));
    CHECK_FALSE(is_verb_sense_symbol("fall-1"));
    CHECK_FALSE(is_verb_sense_symbol("fall-012"));
    CHECK_FALSE(is_verb_sense_symbol("-01"));
    CHECK(verb_lemma("fall-01") == "fall");
    CHECK(verb_lemma("boat") == "boat");
}

TEST_CASE("rich event json round-trip is exact") {
    RichEvent e = make_event("strike-01", "ARG1",
                             {{"ARG0", "boat", "boat", {}}, {"polarity", "-", "-", {}}});
    e.args[0].entity_id = 7;
    RichEvent back = event_from_json(to_json(e));
    CHECK(back == e);

    SECTION("empty args") {
        RichEvent bare = make_event("sink-01", "ARG1", {});
        CHECK(event_from_json(to_json(bare)) == bare);
    }

    SECTION("chain and instance round-trip") {
        NarrativeChain c;
        c.protagonist = {3, "jack"};
        c.events = {e, make_event("sink-01", "ARG1", {})};
        NarrativeChain cc = chain_from_json(to_json(c));
        CHECK(cc.protagonist == c.protagonist);
        REQUIRE(cc.events.size() == 2);
        CHECK(cc.events[0] == c.events[0]);
        CHECK(cc.events[1] == c.events[1]);

        McncInstance inst = well_formed_instance();
        McncInstance back2 = instance_from_json(to_json(inst));
        CHECK(back2.answer == inst.answer);
        CHECK(back2.history == inst.history);
        CHECK(back2.candidates == inst.candidates);
    }
}

TEST_CASE("validate_instance flags each violation") {
    TaskConfig cfg;
    CHECK(validate_instance(well_formed_instance(), cfg).empty());

    SECTION("short history") {
        McncInstance m = well_formed_instance();
        m.history.pop_back();
        auto report = validate_instance(m, cfg);
        REQUIRE_FALSE(report.empty());
        CHECK(report[0].find("history-length") != std::string::npos);
    }

    SECTION("unreserved role") {
        McncInstance m = well_formed_instance();
        m.candidates[1].args[0].role = "snt1";
        auto report = validate_instance(m, cfg);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("role-membership") != std::string::npos);
        CHECK(report[0].find("snt1") != std::string::npos);
    }

    SECTION("answer out of range") {
        McncInstance m = well_formed_instance();
        m.answer = 5;
        auto report = validate_instance(m, cfg);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("answer-range") != std::string::npos);
    }
}

TEST_CASE("validate_instance matches brute-force validator on random mutations") {
    TaskConfig cfg;
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        McncInstance m = well_formed_instance();
        int mutations = static_cast<int>(rng.below(3));
        for (int k = 0; k < mutations; ++k) {
            switch (rng.below(7)) {
                case 0: m.history.pop_back(); break;
                case 1: m.candidates.push_back(m.candidates.back()); break;
                case 2: m.answer = static_cast<int32_t>(rng.below(9)) - 2; break;
                case 3: m.history[rng.below(m.history.size())].protagonist_role = ""; break;
                case 4: m.candidates[rng.below(m.candidates.size())].verb_sense = "plain"; break;
                case 5: {
                    auto& ev = m.history[rng.below(m.history.size())];
                    if (!ev.args.empty()) ev.args[0].role = "bogus";
                    break;
                }
                case 6: {
                    auto& ev = m.candidates[rng.below(m.candidates.size())];
                    if (!ev.args.empty()) ev.args[0].type = "";
                    break;
                }
            }
        }
        bool reported_valid = validate_instance(m, cfg).empty();
        CHECK(reported_valid == brute_force_valid(m, cfg));
    }
}

TEST_CASE("reserved role table contents") {
    const auto& r = reserved_roles();
    // Spelled out from the extraction rule table.
    for (const auto& role :
         {"ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "op1", "op2", "op3", "op4",
          "location", "destination", "path", "instrument", "manner", "topic",
          "medium", "mod", "poss", "polarity"})
        CHECK(r.count(role) == 1);
    CHECK(r.size() == 19);
    CHECK(r.count("time") == 0);
    CHECK(r.count("snt1") == 0);
}
