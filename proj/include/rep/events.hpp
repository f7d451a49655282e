#pragma once
#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rep/jsonl.hpp"

namespace rep {

// Table of edge labels kept by the extractor. Everything else is dropped.
inline const std::set<std::string>& reserved_roles() {
    static const std::set<std::string> kRoles = {
        "ARG0", "ARG1", "ARG2", "ARG3", "ARG4",          // core roles
        "op1", "op2", "op3", "op4",                      // operators
        "location", "destination", "path",               // spatial
        "instrument", "manner", "topic", "medium",       // means
        "mod", "poss", "polarity",                       // modifiers
    };
    return kRoles;
}

inline bool is_operator_role(const std::string& r) {
    return r == "op1" || r == "op2" || r == "op3" || r == "op4";
}

// Frame symbols look like lemma-NN (two trailing digits after a dash).
inline bool is_verb_sense_symbol(const std::string& s) {
    if (s.size() < 4) return false;
    size_t dash = s.rfind('-');
    if (dash == std::string::npos || dash == 0 || dash + 3 != s.size()) return false;
    return std::isdigit(static_cast<unsigned char>(s[dash + 1])) &&
           std::isdigit(static_cast<unsigned char>(s[dash + 2]));
}

inline std::string verb_lemma(const std::string& sense) {
    if (!is_verb_sense_symbol(sense)) return sense;
    return sense.substr(0, sense.rfind('-'));
}

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct Argument {
    std::string role;
    std::string headword;
    std::string type;
    std::optional<int64_t> entity_id;

    bool operator==(const Argument& o) const {
        return role == o.role && headword == o.headword && type == o.type &&
               entity_id == o.entity_id;
    }
};

struct EventAnchor {
    std::string doc_id;
    int64_t sentence_index = 0;
    int64_t verb_token_index = 0;

    bool operator==(const EventAnchor& o) const {
        return doc_id == o.doc_id && sentence_index == o.sentence_index &&
               verb_token_index == o.verb_token_index;
    }
    bool operator<(const EventAnchor& o) const {
        if (doc_id != o.doc_id) return doc_id < o.doc_id;
        if (sentence_index != o.sentence_index) return sentence_index < o.sentence_index;
        return verb_token_index < o.verb_token_index;
    }
};

struct RichEvent {
    std::string verb_sense;
    std::string protagonist_role;
    std::vector<Argument> args;
    EventAnchor anchor;

    bool operator==(const RichEvent& o) const {
        return verb_sense == o.verb_sense && protagonist_role == o.protagonist_role &&
               args == o.args && anchor == o.anchor;
    }

    // Content identity ignoring the anchor: what the predictor actually sees.
    bool same_content(const RichEvent& o) const {
        if (verb_sense != o.verb_sense || protagonist_role != o.protagonist_role)
            return false;
        auto key = [](const Argument& a) {
            return std::tuple(a.role, a.headword, a.type);
        };
        std::vector<std::tuple<std::string, std::string, std::string>> x, y;
        for (const auto& a : args) x.push_back(key(a));
        for (const auto& a : o.args) y.push_back(key(a));
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        return x == y;
    }
};

struct Protagonist {
    int64_t entity_id = -1;
    std::string headword;

    bool operator==(const Protagonist& o) const {
        return entity_id == o.entity_id && headword == o.headword;
    }
};

struct NarrativeChain {
    Protagonist protagonist;
    std::vector<RichEvent> events;
};

struct McncInstance {
    std::vector<RichEvent> history;
    std::vector<RichEvent> candidates;
    int32_t answer = 0;
};

// ---------------------------------------------------------------------------
// JSON (field names match the type fields; one record per line in files)

inline Json to_json(const Argument& a) {
    Json j{{"role", a.role}, {"headword", a.headword}, {"type", a.type}};
    if (a.entity_id) j["entity_id"] = *a.entity_id;
    return j;
}

inline Argument argument_from_json(const Json& j) {
    Argument a;
    a.role = j.at("role").get<std::string>();
    a.headword = j.at("headword").get<std::string>();
    a.type = j.at("type").get<std::string>();
    if (j.contains("entity_id") && !j["entity_id"].is_null())
        a.entity_id = j["entity_id"].get<int64_t>();
    return a;
}

inline Json to_json(const EventAnchor& a) {
    return Json{{"doc_id", a.doc_id},
                {"sentence_index", a.sentence_index},
                {"verb_token_index", a.verb_token_index}};
}

inline EventAnchor anchor_from_json(const Json& j) {
    EventAnchor a;
    a.doc_id = j.at("doc_id").get<std::string>();
    a.sentence_index = j.at("sentence_index").get<int64_t>();
    a.verb_token_index = j.at("verb_token_index").get<int64_t>();
    return a;
}

inline Json to_json(const RichEvent& e) {
    Json args = Json::array();
    for (const auto& a : e.args) args.push_back(to_json(a));
    return Json{{"verb_sense", e.verb_sense},
                {"protagonist_role", e.protagonist_role},
                {"args", args},
                {"anchor", to_json(e.anchor)}};
}

inline RichEvent event_from_json(const Json& j) {
    RichEvent e;
    e.verb_sense = j.at("verb_sense").get<std::string>();
    e.protagonist_role = j.at("protagonist_role").get<std::string>();
    for (const auto& a : j.at("args")) e.args.push_back(argument_from_json(a));
    e.anchor = anchor_from_json(j.at("anchor"));
    return e;
}

inline Json to_json(const NarrativeChain& c) {
    Json events = Json::array();
    for (const auto& e : c.events) events.push_back(to_json(e));
    return Json{{"protagonist",
                 Json{{"entity_id", c.protagonist.entity_id},
                      {"headword", c.protagonist.headword}}},
                {"events", events}};
}

inline NarrativeChain chain_from_json(const Json& j) {
    NarrativeChain c;
    c.protagonist.entity_id = j.at("protagonist").at("entity_id").get<int64_t>();
    c.protagonist.headword = j.at("protagonist").at("headword").get<std::string>();
    for (const auto& e : j.at("events")) c.events.push_back(event_from_json(e));
    return c;
}

inline Json to_json(const McncInstance& m) {
    Json h = Json::array(), c = Json::array();
    for (const auto& e : m.history) h.push_back(to_json(e));
    for (const auto& e : m.candidates) c.push_back(to_json(e));
    return Json{{"history", h}, {"candidates", c}, {"answer", m.answer}};
}

inline McncInstance instance_from_json(const Json& j) {
    McncInstance m;
    for (const auto& e : j.at("history")) m.history.push_back(event_from_json(e));
    for (const auto& e : j.at("candidates")) m.candidates.push_back(event_from_json(e));
    m.answer = j.at("answer").get<int32_t>();
    return m;
}

// ---------------------------------------------------------------------------
// Validation

struct TaskConfig {
    int32_t n_history = 8;     // N_e
    int32_t n_candidates = 5;  // N_c
    bool allow_bare_lemma = false;  // lemma-only verb symbols (sense ablation)
};

// Never aborts; returns one line per violated invariant, empty iff valid.
inline std::vector<std::string> validate_instance(const McncInstance& inst,
                                                  const TaskConfig& cfg) {
    std::vector<std::string> report;
    if (static_cast<int32_t>(inst.history.size()) != cfg.n_history)
        report.push_back("history-length: expected " + std::to_string(cfg.n_history) +
                         " events, got " + std::to_string(inst.history.size()));
    if (static_cast<int32_t>(inst.candidates.size()) != cfg.n_candidates)
        report.push_back("candidate-count: expected " + std::to_string(cfg.n_candidates) +
                         " events, got " + std::to_string(inst.candidates.size()));
    if (inst.answer < 0 || inst.answer >= static_cast<int32_t>(inst.candidates.size()))
        report.push_back("answer-range: answer " + std::to_string(inst.answer) +
                         " outside [0, " + std::to_string(inst.candidates.size()) + ")");

    auto check_event = [&](const RichEvent& e, const std::string& where) {
        if (e.protagonist_role.empty())
            report.push_back("protagonist-missing: " + where);
        bool sense_ok = is_verb_sense_symbol(e.verb_sense) ||
                        (cfg.allow_bare_lemma && !e.verb_sense.empty());
        if (!sense_ok)
            report.push_back("verb-sense-pattern: " + where + " '" + e.verb_sense + "'");
        for (size_t i = 0; i < e.args.size(); ++i) {
            const Argument& a = e.args[i];
            if (!reserved_roles().count(a.role))
                report.push_back("role-membership: " + where + ".args[" +
                                 std::to_string(i) + "] role '" + a.role + "'");
            if (a.headword.empty() || a.type.empty())
                report.push_back("argument-fields: " + where + ".args[" +
                                 std::to_string(i) + "] empty headword or type");
        }
    };
    for (size_t i = 0; i < inst.history.size(); ++i)
        check_event(inst.history[i], "history[" + std::to_string(i) + "]");
    for (size_t i = 0; i < inst.candidates.size(); ++i)
        check_event(inst.candidates[i], "candidates[" + std::to_string(i) + "]");
    return report;
}

}  // namespace rep
