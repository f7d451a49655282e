#pragma once
#include <string>
#include <vector>

#include "rep/document.hpp"
#include "rep/errors.hpp"
#include "rep/events.hpp"
#include "rep/rng.hpp"

namespace rep {

// Desk-scale corpus generator. Every script shares one fixed verb/role
// sequence, so the next verb is determined by position alone; scripts differ
// only in the TYPE symbol their filler participant carries. Headwords are
// entity names and a constant filler token, so types hold the only
// script-identifying signal.
struct SyntheticConfig {
    int32_t n_scripts = 5;
    int32_t n_entities = 50;
    int32_t n_docs = 100;
    int32_t script_len = 12;
    double noise = 0.0;  // per-event chance of a corrupted filler type
    uint64_t seed = 1;
};

struct SyntheticSpec {
    std::vector<std::string> verbs;         // per position
    std::vector<std::string> prot_roles;    // per position
    std::vector<std::string> filler_roles;  // per position
    std::vector<std::string> script_types;  // per script
};

struct SyntheticCorpus {
    std::vector<Document> docs;
    std::vector<NarrativeChain> intended_chains;  // one per doc
    std::vector<int32_t> script_of_doc;
    SyntheticSpec spec;
};

inline SyntheticSpec make_synthetic_spec(const SyntheticConfig& cfg) {
    static const std::vector<std::string> kProtRoles = {"ARG0", "ARG0", "ARG1"};
    static const std::vector<std::string> kFillerRoles = {"instrument", "location",
                                                          "topic", "manner"};
    SyntheticSpec spec;
    for (int32_t t = 0; t < cfg.script_len; ++t) {
        spec.verbs.push_back("act" + std::to_string(t) + "-01");
        spec.prot_roles.push_back(kProtRoles[static_cast<size_t>(t) % kProtRoles.size()]);
        spec.filler_roles.push_back(kFillerRoles[static_cast<size_t>(t) % kFillerRoles.size()]);
    }
    for (int32_t s = 0; s < cfg.n_scripts; ++s)
        spec.script_types.push_back("gear" + std::to_string(s));
    return spec;
}

inline SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_scripts <= 0 || cfg.n_docs <= 0 || cfg.n_entities <= 0 ||
        cfg.script_len <= 0)
        throw DataError("generate_synthetic: scripts, docs, entities, and script "
                        "length must be positive");
    SyntheticCorpus corpus;
    corpus.spec = make_synthetic_spec(cfg);
    const SyntheticSpec& spec = corpus.spec;
    Rng rng(cfg.seed);

    for (int32_t di = 0; di < cfg.n_docs; ++di) {
        int32_t script = static_cast<int32_t>(rng.below(static_cast<uint64_t>(cfg.n_scripts)));
        int32_t entity = static_cast<int32_t>(rng.below(static_cast<uint64_t>(cfg.n_entities)));
        std::string ent_name = "ent" + std::to_string(entity);

        Document doc;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%05d", di);
        doc.doc_id = buf;
        CorefCluster cluster;
        NarrativeChain intended;
        intended.protagonist = {0, ent_name};

        for (int32_t t = 0; t < cfg.script_len; ++t) {
            int64_t base = static_cast<int64_t>(doc.tokens.size());
            doc.tokens.insert(doc.tokens.end(),
                              {ent_name, "act" + std::to_string(t), "with", "thing"});
            doc.sentences.emplace_back(base, base + 3);
            cluster.mentions.push_back({base, base, base});

            std::string gear = spec.script_types[static_cast<size_t>(script)];
            if (cfg.noise > 0 && rng.unit() < cfg.noise)
                gear = spec.script_types[static_cast<size_t>(
                    rng.below(static_cast<uint64_t>(cfg.n_scripts)))];

            SentenceGraph sg;
            sg.penman = "(e / " + spec.verbs[static_cast<size_t>(t)] + " :" +
                        spec.prot_roles[static_cast<size_t>(t)] + " (p / person) :" +
                        spec.filler_roles[static_cast<size_t>(t)] + " (f / " + gear + "))";
            sg.alignments["e"] = {base + 1};
            sg.alignments["p"] = {base};
            sg.alignments["f"] = {base + 3};
            doc.graphs.push_back(std::move(sg));

            RichEvent ev;
            ev.verb_sense = spec.verbs[static_cast<size_t>(t)];
            ev.protagonist_role = spec.prot_roles[static_cast<size_t>(t)];
            ev.anchor = {doc.doc_id, t, base + 1};
            Argument prot{spec.prot_roles[static_cast<size_t>(t)], ent_name, "person", 0};
            Argument filler{spec.filler_roles[static_cast<size_t>(t)], "thing", gear, {}};
            ev.args = {prot, filler};
            intended.events.push_back(std::move(ev));
        }
        doc.coref.push_back(std::move(cluster));
        corpus.docs.push_back(std::move(doc));
        corpus.intended_chains.push_back(std::move(intended));
        corpus.script_of_doc.push_back(script);
    }
    return corpus;
}

// Rule-based reference predictor: reads the script from a history filler
// type, the position from the last history verb, and the protagonist from the
// last history event, reconstructs the intended next event, and demands a
// unique content match among the candidates. Returns -1 when none exists.
inline int32_t synthetic_oracle_predict(const SyntheticSpec& spec,
                                        const McncInstance& inst) {
    auto position_of = [&](const std::string& verb) -> int32_t {
        for (size_t t = 0; t < spec.verbs.size(); ++t)
            if (spec.verbs[t] == verb) return static_cast<int32_t>(t);
        return -1;
    };
    if (inst.history.empty()) return -1;
    const RichEvent& last_ev = inst.history.back();
    int32_t last = position_of(last_ev.verb_sense);
    if (last < 0 || last + 1 >= static_cast<int32_t>(spec.verbs.size())) return -1;

    std::string gear, protagonist;
    for (const auto& a : last_ev.args) {
        if (a.type == "person" && a.role == last_ev.protagonist_role)
            protagonist = a.headword;
        for (const auto& g : spec.script_types)
            if (a.type == g) gear = g;
    }
    if (gear.empty() || protagonist.empty()) return -1;

    size_t next = static_cast<size_t>(last + 1);
    RichEvent intended;
    intended.verb_sense = spec.verbs[next];
    intended.protagonist_role = spec.prot_roles[next];
    intended.args = {{spec.prot_roles[next], protagonist, "person", {}},
                     {spec.filler_roles[next], "thing", gear, {}}};

    int32_t match = -1;
    for (size_t c = 0; c < inst.candidates.size(); ++c) {
        if (inst.candidates[c].same_content(intended)) {
            if (match >= 0) return -1;  // ambiguous
            match = static_cast<int32_t>(c);
        }
    }
    return match;
}

}  // namespace rep
