#pragma once
#include <array>
#include <string>
#include <vector>

#include "rep/encoder.hpp"
#include "rep/events.hpp"
#include "rep/vocab.hpp"

namespace rep {

struct AblationSet {
    bool strip_sense = false;     // -S: verb lemmas instead of senses
    bool drop_types = false;      // -T: no type term
    bool core_roles_only = false; // -RT: keep ARG0..ARG2 arguments only

    static AblationSet parse(const std::vector<std::string>& flags) {
        AblationSet a;
        for (const auto& f : flags) {
            if (f == "S" || f == "-S") a.strip_sense = true;
            else if (f == "T" || f == "-T") a.drop_types = true;
            else if (f == "RT" || f == "-RT") a.core_roles_only = true;
            else throw DataError("unknown ablation '" + f + "' (expected S, T, or RT)");
        }
        return a;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        if (strip_sense) out.push_back("S");
        if (drop_types) out.push_back("T");
        if (core_roles_only) out.push_back("RT");
        return out;
    }
};

// Builds the four symbol tables from a training split. Dev/test symbols map
// to UNK through the frozen tables afterwards.
inline VocabSet build_vocabs(const std::vector<McncInstance>& train) {
    VocabSet v;
    auto add_event = [&](const RichEvent& e) {
        v.verb_sense.intern(e.verb_sense, false);
        if (!e.protagonist_role.empty()) v.role.intern(e.protagonist_role, false);
        for (const auto& a : e.args) {
            v.role.intern(a.role, false);
            if (!a.headword.empty()) v.headword.intern(a.headword, false);
            if (!a.type.empty()) v.type.intern(a.type, false);
        }
    };
    for (const auto& inst : train) {
        for (const auto& e : inst.history) add_event(e);
        for (const auto& e : inst.candidates) add_event(e);
    }
    return v;
}

// FNV-1a over the vocabulary contents; checkpoints remember this so a model
// is never evaluated against tables it was not trained with.
inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t vocab_digest(const VocabSet& v) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (VocabKind k : {VocabKind::verb_sense, VocabKind::role, VocabKind::headword,
                        VocabKind::type}) {
        h = fnv1a64(std::string(vocab_kind_name(k)) + "\x1f", h);
        for (const auto& s : v.of(k).entries()) h = fnv1a64(s + "\n", h);
    }
    return h;
}

struct IndexedEvent {
    int32_t verb = SymbolVocab::kUnk;
    int32_t prot_role = SymbolVocab::kUnk;
    std::vector<std::array<int32_t, 3>> args;  // (role, headword, type)
};

struct IndexedInstance {
    std::vector<IndexedEvent> events;  // n_history history events then candidates
    int32_t answer = 0;
};

// Maps text events to ids under a frozen vocabulary and the active ablations.
class DatasetIndexer {
public:
    DatasetIndexer(VocabSet vocabs, AblationSet ablate, int64_t max_args_limit = 0)
        : vocabs_(std::move(vocabs)), ablate_(ablate), max_args_(max_args_limit) {
        if (ablate_.strip_sense) {
            for (const auto& s : vocabs_.verb_sense.entries()) {
                if (s == "<pad>" || s == "<unk>") continue;
                lemmas_.intern(verb_lemma(s), false);
            }
        }
    }

    const VocabSet& vocabs() const { return vocabs_; }
    const AblationSet& ablate() const { return ablate_; }

    VocabSizes sizes() const {
        VocabSizes s;
        s.verb_sense = ablate_.strip_sense ? lemmas_.size() : vocabs_.verb_sense.size();
        s.role = vocabs_.role.size();
        s.headword = vocabs_.headword.size();
        s.type = vocabs_.type.size();
        return s;
    }

    int32_t verb_id(const std::string& sense) const {
        if (ablate_.strip_sense)
            return const_cast<SymbolVocab&>(lemmas_).intern(verb_lemma(sense), true);
        return vocabs_.verb_sense.lookup(sense);
    }

    IndexedEvent index_event(const RichEvent& e) const {
        IndexedEvent out;
        out.verb = verb_id(e.verb_sense);
        out.prot_role = vocabs_.role.lookup(e.protagonist_role);
        for (const auto& a : e.args) {
            if (ablate_.core_roles_only && a.role != "ARG0" && a.role != "ARG1" &&
                a.role != "ARG2")
                continue;
            if (max_args_ > 0 && static_cast<int64_t>(out.args.size()) >= max_args_) break;
            out.args.push_back({vocabs_.role.lookup(a.role),
                                vocabs_.headword.lookup(a.headword),
                                ablate_.drop_types ? SymbolVocab::kPad
                                                   : vocabs_.type.lookup(a.type)});
        }
        return out;
    }

    IndexedInstance index_instance(const McncInstance& inst) const {
        IndexedInstance out;
        for (const auto& e : inst.history) out.events.push_back(index_event(e));
        for (const auto& e : inst.candidates) out.events.push_back(index_event(e));
        out.answer = inst.answer;
        return out;
    }

private:
    VocabSet vocabs_;
    SymbolVocab lemmas_{VocabKind::verb_sense};
    AblationSet ablate_;
    int64_t max_args_;
};

// Pads a set of indexed events into one encoder batch.
inline EventBatch make_event_batch(const std::vector<const IndexedEvent*>& events) {
    EventBatch b;
    b.n = static_cast<int64_t>(events.size());
    for (const auto* e : events)
        b.max_args = std::max(b.max_args, static_cast<int64_t>(e->args.size()));
    b.verb.reserve(events.size());
    b.arg_role.assign(static_cast<size_t>(b.n * b.max_args), SymbolVocab::kPad);
    b.arg_head.assign(static_cast<size_t>(b.n * b.max_args), SymbolVocab::kPad);
    b.arg_type.assign(static_cast<size_t>(b.n * b.max_args), SymbolVocab::kPad);
    b.arg_mask.assign(static_cast<size_t>(b.n * b.max_args), 0);
    for (size_t i = 0; i < events.size(); ++i) {
        b.verb.push_back(events[i]->verb);
        b.prot_role.push_back(events[i]->prot_role);
        for (size_t j = 0; j < events[i]->args.size(); ++j) {
            size_t at = i * static_cast<size_t>(b.max_args) + j;
            b.arg_role[at] = events[i]->args[j][0];
            b.arg_head[at] = events[i]->args[j][1];
            b.arg_type[at] = events[i]->args[j][2];
            b.arg_mask[at] = 1;
        }
    }
    return b;
}

inline std::vector<McncInstance> load_instances(const std::string& path) {
    std::vector<McncInstance> out;
    for_each_jsonl(path, [&](const Json& j, size_t) {
        out.push_back(instance_from_json(j));
    });
    return out;
}

}  // namespace rep
