#pragma once
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rep/events.hpp"
#include "rep/rewrite.hpp"
#include "rep/rng.hpp"

namespace rep {

// Deduplicated corpus-wide event pool that distractors are sampled from.
inline std::vector<RichEvent> build_event_pool(const std::vector<NarrativeChain>& chains) {
    std::map<std::tuple<std::string, int64_t, int64_t, std::string>, RichEvent> by_anchor;
    for (const auto& c : chains)
        for (const auto& e : c.events)
            by_anchor.emplace(std::tuple(e.anchor.doc_id, e.anchor.sentence_index,
                                         e.anchor.verb_token_index, e.verb_sense),
                              e);
    std::vector<RichEvent> pool;
    pool.reserve(by_anchor.size());
    for (auto& [k, e] : by_anchor) pool.push_back(std::move(e));
    return pool;
}

namespace detail {

inline RichEvent make_distractor(RichEvent ev, const Protagonist& prot, Rng& rng) {
    if (ev.args.empty()) {
        ev.protagonist_role = "ARG0";
        return ev;
    }
    size_t pick = static_cast<size_t>(rng.below(ev.args.size()));
    ev.protagonist_role = ev.args[pick].role;
    ev.args[pick].headword = prot.headword;
    ev.args[pick].entity_id = prot.entity_id;
    return ev;
}

inline void strip_protagonist_args(RichEvent& e, int64_t entity) {
    e.args.erase(std::remove_if(e.args.begin(), e.args.end(),
                                [&](const Argument& a) {
                                    return a.entity_id && *a.entity_id == entity;
                                }),
                 e.args.end());
}

}  // namespace detail

// Slides (N_e + 1)-event windows over every chain; the tail event becomes the
// correct candidate, distractors come from the pool with the protagonist
// substituted into a random role. Fully determined by (chains, pool, seed).
inline std::vector<McncInstance> build_mcnc(const std::vector<NarrativeChain>& chains,
                                            const std::vector<RichEvent>& pool,
                                            int32_t n_history,
                                            const ExtractionConfig& cfg) {
    if (static_cast<int32_t>(pool.size()) < cfg.negatives_per_instance)
        throw DataError("event pool smaller than negatives_per_instance (" +
                        std::to_string(pool.size()) + " < " +
                        std::to_string(cfg.negatives_per_instance) + ")");
    Rng rng(cfg.seed);
    std::vector<McncInstance> instances;
    const int32_t window = n_history + 1;
    const int32_t stride = std::max<int32_t>(1, cfg.window_stride);

    std::map<std::string, int32_t> per_doc;
    for (const auto& chain : chains) {
        if (static_cast<int32_t>(chain.events.size()) < window) continue;
        std::set<EventAnchor> own;
        for (const auto& e : chain.events) own.insert(e.anchor);

        for (int32_t start = 0;
             start + window <= static_cast<int32_t>(chain.events.size()); start += stride) {
            if (cfg.max_instances_per_doc > 0) {
                const std::string& doc = chain.events.front().anchor.doc_id;
                if (per_doc[doc] >= cfg.max_instances_per_doc) break;
                ++per_doc[doc];
            }
            McncInstance inst;
            for (int32_t i = 0; i < n_history; ++i)
                inst.history.push_back(chain.events[static_cast<size_t>(start + i)]);
            RichEvent correct = chain.events[static_cast<size_t>(start + n_history)];

            std::vector<RichEvent> distractors;
            int guard = 0;
            while (static_cast<int32_t>(distractors.size()) < cfg.negatives_per_instance) {
                if (++guard > 10000)
                    throw DataError("could not sample distinct distractors; pool too uniform");
                const RichEvent& cand = pool[static_cast<size_t>(rng.below(pool.size()))];
                if (own.count(cand.anchor)) continue;
                RichEvent d = detail::make_distractor(cand, chain.protagonist, rng);
                // An indistinguishable copy of the answer would make the
                // instance unsolvable; resample it.
                if (d.same_content(correct)) continue;
                distractors.push_back(std::move(d));
            }

            inst.answer = static_cast<int32_t>(rng.below(
                static_cast<uint64_t>(cfg.negatives_per_instance) + 1));
            inst.candidates = std::move(distractors);
            inst.candidates.insert(inst.candidates.begin() + inst.answer, correct);

            if (!cfg.include_protagonist_arg) {
                for (auto& e : inst.history)
                    detail::strip_protagonist_args(e, chain.protagonist.entity_id);
                for (auto& e : inst.candidates)
                    detail::strip_protagonist_args(e, chain.protagonist.entity_id);
            }
            instances.push_back(std::move(inst));
        }
    }
    return instances;
}

}  // namespace rep
