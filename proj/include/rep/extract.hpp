#pragma once
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rep/document.hpp"
#include "rep/parallel.hpp"
#include "rep/rewrite.hpp"

namespace rep {

// An event read off a rewritten graph, before participants are linked.
struct ProtoArg {
    std::string role;
    std::string type;     // child concept
    std::string node_id;  // participant root in the graph
    bool is_constant = false;
};

struct ProtoEvent {
    std::string verb_sense;
    std::string node_id;
    std::vector<ProtoArg> args;
};

// Verb sense nodes are events; their children are participants with the edge
// label as role and the child concept as type. Zero-argument events are kept.
inline std::vector<ProtoEvent> extract_events(const AmrGraph& rewritten) {
    std::vector<ProtoEvent> events;
    for (const auto& n : rewritten.nodes) {
        if (!n.is_verb_sense) continue;
        ProtoEvent ev;
        ev.verb_sense = n.concept_text;
        ev.node_id = n.id;
        for (const auto* e : rewritten.out_edges(n.id)) {
            const AmrNode* child = rewritten.find_node(e->dst);
            if (!child) continue;
            ev.args.push_back({e->label, child->concept_text, child->id, child->is_constant});
        }
        events.push_back(std::move(ev));
    }
    return events;
}

// Most frequent lowercased head token across the cluster's mentions; ties go
// to the text whose mention appears first.
inline std::string select_headword(const CorefCluster& cluster,
                                   const std::vector<std::string>& tokens) {
    std::map<std::string, int> counts;
    std::map<std::string, int64_t> first_start;
    for (const auto& m : cluster.mentions) {
        if (m.head < 0 || m.head >= static_cast<int64_t>(tokens.size())) continue;
        std::string text = lowercase(tokens[static_cast<size_t>(m.head)]);
        counts[text]++;
        auto it = first_start.find(text);
        if (it == first_start.end() || m.start < it->second) first_start[text] = m.start;
    }
    std::string best;
    int best_count = -1;
    int64_t best_start = 0;
    for (const auto& [text, count] : counts) {
        int64_t start = first_start[text];
        if (count > best_count || (count == best_count && start < best_start)) {
            best = text;
            best_count = count;
            best_start = start;
        }
    }
    return best;
}

struct LinkWarning {
    std::string doc_id;
    int64_t sentence_index = 0;
    std::string node_id;
    std::string message;
};

namespace detail {

// Nodes reachable from `root` along outgoing edges, cycle-safe.
inline std::vector<std::string> subtree_nodes(const AmrGraph& g, const std::string& root) {
    std::vector<std::string> stack{root}, out;
    std::set<std::string> seen;
    while (!stack.empty()) {
        std::string id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) continue;
        out.push_back(id);
        for (const auto& e : g.edges)
            if (e.src == id) stack.push_back(e.dst);
    }
    return out;
}

inline std::vector<int64_t> aligned_tokens(const AmrGraph& g, const std::string& id) {
    auto it = g.alignments.find(id);
    return it == g.alignments.end() ? std::vector<int64_t>{} : it->second;
}

}  // namespace detail

// Resolves proto-event participants against the pre-rewrite graph and the
// document's coreference clusters. Produces model-ready events without a
// protagonist; chains fill that in.
inline std::vector<RichEvent> link_participants(const std::vector<ProtoEvent>& events,
                                                const AmrGraph& original,
                                                const Document& doc,
                                                int64_t sentence_index,
                                                std::vector<LinkWarning>* warnings) {
    int64_t sentence_start = 0;
    if (sentence_index >= 0 && sentence_index < static_cast<int64_t>(doc.sentences.size()))
        sentence_start = doc.sentences[static_cast<size_t>(sentence_index)].first;

    std::vector<RichEvent> linked;
    for (const auto& ev : events) {
        RichEvent out;
        out.verb_sense = ev.verb_sense;
        out.anchor.doc_id = doc.doc_id;
        out.anchor.sentence_index = sentence_index;
        auto verb_toks = detail::aligned_tokens(original, ev.node_id);
        out.anchor.verb_token_index =
            verb_toks.empty() ? sentence_start : *std::min_element(verb_toks.begin(), verb_toks.end());

        for (const auto& arg : ev.args) {
            Argument a;
            a.role = arg.role;
            a.type = arg.type;
            if (arg.is_constant) {
                // Attribute constants keep the literal in both slots.
                a.headword = arg.type;
                out.args.push_back(std::move(a));
                continue;
            }
            if (!original.find_node(arg.node_id)) {
                if (warnings)
                    warnings->push_back({doc.doc_id, sentence_index, arg.node_id,
                                         "participant missing from original graph"});
                continue;
            }
            std::vector<int64_t> related;
            for (const auto& id : detail::subtree_nodes(original, arg.node_id)) {
                auto toks = detail::aligned_tokens(original, id);
                related.insert(related.end(), toks.begin(), toks.end());
            }
            bool linked_entity = false;
            if (!related.empty()) {
                int64_t rightmost = *std::max_element(related.begin(), related.end());
                for (size_t ci = 0; ci < doc.coref.size() && !linked_entity; ++ci) {
                    for (const auto& m : doc.coref[ci].mentions) {
                        if (m.contains(rightmost)) {
                            a.entity_id = static_cast<int64_t>(ci);
                            a.headword = select_headword(doc.coref[ci], doc.tokens);
                            linked_entity = true;
                            break;
                        }
                    }
                }
            }
            if (!linked_entity) {
                auto own = detail::aligned_tokens(original, arg.node_id);
                if (!own.empty()) {
                    int64_t tok = *std::min_element(own.begin(), own.end());
                    a.headword = lowercase(doc.tokens[static_cast<size_t>(tok)]);
                } else {
                    a.headword = lowercase(arg.type);
                }
            }
            out.args.push_back(std::move(a));
        }
        linked.push_back(std::move(out));
    }
    return linked;
}

// Lower rank = higher priority when the protagonist fills several roles.
inline std::pair<int, std::string> role_priority(const std::string& role) {
    if (role.size() == 4 && role.compare(0, 3, "ARG") == 0 && role[3] >= '0' && role[3] <= '4')
        return {role[3] - '0', role};
    return {5, role};
}

// Per-entity subsequences of a document's events in textual verb order.
inline std::vector<NarrativeChain> build_chains(const std::vector<RichEvent>& doc_events,
                                                const Document& doc,
                                                const ExtractionConfig& cfg,
                                                int64_t* dropped_short = nullptr) {
    std::vector<RichEvent> ordered = doc_events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const RichEvent& a, const RichEvent& b) { return a.anchor < b.anchor; });

    std::vector<NarrativeChain> chains;
    for (size_t ci = 0; ci < doc.coref.size(); ++ci) {
        int64_t entity = static_cast<int64_t>(ci);
        NarrativeChain chain;
        chain.protagonist.entity_id = entity;
        chain.protagonist.headword = select_headword(doc.coref[ci], doc.tokens);
        for (const auto& ev : ordered) {
            std::vector<const Argument*> filled;
            for (const auto& a : ev.args)
                if (a.entity_id && *a.entity_id == entity) filled.push_back(&a);
            if (filled.empty()) continue;
            std::sort(filled.begin(), filled.end(), [](const Argument* x, const Argument* y) {
                return role_priority(x->role) < role_priority(y->role);
            });
            RichEvent e = ev;
            e.protagonist_role = filled.front()->role;
            chain.events.push_back(std::move(e));
        }
        if (static_cast<int32_t>(chain.events.size()) >= cfg.chain_min_length) {
            chains.push_back(std::move(chain));
        } else if (!chain.events.empty() && dropped_short) {
            ++*dropped_short;
        }
    }
    return chains;
}

struct ExtractionReport {
    int64_t documents = 0;
    int64_t sentences = 0;
    int64_t events = 0;
    RewriteStats rewrite;
    int64_t unlinked_participants = 0;
    int64_t chains = 0;
    int64_t chains_dropped_short = 0;

    Json to_json() const {
        return Json{{"documents", documents},
                    {"sentences", sentences},
                    {"events", events},
                    {"dropped_edges",
                     Json{{"rule1_coordination", rewrite.rule1_collapsed},
                          {"rule2_verb_verb", rewrite.rule2_removed},
                          {"rule3_inverted", rewrite.rule3_inverted},
                          {"rule4_filtered", rewrite.rule4_filtered}}},
                    {"unlinked_participants", unlinked_participants},
                    {"chains", chains},
                    {"chains_dropped_short", chains_dropped_short}};
    }
};

struct DocExtraction {
    std::vector<NarrativeChain> chains;
    std::vector<RichEvent> events;
    RewriteStats rewrite;
    std::vector<LinkWarning> warnings;
    int64_t chains_dropped_short = 0;
};

inline DocExtraction extract_document(const Document& doc, const ExtractionConfig& cfg) {
    DocExtraction result;
    for (size_t si = 0; si < doc.graphs.size(); ++si) {
        AmrGraph original = parse_penman(doc.graphs[si].penman);
        original.alignments = doc.graphs[si].alignments;
        RewriteStats stats;
        AmrGraph rewritten = rewrite_graph(original, cfg, &stats);
        result.rewrite.rule1_collapsed += stats.rule1_collapsed;
        result.rewrite.rule2_removed += stats.rule2_removed;
        result.rewrite.rule3_inverted += stats.rule3_inverted;
        result.rewrite.rule4_filtered += stats.rule4_filtered;
        auto protos = extract_events(rewritten);
        auto linked = link_participants(protos, original, doc,
                                        static_cast<int64_t>(si), &result.warnings);
        result.events.insert(result.events.end(), linked.begin(), linked.end());
    }
    result.chains = build_chains(result.events, doc, cfg, &result.chains_dropped_short);
    return result;
}

// Documents are independent; outputs are merged in input order so the result
// does not depend on the worker count.
inline std::vector<DocExtraction> extract_corpus(const std::vector<Document>& docs,
                                                 const ExtractionConfig& cfg,
                                                 int workers,
                                                 ExtractionReport* report = nullptr) {
    std::vector<DocExtraction> results(docs.size());
    parallel_for(static_cast<int64_t>(docs.size()), workers, [&](int64_t i) {
        results[static_cast<size_t>(i)] = extract_document(docs[static_cast<size_t>(i)], cfg);
    });
    if (report) {
        report->documents = static_cast<int64_t>(docs.size());
        for (size_t i = 0; i < docs.size(); ++i) {
            report->sentences += static_cast<int64_t>(docs[i].graphs.size());
            report->events += static_cast<int64_t>(results[i].events.size());
            report->rewrite.rule1_collapsed += results[i].rewrite.rule1_collapsed;
            report->rewrite.rule2_removed += results[i].rewrite.rule2_removed;
            report->rewrite.rule3_inverted += results[i].rewrite.rule3_inverted;
            report->rewrite.rule4_filtered += results[i].rewrite.rule4_filtered;
            report->unlinked_participants += static_cast<int64_t>(results[i].warnings.size());
            report->chains += static_cast<int64_t>(results[i].chains.size());
            report->chains_dropped_short += results[i].chains_dropped_short;
        }
    }
    return results;
}

}  // namespace rep
