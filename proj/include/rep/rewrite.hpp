#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rep/amr.hpp"
#include "rep/errors.hpp"

namespace rep {

struct ExtractionConfig {
    std::set<std::string> reserved = reserved_roles();
    int32_t chain_min_length = 2;
    int32_t window_stride = 1;
    int32_t negatives_per_instance = 4;  // N_c - 1
    int32_t max_instances_per_doc = 0;   // 0 = unlimited
    bool include_protagonist_arg = true;
    uint64_t seed = 0;
};

struct RewriteStats {
    int64_t rule1_collapsed = 0;  // edges into coordination nodes replaced
    int64_t rule2_removed = 0;    // verb-verb edges removed
    int64_t rule3_inverted = 0;   // ARGN-of edges inverted
    int64_t rule4_filtered = 0;   // non-reserved edges removed
};

namespace detail {

inline bool is_op_label(const std::string& l) {
    if (l.size() < 3 || l.compare(0, 2, "op") != 0) return false;
    for (size_t i = 2; i < l.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(l[i]))) return false;
    return true;
}

inline bool is_argn_of(const std::string& l, std::string* inverted) {
    // ARG<digit>-of
    if (l.size() != 7 || l.compare(0, 3, "ARG") != 0 || l.compare(4, 3, "-of") != 0)
        return false;
    if (!std::isdigit(static_cast<unsigned char>(l[3]))) return false;
    if (inverted) *inverted = l.substr(0, 4);
    return true;
}

}  // namespace detail

// Applies the four conversion rules in order 1 -> 2 -> 3, iterated until none
// of those patterns matches (Rule 3 can point an inverted edge back at a
// coordination node, re-arming Rule 1, and a Rule 1 fan-out can create a new
// verb-verb edge for Rule 2), then filters with Rule 4, which deletes only
// and so can never re-arm the earlier rules. Total on well-formed graphs;
// alignments carry over untouched.
inline AmrGraph rewrite_graph(const AmrGraph& g, const ExtractionConfig& cfg,
                              RewriteStats* stats = nullptr) {
    RewriteStats local;
    RewriteStats& st = stats ? *stats : local;

    std::map<std::string, AmrNode> nodes;
    for (const auto& n : g.nodes) nodes[n.id] = n;
    std::set<AmrEdge> edges(g.edges.begin(), g.edges.end());

    // Rule 1: fan edges pointing at an "and" node out to its op children,
    // then drop the op edges and the node itself once nothing touches it.
    auto rule1 = [&] {
        bool any = false;
        for (int sweep = 0;; ++sweep) {
            if (sweep > 1000)
                throw DataError("rewrite_graph: coordination did not converge");
            std::vector<std::string> targets;
            for (const auto& [id, n] : nodes) {
                if (n.concept_text != "and") continue;
                for (const auto& e : edges)
                    if (e.dst == id && e.src != id) { targets.push_back(id); break; }
            }
            if (targets.empty()) break;
            any = true;
            for (const auto& c : targets) {
                std::vector<AmrEdge> incoming, op_children;
                for (const auto& e : edges) {
                    if (e.dst == c && e.src != c) incoming.push_back(e);
                    if (e.src == c && detail::is_op_label(e.label)) op_children.push_back(e);
                }
                for (const auto& in : incoming) {
                    edges.erase(in);
                    ++st.rule1_collapsed;
                    for (const auto& op : op_children)
                        if (op.dst != c) edges.insert({in.src, in.label, op.dst});
                }
                for (const auto& op : op_children) edges.erase(op);
                bool incident = false;
                for (const auto& e : edges)
                    if (e.src == c || e.dst == c) { incident = true; break; }
                if (!incident) nodes.erase(c);
            }
        }
        return any;
    };

    // Rule 2: no edges between two verb sense nodes.
    auto rule2 = [&] {
        bool any = false;
        for (auto it = edges.begin(); it != edges.end();) {
            if (nodes.at(it->src).is_verb_sense && nodes.at(it->dst).is_verb_sense) {
                it = edges.erase(it);
                ++st.rule2_removed;
                any = true;
            } else {
                ++it;
            }
        }
        return any;
    };

    // Rule 3: invert ARGN-of edges.
    auto rule3 = [&] {
        std::vector<AmrEdge> inverted;
        for (auto it = edges.begin(); it != edges.end();) {
            std::string arg;
            if (detail::is_argn_of(it->label, &arg)) {
                inverted.push_back({it->dst, arg, it->src});
                it = edges.erase(it);
                ++st.rule3_inverted;
            } else {
                ++it;
            }
        }
        for (const auto& e : inverted) edges.insert(e);
        return !inverted.empty();
    };

    for (int round = 0;; ++round) {
        if (round > 1000)
            throw DataError("rewrite_graph: rules did not converge");
        bool changed = rule1();
        changed |= rule2();
        changed |= rule3();
        if (!changed) break;
    }

    // Rule 4: keep reserved labels and operators only.
    for (auto it = edges.begin(); it != edges.end();) {
        if (!cfg.reserved.count(it->label) && !is_operator_role(it->label)) {
            it = edges.erase(it);
            ++st.rule4_filtered;
        } else {
            ++it;
        }
    }

    AmrGraph out;
    out.root = nodes.count(g.root) ? g.root : "";
    for (const auto& [id, n] : nodes) out.nodes.push_back(n);
    for (const auto& e : edges) out.edges.push_back(e);
    for (const auto& [id, toks] : g.alignments)
        if (nodes.count(id)) out.alignments[id] = toks;
    return out;
}

}  // namespace rep
