#pragma once
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rep/events.hpp"

namespace rep {

struct AmrNode {
    std::string id;       // variable name, or "_cN" for the N-th constant
    std::string concept_text;  // concept or constant literal
    bool is_verb_sense = false;
    bool is_constant = false;
};

struct AmrEdge {
    std::string src;
    std::string label;  // stored without the leading ':'
    std::string dst;

    auto key() const { return std::tie(src, label, dst); }
    bool operator==(const AmrEdge& o) const { return key() == o.key(); }
    bool operator<(const AmrEdge& o) const { return key() < o.key(); }
};

struct AmrGraph {
    std::vector<AmrNode> nodes;
    std::vector<AmrEdge> edges;
    std::string root;
    // node id -> token indices in the source document
    std::map<std::string, std::vector<int64_t>> alignments;

    const AmrNode* find_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }

    bool has_edge(const std::string& s, const std::string& l, const std::string& d) const {
        for (const auto& e : edges)
            if (e.src == s && e.label == l && e.dst == d) return true;
        return false;
    }

    std::vector<const AmrEdge*> out_edges(const std::string& id) const {
        std::vector<const AmrEdge*> out;
        for (const auto& e : edges)
            if (e.src == id) out.push_back(&e);
        return out;
    }

    // Canonical form used when comparing rewriter outputs: sorted node ids
    // with concepts, sorted edge triples.
    std::pair<std::vector<std::pair<std::string, std::string>>, std::vector<AmrEdge>>
    canonical() const {
        std::vector<std::pair<std::string, std::string>> ns;
        for (const auto& n : nodes) ns.emplace_back(n.id, n.concept_text);
        std::sort(ns.begin(), ns.end());
        std::vector<AmrEdge> es = edges;
        std::sort(es.begin(), es.end());
        return {ns, es};
    }
};

inline bool same_graph(const AmrGraph& a, const AmrGraph& b) {
    return a.canonical() == b.canonical();
}

}  // namespace rep
