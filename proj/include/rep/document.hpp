#pragma once
#include <string>
#include <vector>

#include "rep/amr.hpp"
#include "rep/jsonl.hpp"
#include "rep/penman.hpp"

namespace rep {

struct Mention {
    int64_t start = 0;  // token span, end inclusive
    int64_t end = 0;
    int64_t head = 0;   // head token index

    bool contains(int64_t token) const { return token >= start && token <= end; }
};

struct CorefCluster {
    std::vector<Mention> mentions;
};

struct SentenceGraph {
    std::string penman;
    std::map<std::string, std::vector<int64_t>> alignments;  // node id -> tokens
};

struct Document {
    std::string doc_id;
    std::vector<std::string> tokens;
    std::vector<std::pair<int64_t, int64_t>> sentences;  // token ranges, end inclusive
    std::vector<SentenceGraph> graphs;                   // one per sentence
    std::vector<CorefCluster> coref;
};

inline Json to_json(const Document& d) {
    Json sentences = Json::array();
    for (const auto& [s, e] : d.sentences) sentences.push_back(Json::array({s, e}));
    Json graphs = Json::array();
    for (const auto& g : d.graphs) {
        Json align = Json::object();
        for (const auto& [node, toks] : g.alignments) align[node] = toks;
        graphs.push_back(Json{{"penman", g.penman}, {"alignments", align}});
    }
    Json coref = Json::array();
    for (const auto& c : d.coref) {
        Json mentions = Json::array();
        for (const auto& m : c.mentions)
            mentions.push_back(Json{{"start", m.start}, {"end", m.end}, {"head", m.head}});
        coref.push_back(Json{{"mentions", mentions}});
    }
    return Json{{"doc_id", d.doc_id}, {"tokens", d.tokens}, {"sentences", sentences},
                {"graphs", graphs},   {"coref", coref}};
}

inline Document document_from_json(const Json& j) {
    Document d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : j.at("sentences"))
        d.sentences.emplace_back(s.at(0).get<int64_t>(), s.at(1).get<int64_t>());
    for (const auto& g : j.at("graphs")) {
        SentenceGraph sg;
        sg.penman = g.at("penman").get<std::string>();
        if (g.contains("alignments"))
            for (const auto& [node, toks] : g.at("alignments").items())
                sg.alignments[node] = toks.get<std::vector<int64_t>>();
        d.graphs.push_back(std::move(sg));
    }
    if (j.contains("coref"))
        for (const auto& c : j.at("coref")) {
            CorefCluster cluster;
            for (const auto& m : c.at("mentions"))
                cluster.mentions.push_back({m.at("start").get<int64_t>(),
                                            m.at("end").get<int64_t>(),
                                            m.at("head").get<int64_t>()});
            d.coref.push_back(std::move(cluster));
        }
    return d;
}

// Basic structural checks; returns problems, empty when well-formed.
inline std::vector<std::string> validate_document(const Document& d) {
    std::vector<std::string> problems;
    if (d.graphs.size() != d.sentences.size())
        problems.push_back("graphs/sentences count mismatch");
    int64_t expected = 0;
    for (const auto& [s, e] : d.sentences) {
        if (s != expected || e < s)
            problems.push_back("sentence ranges do not partition tokens");
        expected = e + 1;
    }
    if (!d.sentences.empty() && expected != static_cast<int64_t>(d.tokens.size()))
        problems.push_back("sentence ranges do not cover all tokens");
    for (const auto& c : d.coref)
        for (const auto& m : c.mentions)
            if (m.start < 0 || m.end >= static_cast<int64_t>(d.tokens.size()) ||
                m.head < m.start || m.head > m.end)
                problems.push_back("mention span outside document");
    return problems;
}

}  // namespace rep
