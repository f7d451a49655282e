#pragma once
#include <sstream>
#include <string>
#include <vector>

#include "rep/encoder.hpp"
#include "rep/events.hpp"
#include "rep/jsonl.hpp"

namespace rep {

// Slot labels for one event's attention matrix: predicate first, then one
// role/headword label per argument.
inline std::vector<std::string> attention_labels(const RichEvent& e) {
    std::vector<std::string> labels{e.verb_sense};
    for (const auto& a : e.args) labels.push_back(a.role + "/" + a.headword);
    return labels;
}

template <typename S>
Json attention_to_json(const RichEvent& event, const AttentionTrace<S>& trace) {
    Json layers = Json::array();
    int64_t t = trace.seq_len, h = trace.heads;
    for (const auto& mats : trace.layers) {
        Json heads = Json::array();
        for (int64_t k = 0; k < h; ++k) {
            Json rows = Json::array();
            for (int64_t q = 0; q < t; ++q) {
                Json row = Json::array();
                for (int64_t c = 0; c < t; ++c)
                    row.push_back(static_cast<double>(
                        mats.data[static_cast<size_t>((k * t + q) * t + c)]));
                rows.push_back(row);
            }
            heads.push_back(rows);
        }
        layers.push_back(Json{{"heads", heads}});
    }
    return Json{{"event", to_json(event)},
                {"layers", layers},
                {"labels", attention_labels(event)}};
}

// Head-averaged weights in tidy CSV form: layer,row,col,weight with labels.
template <typename S>
std::string attention_to_csv(const RichEvent& event, const AttentionTrace<S>& trace) {
    auto labels = attention_labels(event);
    std::ostringstream out;
    out << "layer,row,col,weight\n";
    int64_t t = trace.seq_len, h = trace.heads;
    for (size_t l = 0; l < trace.layers.size(); ++l) {
        const auto& mats = trace.layers[l];
        for (int64_t q = 0; q < t; ++q)
            for (int64_t c = 0; c < t; ++c) {
                double avg = 0;
                for (int64_t k = 0; k < h; ++k)
                    avg += static_cast<double>(
                        mats.data[static_cast<size_t>((k * t + q) * t + c)]);
                avg /= static_cast<double>(h);
                out << l << ",\"" << labels[static_cast<size_t>(q)] << "\",\""
                    << labels[static_cast<size_t>(c)] << "\"," << avg << "\n";
            }
    }
    return out.str();
}

}  // namespace rep
