#pragma once
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rep/errors.hpp"

namespace rep {

using Json = nlohmann::json;

// Read a JSON Lines file, invoking fn per non-empty line.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const Json&, size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        fn(j, lineno - 1);
    }
}

inline std::vector<Json> read_jsonl(const std::string& path) {
    std::vector<Json> out;
    for_each_jsonl(path, [&](const Json& j, size_t) { out.push_back(j); });
    return out;
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path) : out_(path) {
        if (!out_) throw DataError("cannot open " + path + " for writing");
    }
    void write(const Json& j) { out_ << j.dump() << '\n'; }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

}  // namespace rep
