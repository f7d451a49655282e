#pragma once
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rep/adam.hpp"
#include "rep/jsonl.hpp"
#include "rep/params.hpp"

namespace rep {

namespace detail {

inline void put_bytes(std::ofstream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void put(std::ofstream& out, T v) {
    put_bytes(out, &v, sizeof(T));
}
inline void put_str(std::ofstream& out, const std::string& s) {
    put<uint32_t>(out, static_cast<uint32_t>(s.size()));
    put_bytes(out, s.data(), s.size());
}

inline void get_bytes(std::ifstream& in, void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw DataError("checkpoint: truncated file");
}
template <typename T>
T get(std::ifstream& in) {
    T v;
    get_bytes(in, &v, sizeof(T));
    return v;
}
inline std::string get_str(std::ifstream& in) {
    uint32_t n = get<uint32_t>(in);
    std::string s(n, '\0');
    if (n) get_bytes(in, s.data(), n);
    return s;
}

}  // namespace detail

constexpr char kCheckpointMagic[8] = {'R', 'E', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    uint64_t digest = 0;   // vocabulary digest the model was trained with
    Json config;           // effective model + training configuration
    std::map<std::string, Tensor<float>> params;
    bool has_optimizer = false;
    double lr = 0, beta1 = 0, beta2 = 0, eps = 0;
    int64_t step = 0;
    std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> moments;
};

// Layout: magic, version, digest, config JSON, named parameter blocks
// (name, shape, raw little-endian float32), then optimizer state.
inline void save_checkpoint(const std::string& path, const ParamRegistry<float>& reg,
                            uint64_t digest, const Json& config,
                            const AdamState<float>* opt = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path);
    detail::put_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<uint32_t>(out, kCheckpointVersion);
    detail::put<uint64_t>(out, digest);
    detail::put_str(out, config.dump());
    detail::put<uint32_t>(out, static_cast<uint32_t>(reg.size()));
    for (const auto& p : reg.all()) {
        detail::put_str(out, p.name);
        detail::put<uint32_t>(out, static_cast<uint32_t>(p.value.shape.size()));
        for (int64_t d : p.value.shape) detail::put<uint64_t>(out, static_cast<uint64_t>(d));
        detail::put_bytes(out, p.value.data.data(), p.value.data.size() * sizeof(float));
    }
    detail::put<uint8_t>(out, opt ? 1 : 0);
    if (opt) {
        detail::put<double>(out, opt->lr);
        detail::put<double>(out, opt->beta1);
        detail::put<double>(out, opt->beta2);
        detail::put<double>(out, opt->eps);
        detail::put<int64_t>(out, opt->step);
        for (size_t i = 0; i < reg.size(); ++i) {
            detail::put_bytes(out, opt->m[i].data(), opt->m[i].size() * sizeof(float));
            detail::put_bytes(out, opt->v[i].data(), opt->v[i].size() * sizeof(float));
        }
    }
    if (!out) throw DataError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);
    char magic[8];
    detail::get_bytes(in, magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw DataError(path + ": not a checkpoint file");
    uint32_t version = detail::get<uint32_t>(in);
    if (version != kCheckpointVersion)
        throw DataError(path + ": unsupported checkpoint version " +
                        std::to_string(version));
    Checkpoint ck;
    ck.digest = detail::get<uint64_t>(in);
    ck.config = Json::parse(detail::get_str(in));
    uint32_t n_params = detail::get<uint32_t>(in);
    std::vector<std::string> order;
    for (uint32_t i = 0; i < n_params; ++i) {
        std::string name = detail::get_str(in);
        uint32_t rank = detail::get<uint32_t>(in);
        Shape shape;
        for (uint32_t r = 0; r < rank; ++r)
            shape.push_back(static_cast<int64_t>(detail::get<uint64_t>(in)));
        Tensor<float> t(shape);
        detail::get_bytes(in, t.data.data(), t.data.size() * sizeof(float));
        ck.params.emplace(name, std::move(t));
        order.push_back(name);
    }
    ck.has_optimizer = detail::get<uint8_t>(in) != 0;
    if (ck.has_optimizer) {
        ck.lr = detail::get<double>(in);
        ck.beta1 = detail::get<double>(in);
        ck.beta2 = detail::get<double>(in);
        ck.eps = detail::get<double>(in);
        ck.step = detail::get<int64_t>(in);
        for (const auto& name : order) {
            size_t n = ck.params.at(name).data.size();
            std::vector<float> m(n), v(n);
            detail::get_bytes(in, m.data(), n * sizeof(float));
            detail::get_bytes(in, v.data(), n * sizeof(float));
            ck.moments.emplace(name, std::make_pair(std::move(m), std::move(v)));
        }
    }
    return ck;
}

// Copies checkpoint tensors into a freshly registered registry; every name
// and shape must match exactly.
inline void restore_params(ParamRegistry<float>& reg, const Checkpoint& ck) {
    if (reg.size() != ck.params.size())
        throw DataError("checkpoint: parameter count mismatch (" +
                        std::to_string(ck.params.size()) + " stored, " +
                        std::to_string(reg.size()) + " registered)");
    for (auto& p : reg.all()) {
        auto it = ck.params.find(p.name);
        if (it == ck.params.end())
            throw DataError("checkpoint: missing parameter " + p.name);
        if (it->second.shape != p.value.shape)
            throw DataError("checkpoint: shape mismatch for " + p.name + ": stored " +
                            shape_str(it->second.shape) + ", expected " +
                            shape_str(p.value.shape));
        p.value = it->second;
    }
}

}  // namespace rep
