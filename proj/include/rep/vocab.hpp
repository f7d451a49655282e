#pragma once
#include <array>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rep/errors.hpp"

namespace rep {

enum class VocabKind { verb_sense, role, headword, type };

inline const char* vocab_kind_name(VocabKind k) {
    switch (k) {
        case VocabKind::verb_sense: return "verb_sense";
        case VocabKind::role: return "role";
        case VocabKind::headword: return "headword";
        case VocabKind::type: return "type";
    }
    return "?";
}

// Dense append-only symbol table. Ids 0 and 1 are PAD and UNK in every
// namespace. Reads are safe from any number of threads; growth (intern with
// frozen=false) requires exclusive access, which callers must arrange.
class SymbolVocab {
public:
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kUnk = 1;

    explicit SymbolVocab(VocabKind kind = VocabKind::headword) : kind_(kind) {
        entries_ = {"<pad>", "<unk>"};
        index_ = {{"<pad>", 0}, {"<unk>", 1}};
    }

    VocabKind kind() const { return kind_; }
    int32_t size() const { return static_cast<int32_t>(entries_.size()); }

    // Returns the id of `symbol`. Appends when absent and not frozen;
    // returns UNK when absent and frozen.
    int32_t intern(const std::string& symbol, bool frozen) {
        if (symbol.empty()) throw DataError("intern: empty symbol");
        auto it = index_.find(symbol);
        if (it != index_.end()) return it->second;
        if (frozen) return kUnk;
        if (symbol.find('\n') != std::string::npos)
            throw DataError("intern: symbol contains newline");
        int32_t id = size();
        entries_.push_back(symbol);
        index_.emplace(symbol, id);
        return id;
    }

    int32_t lookup(const std::string& symbol) const {
        auto it = index_.find(symbol);
        return it == index_.end() ? kUnk : it->second;
    }

    bool contains(const std::string& symbol) const {
        return index_.count(symbol) > 0;
    }

    const std::string& symbol(int32_t id) const {
        if (id < 0 || id >= size())
            throw DataError("vocab id out of range: " + std::to_string(id));
        return entries_[static_cast<size_t>(id)];
    }

    const std::vector<std::string>& entries() const { return entries_; }

    // One symbol per line, line number = id.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write vocab " + path);
        for (const auto& s : entries_) out << s << '\n';
    }

    static SymbolVocab load(const std::string& path, VocabKind kind) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open vocab " + path);
        SymbolVocab v(kind);
        v.entries_.clear();
        v.index_.clear();
        std::string line;
        int32_t id = 0;
        while (std::getline(in, line)) {
            if (v.index_.count(line))
                throw DataError(path + ": duplicate symbol '" + line + "'");
            v.entries_.push_back(line);
            v.index_.emplace(line, id++);
        }
        if (v.size() < 2 || v.entries_[0] != "<pad>" || v.entries_[1] != "<unk>")
            throw DataError(path + ": missing <pad>/<unk> header entries");
        return v;
    }

private:
    VocabKind kind_;
    std::vector<std::string> entries_;
    std::unordered_map<std::string, int32_t> index_;
};

// The four namespaces used by the model.
struct VocabSet {
    SymbolVocab verb_sense{VocabKind::verb_sense};
    SymbolVocab role{VocabKind::role};
    SymbolVocab headword{VocabKind::headword};
    SymbolVocab type{VocabKind::type};

    SymbolVocab& of(VocabKind k) {
        switch (k) {
            case VocabKind::verb_sense: return verb_sense;
            case VocabKind::role: return role;
            case VocabKind::headword: return headword;
            case VocabKind::type: return type;
        }
        return headword;
    }
    const SymbolVocab& of(VocabKind k) const {
        return const_cast<VocabSet*>(this)->of(k);
    }

    int32_t intern(VocabKind k, const std::string& symbol, bool frozen) {
        return of(k).intern(symbol, frozen);
    }

    void save_dir(const std::string& dir) const {
        verb_sense.save(dir + "/verb_sense.vocab");
        role.save(dir + "/role.vocab");
        headword.save(dir + "/headword.vocab");
        type.save(dir + "/type.vocab");
    }

    static VocabSet load_dir(const std::string& dir) {
        VocabSet v;
        v.verb_sense = SymbolVocab::load(dir + "/verb_sense.vocab", VocabKind::verb_sense);
        v.role = SymbolVocab::load(dir + "/role.vocab", VocabKind::role);
        v.headword = SymbolVocab::load(dir + "/headword.vocab", VocabKind::headword);
        v.type = SymbolVocab::load(dir + "/type.vocab", VocabKind::type);
        return v;
    }
};

}  // namespace rep
