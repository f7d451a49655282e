#pragma once
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "rep/amr.hpp"
#include "rep/errors.hpp"

namespace rep {
namespace detail {

enum class TokKind { LParen, RParen, Slash, Role, Symbol, String, End };

struct Token {
    TokKind kind;
    std::string text;
    int line;
    int column;
};

class PenmanLexer {
public:
    explicit PenmanLexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= src_.size()) return {TokKind::End, "", line, col};
        char c = src_[pos_];
        if (c == '(') { advance(); return {TokKind::LParen, "(", line, col}; }
        if (c == ')') { advance(); return {TokKind::RParen, ")", line, col}; }
        if (c == '/') { advance(); return {TokKind::Slash, "/", line, col}; }
        if (c == ':') {
            std::string role;
            advance();
            while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
                role += src_[pos_];
                advance();
            }
            if (role.empty()) throw ParseError("empty role label", line, col);
            return {TokKind::Role, role, line, col};
        }
        if (c == '"') {
            std::string text;
            advance();
            while (pos_ < src_.size() && src_[pos_] != '"') {
                text += src_[pos_];
                advance();
            }
            if (pos_ >= src_.size()) throw ParseError("unterminated string", line, col);
            advance();  // closing quote
            return {TokKind::String, text, line, col};
        }
        if (is_symbol_char(c)) {
            std::string text;
            while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
                text += src_[pos_];
                advance();
            }
            return {TokKind::Symbol, text, line, col};
        }
        throw ParseError(std::string("unknown token '") + c + "'", line, col);
    }

private:
    static bool is_symbol_char(char c) {
        return !std::isspace(static_cast<unsigned char>(c)) && c != '(' &&
               c != ')' && c != '/' && c != ':' && c != '"';
    }
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            advance();
    }
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class PenmanParser {
public:
    explicit PenmanParser(const std::string& src) : lex_(src) {
        collect_variables(src);
        tok_ = lex_.next();
    }

    AmrGraph parse() {
        expect(TokKind::LParen, "expected '('");
        g_.root = parse_node();
        if (tok_.kind != TokKind::End)
            throw ParseError("trailing input after graph", tok_.line, tok_.column);
        return std::move(g_);
    }

private:
    // First pass over raw text: every "( var /" defines a variable, so
    // references can appear before their defining occurrence.
    void collect_variables(const std::string& src) {
        PenmanLexer scan(src);
        Token prev2{TokKind::End, "", 0, 0}, prev1{TokKind::End, "", 0, 0};
        for (;;) {
            Token t = scan.next();
            if (t.kind == TokKind::End) break;
            if (t.kind == TokKind::Slash && prev1.kind == TokKind::Symbol &&
                prev2.kind == TokKind::LParen)
                declared_.insert(prev1.text);
            prev2 = prev1;
            prev1 = t;
        }
    }

    // Parses a "( var / concept relations... )" node; current token is the
    // one after '('. Returns the node id.
    std::string parse_node() {
        if (tok_.kind != TokKind::Symbol)
            throw ParseError("expected variable name", tok_.line, tok_.column);
        std::string var = tok_.text;
        int vline = tok_.line, vcol = tok_.column;
        tok_ = lex_.next();
        if (tok_.kind != TokKind::Slash)
            throw ParseError("missing '/ concept_text' after variable '" + var + "'",
                             tok_.line, tok_.column);
        tok_ = lex_.next();
        if (tok_.kind != TokKind::Symbol && tok_.kind != TokKind::String)
            throw ParseError("missing concept_text after '/'", tok_.line, tok_.column);
        std::string concept_text = tok_.text;
        if (defined_.count(var))
            throw ParseError("duplicate variable definition '" + var + "'", vline, vcol);
        defined_.insert(var);
        g_.nodes.push_back({var, concept_text, is_verb_sense_symbol(concept_text), false});
        tok_ = lex_.next();

        while (tok_.kind == TokKind::Role) {
            std::string role = tok_.text;
            tok_ = lex_.next();
            std::string target = parse_target();
            add_edge(var, role, target);
        }
        expect(TokKind::RParen, "expected ')' or ':role'");
        return var;
    }

    std::string parse_target() {
        if (tok_.kind == TokKind::LParen) {
            tok_ = lex_.next();
            return parse_node();
        }
        if (tok_.kind == TokKind::Symbol) {
            std::string text = tok_.text;
            tok_ = lex_.next();
            if (declared_.count(text)) return text;  // re-entrant reference
            return make_constant(text);
        }
        if (tok_.kind == TokKind::String) {
            std::string text = tok_.text;
            tok_ = lex_.next();
            return make_constant(text);
        }
        throw ParseError("expected node, variable, or constant after role",
                         tok_.line, tok_.column);
    }

    // One node per constant occurrence.
    std::string make_constant(const std::string& literal) {
        std::string id = "_c" + std::to_string(constant_count_++);
        g_.nodes.push_back({id, literal, false, true});
        return id;
    }

    void add_edge(const std::string& src, const std::string& label,
                  const std::string& dst) {
        if (!g_.has_edge(src, label, dst)) g_.edges.push_back({src, label, dst});
    }

    void expect(TokKind kind, const std::string& what) {
        if (tok_.kind != kind) throw ParseError(what, tok_.line, tok_.column);
        tok_ = lex_.next();
    }

    PenmanLexer lex_;
    Token tok_{TokKind::End, "", 0, 0};
    AmrGraph g_;
    std::set<std::string> declared_;
    std::set<std::string> defined_;
    int constant_count_ = 0;
};

}  // namespace detail

// Parse PENMAN notation into a graph. Variables become one node each,
// constants one node per occurrence, re-entrant references extra edges.
inline AmrGraph parse_penman(const std::string& text) {
    detail::PenmanParser parser(text);
    AmrGraph g = parser.parse();
    // Undefined references (a bare symbol matching a "( var /" elsewhere that
    // never closed) cannot happen: collect pass and parse pass see the same
    // tokens. Edge endpoints therefore always exist.
    return g;
}

}  // namespace rep
