#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/mso/ast.hpp"

namespace treedepth::mso {

// Recursive-descent parser for the ASCII formula grammar.
//
//   formula := "exists" var "." formula | "forall" var "." formula
//            | "existsS" Var "." formula | "forallS" Var "." formula
//            | formula ("and"|"or"|"->") formula | "not" formula
//            | "(" formula ")" | atom
//   atom    := "edge(" term "," term ")" | term "=" term | term "in" Var
//   term    := lowercase identifier | "a" | "b"
//
// Precedence: not > and > or > ->; quantifier bodies extend maximally
// right.  Set variables are capitalized; "exists"/"forall" followed by a
// capitalized variable quantify over sets as well.  After parsing, the
// formula must be closed except for the constants a and b.

namespace detail {

enum class Tok { Ident, LParen, RParen, Dot, Comma, Equals, Arrow, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::size_t start = pos_;
        if (pos_ >= src_.size()) {
            tok_ = {Tok::End, "", start};
            return;
        }
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
                ++end;
            tok_ = {Tok::Ident, std::string(src_.substr(pos_, end - pos_)), start};
            pos_ = end;
            return;
        }
        switch (c) {
            case '(': tok_ = {Tok::LParen, "(", start}; ++pos_; return;
            case ')': tok_ = {Tok::RParen, ")", start}; ++pos_; return;
            case '.': tok_ = {Tok::Dot, ".", start}; ++pos_; return;
            case ',': tok_ = {Tok::Comma, ",", start}; ++pos_; return;
            case '=': tok_ = {Tok::Equals, "=", start}; ++pos_; return;
            case '-':
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
                    tok_ = {Tok::Arrow, "->", start};
                    pos_ += 2;
                    return;
                }
                break;
            default: break;
        }
        fail(ErrorKind::SyntaxError, "unexpected character '" + std::string(1, c) + "' at position " + std::to_string(start));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_{Tok::End, "", 0};
};

inline bool is_keyword(const std::string& s) {
    return s == "exists" || s == "forall" || s == "existsS" || s == "forallS" || s == "and" ||
           s == "or" || s == "not" || s == "in" || s == "edge";
}

inline bool is_set_name(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

class Parser {
  public:
    explicit Parser(std::string_view src) : lex_(src) {}

    FormulaPtr parse() {
        FormulaPtr f = parse_implies();
        if (lex_.peek().kind != Tok::End)
            fail(ErrorKind::SyntaxError, "trailing input at position " + std::to_string(lex_.peek().pos));
        check_bindings(*f);
        return f;
    }

  private:
    FormulaPtr parse_implies() {
        FormulaPtr l = parse_or();
        if (lex_.peek().kind == Tok::Arrow) {
            lex_.take();
            return implies(std::move(l), parse_implies());
        }
        return l;
    }

    FormulaPtr parse_or() {
        FormulaPtr l = parse_and();
        while (lex_.peek().kind == Tok::Ident && lex_.peek().text == "or") {
            lex_.take();
            l = disj(std::move(l), parse_and());
        }
        return l;
    }

    FormulaPtr parse_and() {
        FormulaPtr l = parse_unary();
        while (lex_.peek().kind == Tok::Ident && lex_.peek().text == "and") {
            lex_.take();
            l = conj(std::move(l), parse_unary());
        }
        return l;
    }

    FormulaPtr parse_unary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Ident) {
            if (t.text == "not") {
                lex_.take();
                return negate(parse_unary());
            }
            if (t.text == "exists" || t.text == "forall" || t.text == "existsS" || t.text == "forallS")
                return parse_quantifier();
        }
        return parse_primary();
    }

    FormulaPtr parse_quantifier() {
        Token kw = lex_.take();
        Token var = lex_.take();
        if (var.kind != Tok::Ident || is_keyword(var.text))
            fail(ErrorKind::SyntaxError, "expected variable after '" + kw.text + "' at position " + std::to_string(var.pos));
        bool set_sort = is_set_name(var.text);
        bool set_kw = kw.text == "existsS" || kw.text == "forallS";
        if (set_kw && !set_sort)
            fail(ErrorKind::SortError, "'" + kw.text + "' requires a capitalized set variable, got '" + var.text + "'");
        Token dot = lex_.take();
        if (dot.kind != Tok::Dot)
            fail(ErrorKind::SyntaxError, "expected '.' after quantified variable at position " + std::to_string(dot.pos));
        FormulaPtr body = parse_implies();
        bool existential = kw.text == "exists" || kw.text == "existsS";
        if (set_sort) return existential ? exists_s(var.text, std::move(body)) : forall_s(var.text, std::move(body));
        return existential ? exists_v(var.text, std::move(body)) : forall_v(var.text, std::move(body));
    }

    FormulaPtr parse_primary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::LParen) {
            lex_.take();
            FormulaPtr f = parse_implies();
            Token close = lex_.take();
            if (close.kind != Tok::RParen)
                fail(ErrorKind::SyntaxError, "expected ')' at position " + std::to_string(close.pos));
            return f;
        }
        return parse_atom();
    }

    FormulaPtr parse_atom() {
        Token t = lex_.take();
        if (t.kind != Tok::Ident)
            fail(ErrorKind::SyntaxError, "expected atom at position " + std::to_string(t.pos));
        if (t.text == "edge") {
            expect(Tok::LParen, "'('");
            std::string u = take_vertex_term();
            expect(Tok::Comma, "','");
            std::string v = take_vertex_term();
            expect(Tok::RParen, "')'");
            return edge(std::move(u), std::move(v));
        }
        if (is_keyword(t.text))
            fail(ErrorKind::SyntaxError, "unexpected keyword '" + t.text + "' at position " + std::to_string(t.pos));
        if (is_set_name(t.text))
            fail(ErrorKind::SortError, "set variable '" + t.text + "' used as a vertex term");
        if (lex_.peek().kind == Tok::Equals) {
            lex_.take();
            std::string rhs = take_vertex_term();
            return eq(t.text, std::move(rhs));
        }
        if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "in") {
            lex_.take();
            Token set = lex_.take();
            if (set.kind != Tok::Ident || is_keyword(set.text))
                fail(ErrorKind::SyntaxError, "expected set variable after 'in' at position " + std::to_string(set.pos));
            if (!is_set_name(set.text))
                fail(ErrorKind::SortError, "'in' requires a capitalized set variable, got '" + set.text + "'");
            return in(t.text, set.text);
        }
        fail(ErrorKind::SyntaxError, "expected '=' or 'in' after term '" + t.text + "' at position " + std::to_string(lex_.peek().pos));
    }

    std::string take_vertex_term() {
        Token t = lex_.take();
        if (t.kind != Tok::Ident || is_keyword(t.text))
            fail(ErrorKind::SyntaxError, "expected vertex term at position " + std::to_string(t.pos));
        if (is_set_name(t.text))
            fail(ErrorKind::SortError, "set variable '" + t.text + "' used as a vertex term");
        return t.text;
    }

    void expect(Tok kind, const char* what) {
        Token t = lex_.take();
        if (t.kind != kind)
            fail(ErrorKind::SyntaxError, std::string("expected ") + what + " at position " + std::to_string(t.pos));
    }

    // Closed except for the constants a and b.
    void check_bindings(const Formula& f) {
        std::vector<std::string> scope;
        check_rec(f, scope);
    }

    void check_rec(const Formula& f, std::vector<std::string>& scope) {
        auto bound = [&](const std::string& n) {
            return std::find(scope.begin(), scope.end(), n) != scope.end();
        };
        auto check_term = [&](const std::string& n) {
            if (!bound(n) && n != "a" && n != "b")
                fail(ErrorKind::UnboundVariable, "unbound variable '" + n + "'");
        };
        switch (f.kind) {
            case Kind::Edge:
            case Kind::Eq:
                check_term(f.t1);
                check_term(f.t2);
                return;
            case Kind::In:
                check_term(f.t1);
                if (!bound(f.var)) fail(ErrorKind::UnboundVariable, "unbound set variable '" + f.var + "'");
                return;
            case Kind::Not: check_rec(*f.lhs, scope); return;
            case Kind::And:
            case Kind::Or:
            case Kind::Implies:
                check_rec(*f.lhs, scope);
                check_rec(*f.rhs, scope);
                return;
            case Kind::ExistsV:
            case Kind::ForallV:
            case Kind::ExistsS:
            case Kind::ForallS:
                scope.push_back(f.var);
                check_rec(*f.lhs, scope);
                scope.pop_back();
                return;
        }
    }

    Lexer lex_;
};

} // namespace detail

inline FormulaPtr parse(std::string_view text) { return detail::Parser(text).parse(); }

} // namespace treedepth::mso
