#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "treedepth/errors.hpp"

namespace treedepth::mso {

// MSO over graphs: first-order vertex variables (lowercase), second-order
// vertex-set variables (capitalized), the edge relation, equality, set
// membership, and the two optional constants a and b.
enum class Kind {
    Edge,    // edge(t1, t2)
    Eq,      // t1 = t2
    In,      // t1 in var
    Not,     // lhs
    And,     // lhs, rhs
    Or,      // lhs, rhs
    Implies, // lhs, rhs
    ExistsV, // var, body = lhs
    ForallV,
    ExistsS,
    ForallS,
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    Kind kind;
    std::string t1, t2; // atom terms
    std::string var;    // quantified variable, or the set variable of In
    FormulaPtr lhs, rhs;
};

inline FormulaPtr edge(std::string u, std::string v) {
    return std::make_shared<Formula>(Formula{Kind::Edge, std::move(u), std::move(v), {}, nullptr, nullptr});
}
inline FormulaPtr eq(std::string u, std::string v) {
    return std::make_shared<Formula>(Formula{Kind::Eq, std::move(u), std::move(v), {}, nullptr, nullptr});
}
inline FormulaPtr in(std::string t, std::string set_var) {
    return std::make_shared<Formula>(Formula{Kind::In, std::move(t), {}, std::move(set_var), nullptr, nullptr});
}
inline FormulaPtr negate(FormulaPtr f) {
    return std::make_shared<Formula>(Formula{Kind::Not, {}, {}, {}, std::move(f), nullptr});
}
inline FormulaPtr conj(FormulaPtr l, FormulaPtr r) {
    return std::make_shared<Formula>(Formula{Kind::And, {}, {}, {}, std::move(l), std::move(r)});
}
inline FormulaPtr disj(FormulaPtr l, FormulaPtr r) {
    return std::make_shared<Formula>(Formula{Kind::Or, {}, {}, {}, std::move(l), std::move(r)});
}
inline FormulaPtr implies(FormulaPtr l, FormulaPtr r) {
    return std::make_shared<Formula>(Formula{Kind::Implies, {}, {}, {}, std::move(l), std::move(r)});
}
inline FormulaPtr exists_v(std::string var, FormulaPtr body) {
    return std::make_shared<Formula>(Formula{Kind::ExistsV, {}, {}, std::move(var), std::move(body), nullptr});
}
inline FormulaPtr forall_v(std::string var, FormulaPtr body) {
    return std::make_shared<Formula>(Formula{Kind::ForallV, {}, {}, std::move(var), std::move(body), nullptr});
}
inline FormulaPtr exists_s(std::string var, FormulaPtr body) {
    return std::make_shared<Formula>(Formula{Kind::ExistsS, {}, {}, std::move(var), std::move(body), nullptr});
}
inline FormulaPtr forall_s(std::string var, FormulaPtr body) {
    return std::make_shared<Formula>(Formula{Kind::ForallS, {}, {}, std::move(var), std::move(body), nullptr});
}

inline bool is_quantifier(Kind k) {
    return k == Kind::ExistsV || k == Kind::ForallV || k == Kind::ExistsS || k == Kind::ForallS;
}

// Maximum quantifier nesting depth, counting both sorts.
inline int quantifier_rank(const Formula& f) {
    switch (f.kind) {
        case Kind::Edge:
        case Kind::Eq:
        case Kind::In: return 0;
        case Kind::Not: return quantifier_rank(*f.lhs);
        case Kind::And:
        case Kind::Or:
        case Kind::Implies: return std::max(quantifier_rank(*f.lhs), quantifier_rank(*f.rhs));
        case Kind::ExistsV:
        case Kind::ForallV:
        case Kind::ExistsS:
        case Kind::ForallS: return 1 + quantifier_rank(*f.lhs);
    }
    return 0;
}

// Canonical concrete syntax: binary connectives fully parenthesized,
// quantifier bodies extending maximally right.  parse(print(f)) returns a
// structurally identical tree.
namespace detail {
// A quantifier on the rightmost spine would swallow a following binary
// connective, so such left operands get wrapped in parentheses.
inline bool extends_right(const Formula& f) {
    if (is_quantifier(f.kind)) return true;
    if (f.kind == Kind::Not) return extends_right(*f.lhs);
    return false;
}
} // namespace detail

inline std::string print(const Formula& f) {
    auto left = [](const Formula& g) {
        std::string s = print(g);
        return detail::extends_right(g) ? "(" + s + ")" : s;
    };
    switch (f.kind) {
        case Kind::Edge: return "edge(" + f.t1 + ", " + f.t2 + ")";
        case Kind::Eq: return f.t1 + " = " + f.t2;
        case Kind::In: return f.t1 + " in " + f.var;
        case Kind::Not: return "not " + print(*f.lhs);
        case Kind::And: return "(" + left(*f.lhs) + " and " + print(*f.rhs) + ")";
        case Kind::Or: return "(" + left(*f.lhs) + " or " + print(*f.rhs) + ")";
        case Kind::Implies: return "(" + left(*f.lhs) + " -> " + print(*f.rhs) + ")";
        case Kind::ExistsV: return "exists " + f.var + " . " + print(*f.lhs);
        case Kind::ForallV: return "forall " + f.var + " . " + print(*f.lhs);
        case Kind::ExistsS: return "existsS " + f.var + " . " + print(*f.lhs);
        case Kind::ForallS: return "forallS " + f.var + " . " + print(*f.lhs);
    }
    return "";
}

inline bool structurally_equal(const Formula& f, const Formula& g) {
    if (f.kind != g.kind || f.t1 != g.t1 || f.t2 != g.t2 || f.var != g.var) return false;
    if ((f.lhs == nullptr) != (g.lhs == nullptr) || (f.rhs == nullptr) != (g.rhs == nullptr)) return false;
    if (f.lhs && !structurally_equal(*f.lhs, *g.lhs)) return false;
    if (f.rhs && !structurally_equal(*f.rhs, *g.rhs)) return false;
    return true;
}

// Whether the formula mentions the constant (an occurrence of `name` as a
// vertex term that no enclosing quantifier binds).
namespace detail {
inline bool uses_constant_rec(const Formula& f, const std::string& name, std::vector<std::string>& bound) {
    auto is_bound = [&] { return std::find(bound.begin(), bound.end(), name) != bound.end(); };
    switch (f.kind) {
        case Kind::Edge:
        case Kind::Eq: return (f.t1 == name || f.t2 == name) && !is_bound();
        case Kind::In: return f.t1 == name && !is_bound();
        case Kind::Not: return uses_constant_rec(*f.lhs, name, bound);
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
            return uses_constant_rec(*f.lhs, name, bound) || uses_constant_rec(*f.rhs, name, bound);
        case Kind::ExistsV:
        case Kind::ForallV:
        case Kind::ExistsS:
        case Kind::ForallS: {
            bound.push_back(f.var);
            bool r = uses_constant_rec(*f.lhs, name, bound);
            bound.pop_back();
            return r;
        }
    }
    return false;
}
} // namespace detail

inline bool uses_constant(const Formula& f, const std::string& name) {
    std::vector<std::string> bound;
    return detail::uses_constant_rec(f, name, bound);
}

} // namespace treedepth::mso
