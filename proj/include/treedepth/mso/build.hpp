#pragma once

#include <optional>
#include <string>

#include "treedepth/errors.hpp"
#include "treedepth/mso/ast.hpp"

namespace treedepth::mso {

// Builders for the fixed formulas the structure works with: gamma
// (connectivity), gamma' (connectivity with the extra edge {a,b}), and the
// tree-depth formulas tau_d / tau'_d.
//
// tau_d unfolds the recursion
//
//   tau_d(U) = exists v in U . forall C . (C nonempty, C subseteq U - {v},
//              C connected  ->  tau_{d-1}(C)),
//
// bottoming out at "U has at most one vertex".  Because set variables are
// only inspected through membership of relativized first-order terms,
// second-order quantifiers need no relativization of their own; each level
// therefore depends on a single enclosing set variable, which keeps
// brute-force evaluation memoizable.

namespace detail {

inline FormulaPtr edge_atom(const std::string& u, const std::string& v, bool augmented) {
    FormulaPtr e = edge(u, v);
    if (!augmented) return e;
    // The pending edge {a,b} counts as present in either orientation.
    return disj(disj(std::move(e), conj(eq(u, "a"), eq(v, "b"))), conj(eq(u, "b"), eq(v, "a")));
}

// Membership of `t` in the current domain; empty domain means the whole
// vertex set.
inline FormulaPtr in_domain(const std::string& t, const std::optional<std::string>& domain) {
    return domain ? in(t, *domain) : nullptr;
}

inline FormulaPtr guard_forall(const std::string& var, const std::optional<std::string>& domain, FormulaPtr body) {
    FormulaPtr g = in_domain(var, domain);
    return forall_v(var, g ? implies(std::move(g), std::move(body)) : std::move(body));
}

inline FormulaPtr guard_exists(const std::string& var, const std::optional<std::string>& domain, FormulaPtr body) {
    FormulaPtr g = in_domain(var, domain);
    return exists_v(var, g ? conj(std::move(g), std::move(body)) : std::move(body));
}

// Connectivity of the (possibly relativized) domain: no subset X cuts it,
// i.e. whenever X hits the domain and misses part of it, an edge crosses.
inline FormulaPtr gamma_relativized(const std::optional<std::string>& domain, bool augmented,
                                    const std::string& suffix) {
    std::string X = "X" + suffix, x = "x" + suffix, y = "y" + suffix, u = "u" + suffix, v = "v" + suffix;
    FormulaPtr some_in = guard_exists(x, domain, in(x, X));
    FormulaPtr some_out = guard_exists(y, domain, negate(in(y, X)));
    FormulaPtr crossing = guard_exists(
        u, domain, guard_exists(v, domain, conj(conj(in(u, X), negate(in(v, X))), edge_atom(u, v, augmented))));
    return forall_s(X, implies(conj(std::move(some_in), std::move(some_out)), std::move(crossing)));
}

// Base of the tau recursion: some vertex equals every vertex of the
// domain.  The recursion only feeds it nonempty connected domains, where
// this is exactly tree-depth <= 1, and the leading exists keeps every
// tau_t level witness-checkable.
inline FormulaPtr at_most_one(const std::optional<std::string>& domain, const std::string& suffix) {
    std::string x = "x" + suffix, y = "y" + suffix;
    return guard_exists(x, domain, guard_forall(y, domain, eq(y, x)));
}

inline FormulaPtr tau_level(int level, const std::optional<std::string>& domain, bool augmented) {
    std::string suffix = std::to_string(level);
    if (level == 1) return at_most_one(domain, suffix);
    std::string v = "v" + suffix, C = "C" + suffix, z = "z" + suffix, w = "w" + suffix;
    FormulaPtr nonempty = exists_v(z, in(z, C));
    FormulaPtr in_dom_w = in_domain(w, domain);
    FormulaPtr inside = negate(eq(w, v));
    if (in_dom_w) inside = conj(std::move(in_dom_w), std::move(inside));
    FormulaPtr subset = forall_v(w, implies(in(w, C), std::move(inside)));
    FormulaPtr connected = gamma_relativized(C, augmented, "g" + suffix);
    FormulaPtr guard = conj(conj(std::move(nonempty), std::move(subset)), std::move(connected));
    FormulaPtr rec = tau_level(level - 1, C, augmented);
    FormulaPtr body = forall_s(C, implies(std::move(guard), std::move(rec)));
    return guard_exists(v, domain, std::move(body));
}

} // namespace detail

// True whenever the graph is connected (vacuously on the empty graph).
inline FormulaPtr build_gamma() { return detail::gamma_relativized(std::nullopt, false, ""); }

// Connectivity of the graph augmented with the edge {a,b}.
inline FormulaPtr build_gamma_prime() { return detail::gamma_relativized(std::nullopt, true, ""); }

// For connected nonempty G: evaluate(G, tau_d) iff td(G) <= d.
inline FormulaPtr build_tau(int d) {
    if (d < 1) fail(ErrorKind::InvalidDepth, "tau_d needs d >= 1");
    return detail::tau_level(d, std::nullopt, false);
}

// As tau_d but on the graph augmented with the edge {a,b}.
inline FormulaPtr build_tau_prime(int d) {
    if (d < 1) fail(ErrorKind::InvalidDepth, "tau'_d needs d >= 1");
    return detail::tau_level(d, std::nullopt, true);
}

} // namespace treedepth::mso
