#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/graph.hpp"
#include "treedepth/mso/ast.hpp"

namespace treedepth::mso {

struct ConstantAssignment {
    std::optional<VertexId> a;
    std::optional<VertexId> b;
};

struct EvalOptions {
    // Set quantifiers enumerate all 2^n subsets, so evaluation is guarded.
    int max_vertices = 16;
};

namespace detail {

constexpr int kConstA = -1;
constexpr int kConstB = -2;

// The formula is compiled once per evaluation: variable occurrences are
// resolved to environment slots and each node learns its free slots, so
// quantifier nodes can memoize on the handful of values they depend on.
class Evaluator {
  public:
    Evaluator(const DynamicGraph& g, const Formula& f, const ConstantAssignment& consts,
              const EvalOptions& opts) {
        ids_ = g.vertices();
        n_ = static_cast<int>(ids_.size());
        if (n_ > opts.max_vertices)
            fail(ErrorKind::TooLarge, "evaluate: " + std::to_string(n_) + " vertices exceeds the cap of " +
                                          std::to_string(opts.max_vertices));
        adj_.assign(n_, 0);
        std::map<VertexId, int> index;
        for (int i = 0; i < n_; ++i) index[ids_[i]] = i;
        for (const auto& [u, v] : g.edges()) {
            adj_[index[u]] |= std::uint32_t(1) << index[v];
            adj_[index[v]] |= std::uint32_t(1) << index[u];
        }
        a_index_ = b_index_ = -1;
        if (uses_constant(f, "a")) {
            if (!consts.a) fail(ErrorKind::UnassignedConstant, "formula uses constant a but none was assigned");
            auto it = index.find(*consts.a);
            if (it == index.end()) fail(ErrorKind::NotPresent, "constant a is not a vertex of the graph");
            a_index_ = it->second;
        }
        if (uses_constant(f, "b")) {
            if (!consts.b) fail(ErrorKind::UnassignedConstant, "formula uses constant b but none was assigned");
            auto it = index.find(*consts.b);
            if (it == index.end()) fail(ErrorKind::NotPresent, "constant b is not a vertex of the graph");
            b_index_ = it->second;
        }
        std::vector<std::pair<std::string, int>> scope;
        root_ = compile(f, scope);
        env_.assign(slot_count_, 0);
    }

    bool run() { return eval(root_); }

    // Runs the body of a top-level first-order exists with the bound
    // variable pinned to `witness`.
    bool run_witness(int witness_index) {
        const Node& r = nodes_[root_];
        if (r.kind != Kind::ExistsV) fail(ErrorKind::SortError, "witness evaluation needs a leading first-order exists");
        env_[r.slot] = static_cast<std::uint32_t>(witness_index);
        return eval(r.child0);
    }

    int index_of(VertexId v) const {
        for (int i = 0; i < n_; ++i)
            if (ids_[i] == v) return i;
        return -1;
    }

  private:
    struct Node {
        Kind kind;
        int term1 = 0, term2 = 0; // env slot if >= 0, else constant
        int slot = -1;            // bound slot (quantifiers) or set slot (In)
        int child0 = -1, child1 = -1;
        std::vector<int> free_slots;
        bool memo = false;
        mutable std::unordered_map<std::uint64_t, bool> cache;
    };

    int compile(const Formula& f, std::vector<std::pair<std::string, int>>& scope) {
        Node n;
        n.kind = f.kind;
        switch (f.kind) {
            case Kind::Edge:
            case Kind::Eq:
                n.term1 = resolve_term(f.t1, scope, n.free_slots);
                n.term2 = resolve_term(f.t2, scope, n.free_slots);
                break;
            case Kind::In:
                n.term1 = resolve_term(f.t1, scope, n.free_slots);
                n.slot = resolve_var(f.var, scope);
                n.free_slots.push_back(n.slot);
                break;
            case Kind::Not:
                n.child0 = compile(*f.lhs, scope);
                n.free_slots = nodes_[n.child0].free_slots;
                break;
            case Kind::And:
            case Kind::Or:
            case Kind::Implies: {
                n.child0 = compile(*f.lhs, scope);
                n.child1 = compile(*f.rhs, scope);
                n.free_slots = nodes_[n.child0].free_slots;
                for (int s : nodes_[n.child1].free_slots) n.free_slots.push_back(s);
                break;
            }
            case Kind::ExistsV:
            case Kind::ForallV:
            case Kind::ExistsS:
            case Kind::ForallS: {
                n.slot = slot_count_++;
                scope.emplace_back(f.var, n.slot);
                n.child0 = compile(*f.lhs, scope);
                scope.pop_back();
                for (int s : nodes_[n.child0].free_slots)
                    if (s != n.slot) n.free_slots.push_back(s);
                break;
            }
        }
        std::sort(n.free_slots.begin(), n.free_slots.end());
        n.free_slots.erase(std::unique(n.free_slots.begin(), n.free_slots.end()), n.free_slots.end());
        n.memo = is_quantifier(n.kind) && n.free_slots.size() <= 3;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int resolve_term(const std::string& name, const std::vector<std::pair<std::string, int>>& scope,
                     std::vector<int>& free_slots) {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
            if (it->first == name) {
                free_slots.push_back(it->second);
                return it->second;
            }
        }
        if (name == "a") return kConstA;
        if (name == "b") return kConstB;
        fail(ErrorKind::UnboundVariable, "unbound variable '" + name + "'");
    }

    int resolve_var(const std::string& name, const std::vector<std::pair<std::string, int>>& scope) {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it)
            if (it->first == name) return it->second;
        fail(ErrorKind::UnboundVariable, "unbound set variable '" + name + "'");
    }

    std::uint32_t term_value(int term) const {
        if (term == kConstA) return static_cast<std::uint32_t>(a_index_);
        if (term == kConstB) return static_cast<std::uint32_t>(b_index_);
        return env_[term];
    }

    bool eval(int idx) {
        const Node& n = nodes_[idx];
        switch (n.kind) {
            case Kind::Edge: {
                std::uint32_t u = term_value(n.term1), v = term_value(n.term2);
                return (adj_[u] >> v) & 1u;
            }
            case Kind::Eq: return term_value(n.term1) == term_value(n.term2);
            case Kind::In: return (env_[n.slot] >> term_value(n.term1)) & 1u;
            case Kind::Not: return !eval(n.child0);
            case Kind::And: return eval(n.child0) && eval(n.child1);
            case Kind::Or: return eval(n.child0) || eval(n.child1);
            case Kind::Implies: return !eval(n.child0) || eval(n.child1);
            case Kind::ExistsV:
            case Kind::ForallV:
            case Kind::ExistsS:
            case Kind::ForallS: break;
        }
        std::uint64_t key = 0;
        if (n.memo) {
            // Each environment value fits in 21 bits (vertex index or a
            // subset mask of at most 16 bits).
            for (int s : n.free_slots) key = (key << 21) | env_[s];
            if (auto it = n.cache.find(key); it != n.cache.end()) return it->second;
        }
        bool existential = n.kind == Kind::ExistsV || n.kind == Kind::ExistsS;
        std::uint64_t limit = (n.kind == Kind::ExistsV || n.kind == Kind::ForallV)
                                  ? static_cast<std::uint64_t>(n_)
                                  : (std::uint64_t(1) << n_);
        bool result = !existential;
        for (std::uint64_t val = 0; val < limit; ++val) {
            env_[n.slot] = static_cast<std::uint32_t>(val);
            if (eval(n.child0) == existential) {
                result = existential;
                break;
            }
        }
        if (n.memo) n.cache.emplace(key, result);
        return result;
    }

    std::vector<VertexId> ids_;
    std::vector<std::uint32_t> adj_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> env_;
    int root_ = -1;
    int n_ = 0;
    int slot_count_ = 0;
    int a_index_ = -1, b_index_ = -1;
};

} // namespace detail

// Standard MSO satisfaction, by brute force over vertex choices and all
// vertex subsets.
inline bool evaluate(const DynamicGraph& g, const Formula& f, const ConstantAssignment& consts = {},
                     const EvalOptions& opts = {}) {
    return detail::Evaluator(g, f, consts, opts).run();
}

// Satisfaction of the body of a leading first-order exists, with the bound
// variable fixed to `witness`.  Used for root tables.
inline bool evaluate_witness(const DynamicGraph& g, const Formula& f, const ConstantAssignment& consts,
                             VertexId witness, const EvalOptions& opts = {}) {
    detail::Evaluator ev(g, f, consts, opts);
    int idx = ev.index_of(witness);
    if (idx < 0) fail(ErrorKind::NotPresent, "witness vertex is not in the graph");
    return ev.run_witness(idx);
}

} // namespace treedepth::mso
