#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/labelled_tree.hpp"
#include "treedepth/minimal/catalog.hpp"
#include "treedepth/mso/ast.hpp"
#include "treedepth/mso/eval.hpp"

namespace treedepth {

// Limb threshold S: above it, pairwise l-isomorphic limbs of a vertex are
// interchangeable for phi.  The value is obtained by seeding a heuristic
// from the quantifier rank and validating the defining property
// exhaustively at desk scale, doubling on failure.
struct LimbThreshold {
    int value = 1;
    int seed = 1;
    bool validated = false;
};

struct ThresholdBudget {
    int max_doublings = 6;
    int verify_max_vertices = 9; // enumeration bound for validation trees
};

namespace detail {

// All l-labelled trees over the alphabet with depth <= max_depth and at
// most max_vertices vertices, without any multiplicity cap.
inline std::vector<LabelledTree> enumerate_all_trees(const LabelAlphabet& alphabet, int max_depth,
                                                     int max_vertices) {
    std::vector<std::vector<LabelledTree>> by_depth(max_depth + 1); // depth <= d
    std::map<std::string, char> seen;
    for (int d = 1; d <= max_depth; ++d) {
        // roots with any multiset of strictly shallower trees below
        std::vector<LabelledTree>& pool = by_depth[d - 1];
        for (int label = 0; label < alphabet.size(); ++label) {
            std::vector<const LabelledTree*> chosen;
            auto emit = [&]() {
                LabelledTree t = LabelledTree::single(label);
                for (const LabelledTree* sub : chosen) t.attach(t.root, *sub);
                std::string key = canonical_key(t).bytes();
                if (seen.emplace(key, 1).second) {
                    by_depth[d].push_back(t);
                    for (int e = d + 1; e <= max_depth; ++e) by_depth[e].push_back(t);
                }
            };
            auto rec = [&](auto&& self, std::size_t next, int room) -> void {
                emit();
                for (std::size_t i = next; i < pool.size(); ++i) {
                    int sz = pool[i].size();
                    if (sz > room) continue;
                    chosen.push_back(&pool[i]);
                    self(self, i, room - sz);
                    chosen.pop_back();
                }
            };
            rec(rec, 0, max_vertices - 1);
        }
    }
    return by_depth[max_depth];
}

// Sibling groups of pairwise l-isomorphic limbs below `node`.
inline std::map<std::string, std::vector<int>> limb_classes(const LabelledTree& t, int node) {
    std::map<std::string, std::vector<int>> classes;
    for (int c : t.nodes[node].children) {
        LabelledTree sub;
        // extract the subtree rooted at c
        std::vector<int> stack{c};
        std::map<int, int> remap;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            remap[x] = static_cast<int>(sub.nodes.size());
            sub.nodes.push_back({t.nodes[x].label, t.nodes[x].mark, {}});
            for (int y : t.nodes[x].children) stack.push_back(y);
        }
        for (const auto& [orig, idx] : remap)
            for (int y : t.nodes[orig].children) sub.nodes[idx].children.push_back(remap[y]);
        sub.root = remap[c];
        classes[canonical_key(sub).bytes()].push_back(c);
    }
    return classes;
}

} // namespace detail

// Checks the limb-threshold property: for every enumerated tree in which
// some vertex has more than S pairwise l-isomorphic limbs, deleting one of
// them leaves phi's value unchanged on the decoded graph, under every
// placement of the constants phi uses.
inline bool verify_limb_threshold(int S, const mso::Formula& phi, const LabelAlphabet& alphabet, int D,
                                  const ThresholdBudget& budget = {}) {
    if (S < 0) return false;
    // A violating vertex needs S+1 limbs plus itself.
    if (S + 2 > budget.verify_max_vertices) return true;
    bool needs_a = mso::uses_constant(phi, "a");
    bool needs_b = mso::uses_constant(phi, "b");
    mso::EvalOptions opts;
    opts.max_vertices = std::max(16, budget.verify_max_vertices);
    for (const LabelledTree& t : detail::enumerate_all_trees(alphabet, D, budget.verify_max_vertices)) {
        if (!is_decodable(t, alphabet)) continue;
        if (t.size() < S + 2) continue;
        for (int v = 0; v < t.size(); ++v) {
            for (const auto& [key, members] : detail::limb_classes(t, v)) {
                if (static_cast<int>(members.size()) <= S) continue;
                int drop = members.front();
                LabelledTree reduced = t.without_subtree(drop);
                // Map surviving node indices of t onto reduced.
                std::vector<int> remap(t.size(), -1);
                {
                    std::vector<char> dead(t.size(), 0);
                    std::vector<int> stack{drop};
                    while (!stack.empty()) {
                        int x = stack.back();
                        stack.pop_back();
                        dead[x] = 1;
                        for (int y : t.nodes[x].children) stack.push_back(y);
                    }
                    int next = 0;
                    for (int i = 0; i < t.size(); ++i)
                        if (!dead[i]) remap[i] = next++;
                }
                DynamicGraph big = decode(t, alphabet);
                DynamicGraph small = decode(reduced, alphabet);
                auto placements_a = [&]() {
                    std::vector<std::optional<int>> out;
                    if (!needs_a) {
                        out.push_back(std::nullopt);
                        return out;
                    }
                    for (int i = 0; i < t.size(); ++i)
                        if (remap[i] >= 0) out.push_back(i);
                    return out;
                }();
                for (auto pa : placements_a) {
                    std::vector<std::optional<int>> placements_b;
                    if (!needs_b) {
                        placements_b.push_back(std::nullopt);
                    } else {
                        for (int i = 0; i < t.size(); ++i)
                            if (remap[i] >= 0 && (!pa || i != *pa)) placements_b.push_back(i);
                    }
                    for (auto pb : placements_b) {
                        mso::ConstantAssignment cb, cs;
                        if (pa) {
                            cb.a = VertexId(static_cast<std::uint32_t>(*pa));
                            cs.a = VertexId(static_cast<std::uint32_t>(remap[*pa]));
                        }
                        if (pb) {
                            cb.b = VertexId(static_cast<std::uint32_t>(*pb));
                            cs.b = VertexId(static_cast<std::uint32_t>(remap[*pb]));
                        }
                        if (mso::evaluate(big, phi, cb, opts) != mso::evaluate(small, phi, cs, opts)) return false;
                    }
                }
            }
        }
    }
    return true;
}

// Seed 2^q + q for quantifier rank q, doubled until validation passes.
inline LimbThreshold compute_limb_threshold(const mso::Formula& phi, const LabelAlphabet& alphabet, int D,
                                            const ThresholdBudget& budget = {}) {
    if (D < 1) fail(ErrorKind::InvalidDepth, "compute_limb_threshold needs D >= 1");
    int q = mso::quantifier_rank(phi);
    int seed = (q >= 24 ? (1 << 24) : (1 << q)) + q;
    if (seed < 1) seed = 1;
    int S = seed;
    for (int round = 0; round <= budget.max_doublings; ++round) {
        if (verify_limb_threshold(S, phi, alphabet, D, budget)) return {S, seed, true};
        S *= 2;
    }
    fail(ErrorKind::ValidationBudgetExceeded,
         "no validated threshold within " + std::to_string(budget.max_doublings) + " doublings of " +
             std::to_string(seed));
}

} // namespace treedepth
