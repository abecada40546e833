#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/minimal/catalog.hpp"
#include "treedepth/mso/build.hpp"
#include "treedepth/mso/eval.hpp"

namespace treedepth {

// One root-table row: for a catalog tree, a depth bound t and a placement
// of the constants a,b, the vertices that can be made root of a depth-<=t
// decomposition of the decoded graph plus the pending edge {a,b}.
//
// A placement is identified by the canonical key of the marked tree.  Two
// vertices of equal label can still sit in non-interchangeable positions
// (say both endpoints inside one limb versus spread over two isomorphic
// limbs), so the class of the marked tree, not the label pair alone, keys
// the row; representatives are the first node pair realizing the class.
struct RootTableEntry {
    int tree_id = -1;
    int t = 1;
    std::optional<int> a_node;
    std::optional<int> b_node;
    CanonicalKey marked_key;
    bool infeasible = false;
    std::vector<int> root_nodes; // witness nodes of the entry tree
    std::set<int> root_labels;   // their alphabet labels
};

class RootTable {
  public:
    void add(RootTableEntry e) {
        index_[{e.tree_id, e.t, e.marked_key.bytes()}] = static_cast<int>(entries_.size());
        entries_.push_back(std::move(e));
    }

    const std::vector<RootTableEntry>& entries() const { return entries_; }

    const RootTableEntry* lookup(int tree_id, int t, const CanonicalKey& marked_key) const {
        auto it = index_.find({tree_id, t, marked_key.bytes()});
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    // Unplaced row for a tree.
    const RootTableEntry* lookup_plain(int tree_id, int t, const MinimalTreeCatalog& catalog) const {
        return lookup(tree_id, t, catalog.entry(tree_id).key);
    }

  private:
    std::vector<RootTableEntry> entries_;
    std::map<std::tuple<int, int, std::string>, int> index_;
};

using SatTable = std::vector<std::optional<bool>>;

namespace detail {

inline LabelledTree with_marks(const LabelledTree& t, std::optional<int> a_node, std::optional<int> b_node) {
    LabelledTree m = t;
    for (auto& n : m.nodes) n.mark = 0;
    if (a_node) m.nodes[*a_node].mark = 1;
    if (b_node) m.nodes[*b_node].mark = 2;
    return m;
}

} // namespace detail

// Evaluates the tau' witness check for every catalog tree, every t <= D
// and every placement class of a,b (including unplaced), through the MSO
// evaluator.  Only decodable trees get rows; the rest never arise as
// component summaries.
inline RootTable build_root_table(const MinimalTreeCatalog& catalog, int D,
                                  const mso::EvalOptions& opts = {}) {
    RootTable table;
    std::vector<mso::FormulaPtr> tau(D + 1), tau_prime(D + 1);
    for (int t = 1; t <= D; ++t) {
        tau[t] = mso::build_tau(t);
        tau_prime[t] = mso::build_tau_prime(t);
    }
    for (int id = 0; id < catalog.size(); ++id) {
        const auto& entry = catalog.entry(id);
        if (!is_decodable(entry.tree, catalog.alphabet())) continue;
        int n = entry.tree.size();
        // placements: unplaced, then every inequivalent marked variant
        std::vector<std::pair<std::optional<int>, std::optional<int>>> placements{{std::nullopt, std::nullopt}};
        std::set<std::string> seen;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                auto key = canonical_key(detail::with_marks(entry.tree, i, j));
                if (seen.insert(key.bytes()).second) placements.emplace_back(i, j);
            }
        }
        for (const auto& [a_node, b_node] : placements) {
            DynamicGraph g = decode(entry.tree, catalog.alphabet());
            mso::ConstantAssignment consts;
            if (a_node && b_node) {
                consts.a = VertexId(static_cast<std::uint32_t>(*a_node));
                consts.b = VertexId(static_cast<std::uint32_t>(*b_node));
                g.set_edge(*consts.a, *consts.b, true);
            }
            for (int t = 1; t <= D; ++t) {
                RootTableEntry row;
                row.tree_id = id;
                row.t = t;
                row.a_node = a_node;
                row.b_node = b_node;
                row.marked_key = canonical_key(detail::with_marks(entry.tree, a_node, b_node));
                const mso::Formula& phi = a_node ? *tau_prime[t] : *tau[t];
                for (int w = 0; w < n; ++w) {
                    if (mso::evaluate_witness(g, phi, consts, VertexId(static_cast<std::uint32_t>(w)), opts)) {
                        row.root_nodes.push_back(w);
                        row.root_labels.insert(entry.tree.nodes[w].label);
                    }
                }
                row.infeasible = row.root_nodes.empty();
                table.add(std::move(row));
            }
        }
    }
    return table;
}

// Whether each catalog tree's decoded graph satisfies the user formula,
// evaluated without the constants a,b.
inline SatTable build_sat_table(const MinimalTreeCatalog& catalog, const mso::Formula& phi_user,
                                const mso::EvalOptions& opts = {}) {
    if (mso::uses_constant(phi_user, "a") || mso::uses_constant(phi_user, "b"))
        fail(ErrorKind::UnassignedConstant, "the user formula must not mention the constants a, b");
    SatTable table(catalog.size());
    for (int id = 0; id < catalog.size(); ++id) {
        const auto& entry = catalog.entry(id);
        if (!is_decodable(entry.tree, catalog.alphabet())) continue;
        table[id] = mso::evaluate(decode(entry.tree, catalog.alphabet()), phi_user, {}, opts);
    }
    return table;
}

} // namespace treedepth
