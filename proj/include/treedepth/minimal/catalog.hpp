#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/graph.hpp"
#include "treedepth/labelled_tree.hpp"

namespace treedepth {

// Vertex label alphabet for the labelled trees the structure summarizes.
// Level 0 is the set of ancestor-adjacency bit vectors of length D-1; a
// level t > 0 entry pairs a bit vector with a capped multiplicity vector
// over lower-level catalog identities.
struct LabelAlphabet {
    struct Entry {
        std::uint32_t bits = 0;
        std::vector<std::uint32_t> limb_counts; // empty at level 0
    };

    int level = 0;
    int depth_bound = 1; // D; bit vectors have length D-1
    std::vector<Entry> entries;

    int size() const { return static_cast<int>(entries.size()); }

    // All 0-1 vectors of length D-1, indexed by their value.
    static LabelAlphabet level0(int D) {
        if (D < 1) fail(ErrorKind::InvalidDepth, "alphabet needs D >= 1");
        LabelAlphabet a;
        a.level = 0;
        a.depth_bound = D;
        a.entries.resize(std::size_t(1) << (D - 1));
        for (std::size_t i = 0; i < a.entries.size(); ++i) a.entries[i].bits = static_cast<std::uint32_t>(i);
        return a;
    }

    // A single abstract label carrying no adjacency information.
    static LabelAlphabet unit() {
        LabelAlphabet a;
        a.level = 0;
        a.depth_bound = 1;
        a.entries.push_back({0, {}});
        return a;
    }
};

struct EnumBudget {
    std::size_t max_entries = 100000;
    int max_tree_vertices = 64;
};

// All phi-minimal labelled trees of depth <= D: no vertex has more than S
// pairwise l-isomorphic limbs.  Entries are pairwise non-l-isomorphic.
// enumerate_minimal_trees() fills a catalog exhaustively with dense ids in
// canonical-key order; intern() grows it on demand afterwards, in arrival
// order, which the dynamic structure uses at depths where exhaustive
// enumeration is impossible.
class MinimalTreeCatalog {
  public:
    struct Entry {
        LabelledTree tree;
        CanonicalKey key;
        int depth = 1;
    };

    MinimalTreeCatalog(int D, int S, LabelAlphabet alphabet)
        : depth_bound_(D), limb_cap_(S), alphabet_(std::move(alphabet)) {}

    int depth_bound() const { return depth_bound_; }
    int limb_cap() const { return limb_cap_; }
    const LabelAlphabet& alphabet() const { return alphabet_; }

    int size() const { return static_cast<int>(entries_.size()); }
    const Entry& entry(int id) const { return entries_.at(id); }

    std::optional<int> find(const CanonicalKey& key) const {
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int intern(const LabelledTree& tree, std::size_t max_entries = 1u << 20) {
        CanonicalKey key = canonical_key(tree);
        if (auto found = find(key)) return *found;
        if (entries_.size() >= max_entries)
            fail(ErrorKind::CatalogBudgetExceeded, "catalog grew past " + std::to_string(max_entries) + " entries");
        entries_.push_back({tree, key, tree.depth()});
        index_[key] = size() - 1;
        return size() - 1;
    }

    // Reassigns dense ids in canonical-key order.  Only used right after
    // exhaustive enumeration, so labels are reproducible across runs.
    void sort_by_key() {
        std::sort(entries_.begin(), entries_.end(),
                  [](const Entry& x, const Entry& y) { return x.key < y.key; });
        index_.clear();
        for (int i = 0; i < size(); ++i) index_[entries_[i].key] = i;
    }

  private:
    int depth_bound_;
    int limb_cap_;
    LabelAlphabet alphabet_;
    std::vector<Entry> entries_;
    std::unordered_map<CanonicalKey, int> index_;
};

// The graph a tree-decomposition tree encodes: edges are exactly those the
// bit vectors indicate, vertex i of the output standing for node i.
inline DynamicGraph decode(const LabelledTree& tree, const LabelAlphabet& alphabet) {
    DynamicGraph g;
    for (int i = 0; i < tree.size(); ++i) g.add_vertex();
    std::vector<int> path; // ancestors of the current node, root first
    auto walk = [&](auto&& self, int node) -> void {
        int label = tree.nodes[node].label;
        if (label < 0 || label >= alphabet.size()) fail(ErrorKind::InconsistentLabel, "label outside the alphabet");
        std::uint32_t bits = alphabet.entries[label].bits;
        if (path.size() < 32 && (bits >> path.size()) != 0)
            fail(ErrorKind::InconsistentLabel, "ancestor bits set beyond the node's ancestor count");
        for (std::size_t p = 0; p < path.size() && p < 32; ++p) {
            if ((bits >> p) & 1u) g.set_edge(VertexId(static_cast<std::uint32_t>(node)),
                                             VertexId(static_cast<std::uint32_t>(path[p])), true);
        }
        path.push_back(node);
        for (int c : tree.nodes[node].children) self(self, c);
        path.pop_back();
    };
    if (!tree.nodes.empty()) walk(walk, tree.root);
    return g;
}

inline bool is_decodable(const LabelledTree& tree, const LabelAlphabet& alphabet) {
    try {
        decode(tree, alphabet);
        return true;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InconsistentLabel) return false;
        throw;
    }
}

// Disjoint union of decoded trees; node j of tree i maps to vertex
// (offset of i) + j.
inline DynamicGraph decode_forest(const std::vector<LabelledTree>& trees, const LabelAlphabet& alphabet,
                                  std::vector<std::uint32_t>* offsets_out = nullptr) {
    DynamicGraph g;
    std::vector<std::uint32_t> offsets;
    for (const auto& t : trees) {
        DynamicGraph part = decode(t, alphabet);
        std::uint32_t base = 0;
        std::vector<VertexId> fresh;
        for (std::size_t i = 0; i < part.n_vertices(); ++i) {
            VertexId v = g.add_vertex();
            if (i == 0) base = v.value();
            fresh.push_back(v);
        }
        if (part.n_vertices() == 0) base = static_cast<std::uint32_t>(g.n_vertices());
        for (const auto& [u, v] : part.edges()) g.set_edge(fresh[u.value()], fresh[v.value()], true);
        offsets.push_back(base);
    }
    if (offsets_out) *offsets_out = offsets;
    return g;
}

namespace detail {

// Emits every multiset of catalog entries (ids < pool size) with per-entry
// multiplicity <= cap and total vertex count <= room.
template <typename Fn>
void for_each_child_multiset(const MinimalTreeCatalog& catalog, int pool, int cap, int room,
                             std::vector<int>& current, int next_id, Fn&& emit) {
    emit(current);
    for (int id = next_id; id < pool; ++id) {
        int sz = catalog.entry(id).tree.size();
        int count = 0;
        int used = 0;
        while (count < cap && used + sz <= room) {
            current.push_back(id);
            ++count;
            used += sz;
            for_each_child_multiset(catalog, pool, cap, room - used, current, id + 1, emit);
        }
        for (int k = 0; k < count; ++k) current.pop_back();
    }
}

} // namespace detail

// Builds the catalog level by level: depth-1 trees are single labelled
// vertices; a deeper tree is a labelled root plus a multiset of
// already-catalogued trees with per-class multiplicity <= S.
inline MinimalTreeCatalog enumerate_minimal_trees(int D, int S, const LabelAlphabet& alphabet,
                                                  const EnumBudget& budget = {}) {
    if (D < 1) fail(ErrorKind::InvalidDepth, "enumerate_minimal_trees needs D >= 1");
    if (S < 1) fail(ErrorKind::InvalidDepth, "enumerate_minimal_trees needs S >= 1");
    MinimalTreeCatalog catalog(D, S, alphabet);
    for (int label = 0; label < alphabet.size(); ++label)
        catalog.intern(LabelledTree::single(label), budget.max_entries);
    for (int depth = 2; depth <= D; ++depth) {
        int pool = catalog.size(); // children must already be catalogued
        for (int label = 0; label < alphabet.size(); ++label) {
            std::vector<int> chosen;
            detail::for_each_child_multiset(
                catalog, pool, S, budget.max_tree_vertices - 1, chosen, 0, [&](const std::vector<int>& ids) {
                    if (ids.empty()) return; // the bare root is a depth-1 tree, already present
                    LabelledTree t = LabelledTree::single(label);
                    for (int id : ids) t.attach(t.root, catalog.entry(id).tree);
                    catalog.intern(t, budget.max_entries);
                });
        }
    }
    catalog.sort_by_key();
    return catalog;
}

} // namespace treedepth
