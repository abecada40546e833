#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/graph.hpp"

namespace treedepth {

// Explicit tree-depth decomposition: parent map plus the roots, with the
// intended depth bound.  Depth is counted in vertices, so a single vertex
// has depth 1 and td(P_n) = ceil(log2(n+1)).
struct RootedForest {
    std::map<VertexId, std::optional<VertexId>> parent;
    std::vector<VertexId> roots;
    int depth_bound = 0;

    bool contains(VertexId v) const { return parent.count(v) != 0; }

    // Number of vertices on the root-to-v path, v included.
    int depth_of(VertexId v) const {
        int d = 0;
        std::optional<VertexId> cur = v;
        while (cur) {
            ++d;
            auto it = parent.find(*cur);
            if (it == parent.end()) fail(ErrorKind::NotPresent, "depth_of: vertex not in forest");
            cur = it->second;
            if (d > static_cast<int>(parent.size())) fail(ErrorKind::InconsistentLabel, "depth_of: parent cycle");
        }
        return d;
    }

    int max_depth() const {
        int d = 0;
        for (const auto& [v, p] : parent) d = std::max(d, depth_of(v));
        return d;
    }

    // Root-side-first path of strict ancestors of v.
    std::vector<VertexId> ancestors_root_first(VertexId v) const {
        std::vector<VertexId> up;
        auto it = parent.find(v);
        if (it == parent.end()) fail(ErrorKind::NotPresent, "ancestors: vertex not in forest");
        std::optional<VertexId> cur = it->second;
        while (cur) {
            up.push_back(*cur);
            cur = parent.at(*cur);
            if (up.size() > parent.size()) fail(ErrorKind::InconsistentLabel, "ancestors: parent cycle");
        }
        std::reverse(up.begin(), up.end());
        return up;
    }
};

// All (strict ancestor, descendant) pairs of the forest.
inline std::set<Edge> closure(const RootedForest& forest) {
    std::set<Edge> out;
    for (const auto& [v, p] : forest.parent) {
        for (VertexId a : forest.ancestors_root_first(v)) out.insert(make_edge(a, v));
    }
    return out;
}

namespace detail {

// Exact solver over <=64 vertices.  Subgraphs are bitmasks over a fixed
// vertex order; memoization keys connected induced subgraphs.
class TreeDepthSolver {
  public:
    explicit TreeDepthSolver(const DynamicGraph& g) : ids_(g.vertices()) {
        if (ids_.size() > 64) fail(ErrorKind::TooLarge, "exact tree-depth solver is capped at 64 vertices");
        std::map<VertexId, int> index;
        for (std::size_t i = 0; i < ids_.size(); ++i) index[ids_[i]] = static_cast<int>(i);
        adj_.assign(ids_.size(), 0);
        for (const auto& [u, v] : g.edges()) {
            adj_[index[u]] |= std::uint64_t(1) << index[v];
            adj_[index[v]] |= std::uint64_t(1) << index[u];
        }
    }

    int tree_depth() {
        int best = 0;
        for (std::uint64_t comp : components(full_mask())) best = std::max(best, td_connected(comp));
        return best;
    }

    // Builds a decomposition of depth <= bound, or nothing.  Roots are the
    // smallest-id minimizers, so outputs are stable across runs.
    std::optional<RootedForest> decomposition(int bound) {
        RootedForest f;
        f.depth_bound = bound;
        for (VertexId v : ids_) f.parent[v] = std::nullopt;
        for (std::uint64_t comp : components(full_mask())) {
            if (td_connected(comp) > bound) return std::nullopt;
            build(comp, std::nullopt, f);
        }
        return f;
    }

    // As above but the component containing `root` is rooted exactly there.
    std::optional<RootedForest> decomposition_rooted(int bound, VertexId root) {
        int r = -1;
        for (std::size_t i = 0; i < ids_.size(); ++i)
            if (ids_[i] == root) r = static_cast<int>(i);
        if (r < 0) fail(ErrorKind::NotPresent, "decomposition_rooted: root not in graph");
        RootedForest f;
        f.depth_bound = bound;
        for (VertexId v : ids_) f.parent[v] = std::nullopt;
        for (std::uint64_t comp : components(full_mask())) {
            if (comp & bit(r)) {
                if (td_rooted(comp, r) > bound) return std::nullopt;
                build_rooted(comp, r, std::nullopt, f);
            } else {
                if (td_connected(comp) > bound) return std::nullopt;
                build(comp, std::nullopt, f);
            }
        }
        return f;
    }

    int rooted_depth(VertexId root) {
        int r = -1;
        for (std::size_t i = 0; i < ids_.size(); ++i)
            if (ids_[i] == root) r = static_cast<int>(i);
        if (r < 0) fail(ErrorKind::NotPresent, "rooted_depth: root not in graph");
        std::uint64_t comp = component_mask(r, full_mask());
        return td_rooted(comp, r);
    }

  private:
    static std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

    std::uint64_t full_mask() const {
        return ids_.empty() ? 0 : (ids_.size() == 64 ? ~std::uint64_t(0) : (bit(static_cast<int>(ids_.size())) - 1));
    }

    std::uint64_t component_mask(int start, std::uint64_t within) const {
        std::uint64_t seen = bit(start);
        std::uint64_t frontier = seen;
        while (frontier) {
            int v = std::countr_zero(frontier);
            frontier &= frontier - 1;
            std::uint64_t nb = adj_[v] & within & ~seen;
            seen |= nb;
            frontier |= nb;
        }
        return seen;
    }

    std::vector<std::uint64_t> components(std::uint64_t mask) const {
        std::vector<std::uint64_t> out;
        std::uint64_t rest = mask;
        while (rest) {
            int v = std::countr_zero(rest);
            std::uint64_t comp = component_mask(v, mask);
            out.push_back(comp);
            rest &= ~comp;
        }
        return out;
    }

    int td_connected(std::uint64_t mask) {
        int pc = std::popcount(mask);
        if (pc <= 1) return pc;
        if (pc == 2) return 2;
        if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
        int best = std::numeric_limits<int>::max();
        std::uint64_t rest = mask;
        while (rest) {
            int v = std::countr_zero(rest);
            rest &= rest - 1;
            int worst = 0;
            for (std::uint64_t comp : components(mask & ~bit(v))) {
                worst = std::max(worst, td_connected(comp));
                if (1 + worst >= best) break;
            }
            best = std::min(best, 1 + worst);
        }
        memo_[mask] = best;
        return best;
    }

    int td_rooted(std::uint64_t mask, int r) {
        int worst = 0;
        for (std::uint64_t comp : components(mask & ~bit(r))) worst = std::max(worst, td_connected(comp));
        return 1 + worst;
    }

    // Witness extraction for the exists-vertex choice of the recursion.
    void build(std::uint64_t mask, std::optional<VertexId> above, RootedForest& f) {
        if (!mask) return;
        int target = td_connected(mask);
        int chosen = -1;
        std::uint64_t rest = mask;
        while (rest) {
            int v = std::countr_zero(rest);
            rest &= rest - 1;
            if (td_rooted(mask, v) == target) {
                chosen = v;
                break; // index order is VertexId order
            }
        }
        build_rooted(mask, chosen, above, f);
    }

    void build_rooted(std::uint64_t mask, int r, std::optional<VertexId> above, RootedForest& f) {
        f.parent[ids_[r]] = above;
        if (!above) f.roots.push_back(ids_[r]);
        for (std::uint64_t comp : components(mask & ~bit(r))) build(comp, ids_[r], f);
    }

    std::vector<VertexId> ids_;
    std::vector<std::uint64_t> adj_;
    std::unordered_map<std::uint64_t, int> memo_;
};

} // namespace detail

// Exact tree-depth; 0 for the empty graph.
inline int tree_depth(const DynamicGraph& g) {
    if (g.n_vertices() == 0) return 0;
    detail::TreeDepthSolver solver(g);
    return solver.tree_depth();
}

// A forest of depth <= bound whose closure contains every edge, or nothing
// if td(g) > bound.
inline std::optional<RootedForest> optimal_decomposition(const DynamicGraph& g, int bound) {
    detail::TreeDepthSolver solver(g);
    return solver.decomposition(bound);
}

// Oracle variant that pins the root of root's component.
inline std::optional<RootedForest> decomposition_rooted_at(const DynamicGraph& g, int bound, VertexId root) {
    detail::TreeDepthSolver solver(g);
    return solver.decomposition_rooted(bound, root);
}

// Smallest depth of a decomposition of root's component rooted at `root`
// (other components are ignored).
inline int rooted_tree_depth(const DynamicGraph& g, VertexId root) {
    detail::TreeDepthSolver solver(g);
    return solver.rooted_depth(root);
}

// True iff the forest covers exactly the graph's vertices, has depth <=
// bound, and every graph edge joins an ancestor-descendant pair.
inline bool is_valid_decomposition(const DynamicGraph& g, const RootedForest& forest, int bound) {
    if (g.n_vertices() != forest.parent.size()) fail(ErrorKind::VertexSetMismatch, "decomposition vertex set differs from graph");
    for (const auto& [v, p] : forest.parent) {
        if (!g.has_vertex(v)) fail(ErrorKind::VertexSetMismatch, "decomposition vertex set differs from graph");
    }
    std::map<VertexId, int> depth;
    for (const auto& [v, p] : forest.parent) {
        int d = forest.depth_of(v);
        depth[v] = d;
        if (d > bound) return false;
    }
    for (const auto& [u, v] : g.edges()) {
        // Walk up from the deeper endpoint; the shallower one must appear.
        VertexId lo = depth[u] >= depth[v] ? u : v;
        VertexId hi = depth[u] >= depth[v] ? v : u;
        bool found = false;
        std::optional<VertexId> cur = forest.parent.at(lo);
        while (cur) {
            if (*cur == hi) {
                found = true;
                break;
            }
            cur = forest.parent.at(*cur);
        }
        if (!found) return false;
    }
    return true;
}

} // namespace treedepth
