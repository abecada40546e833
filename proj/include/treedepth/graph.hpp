#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "treedepth/errors.hpp"

namespace treedepth {

// Stable vertex identity.  Ids are handed out by DynamicGraph from a
// monotone counter and are never reused, so drawer membership records and
// trace files can reference vertices across deletions.
class VertexId {
  public:
    VertexId() = default;
    constexpr explicit VertexId(std::uint32_t v) : v_(v) {}

    constexpr std::uint32_t value() const { return v_; }

    friend constexpr auto operator<=>(VertexId, VertexId) = default;

  private:
    std::uint32_t v_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, VertexId v) { return os << v.value(); }

using Edge = std::pair<VertexId, VertexId>;

inline Edge make_edge(VertexId u, VertexId v) {
    return u < v ? Edge{u, v} : Edge{v, u};
}

// Mutable simple undirected graph.  Adjacency is kept symmetric and
// loop-free; containers are ordered so iteration is deterministic.
class DynamicGraph {
  public:
    VertexId add_vertex() {
        VertexId id(next_id_++);
        adj_.emplace(id, std::set<VertexId>{});
        return id;
    }

    // Removal requires the vertex to be isolated; edges must be deleted first.
    void remove_vertex(VertexId v) {
        auto it = adj_.find(v);
        if (it == adj_.end()) fail(ErrorKind::NotPresent, "remove_vertex: no vertex " + std::to_string(v.value()));
        if (!it->second.empty()) fail(ErrorKind::NotIsolated, "remove_vertex: vertex " + std::to_string(v.value()) + " has degree " + std::to_string(it->second.size()));
        adj_.erase(it);
    }

    void set_edge(VertexId u, VertexId v, bool present) {
        if (u == v) fail(ErrorKind::SelfLoop, "set_edge: self loop at " + std::to_string(u.value()));
        auto iu = adj_.find(u);
        auto iv = adj_.find(v);
        if (iu == adj_.end() || iv == adj_.end()) fail(ErrorKind::NotPresent, "set_edge: endpoint missing");
        if (present) {
            iu->second.insert(v);
            iv->second.insert(u);
        } else {
            iu->second.erase(v);
            iv->second.erase(u);
        }
    }

    bool has_vertex(VertexId v) const { return adj_.count(v) != 0; }

    bool has_edge(VertexId u, VertexId v) const {
        auto it = adj_.find(u);
        return it != adj_.end() && it->second.count(v) != 0;
    }

    std::size_t degree(VertexId v) const {
        auto it = adj_.find(v);
        if (it == adj_.end()) fail(ErrorKind::NotPresent, "degree: no vertex " + std::to_string(v.value()));
        return it->second.size();
    }

    const std::set<VertexId>& neighbors(VertexId v) const {
        auto it = adj_.find(v);
        if (it == adj_.end()) fail(ErrorKind::NotPresent, "neighbors: no vertex " + std::to_string(v.value()));
        return it->second;
    }

    // Vertex set of v's connected component, by traversal.  The
    // decomposition side tracks components via its root list; this stays a
    // plain search so it can serve as oracle substrate.
    std::set<VertexId> component_of(VertexId v) const {
        if (!has_vertex(v)) fail(ErrorKind::NotPresent, "component_of: no vertex " + std::to_string(v.value()));
        std::set<VertexId> seen{v};
        std::vector<VertexId> stack{v};
        while (!stack.empty()) {
            VertexId x = stack.back();
            stack.pop_back();
            for (VertexId y : adj_.at(x)) {
                if (seen.insert(y).second) stack.push_back(y);
            }
        }
        return seen;
    }

    std::size_t n_vertices() const { return adj_.size(); }

    std::size_t n_edges() const {
        std::size_t deg_sum = 0;
        for (const auto& [v, nb] : adj_) deg_sum += nb.size();
        return deg_sum / 2;
    }

    std::vector<VertexId> vertices() const {
        std::vector<VertexId> out;
        out.reserve(adj_.size());
        for (const auto& [v, nb] : adj_) out.push_back(v);
        return out;
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (const auto& [v, nb] : adj_) {
            for (VertexId u : nb) {
                if (v < u) out.emplace_back(v, u);
            }
        }
        return out;
    }

  private:
    std::uint32_t next_id_ = 0;
    std::map<VertexId, std::set<VertexId>> adj_;
};

// Convenience builders used all over the tests and the harness.
inline DynamicGraph path_graph(int n, std::vector<VertexId>* ids_out = nullptr) {
    DynamicGraph g;
    std::vector<VertexId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(g.add_vertex());
    for (int i = 0; i + 1 < n; ++i) g.set_edge(ids[i], ids[i + 1], true);
    if (ids_out) *ids_out = ids;
    return g;
}

inline DynamicGraph complete_graph(int n, std::vector<VertexId>* ids_out = nullptr) {
    DynamicGraph g;
    std::vector<VertexId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(g.add_vertex());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.set_edge(ids[i], ids[j], true);
    if (ids_out) *ids_out = ids;
    return g;
}

inline DynamicGraph cycle_graph(int n, std::vector<VertexId>* ids_out = nullptr) {
    std::vector<VertexId> ids;
    DynamicGraph g = path_graph(n, &ids);
    if (n >= 3) g.set_edge(ids[n - 1], ids[0], true);
    if (ids_out) *ids_out = ids;
    return g;
}

inline DynamicGraph star_graph(int leaves, std::vector<VertexId>* ids_out = nullptr) {
    DynamicGraph g;
    std::vector<VertexId> ids;
    ids.push_back(g.add_vertex());
    for (int i = 0; i < leaves; ++i) {
        ids.push_back(g.add_vertex());
        g.set_edge(ids[0], ids.back(), true);
    }
    if (ids_out) *ids_out = ids;
    return g;
}

} // namespace treedepth

template <>
struct std::hash<treedepth::VertexId> {
    std::size_t operator()(treedepth::VertexId v) const noexcept {
        return std::hash<std::uint32_t>{}(v.value());
    }
};
