#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "treedepth/dynamic/kernel_catalog.hpp"
#include "treedepth/errors.hpp"
#include "treedepth/graph.hpp"
#include "treedepth/labelled_tree.hpp"
#include "treedepth/minimal/catalog.hpp"
#include "treedepth/mso/eval.hpp"
#include "treedepth/static_core.hpp"

namespace treedepth {

// Work counters for the instrumented bounds: structural drawer visits,
// reroot recursion depth, and extraction path length of the last
// operation.  Queries perform no structural work at all.
struct WorkCounters {
    std::uint64_t cabinets_touched = 0;
    std::uint32_t reroot_depth = 0;
    std::uint32_t path_length = 0;
};

// Per-vertex cabinet label: ancestor-adjacency bits (index 0 is the
// root-side ancestor) and the capped multiplicity vector over lower-depth
// minimal-tree identities.
struct CabinetLabel {
    std::uint32_t ancestor_bits = 0;
    std::vector<std::pair<int, std::int64_t>> limb_counts; // (type id, min(S, count))
};

// Inspection view of the compressed tree: cabinets disjointly partitioned
// into drawers.  Built on demand from the live structure; a cabinet is
// dirty when two of its drawers share a parent vertex, which public
// operations never leave behind.
struct Cabinet {
    CabinetLabel label;
    struct DrawerView {
        std::vector<VertexId> members;
        std::optional<VertexId> parent;
        std::size_t cardinality = 0;
    };
    std::vector<DrawerView> drawers;
    std::vector<std::unique_ptr<Cabinet>> children;
    bool dirty = false;

    std::size_t vertex_count() const {
        std::size_t n = 0;
        for (const auto& d : drawers) n += d.cardinality;
        return n;
    }
};

inline std::size_t count_cabinets(const std::vector<std::unique_ptr<Cabinet>>& roots) {
    std::size_t n = 0;
    for (const auto& c : roots) {
        n += 1;
        n += count_cabinets(c->children);
    }
    return n;
}

// Record of a path extraction: which vertices were decompressed, for the
// later cleanup pass.
struct ExtractionRecord {
    std::vector<VertexId> path; // root .. v
    std::vector<VertexId> affected;
    bool empty() const { return affected.empty(); }
};

// The dynamic structure: a graph of tree-depth at most D together with a
// compressed tree-depth decomposition (drawers with shared parent
// references, per-vertex labels) and a constant-time cached answer for
// the user formula.
class CompressedDecomposition {
    struct ParentRef {
        std::optional<VertexId> parent;
    };

    struct Drawer {
        std::vector<VertexId> members; // insertion order; first member is the representative
        std::shared_ptr<ParentRef> parent_ref;
        int exact_type = -1; // interned uncapped limb type of each member's limb
    };

    struct VRec {
        std::uint32_t bits = 0;
        int depth = 1;
        Drawer* drawer = nullptr;
        std::vector<Drawer*> children; // drawers whose shared parent is this vertex
    };

  public:
    CompressedDecomposition(const DynamicGraph& graph, int D, std::shared_ptr<KernelCatalog> catalog)
        : graph_(graph), d_(D), catalog_(std::move(catalog)) {
        if (catalog_->depth_bound() != D) fail(ErrorKind::InvalidDepth, "catalog depth bound differs from D");
        std::optional<RootedForest> forest = build_initial_forest();
        if (!forest) fail(ErrorKind::DepthExceeded, "graph has tree-depth above " + std::to_string(d_));
        build_from_forest(*forest);
        refresh_answer();
        counters_ = {};
    }

    CompressedDecomposition(const DynamicGraph& graph, int D, mso::FormulaPtr phi_user, DynConfig config = {})
        : CompressedDecomposition(graph, D, std::make_shared<KernelCatalog>(D, std::move(phi_user), config)) {}

    CompressedDecomposition(const CompressedDecomposition&) = delete;
    CompressedDecomposition& operator=(const CompressedDecomposition&) = delete;

    // --- queries ---------------------------------------------------------

    // Whether the represented graph satisfies the user formula; read from
    // the cached per-component summaries, no traversal.
    bool query() const {
        counters_ = {};
        return cached_answer_;
    }

    const DynamicGraph& graph() const { return graph_; }
    int depth_bound() const { return d_; }
    int limb_threshold() const { return catalog_->limb_cap(); }
    const KernelCatalog& catalog() const { return *catalog_; }
    KernelCatalog& catalog() { return *catalog_; }
    const WorkCounters& last_op_counters() const { return counters_; }
    std::size_t component_count() const { return roots_.size(); }

    RootedForest decompress() const {
        RootedForest f;
        f.depth_bound = d_;
        for (const auto& [v, rec] : recs_) f.parent[v] = rec.drawer->parent_ref->parent;
        for (const Drawer* r : roots_) f.roots.push_back(r->members.front());
        return f;
    }

    CabinetLabel label_of(VertexId v) const {
        const VRec& rec = rec_of(v);
        CabinetLabel label;
        label.ancestor_bits = rec.bits;
        std::map<int, std::int64_t> grouped;
        for (const Drawer* d : rec.children)
            grouped[catalog_->types().capped(d->exact_type, catalog_->limb_cap())] +=
                static_cast<std::int64_t>(d->members.size());
        for (const auto& [type, count] : grouped)
            label.limb_counts.emplace_back(type, std::min<std::int64_t>(count, catalog_->limb_cap()));
        return label;
    }

    std::vector<std::unique_ptr<Cabinet>> cabinet_view() const {
        std::vector<std::unique_ptr<Cabinet>> out;
        for (const Drawer* r : roots_) out.push_back(view_group({r}));
        return out;
    }

    std::size_t cabinet_count() const { return count_cabinets(cabinet_view()); }

    std::string state_digest() const {
        std::string data;
        for (const auto& [v, rec] : recs_) {
            data += std::to_string(v.value()) + "#" + std::to_string(rec.bits) + "/" +
                    std::to_string(rec.depth) + ";";
            for (VertexId u : graph_.neighbors(v)) data += std::to_string(u.value()) + ",";
            auto p = rec.drawer->parent_ref->parent;
            data += p ? std::to_string(p->value()) : std::string("-");
            data += "[";
            for (VertexId m : rec.drawer->members) data += std::to_string(m.value()) + " ";
            data += "]|";
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
        return std::string(buf);
    }

    // --- updates ---------------------------------------------------------

    VertexId add_isolated_vertex() {
        counters_ = {};
        VertexId v = graph_.add_vertex();
        recs_.emplace(v, VRec{});
        Drawer* d = new_drawer({v}, std::nullopt);
        roots_.push_back(d);
        refresh_drawer_shallow(d);
        refresh_answer();
        return v;
    }

    void remove_isolated_vertex(VertexId v) {
        counters_ = {};
        const VRec& rec = rec_of(v);
        if (graph_.degree(v) != 0) fail(ErrorKind::NotIsolated, "vertex has incident edges");
        Drawer* d = rec.drawer;
        if (d->parent_ref->parent || d->members.size() != 1)
            fail(ErrorKind::NotIsolated, "vertex is not a singleton component");
        roots_.erase(std::find(roots_.begin(), roots_.end(), d));
        destroy_drawer(d);
        recs_.erase(v);
        graph_.remove_vertex(v);
        refresh_answer();
    }

    void delete_edge(VertexId u, VertexId v) {
        counters_ = {};
        require_vertex(u);
        require_vertex(v);
        if (!graph_.has_edge(u, v)) fail(ErrorKind::NoSuchEdge, "edge not present");
        VertexId lower = rec_of(u).depth >= rec_of(v).depth ? u : v;
        VertexId upper = lower == u ? v : u;
        ExtractionRecord rec = extract_path(lower);
        graph_.set_edge(u, v, false);
        recs_.at(lower).bits &= ~(std::uint32_t(1) << (rec_of(upper).depth - 1));

        split_if_disconnected(rec.path);
        clean_dirty(rec);
        refresh_answer();
    }

    void insert_edge(VertexId u, VertexId v) {
        counters_ = {};
        require_vertex(u);
        require_vertex(v);
        if (u == v) fail(ErrorKind::SelfLoop, "cannot insert a loop");
        if (graph_.has_edge(u, v)) fail(ErrorKind::EdgeExists, "edge already present");

        ExtractionRecord rec;
        if (!ancestor_of(u, v) && !ancestor_of(v, u)) {
            // feasibility gate before any mutation: td(G + uv) <= D
            std::vector<VertexId> tops{component_anchor(u)};
            VertexId tv = component_anchor(v);
            if (std::find(tops.begin(), tops.end(), tv) == tops.end()) tops.push_back(tv);
            if (!lookup_root(tops, u, v, d_))
                fail(ErrorKind::DepthWouldExceed, "tree-depth would exceed " + std::to_string(d_));

            // Place a descending chain of roots r_1, r_2, ...; the piece
            // holding the pending endpoints shrinks every round and ends
            // up below both of them, making the edge respect the
            // tree-order.
            std::set<VertexId> chain;
            int t = d_;
            while (!ancestor_of(u, v) && !ancestor_of(v, u)) {
                if (t < 1 || counters_.reroot_depth > static_cast<std::uint32_t>(d_))
                    fail(ErrorKind::NoRootWitness, "root recursion exceeded the depth budget");
                std::optional<VertexId> root = lookup_root(tops, u, v, t);
                if (!root) fail(ErrorKind::NoRootWitness, "no root witness below the top level");
                counters_.reroot_depth += 1;
                VertexId r_anchor = top_containing(tops, *root);
                std::optional<VertexId> chain_parent = rec_of(r_anchor).drawer->parent_ref->parent;
                reroot_tree(r_anchor, chain_parent, *root, t);
                // pull the remaining zone trees under the fresh chain tip;
                // the endpoint mark keeps the witness in the component
                // that actually has to move
                for (VertexId other : tops) {
                    if (other == r_anchor) continue;
                    VertexId mark = (u == other || ancestor_of(other, u)) ? u : v;
                    auto r_o = lookup_root({other}, mark, VertexId(~0u), t - 1);
                    if (!r_o) fail(ErrorKind::NoRootWitness, "zone piece admits no root under the chain");
                    reroot_tree(other, *root, *r_o, t - 1);
                }
                chain.insert(*root);
                t -= 1;
                tops.clear();
                for (VertexId x : {u, v}) {
                    if (chain.count(x)) continue; // placed on the chain
                    VertexId below = x;
                    while (true) {
                        auto p = rec_of(below).drawer->parent_ref->parent;
                        if (!p || chain.count(*p)) break;
                        below = *p;
                    }
                    split_out(below);
                    rec.affected.push_back(below);
                    if (std::find(tops.begin(), tops.end(), below) == tops.end()) tops.push_back(below);
                }
            }
        }
        // the edge respects the tree-order now
        VertexId lower = rec_of(u).depth >= rec_of(v).depth ? u : v;
        VertexId upper = lower == u ? v : u;
        ExtractionRecord tail = extract_path(lower);
        graph_.set_edge(u, v, true);
        recs_.at(lower).bits |= std::uint32_t(1) << (rec_of(upper).depth - 1);
        for (VertexId w : tail.affected) rec.affected.push_back(w);
        clean_sorted(rec);
        refresh_answer();
    }

    // Decompresses the root-to-v path so each of its vertices sits alone
    // in its drawer, splitting as needed and leaving the affected parents
    // dirty until clean_dirty runs.
    ExtractionRecord extract_path(VertexId v) {
        ExtractionRecord rec;
        rec.path = path_from_root(v);
        counters_.path_length = std::max<std::uint32_t>(counters_.path_length,
                                                        static_cast<std::uint32_t>(rec.path.size()));
        for (VertexId w : rec.path) {
            split_out(w);
            rec.affected.push_back(w);
        }
        return rec;
    }

    // Merges extracted vertices back into matching drawers, bottom-up,
    // refreshing labels along the way.
    void clean_dirty(ExtractionRecord& rec) {
        for (auto it = rec.affected.rbegin(); it != rec.affected.rend(); ++it) {
            if (recs_.count(*it) == 0) continue;
            Drawer* d = recs_.at(*it).drawer;
            refresh_drawer_shallow(d);
            merge_with_sibling(d);
        }
        rec.affected.clear();
    }

    // As clean_dirty, but for records whose vertices accumulated across
    // several surgeries: order by current depth so children refresh before
    // their ancestors.
    void clean_sorted(ExtractionRecord& rec) {
        std::vector<VertexId> vs;
        for (VertexId v : rec.affected)
            if (recs_.count(v)) vs.push_back(v);
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        std::stable_sort(vs.begin(), vs.end(),
                         [&](VertexId x, VertexId y) { return rec_of(x).depth > rec_of(y).depth; });
        for (VertexId v : vs) {
            Drawer* d = recs_.at(v).drawer;
            refresh_drawer_shallow(d);
            merge_with_sibling(d);
        }
        rec.affected.clear();
    }

    // A concrete vertex that can root a depth-<=t decomposition of the
    // component(s) of `at` and of the assigned constants, plus the pending
    // edge {a,b}.  Located by descending first members of drawers whose
    // kernels match the stored root-table address.  Throws Infeasible when
    // no such root exists.
    VertexId find_root(VertexId at, const mso::ConstantAssignment& consts, int t) {
        require_vertex(at);
        std::vector<VertexId> tops{component_anchor(at)};
        for (auto c : {consts.a, consts.b}) {
            if (!c) continue;
            require_vertex(*c);
            VertexId root = component_anchor(*c);
            if (std::find(tops.begin(), tops.end(), root) == tops.end()) tops.push_back(root);
        }
        auto r = lookup_root(tops, consts.a ? *consts.a : VertexId(~0u), consts.b ? *consts.b : VertexId(~0u), t);
        if (!r) fail(ErrorKind::Infeasible, "component admits no depth-" + std::to_string(t) + " root");
        return *r;
    }

    // Rebuilds the component's decomposition so r_n is its root; the
    // caller guarantees a depth-<=D decomposition rooted there exists.
    void reroot(VertexId r_n) {
        counters_ = {};
        require_vertex(r_n);
        reroot_tree(component_anchor(r_n), std::nullopt, r_n, d_);
        refresh_answer();
    }

    // --- validation ------------------------------------------------------

    // Full recomputation check of every stored invariant; with `oracle`
    // also cross-checks the cached answer against brute-force evaluation.
    void validate(bool oracle = false) const {
        RootedForest f = decompress();
        if (!is_valid_decomposition(graph_, f, d_))
            fail(ErrorKind::DepthExceeded, "decompression is not a valid depth-bounded decomposition");
        if (roots_.size() != count_components())
            fail(ErrorKind::InconsistentLabel, "root list does not match the graph components");
        std::map<VertexId, int> fresh;
        for (const Drawer* r : roots_) {
            if (r->parent_ref->parent) fail(ErrorKind::InconsistentLabel, "root drawer with a parent");
            validate_subtree(r, std::nullopt, 1, fresh);
        }
        if (fresh.size() != recs_.size()) fail(ErrorKind::InconsistentLabel, "drawer forest misses vertices");
        if (oracle) {
            bool expected = mso::evaluate(graph_, catalog_->phi_user(), {}, catalog_->config().eval);
            if (expected != cached_answer_)
                fail(ErrorKind::InconsistentLabel, "cached answer disagrees with the oracle");
        }
    }

  private:
    // --- record access ---------------------------------------------------

    const VRec& rec_of(VertexId v) const {
        auto it = recs_.find(v);
        if (it == recs_.end()) fail(ErrorKind::NotPresent, "no vertex " + std::to_string(v.value()));
        return it->second;
    }

    void require_vertex(VertexId v) const { rec_of(v); }

    void touch() const { counters_.cabinets_touched += 1; }

    // --- drawer plumbing -------------------------------------------------

    Drawer* new_drawer(std::vector<VertexId> members, std::optional<VertexId> parent) {
        auto owned = std::make_unique<Drawer>();
        owned->members = std::move(members);
        owned->parent_ref = std::make_shared<ParentRef>(ParentRef{parent});
        Drawer* d = owned.get();
        for (VertexId m : d->members) recs_.at(m).drawer = d;
        if (parent) recs_.at(*parent).children.push_back(d);
        storage_.push_back(std::move(owned));
        touch();
        return d;
    }

    void destroy_drawer(Drawer* d) {
        auto it = std::find_if(storage_.begin(), storage_.end(), [&](const auto& p) { return p.get() == d; });
        storage_.erase(it);
    }

    void detach_from_parent(Drawer* d) {
        if (d->parent_ref->parent) {
            auto& siblings = recs_.at(*d->parent_ref->parent).children;
            auto it = std::find(siblings.begin(), siblings.end(), d);
            if (it != siblings.end()) siblings.erase(it);
        } else {
            auto it = std::find(roots_.begin(), roots_.end(), d);
            if (it != roots_.end()) roots_.erase(it);
        }
    }

    void attach(Drawer* d, std::optional<VertexId> parent) {
        detach_from_parent(d);
        d->parent_ref->parent = parent;
        if (parent) recs_.at(*parent).children.push_back(d);
        else roots_.push_back(d);
        touch();
    }

    // Moves w into its own singleton drawer next to its old one.
    void split_out(VertexId w) {
        Drawer* d = recs_.at(w).drawer;
        touch();
        if (d->members.size() == 1) return;
        d->members.erase(std::find(d->members.begin(), d->members.end(), w));
        Drawer* split = new_drawer({w}, d->parent_ref->parent);
        split->exact_type = d->exact_type;
        if (d->parent_ref->parent) {
            auto& siblings = recs_.at(*d->parent_ref->parent).children;
            siblings.erase(std::find(siblings.begin(), siblings.end(), split));
            siblings.insert(std::next(std::find(siblings.begin(), siblings.end(), d)), split);
        }
    }

    std::vector<VertexId> path_from_root(VertexId v) const {
        std::vector<VertexId> path{v};
        std::optional<VertexId> cur = rec_of(v).drawer->parent_ref->parent;
        while (cur) {
            path.push_back(*cur);
            cur = rec_of(*cur).drawer->parent_ref->parent;
            if (path.size() > recs_.size()) fail(ErrorKind::InconsistentLabel, "parent cycle");
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    bool ancestor_of(VertexId anc, VertexId desc) const {
        if (anc == desc) return false;
        int target = rec_of(anc).depth;
        VertexId cur = desc;
        while (rec_of(cur).depth > target) {
            auto p = rec_of(cur).drawer->parent_ref->parent;
            if (!p) return false;
            cur = *p;
        }
        return cur == anc;
    }

    VertexId ancestor_at_depth(VertexId v, int depth) const {
        VertexId cur = v;
        while (rec_of(cur).depth > depth) cur = *rec_of(cur).drawer->parent_ref->parent;
        if (rec_of(cur).depth != depth) fail(ErrorKind::NotPresent, "no ancestor at that depth");
        return cur;
    }

    Drawer* component_root(VertexId v) const {
        VertexId cur = v;
        while (auto p = rec_of(cur).drawer->parent_ref->parent) cur = *p;
        return rec_of(cur).drawer;
    }

    VertexId component_anchor(VertexId v) const { return component_root(v)->members.front(); }

    // --- label maintenance -----------------------------------------------

    // Recomputes a drawer's limb type from its representative's children;
    // every member roots an l-isomorphic limb, which validate() checks.
    void refresh_drawer_shallow(Drawer* d) {
        touch();
        VertexId rep = d->members.front();
        std::map<int, std::int64_t> grouped;
        for (const Drawer* c : rec_of(rep).children)
            grouped[c->exact_type] += static_cast<std::int64_t>(c->members.size());
        std::vector<std::pair<int, std::int64_t>> children(grouped.begin(), grouped.end());
        d->exact_type = catalog_->types().intern(rec_of(rep).bits, std::move(children));
    }

    // Full recomputation below a drawer: depths and bits from the graph,
    // then types bottom-up.  Used after surgery that moved subtrees.
    void refresh_subtree(Drawer* d, std::vector<VertexId>& ancestors) {
        touch();
        for (VertexId m : d->members) {
            VRec& rec = recs_.at(m);
            rec.depth = static_cast<int>(ancestors.size()) + 1;
            rec.bits = 0;
            for (std::size_t i = 0; i < ancestors.size(); ++i)
                if (graph_.has_edge(m, ancestors[i])) rec.bits |= std::uint32_t(1) << i;
            ancestors.push_back(m);
            for (Drawer* c : std::vector<Drawer*>(rec.children)) refresh_subtree(c, ancestors);
            ancestors.pop_back();
        }
        refresh_drawer_shallow(d);
    }

    void refresh_tree_from(Drawer* top) {
        std::vector<VertexId> ancestors;
        if (auto p = top->parent_ref->parent) ancestors = path_from_root(*p);
        refresh_subtree(top, ancestors);
    }

    // Refreshes types up the chain from `v` to the root, deepest first.
    void refresh_chain_up(VertexId v) {
        std::vector<VertexId> chain = path_from_root(v);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it)
            refresh_drawer_shallow(recs_.at(*it).drawer);
    }

    // Merges d into a same-type sibling drawer if one exists.
    void merge_with_sibling(Drawer* d) {
        auto parent = d->parent_ref->parent;
        if (!parent) return;
        for (Drawer* sibling : rec_of(*parent).children) {
            if (sibling == d || sibling->exact_type != d->exact_type) continue;
            touch();
            for (VertexId m : d->members) {
                sibling->members.push_back(m);
                recs_.at(m).drawer = sibling;
            }
            d->members.clear();
            detach_from_parent(d);
            destroy_drawer(d);
            return;
        }
    }

    void merge_duplicate_children(VertexId parent) {
        auto& children = recs_.at(parent).children;
        for (std::size_t i = 0; i < children.size(); ++i) {
            for (std::size_t j = i + 1; j < children.size();) {
                if (children[j]->exact_type == children[i]->exact_type) {
                    Drawer* dup = children[j];
                    touch();
                    for (VertexId m : dup->members) {
                        children[i]->members.push_back(m);
                        recs_.at(m).drawer = children[i];
                    }
                    dup->members.clear();
                    children.erase(children.begin() + static_cast<std::ptrdiff_t>(j));
                    destroy_drawer(dup);
                } else {
                    ++j;
                }
            }
        }
    }

    // --- initialization ----------------------------------------------------

    std::optional<RootedForest> build_initial_forest() {
        if (graph_.n_vertices() == 0) {
            RootedForest f;
            f.depth_bound = d_;
            return f;
        }
        if (static_cast<int>(graph_.n_vertices()) <= catalog_->config().exact_init_cap)
            return optimal_decomposition(graph_, d_);
        // Large graphs: a search tree from a high-degree vertex per
        // component; every non-tree edge of a depth-first tree joins an
        // ancestor-descendant pair, so the tree is a decomposition if it
        // is shallow enough.
        RootedForest f;
        f.depth_bound = d_;
        std::set<VertexId> placed;
        for (VertexId v : graph_.vertices()) {
            if (placed.count(v)) continue;
            auto comp = graph_.component_of(v);
            VertexId start = v;
            for (VertexId w : comp)
                if (graph_.degree(w) > graph_.degree(start)) start = w;
            dfs_tree(start, f, placed);
            for (VertexId w : comp)
                if (f.depth_of(w) > d_) return std::nullopt;
        }
        return f;
    }

    void dfs_tree(VertexId start, RootedForest& f, std::set<VertexId>& placed) {
        std::vector<std::pair<VertexId, std::optional<VertexId>>> stack{{start, std::nullopt}};
        while (!stack.empty()) {
            auto [w, parent] = stack.back();
            stack.pop_back();
            if (placed.count(w)) continue;
            placed.insert(w);
            f.parent[w] = parent;
            if (!parent) f.roots.push_back(w);
            for (VertexId nb : graph_.neighbors(w))
                if (!placed.count(nb)) stack.emplace_back(nb, w);
        }
    }

    void build_from_forest(const RootedForest& f) {
        std::map<VertexId, std::vector<VertexId>> children;
        for (const auto& [v, p] : f.parent) {
            recs_.emplace(v, VRec{});
            if (p) children[*p].push_back(v);
        }
        for (VertexId r : f.roots) {
            std::vector<VertexId> ancestors;
            build_vertex(r, std::nullopt, ancestors, children);
            roots_.push_back(recs_.at(r).drawer);
        }
    }

    void build_vertex(VertexId v, std::optional<VertexId> parent, std::vector<VertexId>& ancestors,
                      const std::map<VertexId, std::vector<VertexId>>& children) {
        VRec& rec = recs_.at(v);
        rec.depth = static_cast<int>(ancestors.size()) + 1;
        rec.bits = 0;
        for (std::size_t i = 0; i < ancestors.size(); ++i)
            if (graph_.has_edge(v, ancestors[i])) rec.bits |= std::uint32_t(1) << i;
        Drawer* mine = new_drawer({v}, parent);
        ancestors.push_back(v);
        if (auto it = children.find(v); it != children.end())
            for (VertexId c : it->second) build_vertex(c, v, ancestors, children);
        ancestors.pop_back();
        refresh_drawer_shallow(mine);
        merge_with_sibling(mine);
    }

    // --- kernels and the root table ----------------------------------------

    // Marked capped kernel of the subtree at `top`, relative to its own
    // root.  Each kernel node carries a live representative, so a witness
    // node is immediately a witness vertex.
    struct KernelBuild {
        LabelledTree tree;
        std::vector<VertexId> rep;
        std::vector<std::string> node_keys;
    };

    KernelBuild build_kernel(VertexId anchor, std::optional<VertexId> a, std::optional<VertexId> b) const {
        std::set<VertexId> mark_paths;
        auto add_path = [&](std::optional<VertexId> x) {
            if (!x || recs_.count(*x) == 0) return;
            if (*x != anchor && !ancestor_of(anchor, *x)) return; // lives outside this subtree
            for (VertexId cur = *x;;) {
                mark_paths.insert(cur);
                if (cur == anchor) break;
                cur = *rec_of(cur).drawer->parent_ref->parent;
            }
        };
        add_path(a);
        add_path(b);
        int offset = rec_of(anchor).depth - 1;
        KernelBuild out;
        build_kernel_member(rec_of(anchor).drawer, anchor, offset, a, b, mark_paths, out, -1);
        out.tree.root = 0;
        out.node_keys.resize(out.tree.nodes.size());
        fill_keys(out.tree, out.tree.root, out.node_keys);
        return out;
    }

    void build_kernel_member(const Drawer* d, VertexId m, int offset, std::optional<VertexId> a,
                             std::optional<VertexId> b, const std::set<VertexId>& mark_paths,
                             KernelBuild& out, int parent_node) const {
        (void)d;
        const VRec& rec = rec_of(m);
        LabelledTree::Node node;
        node.label = static_cast<int>(rec.bits >> offset);
        node.mark = (a && *a == m) ? 1 : (b && *b == m) ? 2 : 0;
        int idx = static_cast<int>(out.tree.nodes.size());
        out.tree.nodes.push_back(node);
        out.rep.push_back(m);
        if (parent_node >= 0) out.tree.nodes[parent_node].children.push_back(idx);
        for (const Drawer* c : rec.children) {
            int kept_plain = 0;
            for (VertexId cm : c->members) {
                bool marked = mark_paths.count(cm) != 0;
                if (!marked) {
                    if (kept_plain >= catalog_->limb_cap()) continue;
                    ++kept_plain;
                }
                build_kernel_member(c, cm, offset, a, b, mark_paths, out, idx);
            }
        }
    }

    static void fill_keys(const LabelledTree& t, int node, std::vector<std::string>& keys) {
        for (int c : t.nodes[node].children) fill_keys(t, c, keys);
        keys[node] = detail::canonical_key_below(t, node);
    }

    // Root witness for the (1 or 2) subtrees in `tops`, with the pending
    // edge between `a` and `b` when they live inside those subtrees.
    // Returns nothing when infeasible.
    std::optional<VertexId> lookup_root(const std::vector<VertexId>& tops, VertexId a, VertexId b, int t) {
        std::vector<KernelBuild> builds;
        std::optional<VertexId> oa = recs_.count(a) ? std::optional<VertexId>(a) : std::nullopt;
        std::optional<VertexId> ob = recs_.count(b) ? std::optional<VertexId>(b) : std::nullopt;
        builds.reserve(tops.size());
        for (VertexId top : tops) builds.push_back(build_kernel(top, oa, ob));
        std::vector<const LabelledTree*> kernels;
        std::vector<std::string> keys;
        for (const auto& kb : builds) {
            kernels.push_back(&kb.tree);
            keys.push_back(kb.node_keys[kb.tree.root]);
        }
        const KernelCatalog::RootEntry& entry = catalog_->root_entry(kernels, t);
        if (entry.infeasible) return std::nullopt;
        std::vector<std::size_t> order = KernelCatalog::sorted_kernel_order(keys);
        const KernelBuild& kb = builds[order[entry.kernel_index]];
        int node = kb.tree.root;
        for (const std::string& key : entry.address) {
            int next = -1;
            for (int c : kb.tree.nodes[node].children) {
                if (kb.node_keys[c] == key) {
                    next = c;
                    break;
                }
            }
            if (next < 0) fail(ErrorKind::NoRootWitness, "stored root address does not match the kernel");
            node = next;
        }
        return kb.rep[node];
    }

    VertexId top_containing(const std::vector<VertexId>& tops, VertexId v) const {
        for (VertexId anchor : tops) {
            if (v == anchor || ancestor_of(anchor, v)) return anchor;
        }
        fail(ErrorKind::NoRootWitness, "witness outside the zone");
    }

    // --- piece computation ---------------------------------------------------

    // Connectivity classes over the singleton chain path[0..k-1] (path[i]
    // at depth base+i+1) and the limbs hanging off it, read entirely from
    // labels: a vertex's bits bind it to its ancestors, a limb's subtree
    // mask binds together every path vertex it has an edge to.  Limbs
    // whose class differs from their holder's must move under the deepest
    // path vertex they touch ("choose lowest such vertex").
    struct PieceLimb {
        Drawer* drawer;
        int holder;  // path index it currently hangs under, -1 if orphaned
        int deepest; // deepest path index its subtree has an edge to
    };

    struct Pieces {
        std::vector<int> cls;                  // path index -> class representative
        std::map<int, std::vector<int>> members; // class -> path indices, ascending
        std::vector<PieceLimb> moves;          // limbs that must re-father
    };

    Pieces compute_pieces(const std::vector<VertexId>& path, int base,
                          const std::vector<Drawer*>& orphan_limbs) {
        int k = static_cast<int>(path.size());
        std::vector<int> uf(k);
        for (int i = 0; i < k; ++i) uf[i] = i;
        std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
        auto unite = [&](int x, int y) { uf[find(x)] = find(y); };
        auto targets_of = [&](std::uint32_t mask, int limit) {
            std::vector<int> targets;
            for (int pos = base; pos < base + limit; ++pos)
                if ((mask >> pos) & 1u) targets.push_back(pos - base);
            return targets;
        };

        std::vector<PieceLimb> limbs;
        for (int i = 0; i < k; ++i) {
            for (int tgt : targets_of(rec_of(path[i]).bits, i)) unite(tgt, i);
            for (Drawer* limb : rec_of(path[i]).children) {
                if (i + 1 < k && limb == rec_of(path[i + 1]).drawer) continue; // the chain child
                std::uint32_t mask = catalog_->types().node(limb->exact_type).mask;
                auto targets = targets_of(mask, i + 1);
                for (std::size_t s = 1; s < targets.size(); ++s) unite(targets[s - 1], targets[s]);
                // a limb whose edges all point above the zone rides with
                // its holder; the zone's ancestors cover it either way
                if (targets.empty()) continue;
                limbs.push_back({limb, i, targets.back()});
            }
        }
        for (Drawer* limb : orphan_limbs) {
            std::uint32_t mask = catalog_->types().node(limb->exact_type).mask;
            auto targets = targets_of(mask, k);
            for (std::size_t s = 1; s < targets.size(); ++s) unite(targets[s - 1], targets[s]);
            if (targets.empty()) continue; // no path edges: the limb stays with its old holder
            limbs.push_back({limb, -1, targets.back()});
        }

        Pieces out;
        out.cls.resize(k);
        for (int i = 0; i < k; ++i) out.cls[i] = find(i);
        for (int i = 0; i < k; ++i) out.members[out.cls[i]].push_back(i);
        for (const PieceLimb& li : limbs)
            if (li.holder < 0 || find(li.holder) != find(li.deepest)) out.moves.push_back(li);
        return out;
    }

    void apply_moves(const std::vector<VertexId>& path, const std::vector<PieceLimb>& moves) {
        for (const PieceLimb& mv : moves) {
            attach(mv.drawer, path[mv.deepest]);
        }
    }

    // --- rerooting ---------------------------------------------------------

    // Extraction limited to the subtree rooted at the vertex `anchor`;
    // returns the anchor-to-v path.
    std::vector<VertexId> extract_within(VertexId v, VertexId anchor) {
        std::vector<VertexId> path;
        for (VertexId cur = v;;) {
            path.push_back(cur);
            if (cur == anchor) break;
            cur = *rec_of(cur).drawer->parent_ref->parent;
        }
        std::reverse(path.begin(), path.end());
        counters_.path_length = std::max<std::uint32_t>(counters_.path_length,
                                                        static_cast<std::uint32_t>(path.size()));
        for (VertexId w : path) split_out(w);
        return path;
    }

    // Rebuilds the subtree whose top drawer is `top` so that r_n roots its
    // connected component there, attached under `attach_parent`, with
    // depth at most t: extract r_n, remove it, re-father every limb of
    // r_n under the lowest path vertex it has an edge to, chain each
    // connected piece of the surviving path in index order, and hang the
    // pieces tied to r_n below it.  Pieces belonging to other components
    // of the zone have no edge to r_n or its subtree, so they stay where
    // the zone used to hang (or become roots of their own); a piece of
    // r_n's component that is still too deep gets a fresh root from the
    // table, recursively.
    void reroot_tree(VertexId top_anchor, std::optional<VertexId> attach_parent, VertexId r_n, int t) {
        std::optional<VertexId> old_parent = rec_of(top_anchor).drawer->parent_ref->parent;
        std::vector<VertexId> path = extract_within(r_n, top_anchor);
        Drawer* top_after = recs_.at(path.front()).drawer;

        if (path.size() == 1) { // r_n already roots this subtree
            if (top_after->parent_ref->parent != attach_parent) {
                attach(top_after, attach_parent);
                if (old_parent) refresh_chain_up(*old_parent);
            }
            refresh_tree_from(top_after);
            finish_surgery(path, attach_parent, old_parent, top_after, t);
            return;
        }

        int m = static_cast<int>(path.size());
        Drawer* rn_drawer = recs_.at(r_n).drawer;
        int base = rec_of(path.front()).depth - 1;
        int rn_pos = base + m - 1; // ancestor-bit position of r_n for its own limbs

        detach_from_parent(rn_drawer);
        std::vector<VertexId> surviving(path.begin(), path.end() - 1);
        std::vector<Drawer*> rn_limbs(recs_.at(r_n).children);

        Pieces pieces = compute_pieces(surviving, base, rn_limbs);
        apply_moves(surviving, pieces.moves);

        // classes tied to r_n: through its own ancestor bits, or through a
        // limb of r_n that keeps an edge to r_n while moving under a path
        // vertex
        std::set<int> tied;
        for (int pos = base; pos < rn_pos; ++pos)
            if ((rec_of(r_n).bits >> pos) & 1u) tied.insert(pieces.cls[pos - base]);
        for (const PieceLimb& li : pieces.moves) {
            if (li.holder >= 0) continue; // a path limb; its holder covers it
            std::uint32_t mask = catalog_->types().node(li.drawer->exact_type).mask;
            if ((mask >> rn_pos) & 1u) tied.insert(pieces.cls[li.deepest]);
        }

        // place r_n
        rn_drawer->parent_ref->parent = attach_parent;
        if (attach_parent) recs_.at(*attach_parent).children.push_back(rn_drawer);
        else roots_.push_back(rn_drawer);
        touch();

        // chain classes: tied ones under r_n, the rest back where the zone
        // hung
        std::vector<Drawer*> stray_tops;
        for (const auto& [cls, indices] : pieces.members) {
            bool under_rn = tied.count(cls) != 0;
            for (std::size_t j = 0; j < indices.size(); ++j) {
                Drawer* pd = recs_.at(surviving[indices[j]]).drawer;
                std::optional<VertexId> want;
                if (j > 0) want = surviving[indices[j - 1]];
                else if (under_rn) want = r_n;
                else want = old_parent;
                if (pd->parent_ref->parent != want) attach(pd, want);
            }
            if (!under_rn) stray_tops.push_back(recs_.at(surviving[indices.front()]).drawer);
        }

        refresh_tree_from(rn_drawer);
        for (Drawer* stray : stray_tops) {
            refresh_tree_from(stray);
            merge_with_sibling(stray);
        }
        if (old_parent && old_parent != attach_parent && recs_.count(*old_parent))
            refresh_chain_up(*old_parent);
        finish_surgery(path, attach_parent, old_parent, rn_drawer, t);
    }

    // Shared tail of rerooting: merge duplicates along the former path and
    // at the new root, refresh the chain above, then make every child
    // subtree of the new root fit the remaining budget.  A child with no
    // edge to the new root belongs to another component of the zone; if
    // too deep it moves back to the zone's old place, where the budget is
    // what it always was.
    void finish_surgery(const std::vector<VertexId>& path, std::optional<VertexId> attach_parent,
                        std::optional<VertexId> old_parent, Drawer* root_drawer, int t) {
        VertexId root = root_drawer->members.front();
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            if (recs_.count(*it) == 0) continue;
            merge_duplicate_children(*it);
            Drawer* d = recs_.at(*it).drawer;
            refresh_drawer_shallow(d);
            if (*it != root) merge_with_sibling(d);
        }
        merge_duplicate_children(root);
        if (attach_parent) {
            merge_duplicate_children(*attach_parent);
            refresh_chain_up(*attach_parent);
        }

        bool settled = false;
        for (int guard = 0; guard < 4 * static_cast<int>(recs_.size()) + 8 && !settled; ++guard) {
            Drawer* deep = nullptr;
            for (Drawer* child : recs_.at(root).children) {
                if (subtree_depth(child) > t - 1) {
                    deep = child;
                    break;
                }
            }
            if (!deep) {
                settled = true;
                break;
            }
            std::uint32_t mask = catalog_->types().node(deep->exact_type).mask;
            bool tied_to_root = (mask >> (rec_of(root).depth - 1)) & 1u;
            if (!tied_to_root) {
                attach(deep, old_parent);
                refresh_tree_from(deep);
                merge_with_sibling(deep);
                refresh_chain_up(root); // the root lost a child
                continue;
            }
            if (t - 1 < 1) fail(ErrorKind::NoRootWitness, "piece too deep for the remaining budget");
            // reroot one member limb at a time; iso copies follow in later
            // rounds of the scan
            VertexId limb_anchor = deep->members.front();
            auto r2 = lookup_root({limb_anchor}, VertexId(~0u), VertexId(~0u), t - 1);
            if (!r2) fail(ErrorKind::NoRootWitness, "piece admits no root within the remaining budget");
            counters_.reroot_depth += 1;
            reroot_tree(limb_anchor, root, *r2, t - 1);
        }
        if (!settled) fail(ErrorKind::NoRootWitness, "depth normalization did not converge");
        // nested surgery can change sibling types after the first merge
        // pass, so sweep once more
        merge_duplicate_children(root);
        if (attach_parent && recs_.count(*attach_parent)) merge_duplicate_children(*attach_parent);
        if (old_parent && recs_.count(*old_parent)) merge_duplicate_children(*old_parent);
    }

    int subtree_depth(const Drawer* d) const {
        int below = 0;
        for (VertexId m : d->members)
            for (const Drawer* c : rec_of(m).children) below = std::max(below, subtree_depth(c));
        return 1 + below;
    }

    // --- deletion split ------------------------------------------------------

    // After an edge removal the component splits into at most two pieces,
    // read off the labels along the extracted path.  The piece without the
    // old root becomes a new component whose root is its highest path
    // vertex; limbs caught on the wrong side move under the deepest path
    // vertex they have an edge to.
    void split_if_disconnected(const std::vector<VertexId>& path) {
        if (path.size() <= 1) return;
        Pieces pieces = compute_pieces(path, 0, {});
        if (pieces.members.size() == 1) return;
        if (pieces.members.size() != 2)
            fail(ErrorKind::InconsistentLabel, "edge deletion split into more than two pieces");

        apply_moves(path, pieces.moves);
        int root_class = pieces.cls[0];
        for (const auto& [cls, indices] : pieces.members) {
            for (std::size_t j = 0; j < indices.size(); ++j) {
                Drawer* pd = recs_.at(path[indices[j]]).drawer;
                std::optional<VertexId> want;
                if (j > 0) want = path[indices[j - 1]];
                else if (cls == root_class) continue; // the old root keeps its place
                if (pd->parent_ref->parent != want) attach(pd, want);
            }
        }
        for (const auto& [cls, indices] : pieces.members)
            refresh_tree_from(recs_.at(path[indices.front()]).drawer);
        for (const auto& [cls, indices] : pieces.members) {
            for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
                merge_duplicate_children(path[*it]);
                Drawer* d = recs_.at(path[*it]).drawer;
                refresh_drawer_shallow(d);
                if (it + 1 != indices.rend()) merge_with_sibling(d);
            }
        }
    }

    std::size_t count_components() const {
        std::set<VertexId> seen;
        std::size_t n = 0;
        for (const auto& [v, rec] : recs_) {
            if (seen.count(v)) continue;
            ++n;
            for (VertexId w : graph_.component_of(v)) seen.insert(w);
        }
        return n;
    }

    // --- cached answer -------------------------------------------------------

    void refresh_answer() {
        std::map<int, std::int64_t> components;
        for (const Drawer* r : roots_) components[r->exact_type] += 1;
        cached_answer_ = catalog_->combined_answer(components);
    }

    // --- views and validation --------------------------------------------

    std::unique_ptr<Cabinet> view_group(const std::vector<const Drawer*>& group) const {
        auto cab = std::make_unique<Cabinet>();
        VertexId rep = group.front()->members.front();
        cab->label = label_of(rep);
        std::map<std::string, int> parents_seen;
        for (const Drawer* d : group) {
            Cabinet::DrawerView view;
            view.members = d->members;
            view.parent = d->parent_ref->parent;
            view.cardinality = d->members.size();
            cab->drawers.push_back(std::move(view));
            std::string key = d->parent_ref->parent ? std::to_string(d->parent_ref->parent->value()) : "-";
            if (++parents_seen[key] > 1) cab->dirty = true;
        }
        std::map<int, std::vector<const Drawer*>> child_groups;
        std::vector<int> order;
        for (const Drawer* d : group) {
            for (VertexId m : d->members) {
                for (const Drawer* c : rec_of(m).children) {
                    if (child_groups[c->exact_type].empty()) order.push_back(c->exact_type);
                    child_groups[c->exact_type].push_back(c);
                }
            }
        }
        for (int type : order) cab->children.push_back(view_group(child_groups[type]));
        return cab;
    }

    void validate_subtree(const Drawer* d, std::optional<VertexId> parent, int depth,
                          std::map<VertexId, int>& fresh) const {
        if (d->members.empty()) fail(ErrorKind::InconsistentLabel, "empty drawer");
        if (d->parent_ref->parent != parent) fail(ErrorKind::InconsistentLabel, "parent reference mismatch");
        int first_type = -2;
        for (VertexId m : d->members) {
            const VRec& rec = rec_of(m);
            if (rec.drawer != d) fail(ErrorKind::InconsistentLabel, "drawer membership mismatch");
            if (rec.depth != depth) fail(ErrorKind::InconsistentLabel, "stored depth mismatch");
            std::vector<VertexId> ancestors = path_from_root(m);
            ancestors.pop_back();
            std::uint32_t bits = 0;
            for (std::size_t i = 0; i < ancestors.size(); ++i)
                if (graph_.has_edge(m, ancestors[i])) bits |= std::uint32_t(1) << i;
            if (bits != rec.bits) fail(ErrorKind::InconsistentLabel, "ancestor bits mismatch");
            int type = recompute_type(m, fresh);
            if (first_type == -2) first_type = type;
            if (type != first_type) fail(ErrorKind::InconsistentLabel, "drawer members are not l-isomorphic");
            if (type != d->exact_type)
                fail(ErrorKind::InconsistentLabel, "stale drawer type at vertex " + std::to_string(m.value()) +
                                                       " stored=" + std::to_string(d->exact_type) + " fresh=" + std::to_string(type));
        }
        for (VertexId m : d->members) {
            std::set<int> seen;
            for (const Drawer* c : rec_of(m).children) {
                if (!seen.insert(c->exact_type).second)
                    fail(ErrorKind::InconsistentLabel, "duplicate sibling drawer types (dirty cabinet) under vertex " +
                                                           std::to_string(m.value()) + " type " + std::to_string(c->exact_type));
                validate_subtree(c, m, depth + 1, fresh);
            }
        }
    }

    int recompute_type(VertexId v, std::map<VertexId, int>& memo) const {
        if (auto it = memo.find(v); it != memo.end()) return it->second;
        std::map<int, std::int64_t> grouped;
        for (const Drawer* c : rec_of(v).children)
            for (VertexId m : c->members) grouped[recompute_type(m, memo)] += 1;
        std::vector<std::pair<int, std::int64_t>> children(grouped.begin(), grouped.end());
        int type = catalog_->types().intern(rec_of(v).bits, std::move(children));
        memo[v] = type;
        return type;
    }

    DynamicGraph graph_;
    int d_;
    mutable std::shared_ptr<KernelCatalog> catalog_;
    std::map<VertexId, VRec> recs_;
    std::vector<Drawer*> roots_;
    std::vector<std::unique_ptr<Drawer>> storage_;
    bool cached_answer_ = false;
    mutable WorkCounters counters_;
};

} // namespace treedepth
