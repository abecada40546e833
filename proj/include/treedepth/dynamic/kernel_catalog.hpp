#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "treedepth/errors.hpp"
#include "treedepth/graph.hpp"
#include "treedepth/labelled_tree.hpp"
#include "treedepth/minimal/cache.hpp"
#include "treedepth/minimal/catalog.hpp"
#include "treedepth/minimal/threshold.hpp"
#include "treedepth/mso/ast.hpp"
#include "treedepth/mso/build.hpp"
#include "treedepth/mso/eval.hpp"
#include "treedepth/static_core.hpp"

namespace treedepth {

// Hash-consed limb types.  A type is a bit vector plus a sorted multiset
// of (child type, multiplicity); sharing makes structural equality an id
// comparison and keeps per-update work proportional to the number of
// child classes rather than subtree sizes.
class TypeInterner {
  public:
    struct Node {
        std::uint32_t bits = 0;
        std::vector<std::pair<int, std::int64_t>> children; // (type id, count), sorted by id
        int depth = 1;          // limb depth in vertices
        std::int64_t size = 1;  // vertices of the uncapped limb
        std::uint32_t mask = 0; // OR of all bit vectors in the limb (absolute positions)
    };

    int intern(std::uint32_t bits, std::vector<std::pair<int, std::int64_t>> children) {
        Key key{bits, children};
        if (auto it = index_.find(key); it != index_.end()) return it->second;
        Node n;
        n.bits = bits;
        n.children = std::move(children);
        n.mask = bits;
        for (const auto& [id, count] : n.children) {
            const Node& c = nodes_[id];
            n.depth = std::max(n.depth, c.depth + 1);
            n.size += count * c.size;
            n.mask |= c.mask;
        }
        nodes_.push_back(std::move(n));
        index_.emplace(std::move(key), static_cast<int>(nodes_.size()) - 1);
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Node& node(int id) const { return nodes_.at(id); }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Type of the same limb with multiplicities capped at S, lower types
    // capped first (phi-equivalent limbs merge before counting).
    int capped(int id, int S) {
        auto key = std::make_pair(id, S);
        if (auto it = cap_memo_.find(key); it != cap_memo_.end()) return it->second;
        const Node n = nodes_[id];
        std::map<int, std::int64_t> grouped;
        for (const auto& [child, count] : n.children) grouped[capped(child, S)] += count;
        std::vector<std::pair<int, std::int64_t>> children;
        for (const auto& [child, count] : grouped) children.emplace_back(child, std::min<std::int64_t>(count, S));
        int result = intern(n.bits, std::move(children));
        cap_memo_.emplace(key, result);
        return result;
    }

    LabelledTree expand(int id, int max_vertices = 4096) const {
        const Node& n = nodes_[id];
        if (n.size > max_vertices)
            fail(ErrorKind::TooLarge, "type expands to " + std::to_string(n.size) + " vertices");
        LabelledTree t = LabelledTree::single(static_cast<int>(n.bits));
        expand_below(id, t, t.root);
        return t;
    }

  private:
    using Key = std::pair<std::uint32_t, std::vector<std::pair<int, std::int64_t>>>;

    void expand_below(int id, LabelledTree& t, int at) const {
        for (const auto& [child, count] : nodes_[id].children) {
            for (std::int64_t k = 0; k < count; ++k) {
                int node = t.attach(at, LabelledTree::single(static_cast<int>(nodes_[child].bits)));
                // attach copied a single vertex; fill its subtree in place
                expand_below(child, t, node);
            }
        }
    }

    std::vector<Node> nodes_;
    std::map<Key, int> index_;
    std::map<std::pair<int, int>, int> cap_memo_;
};

struct DynConfig {
    mso::EvalOptions eval{};          // brute-force evaluation cap
    ThresholdBudget threshold{6, 7};  // doublings, validation tree size
    int exact_init_cap = 20;          // largest n initialized via the exact solver
    std::uint32_t c1 = 8;             // deletion touch bound: c1 * D
    std::uint32_t c2 = 16;            // insertion touch bound: c2 * D * (D + catalog size)
    int expand_cap = 4096;            // kernel materialization guard
};

// Shared run state for one (D, user formula) configuration: the validated
// limb thresholds, the lazily grown type catalog, and the memoized root
// and satisfaction tables.  The full minimal-tree catalog is a tower of
// exponentials in D, so entries and table rows materialize only for types
// that actually occur; the contents match what eager construction would
// produce for them.
class KernelCatalog {
  public:
    KernelCatalog(int D, mso::FormulaPtr phi_user, DynConfig config = {})
        : d_(D), phi_user_(std::move(phi_user)), config_(config) {
        if (D < 1) fail(ErrorKind::InvalidDepth, "KernelCatalog needs D >= 1");
        if (mso::uses_constant(*phi_user_, "a") || mso::uses_constant(*phi_user_, "b"))
            fail(ErrorKind::UnassignedConstant, "the user formula must not mention the constants a, b");
        alphabet_ = LabelAlphabet::level0(D);
        LimbThreshold reference = compute_limb_threshold(*mso::build_tau_prime(D), alphabet_, D, config.threshold);
        LimbThreshold user = compute_limb_threshold(*phi_user_, alphabet_, D, config.threshold);
        s_user_ = user.value;
        s_ = std::max(reference.value, user.value); // the higher of the two
    }

    int depth_bound() const { return d_; }
    int limb_cap() const { return s_; }
    int user_limb_cap() const { return s_user_; }
    const mso::Formula& phi_user() const { return *phi_user_; }
    const DynConfig& config() const { return config_; }
    const LabelAlphabet& alphabet() const { return alphabet_; }

    TypeInterner& types() { return types_; }
    const TypeInterner& types() const { return types_; }

    std::size_t catalog_size() const { return static_cast<std::size_t>(types_.size()); }

    // Satisfaction of phi_user on the decoded kernel of a type, capped at
    // the user formula's own validated threshold so the evaluation stays
    // desk-sized regardless of the structural threshold.
    bool satisfies_user(int type_id) {
        int capped = types_.capped(type_id, s_user_);
        if (auto it = sat_memo_.find(capped); it != sat_memo_.end()) return it->second;
        LabelledTree tree = types_.expand(capped, config_.expand_cap);
        bool value = mso::evaluate(decode(tree, alphabet_), *phi_user_, {}, config_.eval);
        sat_memo_.emplace(capped, value);
        return value;
    }

    // Combined answer for a multiset of component summaries, memoized on
    // the multiset with per-identity counts capped.
    bool combined_answer(const std::map<int, std::int64_t>& components) {
        std::string key;
        std::vector<std::pair<int, std::int64_t>> capped;
        for (const auto& [type, count] : components) {
            int ct = types_.capped(type, s_user_);
            capped.emplace_back(ct, std::min<std::int64_t>(count, s_user_));
        }
        std::sort(capped.begin(), capped.end());
        for (const auto& [t, c] : capped) key += std::to_string(t) + ":" + std::to_string(c) + ",";
        if (auto it = answer_memo_.find(key); it != answer_memo_.end()) return it->second;
        std::vector<LabelledTree> trees;
        for (const auto& [t, c] : capped)
            for (std::int64_t k = 0; k < c; ++k) trees.push_back(types_.expand(t, config_.expand_cap));
        bool value = mso::evaluate(decode_forest(trees, alphabet_), *phi_user_, {}, config_.eval);
        answer_memo_.emplace(std::move(key), value);
        return value;
    }

    // Root feasibility and witness for a marked kernel forest at depth
    // budget t, keyed by the kernels' canonical keys.  The stored witness
    // is an address of canonical child keys, resolvable against any
    // isomorphic build; kernel_index refers to the key-sorted order so
    // entries are independent of the caller's kernel order.
    struct RootEntry {
        bool infeasible = true;
        int kernel_index = 0;               // index in key-sorted kernel order
        std::vector<std::string> address;   // child keys from its root down
    };

    static std::vector<std::size_t> sorted_kernel_order(const std::vector<std::string>& keys) {
        std::vector<std::size_t> order(keys.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
        return order;
    }

    const RootEntry& root_entry(const std::vector<const LabelledTree*>& kernels, int t) {
        std::vector<std::string> keys;
        for (const auto* k : kernels) keys.push_back(canonical_key(*k).bytes());
        std::vector<std::size_t> order = sorted_kernel_order(keys);
        std::string memo_key = std::to_string(t);
        for (std::size_t i : order) memo_key += "|" + keys[i];
        if (auto it = root_memo_.find(memo_key); it != root_memo_.end()) return it->second;

        std::vector<const LabelledTree*> sorted;
        for (std::size_t i : order) sorted.push_back(kernels[i]);
        RootEntry entry = solve_root(sorted, t);
        return root_memo_.emplace(std::move(memo_key), std::move(entry)).first->second;
    }

    // Serialization of the lazily accumulated state (cache interface).
    json to_json(std::uint64_t content_hash) const {
        json out;
        out["format"] = "treedepth-kernel-catalog";
        out["version"] = 1;
        out["content_hash"] = content_hash;
        out["D"] = d_;
        out["S"] = s_;
        out["S_user"] = s_user_;
        out["phi_user"] = mso::print(*phi_user_);
        json types = json::array();
        for (int i = 0; i < types_.size(); ++i) {
            const auto& n = types_.node(i);
            json children = json::array();
            for (const auto& [id, count] : n.children) children.push_back(json::array({id, count}));
            types.push_back(json{{"bits", n.bits}, {"children", children}});
        }
        out["types"] = types;
        json sat = json::array();
        for (const auto& [id, value] : sat_memo_) sat.push_back(json::array({id, value}));
        out["sat_memo"] = sat;
        json ans = json::array();
        for (const auto& [key, value] : answer_memo_) ans.push_back(json::array({key, value}));
        out["answer_memo"] = ans;
        json roots = json::array();
        for (const auto& [key, entry] : root_memo_) {
            roots.push_back(json{{"key", key},
                                 {"infeasible", entry.infeasible},
                                 {"kernel", entry.kernel_index},
                                 {"address", entry.address}});
        }
        out["root_memo"] = roots;
        return out;
    }

    void warm_from_json(const json& in, std::uint64_t content_hash) {
        if (in.at("format").get<std::string>() != "treedepth-kernel-catalog")
            fail(ErrorKind::SyntaxError, "not a kernel catalog cache");
        if (in.at("content_hash").get<std::uint64_t>() != content_hash)
            fail(ErrorKind::SyntaxError, "kernel catalog cache was built for a different configuration");
        std::vector<int> remap;
        for (const auto& t : in.at("types")) {
            std::vector<std::pair<int, std::int64_t>> children;
            for (const auto& c : t.at("children"))
                children.emplace_back(remap.at(c.at(0).get<int>()), c.at(1).get<std::int64_t>());
            std::sort(children.begin(), children.end());
            remap.push_back(types_.intern(t.at("bits").get<std::uint32_t>(), std::move(children)));
        }
        for (const auto& s : in.at("sat_memo")) sat_memo_[remap.at(s.at(0).get<int>())] = s.at(1).get<bool>();
        for (const auto& a : in.at("answer_memo")) {
            // answer keys reference type ids; remap entry by entry
            std::string old = a.at(0).get<std::string>(), rebuilt;
            std::size_t pos = 0;
            while (pos < old.size()) {
                std::size_t colon = old.find(':', pos);
                std::size_t comma = old.find(',', colon);
                int id = std::stoi(old.substr(pos, colon - pos));
                rebuilt += std::to_string(remap.at(id)) + old.substr(colon, comma - colon + 1);
                pos = comma + 1;
            }
            answer_memo_[rebuilt] = a.at(1).get<bool>();
        }
        for (const auto& r : in.at("root_memo")) {
            RootEntry e;
            e.infeasible = r.at("infeasible").get<bool>();
            e.kernel_index = r.at("kernel").get<int>();
            e.address = r.at("address").get<std::vector<std::string>>();
            root_memo_[r.at("key").get<std::string>()] = std::move(e);
        }
    }

  private:
    // Feasibility via the kernel's decoded graph: a witness vertex roots a
    // depth-<=t decomposition of its connected component, including the
    // pending edge when both constants are present.  With marks, the
    // witness must sit in the marked component, which the recursion is
    // about; other components of the kernel ride along and get placed
    // elsewhere by the rerooting surgery.  This is the tau'_t witness
    // check computed combinatorially; the MSO route and this one are
    // cross-checked in the test suite.
    RootEntry solve_root(const std::vector<const LabelledTree*>& kernels, int t) const {
        std::vector<LabelledTree> trees;
        for (const auto* k : kernels) trees.push_back(*k);
        std::vector<std::uint32_t> offsets;
        DynamicGraph g = decode_forest(trees, alphabet_, &offsets);
        std::optional<VertexId> a, b;
        for (std::size_t i = 0; i < trees.size(); ++i) {
            for (int n = 0; n < trees[i].size(); ++n) {
                if (trees[i].nodes[n].mark == 1) a = VertexId(offsets[i] + n);
                if (trees[i].nodes[n].mark == 2) b = VertexId(offsets[i] + n);
            }
        }
        if (a && b) g.set_edge(*a, *b, true);
        std::optional<std::set<VertexId>> marked_comp;
        if (a) marked_comp = g.component_of(*a);
        else if (b) marked_comp = g.component_of(*b);
        RootEntry entry;
        for (std::size_t i = 0; i < trees.size() && entry.infeasible; ++i) {
            for (int n = 0; n < trees[i].size(); ++n) {
                VertexId w(offsets[i] + n);
                if (marked_comp && marked_comp->count(w) == 0) continue;
                if (rooted_tree_depth(g, w) <= t) {
                    entry.infeasible = false;
                    entry.kernel_index = static_cast<int>(i);
                    entry.address = address_of(trees[i], n);
                    break;
                }
            }
        }
        return entry;
    }

    static std::vector<std::string> address_of(const LabelledTree& tree, int node) {
        std::vector<int> parent(tree.size(), -1);
        std::vector<int> stack{tree.root};
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int c : tree.nodes[x].children) {
                parent[c] = x;
                stack.push_back(c);
            }
        }
        std::vector<std::string> address;
        for (int cur = node; cur != tree.root; cur = parent[cur])
            address.push_back(detail::canonical_key_below(tree, cur));
        std::reverse(address.begin(), address.end());
        return address;
    }

    int d_;
    mso::FormulaPtr phi_user_;
    DynConfig config_;
    LabelAlphabet alphabet_;
    int s_ = 1;
    int s_user_ = 1;
    TypeInterner types_;
    std::map<int, bool> sat_memo_;
    std::map<std::string, bool> answer_memo_;
    std::map<std::string, RootEntry> root_memo_;
};

} // namespace treedepth
