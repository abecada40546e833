#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "treedepth/errors.hpp"

namespace treedepth {

// Rooted tree with a label per vertex, drawn from a finite alphabet that
// the caller indexes by small integers.  `mark` distinguishes vertices
// that carry one of the logic constants (0 none, 1 = a, 2 = b); unmarked
// trees leave it at 0 everywhere.
struct LabelledTree {
    struct Node {
        int label = 0;
        int mark = 0;
        std::vector<int> children;
    };

    std::vector<Node> nodes;
    int root = 0;

    int size() const { return static_cast<int>(nodes.size()); }

    int depth() const { return depth_below(root); }

    int depth_below(int node) const {
        int d = 0;
        for (int c : nodes[node].children) d = std::max(d, depth_below(c));
        return d + 1;
    }

    int depth_of_node(int node) const {
        std::vector<int> parent(nodes.size(), -1);
        fill_parents(root, parent);
        int d = 1;
        while (parent[node] >= 0) {
            node = parent[node];
            ++d;
        }
        return d;
    }

    static LabelledTree single(int label, int mark = 0) {
        LabelledTree t;
        t.nodes.push_back({label, mark, {}});
        t.root = 0;
        return t;
    }

    // Appends `sub` below `parent` and returns the index of its root copy.
    int attach(int parent, const LabelledTree& sub) {
        int base = size();
        for (const auto& n : sub.nodes) {
            Node copy = n;
            for (int& c : copy.children) c += base;
            nodes.push_back(copy);
        }
        nodes[parent].children.push_back(base + sub.root);
        return base + sub.root;
    }

    // Tree with the subtree rooted at `drop` (a child subtree) removed.
    LabelledTree without_subtree(int drop) const {
        std::vector<char> dead(nodes.size(), 0);
        mark_subtree(drop, dead);
        LabelledTree out;
        std::vector<int> remap(nodes.size(), -1);
        for (int i = 0; i < size(); ++i) {
            if (dead[i]) continue;
            remap[i] = out.size();
            out.nodes.push_back({nodes[i].label, nodes[i].mark, {}});
        }
        for (int i = 0; i < size(); ++i) {
            if (dead[i]) continue;
            for (int c : nodes[i].children) {
                if (!dead[c]) out.nodes[remap[i]].children.push_back(remap[c]);
            }
        }
        out.root = remap[root];
        return out;
    }

  private:
    void fill_parents(int node, std::vector<int>& parent) const {
        for (int c : nodes[node].children) {
            parent[c] = node;
            fill_parents(c, parent);
        }
    }

    void mark_subtree(int node, std::vector<char>& dead) const {
        dead[node] = 1;
        for (int c : nodes[node].children) mark_subtree(c, dead);
    }
};

// Byte sequence identifying an l-isomorphism class: a vertex's key is its
// label (and mark) followed by the multiset of child keys in sorted order.
class CanonicalKey {
  public:
    CanonicalKey() = default;
    explicit CanonicalKey(std::string bytes) : bytes_(std::move(bytes)) {}

    const std::string& bytes() const { return bytes_; }

    friend auto operator<=>(const CanonicalKey&, const CanonicalKey&) = default;

  private:
    std::string bytes_;
};

namespace detail {

inline std::string canonical_key_below(const LabelledTree& t, int node) {
    std::vector<std::string> child_keys;
    child_keys.reserve(t.nodes[node].children.size());
    for (int c : t.nodes[node].children) child_keys.push_back(canonical_key_below(t, c));
    std::sort(child_keys.begin(), child_keys.end());
    std::string out = "(";
    out += std::to_string(t.nodes[node].label);
    if (t.nodes[node].mark != 0) {
        out += '#';
        out += std::to_string(t.nodes[node].mark);
    }
    for (const auto& k : child_keys) out += k;
    out += ')';
    return out;
}

} // namespace detail

inline CanonicalKey canonical_key(const LabelledTree& t) {
    return CanonicalKey(detail::canonical_key_below(t, t.root));
}

} // namespace treedepth

template <>
struct std::hash<treedepth::CanonicalKey> {
    std::size_t operator()(const treedepth::CanonicalKey& k) const noexcept {
        return std::hash<std::string>{}(k.bytes());
    }
};
