#include <catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "treedepth/labelled_tree.hpp"

using namespace treedepth;

namespace {

// Oracle: label- and root-preserving isomorphism by trying all bijections.
bool trees_isomorphic(const LabelledTree& s, const LabelledTree& t) {
    if (s.size() != t.size()) return false;
    int n = s.size();
    std::vector<int> sp(n, -1), tp(n, -1);
    std::function<void(const LabelledTree&, int, std::vector<int>&)> fill =
        [&](const LabelledTree& tree, int node, std::vector<int>& parent) {
            for (int c : tree.nodes[node].children) {
                parent[c] = node;
                fill(tree, c, parent);
            }
        };
    fill(s, s.root, sp);
    fill(t, t.root, tp);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        if (perm[s.root] != t.root) continue;
        bool ok = true;
        for (int v = 0; v < n && ok; ++v) {
            if (s.nodes[v].label != t.nodes[perm[v]].label) ok = false;
            else if (s.nodes[v].mark != t.nodes[perm[v]].mark) ok = false;
            else if (sp[v] >= 0 && perm[sp[v]] != tp[perm[v]]) ok = false;
            else if (sp[v] < 0 && tp[perm[v]] >= 0) ok = false;
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

LabelledTree random_tree(int n, int labels, std::mt19937_64& rng) {
    LabelledTree t;
    for (int i = 0; i < n; ++i) {
        t.nodes.push_back({static_cast<int>(rng() % labels), 0, {}});
        if (i > 0) t.nodes[rng() % i].children.push_back(i);
    }
    t.root = 0;
    return t;
}

} // namespace

TEST_CASE("canonical key basics") {
    REQUIRE(canonical_key(LabelledTree::single(3)) == canonical_key(LabelledTree::single(3)));
    REQUIRE(canonical_key(LabelledTree::single(3)) != canonical_key(LabelledTree::single(4)));

    // Child order does not matter.
    LabelledTree xy = LabelledTree::single(0);
    xy.attach(0, LabelledTree::single(1));
    xy.attach(0, LabelledTree::single(2));
    LabelledTree yx = LabelledTree::single(0);
    yx.attach(0, LabelledTree::single(2));
    yx.attach(0, LabelledTree::single(1));
    REQUIRE(canonical_key(xy) == canonical_key(yx));

    // A differing child label does.
    LabelledTree xz = LabelledTree::single(0);
    xz.attach(0, LabelledTree::single(1));
    xz.attach(0, LabelledTree::single(3));
    REQUIRE(canonical_key(xy) != canonical_key(xz));
}

TEST_CASE("marks participate in the key") {
    LabelledTree plain = LabelledTree::single(0);
    plain.attach(0, LabelledTree::single(1));
    LabelledTree marked = plain;
    marked.nodes[1].mark = 1;
    REQUIRE(canonical_key(plain) != canonical_key(marked));
}

TEST_CASE("key equality agrees with brute-force isomorphism on small trees") {
    std::mt19937_64 rng(77);
    std::vector<LabelledTree> pool;
    for (int i = 0; i < 60; ++i) pool.push_back(random_tree(1 + static_cast<int>(rng() % 6), 2, rng));
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            bool same_key = canonical_key(pool[i]) == canonical_key(pool[j]);
            REQUIRE(same_key == trees_isomorphic(pool[i], pool[j]));
        }
    }
}

TEST_CASE("without_subtree drops exactly one limb") {
    LabelledTree t = LabelledTree::single(0);
    int c1 = t.attach(0, LabelledTree::single(1));
    t.attach(0, LabelledTree::single(1));
    t.attach(c1, LabelledTree::single(2));
    REQUIRE(t.size() == 4);
    LabelledTree r = t.without_subtree(c1);
    REQUIRE(r.size() == 2);
    REQUIRE(r.depth() == 2);
    REQUIRE(r.nodes[r.root].label == 0);
}
