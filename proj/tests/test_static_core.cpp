#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "treedepth/graph.hpp"
#include "treedepth/static_core.hpp"

using namespace treedepth;

namespace {

// Independent oracle: the textbook recursion over all vertex removals,
// with no memoization or pruning.  Only usable on tiny graphs.
int naive_tree_depth(const DynamicGraph& g) {
    if (g.n_vertices() == 0) return 0;
    auto verts = g.vertices();
    auto comp = g.component_of(verts[0]);
    if (comp.size() != verts.size()) {
        int worst = 0;
        std::set<VertexId> left(verts.begin(), verts.end());
        while (!left.empty()) {
            auto c = g.component_of(*left.begin());
            DynamicGraph sub;
            std::map<VertexId, VertexId> remap;
            for (VertexId v : c) remap[v] = sub.add_vertex();
            for (const auto& [u, v] : g.edges())
                if (c.count(u) && c.count(v)) sub.set_edge(remap[u], remap[v], true);
            worst = std::max(worst, naive_tree_depth(sub));
            for (VertexId v : c) left.erase(v);
        }
        return worst;
    }
    if (verts.size() == 1) return 1;
    int best = static_cast<int>(verts.size());
    for (VertexId v : verts) {
        DynamicGraph sub;
        std::map<VertexId, VertexId> remap;
        for (VertexId u : verts)
            if (u != v) remap[u] = sub.add_vertex();
        for (const auto& [x, y] : g.edges())
            if (x != v && y != v) sub.set_edge(remap[x], remap[y], true);
        best = std::min(best, 1 + naive_tree_depth(sub));
    }
    return best;
}

DynamicGraph random_graph(int n, double p, std::mt19937_64& rng, std::vector<VertexId>* ids_out = nullptr) {
    DynamicGraph g;
    std::vector<VertexId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(g.add_vertex());
    std::bernoulli_distribution coin(p);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) g.set_edge(ids[i], ids[j], true);
    if (ids_out) *ids_out = ids;
    return g;
}

} // namespace

TEST_CASE("closure of a path is a complete graph") {
    RootedForest f;
    VertexId a(0), b(1), c(2);
    f.parent[a] = std::nullopt;
    f.parent[b] = a;
    f.parent[c] = b;
    f.roots = {a};
    f.depth_bound = 3;
    auto cl = closure(f);
    REQUIRE(cl == std::set<Edge>({make_edge(a, b), make_edge(a, c), make_edge(b, c)}));
}

TEST_CASE("closure edge cases") {
    RootedForest single;
    single.parent[VertexId(0)] = std::nullopt;
    single.roots = {VertexId(0)};
    REQUIRE(closure(single).empty());

    RootedForest star;
    star.parent[VertexId(0)] = std::nullopt;
    star.roots = {VertexId(0)};
    for (int k = 1; k <= 5; ++k) star.parent[VertexId(k)] = VertexId(0);
    REQUIRE(closure(star).size() == 5);
}

TEST_CASE("closure of a chain has n(n-1)/2 edges") {
    for (int n : {2, 5, 9}) {
        RootedForest f;
        f.parent[VertexId(0)] = std::nullopt;
        f.roots = {VertexId(0)};
        for (int i = 1; i < n; ++i) f.parent[VertexId(i)] = VertexId(i - 1);
        REQUIRE(closure(f).size() == static_cast<std::size_t>(n * (n - 1) / 2));
    }
}

TEST_CASE("tree depth basics") {
    DynamicGraph empty;
    REQUIRE(tree_depth(empty) == 0);
    DynamicGraph one;
    one.add_vertex();
    REQUIRE(tree_depth(one) == 1);
    REQUIRE(tree_depth(path_graph(3)) == 2);
    REQUIRE(tree_depth(path_graph(7)) == 3);
}

TEST_CASE("tree depth of K4 and C4 agrees with the naive recursion") {
    DynamicGraph k4 = complete_graph(4);
    REQUIRE(naive_tree_depth(k4) == 4);
    REQUIRE(tree_depth(k4) == 4);
    DynamicGraph c4 = cycle_graph(4);
    REQUIRE(naive_tree_depth(c4) == 3);
    REQUIRE(tree_depth(c4) == 3);
}

TEST_CASE("td(P_n) = ceil(log2(n+1)) up to n = 64") {
    for (int n = 1; n <= 64; ++n) {
        int expected = static_cast<int>(std::ceil(std::log2(n + 1)));
        REQUIRE(tree_depth(path_graph(n)) == expected);
    }
}

TEST_CASE("exact solver matches the naive recursion on random graphs") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 40; ++trial) {
        DynamicGraph g = random_graph(1 + static_cast<int>(rng() % 6), 0.4, rng);
        REQUIRE(tree_depth(g) == naive_tree_depth(g));
    }
}

TEST_CASE("monotonicity under edge and vertex deletion") {
    std::mt19937_64 rng(999);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<VertexId> ids;
        DynamicGraph g = random_graph(6, 0.5, rng, &ids);
        int td = tree_depth(g);
        for (const auto& [u, v] : g.edges()) {
            DynamicGraph h = g;
            h.set_edge(u, v, false);
            REQUIRE(tree_depth(h) <= td);
        }
        for (VertexId v : ids) {
            DynamicGraph h = g;
            for (VertexId u : g.neighbors(v)) h.set_edge(v, u, false);
            h.remove_vertex(v);
            REQUIRE(tree_depth(h) <= td);
        }
    }
}

TEST_CASE("optimal decomposition witnesses") {
    SECTION("P_3 at depth 2 roots the middle vertex") {
        std::vector<VertexId> ids;
        DynamicGraph g = path_graph(3, &ids);
        auto f = optimal_decomposition(g, 2);
        REQUIRE(f.has_value());
        REQUIRE(f->roots == std::vector<VertexId>{ids[1]});
        REQUIRE(is_valid_decomposition(g, *f, 2));
    }
    SECTION("K_3 does not fit depth 2") {
        REQUIRE_FALSE(optimal_decomposition(complete_graph(3), 2).has_value());
    }
    SECTION("edgeless graph at depth 1 makes every vertex a root") {
        DynamicGraph g;
        for (int i = 0; i < 4; ++i) g.add_vertex();
        auto f = optimal_decomposition(g, 1);
        REQUIRE(f.has_value());
        REQUIRE(f->roots.size() == 4);
        REQUIRE(is_valid_decomposition(g, *f, 1));
    }
}

TEST_CASE("optimal decomposition is valid at the exact bound for small graphs") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 30; ++trial) {
        DynamicGraph g = random_graph(1 + static_cast<int>(rng() % 8), 0.35, rng);
        int td = tree_depth(g);
        auto f = optimal_decomposition(g, td);
        REQUIRE(f.has_value());
        REQUIRE(is_valid_decomposition(g, *f, td));
        if (td > 0) REQUIRE_FALSE(optimal_decomposition(g, td - 1).has_value());
    }
}

TEST_CASE("is_valid_decomposition checks") {
    std::vector<VertexId> ids;
    DynamicGraph g = path_graph(3, &ids);

    RootedForest chain;
    chain.parent[ids[0]] = std::nullopt;
    chain.parent[ids[1]] = ids[0];
    chain.parent[ids[2]] = ids[1];
    chain.roots = {ids[0]};
    REQUIRE(is_valid_decomposition(g, chain, 3));
    REQUIRE_FALSE(is_valid_decomposition(g, chain, 2));

    RootedForest wrong;
    wrong.parent[ids[0]] = std::nullopt;
    wrong.parent[ids[1]] = ids[0];
    wrong.roots = {ids[0]};
    REQUIRE_THROWS_MATCHES(is_valid_decomposition(g, wrong, 2), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::VertexSetMismatch; }));

    // Sibling leaves cannot cover the path edges.
    RootedForest star;
    star.parent[ids[1]] = std::nullopt;
    star.parent[ids[0]] = ids[1];
    star.parent[ids[2]] = ids[1];
    star.roots = {ids[1]};
    REQUIRE(is_valid_decomposition(g, star, 2));
    g.set_edge(ids[0], ids[2], true);
    REQUIRE_FALSE(is_valid_decomposition(g, star, 2));
}

TEST_CASE("rooted decomposition variant") {
    std::vector<VertexId> ids;
    DynamicGraph g = path_graph(3, &ids);
    REQUIRE(rooted_tree_depth(g, ids[1]) == 2);
    REQUIRE(rooted_tree_depth(g, ids[0]) == 3);
    auto f = decomposition_rooted_at(g, 2, ids[1]);
    REQUIRE(f.has_value());
    REQUIRE(is_valid_decomposition(g, *f, 2));
    REQUIRE_FALSE(decomposition_rooted_at(g, 2, ids[0]).has_value());
}
