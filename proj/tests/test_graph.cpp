#include <catch_amalgamated.hpp>

#include <set>

#include "treedepth/graph.hpp"

using namespace treedepth;

namespace {

void check_symmetry(const DynamicGraph& g) {
    for (VertexId v : g.vertices()) {
        for (VertexId u : g.neighbors(v)) {
            REQUIRE(g.has_edge(u, v));
            REQUIRE(u != v);
        }
    }
}

} // namespace

TEST_CASE("add_vertex hands out fresh ids") {
    DynamicGraph g;
    REQUIRE(g.n_vertices() == 0);
    VertexId v = g.add_vertex();
    REQUIRE(g.n_vertices() == 1);
    REQUIRE(g.n_edges() == 0);
    REQUIRE(g.degree(v) == 0);

    std::set<VertexId> seen{v};
    for (int i = 0; i < 100; ++i) {
        VertexId w = g.add_vertex();
        REQUIRE(seen.insert(w).second);
    }
    REQUIRE(g.n_vertices() == 101);
}

TEST_CASE("ids are not reused after removal") {
    DynamicGraph g;
    VertexId a = g.add_vertex();
    VertexId b = g.add_vertex();
    g.remove_vertex(b);
    VertexId c = g.add_vertex();
    REQUIRE(c != a);
    REQUIRE(c != b);
}

TEST_CASE("remove_vertex guards") {
    DynamicGraph g;
    VertexId a = g.add_vertex();
    g.remove_vertex(a);
    REQUIRE(g.n_vertices() == 0);
    REQUIRE_THROWS_MATCHES(g.remove_vertex(a), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::NotPresent; }));

    VertexId u = g.add_vertex();
    VertexId v = g.add_vertex();
    g.set_edge(u, v, true);
    REQUIRE_THROWS_MATCHES(g.remove_vertex(u), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::NotIsolated; }));
}

TEST_CASE("set_edge guards and symmetry") {
    DynamicGraph g;
    VertexId u = g.add_vertex();
    VertexId v = g.add_vertex();
    REQUIRE_THROWS_MATCHES(g.set_edge(u, u, true), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::SelfLoop; }));
    REQUIRE_THROWS_MATCHES(g.set_edge(u, VertexId(99), true), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::NotPresent; }));
    g.set_edge(u, v, true);
    REQUIRE(g.has_edge(v, u));
    check_symmetry(g);
    g.set_edge(v, u, false);
    REQUIRE_FALSE(g.has_edge(u, v));
    REQUIRE(g.n_edges() == 0);
}

TEST_CASE("component_of") {
    DynamicGraph g;
    VertexId a = g.add_vertex();
    REQUIRE(g.component_of(a) == std::set<VertexId>{a});

    std::vector<VertexId> p;
    DynamicGraph p3 = path_graph(3, &p);
    REQUIRE(p3.component_of(p[0]) == std::set<VertexId>({p[0], p[1], p[2]}));

    DynamicGraph two;
    VertexId x0 = two.add_vertex(), x1 = two.add_vertex();
    VertexId y0 = two.add_vertex(), y1 = two.add_vertex();
    two.set_edge(x0, x1, true);
    two.set_edge(y0, y1, true);
    REQUIRE(two.component_of(x0) == std::set<VertexId>({x0, x1}));
    REQUIRE(two.component_of(y1) == std::set<VertexId>({y0, y1}));
}

TEST_CASE("components partition the vertex set") {
    std::vector<VertexId> ids;
    DynamicGraph g = path_graph(4, &ids);
    VertexId lone = g.add_vertex();
    g.set_edge(ids[1], ids[2], false);

    std::set<VertexId> covered;
    for (VertexId v : g.vertices()) {
        auto comp = g.component_of(v);
        for (VertexId u : comp) REQUIRE(g.component_of(u) == comp);
        covered.insert(comp.begin(), comp.end());
    }
    REQUIRE(covered.size() == g.n_vertices());
    REQUIRE(g.component_of(lone) == std::set<VertexId>{lone});
}

TEST_CASE("edge count equals half the degree sum") {
    std::vector<VertexId> ids;
    DynamicGraph g = complete_graph(5, &ids);
    std::size_t deg_sum = 0;
    for (VertexId v : g.vertices()) deg_sum += g.degree(v);
    REQUIRE(g.n_edges() == deg_sum / 2);
    REQUIRE(g.n_edges() == 10);
    check_symmetry(g);
}
