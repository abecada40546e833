#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treedepth/errors.hpp"
#include "treedepth/minimal/catalog.hpp"
#include "treedepth/minimal/tables.hpp"

namespace treedepth {

using json = nlohmann::ordered_json;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Cache key: depth bound, the exact formula texts, and the threshold.
inline std::uint64_t catalog_content_hash(int D, const std::vector<std::string>& formula_texts, int S) {
    std::uint64_t h = fnv1a64("treedepth-catalog-v1");
    h = fnv1a64(std::to_string(D) + "|" + std::to_string(S) + "|", h);
    for (const auto& f : formula_texts) h = fnv1a64(f + "\n", h);
    return h;
}

namespace detail {

inline json tree_to_json(const LabelledTree& t) {
    json labels = json::array(), marks = json::array(), parents = json::array();
    std::vector<int> parent(t.size(), -1);
    for (int i = 0; i < t.size(); ++i)
        for (int c : t.nodes[i].children) parent[c] = i;
    for (int i = 0; i < t.size(); ++i) {
        labels.push_back(t.nodes[i].label);
        marks.push_back(t.nodes[i].mark);
        parents.push_back(parent[i]);
    }
    return json{{"root", t.root}, {"labels", labels}, {"marks", marks}, {"parents", parents}};
}

inline LabelledTree tree_from_json(const json& j) {
    LabelledTree t;
    const auto& labels = j.at("labels");
    const auto& marks = j.at("marks");
    const auto& parents = j.at("parents");
    t.nodes.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        t.nodes[i].label = labels[i].get<int>();
        t.nodes[i].mark = marks[i].get<int>();
    }
    for (std::size_t i = 0; i < parents.size(); ++i) {
        int p = parents[i].get<int>();
        if (p >= 0) t.nodes[p].children.push_back(static_cast<int>(i));
    }
    t.root = j.at("root").get<int>();
    return t;
}

} // namespace detail

// Serialized form of (D, S, alphabet, entries, tables) plus an optional
// free-form section for runtime memo state.
inline json catalog_to_json(const MinimalTreeCatalog& catalog, std::uint64_t content_hash,
                            const SatTable* sat = nullptr, const RootTable* root = nullptr,
                            const json* runtime = nullptr) {
    json out;
    out["format"] = "treedepth-catalog";
    out["version"] = 1;
    out["content_hash"] = content_hash;
    out["D"] = catalog.depth_bound();
    out["S"] = catalog.limb_cap();
    json alpha;
    alpha["level"] = catalog.alphabet().level;
    alpha["depth_bound"] = catalog.alphabet().depth_bound;
    alpha["entries"] = json::array();
    for (const auto& e : catalog.alphabet().entries)
        alpha["entries"].push_back(json{{"bits", e.bits}, {"limb_counts", e.limb_counts}});
    out["alphabet"] = alpha;
    out["entries"] = json::array();
    for (int i = 0; i < catalog.size(); ++i) out["entries"].push_back(detail::tree_to_json(catalog.entry(i).tree));
    if (sat) {
        json s = json::array();
        for (const auto& v : *sat) s.push_back(v ? json(*v) : json(nullptr));
        out["sat_table"] = s;
    }
    if (root) {
        json r = json::array();
        for (const auto& e : root->entries()) {
            json row;
            row["tree"] = e.tree_id;
            row["t"] = e.t;
            row["a"] = e.a_node ? json(*e.a_node) : json(nullptr);
            row["b"] = e.b_node ? json(*e.b_node) : json(nullptr);
            row["infeasible"] = e.infeasible;
            row["root_nodes"] = e.root_nodes;
            r.push_back(row);
        }
        out["root_table"] = r;
    }
    if (runtime) out["runtime"] = *runtime;
    return out;
}

struct LoadedCatalog {
    MinimalTreeCatalog catalog;
    std::optional<SatTable> sat;
    std::optional<RootTable> root;
    json runtime;
};

inline LoadedCatalog catalog_from_json(const json& in, std::uint64_t expected_hash) {
    if (in.at("format").get<std::string>() != "treedepth-catalog")
        fail(ErrorKind::SyntaxError, "not a catalog cache file");
    if (in.at("content_hash").get<std::uint64_t>() != expected_hash)
        fail(ErrorKind::SyntaxError, "catalog cache was built for a different configuration");
    LabelAlphabet alpha;
    alpha.level = in.at("alphabet").at("level").get<int>();
    alpha.depth_bound = in.at("alphabet").at("depth_bound").get<int>();
    for (const auto& e : in.at("alphabet").at("entries")) {
        LabelAlphabet::Entry entry;
        entry.bits = e.at("bits").get<std::uint32_t>();
        entry.limb_counts = e.at("limb_counts").get<std::vector<std::uint32_t>>();
        alpha.entries.push_back(std::move(entry));
    }
    LoadedCatalog out{MinimalTreeCatalog(in.at("D").get<int>(), in.at("S").get<int>(), alpha), {}, {}, {}};
    for (const auto& t : in.at("entries")) out.catalog.intern(detail::tree_from_json(t));
    if (in.contains("sat_table")) {
        SatTable sat;
        for (const auto& v : in.at("sat_table")) sat.push_back(v.is_null() ? std::optional<bool>{} : std::optional<bool>(v.get<bool>()));
        out.sat = std::move(sat);
    }
    if (in.contains("root_table")) {
        RootTable table;
        for (const auto& row : in.at("root_table")) {
            RootTableEntry e;
            e.tree_id = row.at("tree").get<int>();
            e.t = row.at("t").get<int>();
            if (!row.at("a").is_null()) e.a_node = row.at("a").get<int>();
            if (!row.at("b").is_null()) e.b_node = row.at("b").get<int>();
            e.infeasible = row.at("infeasible").get<bool>();
            e.root_nodes = row.at("root_nodes").get<std::vector<int>>();
            const auto& tree = out.catalog.entry(e.tree_id).tree;
            for (int w : e.root_nodes) e.root_labels.insert(tree.nodes[w].label);
            e.marked_key = canonical_key(detail::with_marks(tree, e.a_node, e.b_node));
            table.add(std::move(e));
        }
        out.root = std::move(table);
    }
    if (in.contains("runtime")) out.runtime = in.at("runtime");
    return out;
}

inline void save_catalog_cache(const std::string& path, const json& payload) {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::NotPresent, "cannot write catalog cache to " + path);
    f << payload.dump(1) << "\n";
}

inline std::optional<json> read_catalog_cache(const std::string& path) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    json j;
    f >> j;
    return j;
}

} // namespace treedepth
