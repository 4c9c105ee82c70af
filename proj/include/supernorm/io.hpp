#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "supernorm/common.hpp"
#include "supernorm/factor.hpp"
#include "supernorm/graph.hpp"
#include "supernorm/params.hpp"

namespace supernorm {

// 64-bit FNV-1a, used as the dataset content digest for cache keying.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string content_hash_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string(buf);
}

// Write-temp-then-rename so readers never observe a partial file.
inline void atomic_write(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open file for writing: " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

namespace detail {

inline Graph graph_from_json(const nlohmann::json& j, std::size_t graph_index) {
    auto where = "graph " + std::to_string(graph_index);
    if (!j.is_object() || !j.contains("num_nodes") || !j.contains("edges"))
        throw DataError("missing num_nodes/edges at " + where);
    int n = j.at("num_nodes").get<int>();
    std::vector<std::pair<int, int>> edges;
    std::set<std::pair<int, int>> seen;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw DataError("edge must be a [u,v] pair at " + where);
        int u = e.at(0).get<int>();
        int v = e.at(1).get<int>();
        if (u == v) throw DataError("self-loop at " + where);
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError("edge endpoint out of range at " + where);
        auto norm = std::minmax(u, v);
        if (!seen.emplace(norm.first, norm.second).second)
            throw DataError("parallel edge at " + where);
        edges.emplace_back(u, v);
    }
    Graph g(n, std::move(edges));
    if (j.contains("features")) {
        const auto& feats = j.at("features");
        if (!feats.is_array() || static_cast<int>(feats.size()) != n)
            throw DataError("features must have one row per node at " + where);
        int d = -1;
        std::vector<std::vector<double>> rows;
        for (const auto& r : feats) {
            if (!r.is_array()) throw DataError("feature row must be an array at " + where);
            if (d < 0) d = static_cast<int>(r.size());
            if (static_cast<int>(r.size()) != d)
                throw DataError("ragged feature rows at " + where);
            rows.push_back(r.get<std::vector<double>>());
        }
        if (n > 0) g.set_features(Matrix::from_rows(rows));
    }
    if (j.contains("label")) g.label = j.at("label").get<double>();
    return g;
}

inline nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["num_nodes"] = g.num_nodes;
    auto edges = nlohmann::json::array();
    for (auto [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    if (g.features) {
        auto rows = nlohmann::json::array();
        for (int i = 0; i < g.features->rows; ++i) {
            auto row = nlohmann::json::array();
            for (int jc = 0; jc < g.features->cols; ++jc) row.push_back((*g.features)(i, jc));
            rows.push_back(std::move(row));
        }
        j["features"] = std::move(rows);
    }
    if (g.label) j["label"] = *g.label;
    return j;
}

}  // namespace detail

// One JSON object per line: {"num_nodes": int, "edges": [[u,v],...],
// "features": [[...],...]?, "label": number?}. Self-loops, duplicate edges,
// out-of-range endpoints and ragged features are rejected.
inline std::vector<Graph> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    std::vector<Graph> graphs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("parse error at line " + std::to_string(lineno) + " of " + path + ": " +
                            e.what());
        }
        graphs.push_back(detail::graph_from_json(j, graphs.size()));
    }
    return graphs;
}

inline void save_dataset(const std::string& path, const std::vector<Graph>& graphs) {
    std::ostringstream out;
    for (const Graph& g : graphs) out << detail::graph_to_json(g).dump() << "\n";
    atomic_write(path, out.str());
}

// Precomputed factor cache, keyed by the dataset content hash. Loading a
// cache against a dataset whose hash differs fails loudly.
struct FactorCache {
    double p = 0.0;
    double eig_quantum = 0.0;
    std::string content_hash;
    std::vector<double> xi;
};

inline void save_factor_cache(const std::string& path, const FactorCache& cache) {
    nlohmann::json j;
    j["p"] = cache.p;
    j["eig_quantum"] = cache.eig_quantum;
    j["content_hash"] = cache.content_hash;
    j["xi"] = cache.xi;
    atomic_write(path, j.dump() + "\n");
}

inline FactorCache load_factor_cache(const std::string& path, const std::string& expected_hash) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("factor cache parse error in " + path + ": " + e.what());
    }
    FactorCache cache;
    cache.p = j.at("p").get<double>();
    cache.eig_quantum = j.at("eig_quantum").get<double>();
    cache.content_hash = j.at("content_hash").get<std::string>();
    cache.xi = j.at("xi").get<std::vector<double>>();
    if (cache.content_hash != expected_hash)
        throw DataError("factor cache " + path + " was built for content hash " +
                        cache.content_hash + " but the dataset hashes to " + expected_hash +
                        "; recompute the cache");
    return cache;
}

// Flat JSON map name -> {shape, values}; doubles survive the round trip
// bit-exactly (shortest round-trip serialization).
inline void save_checkpoint(const std::string& path, const std::vector<const Parameter*>& params) {
    nlohmann::json j;
    for (const Parameter* p : params) {
        nlohmann::json entry;
        entry["shape"] = {p->value.rows, p->value.cols};
        entry["values"] = p->value.data;
        j[p->name] = std::move(entry);
    }
    atomic_write(path, j.dump() + "\n");
}

inline void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint parse error in " + path + ": " + e.what());
    }
    for (Parameter* p : params) {
        if (!j.contains(p->name)) throw DataError("checkpoint missing parameter " + p->name);
        const auto& entry = j.at(p->name);
        int rows = entry.at("shape").at(0).get<int>();
        int cols = entry.at("shape").at(1).get<int>();
        std::vector<double> values = entry.at("values").get<std::vector<double>>();
        if (rows != p->value.rows || cols != p->value.cols ||
            values.size() != p->value.data.size())
            throw DataError("checkpoint shape mismatch for " + p->name);
        p->value.data = std::move(values);
    }
}

// Flat key=value configuration; '#' starts a comment line.
inline std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) + " is not key=value: " + line);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r\n");
            auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw DataError("config line " + std::to_string(lineno) + " has empty key");
        out[key] = value;
    }
    return out;
}

// Stable float formatting shared by every report writer; %.17g round-trips.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

}  // namespace supernorm
