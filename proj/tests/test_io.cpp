#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "supernorm/factor.hpp"
#include "supernorm/io.hpp"

using namespace supernorm;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("supernorm_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("load_dataset parses valid JSONL") {
    TempDir tmp;
    std::string path = tmp.file("ok.jsonl");
    write_text(path,
               R"({"num_nodes": 3, "edges": [[0,1],[1,2],[0,2]], "label": 1})"
               "\n"
               R"({"num_nodes": 2, "edges": [[0,1]], "features": [[1.0, 2.0],[3.0, 4.0]]})"
               "\n");
    std::vector<Graph> graphs = load_dataset(path);
    REQUIRE(graphs.size() == 2);
    CHECK(graphs[0].num_edges() == 3);
    CHECK(graphs[0].label == 1.0);
    REQUIRE(graphs[1].features.has_value());
    CHECK((*graphs[1].features)(1, 1) == 4.0);
}

TEST_CASE("load_dataset rejects malformed input with location info") {
    TempDir tmp;

    std::string self_loop = tmp.file("selfloop.jsonl");
    write_text(self_loop, R"({"num_nodes": 3, "edges": [[0,0]]})" "\n");
    CHECK_THROWS_MATCHES(load_dataset(self_loop), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("self-loop at graph 0")));

    std::string parallel = tmp.file("parallel.jsonl");
    write_text(parallel, R"({"num_nodes": 3, "edges": [[0,1],[1,0]]})" "\n");
    CHECK_THROWS_MATCHES(load_dataset(parallel), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("parallel edge at graph 0")));

    std::string oob = tmp.file("oob.jsonl");
    write_text(oob, R"({"num_nodes": 2, "edges": [[0,2]]})" "\n");
    CHECK_THROWS_AS(load_dataset(oob), DataError);

    std::string ragged = tmp.file("ragged.jsonl");
    write_text(ragged, R"({"num_nodes": 2, "edges": [[0,1]], "features": [[1.0],[1.0,2.0]]})" "\n");
    CHECK_THROWS_MATCHES(load_dataset(ragged), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("ragged")));

    std::string short_features = tmp.file("shortfeat.jsonl");
    write_text(short_features, R"({"num_nodes": 3, "edges": [], "features": [[1.0]]})" "\n");
    CHECK_THROWS_AS(load_dataset(short_features), DataError);

    std::string bad_json = tmp.file("bad.jsonl");
    write_text(bad_json, "{\"num_nodes\": 1, \"edges\": []}\nnot json\n");
    CHECK_THROWS_MATCHES(load_dataset(bad_json), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("line 2")));

    CHECK_THROWS_AS(load_dataset(tmp.file("missing.jsonl")), DataError);
}

TEST_CASE("dataset round trip preserves structure, features, and labels") {
    TempDir tmp;
    Graph g(3, {{0, 1}, {1, 2}});
    g.set_features(Matrix::from_rows({{0.125, -1.5}, {2.25, 0.0}, {1e-9, 3.33}}));
    g.label = 0.0;
    std::string path = tmp.file("roundtrip.jsonl");
    save_dataset(path, {g});
    std::vector<Graph> back = load_dataset(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].edges == g.edges);
    CHECK(back[0].label == g.label);
    CHECK(back[0].features->data == g.features->data);
}

TEST_CASE("atomic_write leaves no temp file and replaces content") {
    TempDir tmp;
    std::string path = tmp.file("target.txt");
    atomic_write(path, "first");
    atomic_write(path, "second");
    CHECK(read_file(path) == "second");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("content hash is stable and known") {
    // FNV-1a 64-bit of "abc"
    CHECK(fnv1a("abc") == 0xe71fa2190541574bull);
    CHECK(content_hash_hex("abc") == "e71fa2190541574b");
}

TEST_CASE("factor cache round trip and loud mismatch") {
    TempDir tmp;
    std::string path = tmp.file("cache.json");
    FactorCache cache;
    cache.p = 0.05;
    cache.eig_quantum = 1e-6;
    cache.content_hash = "deadbeef00000000";
    cache.xi = {1.25, 0.8131399705041666, 1.1473875};
    save_factor_cache(path, cache);

    FactorCache back = load_factor_cache(path, "deadbeef00000000");
    CHECK(back.p == cache.p);
    CHECK(back.eig_quantum == cache.eig_quantum);
    CHECK(back.xi == cache.xi);  // bit-exact through JSON

    CHECK_THROWS_MATCHES(load_factor_cache(path, "0000000000000000"), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("recompute the cache")));
}

TEST_CASE("checkpoint round trip is bit-exact") {
    TempDir tmp;
    RandomStream rng(61);
    Parameter a("layer.w", Matrix(3, 4));
    Parameter b("layer.b", Matrix(1, 4));
    for (double& v : a.value.data) v = rng.normal() * 1e3;
    for (double& v : b.value.data) v = rng.normal() * 1e-7;
    std::vector<double> wa = a.value.data, wb = b.value.data;

    std::string path = tmp.file("ckpt.json");
    save_checkpoint(path, {&a, &b});
    for (double& v : a.value.data) v = 0.0;
    for (double& v : b.value.data) v = 0.0;
    std::vector<Parameter*> params = {&a, &b};
    load_checkpoint(path, params);
    CHECK(a.value.data == wa);
    CHECK(b.value.data == wb);

    Parameter missing("other.w", Matrix(3, 4));
    std::vector<Parameter*> wrong = {&missing};
    CHECK_THROWS_AS(load_checkpoint(path, wrong), DataError);

    Parameter bad_shape("layer.w", Matrix(4, 3));
    std::vector<Parameter*> mismatched = {&bad_shape};
    CHECK_THROWS_AS(load_checkpoint(path, mismatched), DataError);
}

TEST_CASE("flat key=value config parsing") {
    TempDir tmp;
    std::string path = tmp.file("run.cfg");
    write_text(path,
               "# comment line\n"
               "lr = 0.001\n"
               "max_epochs=50\n"
               "\n"
               "depths = 2,16\n");
    auto kv = load_config(path);
    CHECK(kv.at("lr") == "0.001");
    CHECK(kv.at("max_epochs") == "50");
    CHECK(kv.at("depths") == "2,16");
    CHECK(kv.size() == 3);

    std::string bad = tmp.file("bad.cfg");
    write_text(bad, "just a line\n");
    CHECK_THROWS_AS(load_config(bad), DataError);
}

TEST_CASE("format_double round-trips doubles") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, 0.8131399705041666}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("precomputed cache factors match a fresh batch computation") {
    TempDir tmp;
    Graph c6(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}});
    Graph k3(3, {{0, 1}, {1, 2}, {0, 2}});
    std::string data_path = tmp.file("graphs.jsonl");
    save_dataset(data_path, {c6, k3});

    std::string bytes = read_file(data_path);
    BatchedGraphs b = batch(load_dataset(data_path));
    NodeFactors fresh = batch_factors(b);

    FactorCache cache;
    cache.p = 0.05;
    cache.eig_quantum = 1e-6;
    cache.content_hash = content_hash_hex(bytes);
    cache.xi = fresh.xi;
    std::string cache_path = tmp.file("factors.json");
    save_factor_cache(cache_path, cache);

    FactorCache loaded = load_factor_cache(cache_path, content_hash_hex(read_file(data_path)));
    NodeFactors rehydrated = factors_from_xi(loaded.xi, b.segment_offsets);
    CHECK(rehydrated.m_rc == fresh.m_rc);
    CHECK(rehydrated.m_re == fresh.m_re);
}
