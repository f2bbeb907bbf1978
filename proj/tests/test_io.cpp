#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "tailcausal/io.hpp"

using namespace tailcausal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tailcausal_io_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static inline int counter = 0;
};

HscmModel sample_model() {
    HscmModel model{Dag(3, {{1, 2}, {1, 3}, {2, 3}}), {}, NoiseSpec{NoiseFamily::frechet, 1.5, 2.0}};
    model.node_functions.push_back({StructuralFamily::linear, 2.0, {}});
    model.node_functions.push_back({StructuralFamily::lp, 0.5, {{1, 0.25}}});
    model.node_functions.push_back({StructuralFamily::max_linear, 2.0, {{1, 1.5}, {2, 0.75}}});
    return model;
}

} // namespace

TEST_CASE("fnv1a reference vectors", "[io]") {
    REQUIRE(io::fnv1a_hex("") == "cbf29ce484222325");
    REQUIRE(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
    REQUIRE(io::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("model json round trip preserves everything", "[io]") {
    TempDir dir;
    const HscmModel model = sample_model();
    io::Meta meta;
    meta.with_timestamp = false;
    meta.config = json{{"origin", "test"}};
    io::save_model(model, dir.file("m.json"), meta);
    const HscmModel loaded = io::load_model(dir.file("m.json"));

    REQUIRE(loaded.dag.node_count() == 3);
    REQUIRE(loaded.dag.edges() == model.dag.edges());
    REQUIRE(loaded.noise.family == NoiseFamily::frechet);
    REQUIRE(loaded.noise.alpha == 1.5);
    REQUIRE(loaded.noise.scale == 2.0);
    for (int node = 1; node <= 3; ++node) {
        const auto& a = model.node_functions[static_cast<std::size_t>(node - 1)];
        const auto& b = loaded.node_functions[static_cast<std::size_t>(node - 1)];
        REQUIRE(a.family == b.family);
        REQUIRE(a.parent_coefficients == b.parent_coefficients);
        if (a.family == StructuralFamily::lp) REQUIRE(a.p == b.p);
    }
    // serialization is deterministic
    io::save_model(loaded, dir.file("m2.json"), meta);
    REQUIRE(io::read_file(dir.file("m.json")) == io::read_file(dir.file("m2.json")));
}

TEST_CASE("model schema is strict", "[io]") {
    const json base = io::model_to_json(sample_model(), io::Meta{});

    SECTION("unknown top-level field") {
        json bad = base;
        bad["extra"] = 1;
        REQUIRE_THROWS_MATCHES(io::model_from_json(bad), ValidationError,
                               Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("extra")));
    }
    SECTION("unknown node field") {
        json bad = base;
        bad["nodes"][0]["weight"] = 0.5;
        REQUIRE_THROWS_MATCHES(io::model_from_json(bad), ValidationError,
                               Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("weight")));
    }
    SECTION("missing required field") {
        json bad = base;
        bad.erase("alpha");
        REQUIRE_THROWS_AS(io::model_from_json(bad), ValidationError);
    }
    SECTION("p is required for lp and rejected elsewhere") {
        json bad = base;
        bad["nodes"][1].erase("p"); // node 2 is lp
        REQUIRE_THROWS_AS(io::model_from_json(bad), ValidationError);
        json bad2 = base;
        bad2["nodes"][0]["p"] = 2.0; // node 1 is linear
        REQUIRE_THROWS_AS(io::model_from_json(bad2), ValidationError);
    }
    SECTION("nonpositive coefficient") {
        json bad = base;
        bad["nodes"][1]["parents"][0]["coef"] = 0.0;
        REQUIRE_THROWS_AS(io::model_from_json(bad), ValidationError);
    }
    SECTION("duplicate parent") {
        json bad = base;
        bad["nodes"][1]["parents"].push_back(json{{"id", 1}, {"coef", 0.5}});
        REQUIRE_THROWS_AS(io::model_from_json(bad), ValidationError);
    }
    SECTION("cyclic parent structure") {
        json bad = base;
        bad["nodes"][0]["parents"].push_back(json{{"id", 3}, {"coef", 0.5}});
        REQUIRE_THROWS_AS(io::model_from_json(bad), StructuralError);
    }
    SECTION("bad version") {
        json bad = base;
        bad["version"] = 99;
        REQUIRE_THROWS_AS(io::model_from_json(bad), ValidationError);
    }
}

TEST_CASE("samples csv round trip is bit exact", "[io]") {
    TempDir dir;
    const HscmModel model = sample_model();
    const SampleMatrix samples = simulate(model, 500, 13);
    io::save_samples_csv(samples, dir.file("s.csv"));
    const SampleMatrix loaded = io::load_samples_csv(dir.file("s.csv"));
    REQUIRE(loaded.n == samples.n);
    REQUIRE(loaded.d == samples.d);
    REQUIRE(loaded.values == samples.values); // 17 significant digits round-trip doubles exactly

    const std::string text = io::read_file(dir.file("s.csv"));
    REQUIRE(text.rfind("X1,X2,X3\n", 0) == 0);
    REQUIRE(text.find('\r') == std::string::npos);

    SECTION("header and cell validation") {
        io::write_file(dir.file("bad1.csv"), "X1,Y2\n1,2\n");
        REQUIRE_THROWS_AS(io::load_samples_csv(dir.file("bad1.csv")), ValidationError);
        io::write_file(dir.file("bad2.csv"), "X1,X2\n1\n");
        REQUIRE_THROWS_AS(io::load_samples_csv(dir.file("bad2.csv")), ValidationError);
        io::write_file(dir.file("bad3.csv"), "X1,X2\n1,nope\n");
        REQUIRE_THROWS_AS(io::load_samples_csv(dir.file("bad3.csv")), ValidationError);
        io::write_file(dir.file("bad4.csv"), "X1,X2\n1,-3\n");
        REQUIRE_THROWS_AS(io::load_samples_csv(dir.file("bad4.csv")), ValidationError);
        REQUIRE_THROWS_AS(io::load_samples_csv(dir.file("missing.csv")), ValidationError);
    }
}

TEST_CASE("edge list round trip", "[io]") {
    TempDir dir;
    const Dag dag(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
    io::save_edge_list(dag, dir.file("e.txt"));
    const Dag loaded = io::load_edge_list(dir.file("e.txt"));
    REQUIRE(loaded.node_count() == 4);
    REQUIRE(loaded.edges() == dag.edges());

    // explicit node count keeps isolated trailing nodes
    const Dag wider = io::load_edge_list(dir.file("e.txt"), 6);
    REQUIRE(wider.node_count() == 6);

    io::write_file(dir.file("bad.txt"), "1 2 3\n");
    REQUIRE_THROWS_AS(io::load_edge_list(dir.file("bad.txt")), ValidationError);
    io::write_file(dir.file("empty.txt"), "\n");
    REQUIRE_THROWS_AS(io::load_edge_list(dir.file("empty.txt")), ValidationError);
}

TEST_CASE("gamma json round trip", "[io]") {
    TempDir dir;
    const HscmModel model = sample_model();
    const auto [st, weights] = standardize(air_by_impulse(model), model.noise.alpha);
    const CtcMatrix gamma = population_ctc(weights, model.dag);

    io::Meta meta;
    meta.with_timestamp = false;
    io::save_ctc(gamma, dir.file("g.json"), meta);
    const CtcMatrix loaded = io::load_ctc(dir.file("g.json"));
    REQUIRE(loaded.kind == CtcKind::population);
    REQUIRE(loaded.gamma.data() == gamma.gamma.data());
    REQUIRE_FALSE(loaded.k_used.has_value());

    SECTION("estimated kind keeps k") {
        const SampleMatrix samples = simulate(model, 2000, 1);
        const CtcMatrix est = empirical_ctc(samples, 40);
        io::save_ctc(est, dir.file("ge.json"), meta);
        const CtcMatrix eloaded = io::load_ctc(dir.file("ge.json"));
        REQUIRE(eloaded.kind == CtcKind::estimated);
        REQUIRE(eloaded.k_used == 40);
        REQUIRE(eloaded.gamma.data() == est.gamma.data());
    }
    SECTION("orientation marker is mandatory") {
        json j = io::ctc_to_json(gamma, meta);
        j["rows_condition"] = false;
        REQUIRE_THROWS_AS(io::ctc_from_json(j), ValidationError);
        j.erase("rows_condition");
        REQUIRE_THROWS_AS(io::ctc_from_json(j), ValidationError);
    }
    SECTION("matrix size must match d") {
        json j = io::ctc_to_json(gamma, meta);
        j["gamma"].push_back(0.5);
        REQUIRE_THROWS_AS(io::ctc_from_json(j), ValidationError);
    }
}

TEST_CASE("weights json round trip", "[io]") {
    TempDir dir;
    const HscmModel model = sample_model();
    const auto [st, weights] = standardize(air_by_impulse(model), model.noise.alpha);
    io::Meta meta;
    meta.with_timestamp = false;
    io::write_json_file(dir.file("w.json"), io::weights_to_json(weights, model.noise.alpha, st, meta));
    const WeightMatrix loaded = io::weights_from_json(io::parse_json_file(dir.file("w.json")));
    REQUIRE(loaded.w.data() == weights.w.data());
}

TEST_CASE("matrix csv uses the conditioning-row orientation", "[io]") {
    TempDir dir;
    SquareMatrix m(2, {1.0, 0.25, 0.75, 1.0});
    io::save_matrix_csv(m, dir.file("m.csv"), "condition\\target");
    const std::string text = io::read_file(dir.file("m.csv"));
    REQUIRE(text == "condition\\target,X1,X2\nX1,1,0.25\nX2,0.75,1\n");
}

TEST_CASE("meta block content", "[io]") {
    io::Meta meta;
    meta.input_hash = "fnv1a64:deadbeefdeadbeef";
    meta.config = json{{"n", 10}};
    meta.with_timestamp = false;
    const json j = meta.to_json();
    REQUIRE(j["tool"] == "tailcausal");
    REQUIRE(j["tool_version"] == io::kToolVersion);
    REQUIRE(j["input_hash"] == "fnv1a64:deadbeefdeadbeef");
    REQUIRE(j["config"]["n"] == 10);
    REQUIRE_FALSE(j.contains("timestamp"));
    io::Meta stamped;
    REQUIRE(stamped.to_json().contains("timestamp"));
}
