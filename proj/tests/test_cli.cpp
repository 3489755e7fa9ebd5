#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rfx/pipeline.hpp"

using namespace rfx;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(RFX_TEST_DIR) / "fixtures";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load(const fs::path& p) {
    json j;
    std::ifstream in(p);
    REQUIRE(in);
    in >> j;
    return j;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("rfx_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("config errors name the offending key", "[cli]") {
    const auto expect_path = [](const json& doc, const std::string& fragment) {
        try {
            parse_run_config(doc);
            FAIL("expected a config error mentioning " + fragment);
        } catch (const config_error& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_path(json::parse(R"({"blocks": {}})"), "/blocks/r");
    expect_path(json::parse(R"({"quantile": {"k_n": 0.5}})"), "/quantile/k_n");
    expect_path(json::parse(R"({"relevance": {"A": {"kind": "nope"}}})"),
                "/relevance/A/kind");
    expect_path(json::parse(R"({"generator": {"kind": "iid-pareto"}})"),
                "/generator/shape");
    expect_path(
        json::parse(
            R"({"diagnostics": {"t": [1.0], "functionals": [{"A": {"kind": "box"}}]}})"),
        "/diagnostics/functionals/0");
}

TEST_CASE("lag cap violations are validation errors that name the rule", "[cli]") {
    json doc = load(kFixtures / "clt_config.json");
    doc["lags"]["L_s"] = 2; // cap for r = (4,4) is ceil(4/2) - 1 = 1
    try {
        run_pipeline("clt-check", doc, fresh_dir("lagcap"));
        FAIL("expected a config error");
    } catch (const config_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("/lags/L_s") != std::string::npos);
        CHECK(msg.find("lag-cap") != std::string::npos);
    }
}

TEST_CASE("field container round trip", "[cli]") {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::gaussian_iid;
    spec.shape = LatticeShape{{5, 7, 3}, 1};
    spec.seed = 1001;
    const Field f = generate_field(spec);
    const fs::path dir = fresh_dir("roundtrip");
    write_field_binary(f, dir / "x.f64");
    const Field g = read_field_binary(dir / "x.f64");
    REQUIRE(g.shape().dims == f.shape().dims);
    REQUIRE(g.value_dim() == f.value_dim());
    for (std::size_t i = 0; i < f.raw().size(); ++i) {
        REQUIRE(f.raw()[i] == g.raw()[i]); // bit-exact
    }
    CHECK_THROWS_AS(read_field_binary(dir / "missing.f64"), error);
}

TEST_CASE("estimate matches the committed golden file", "[cli]") {
    // run the real binary from the fixtures directory so the relative field
    // path in the committed config resolves
    const fs::path out = fresh_dir("golden");
    const std::string cmd = "cd " + kFixtures.string() + " && " + RFX_CLI_PATH +
                            " estimate --config estimate_config.json --out " +
                            out.string() + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(out / "extremogram.csv") == slurp(kFixtures / "golden_extremogram.csv"));
}

TEST_CASE("simulate output feeds estimate unchanged", "[cli]") {
    const fs::path sim_out = fresh_dir("compose_sim");
    json sim = load(kFixtures / "clt_config.json");
    sim.erase("replicates");
    run_pipeline("simulate", sim, sim_out);

    // estimating from the written field equals estimating from the inline
    // generator at the same seed
    const fs::path est_a = fresh_dir("compose_est_a");
    json est_file = sim;
    est_file.erase("generator");
    est_file["field"] = (sim_out / "field.f64").string();
    est_file["quantile"]["mode"] = "empirical";
    run_pipeline("estimate", est_file, est_a);

    const fs::path est_b = fresh_dir("compose_est_b");
    json est_gen = sim;
    est_gen["quantile"]["mode"] = "empirical";
    run_pipeline("estimate", est_gen, est_b);

    CHECK(slurp(est_a / "extremogram.csv") == slurp(est_b / "extremogram.csv"));
}

TEST_CASE("pipelines rerun byte-identically", "[cli]") {
    const std::vector<std::pair<std::string, std::string>> cases{
        {"simulate", "sim_config.json"},
        {"estimate", "estimate_config.json"},
        {"clt-check", "clt_config.json"},
    };
    for (const auto& [sub, config_name] : cases) {
        json doc = load(kFixtures / config_name);
        if (doc.contains("field")) {
            doc["field"] = (kFixtures / doc["field"].get<std::string>()).string();
        }
        const fs::path a = fresh_dir("repro_a_" + sub);
        const fs::path b = fresh_dir("repro_b_" + sub);
        run_pipeline(sub, doc, a);
        run_pipeline(sub, doc, b);
        for (const auto& entry : fs::directory_iterator(a)) {
            const fs::path other = b / entry.path().filename();
            REQUIRE(fs::exists(other));
            CHECK(slurp(entry.path()) == slurp(other));
        }
    }
}

TEST_CASE("seed override changes outputs deterministically", "[cli]") {
    json doc = load(kFixtures / "sim_config.json");
    const fs::path a = fresh_dir("seed_a");
    const fs::path b = fresh_dir("seed_b");
    const fs::path c = fresh_dir("seed_c");
    PipelineOverrides with_seed;
    with_seed.seed = 999;
    run_pipeline("simulate", doc, a, with_seed);
    run_pipeline("simulate", doc, b, with_seed);
    run_pipeline("simulate", doc, c);
    CHECK(slurp(a / "field.f64") == slurp(b / "field.f64"));
    CHECK(slurp(a / "field.f64") != slurp(c / "field.f64"));
    // the manifest records the effective seed
    CHECK(load(a / "manifest.json")["seed"].get<std::uint64_t>() == 999);
}

TEST_CASE("estimator no-exceedance surfaces as a runtime error", "[cli]") {
    json doc = load(kFixtures / "clt_config.json");
    doc.erase("replicates");
    doc["relevance"]["A"]["threshold"] = 1e9;
    doc["quantile"]["mode"] = "empirical";
    CHECK_THROWS_AS(run_pipeline("estimate", doc, fresh_dir("noexc")),
                    degenerate_error);
}

TEST_CASE("cli exit codes distinguish config and runtime errors", "[cli]") {
    // schema violation: exit code 2
    const fs::path bad = fresh_dir("badcfg");
    {
        std::ofstream out(bad / "bad.json");
        out << R"({"blocks": {"r": [0]}})";
    }
    const std::string cmd2 = std::string(RFX_CLI_PATH) + " estimate --config " +
                             (bad / "bad.json").string() + " --out " + bad.string() +
                             " > /dev/null 2>&1";
    const int rc = std::system(cmd2.c_str());
    CHECK(WEXITSTATUS(rc) == 2);
}

TEST_CASE("diagnose pipeline writes the spec'd report shape", "[cli]") {
    json doc;
    doc["generator"] = {{"kind", "iid-pareto"},
                        {"alpha", 1.0},
                        {"shape", {8, 8, 10}},
                        {"seed", 3}};
    doc["blocks"] = {{"r", {4, 4, 5}}};
    doc["quantile"] = {{"k_n", 10.0}};
    doc["replicates"] = 80;
    doc["seed"] = 5;
    doc["diagnostics"] = {
        {"t", {1.0}},
        {"functionals",
         json::array({{{"A", {{"kind", "norm-exceedance"}, {"threshold", 1.0}}},
                       {"B", {{"kind", "norm-exceedance"}, {"threshold", 1.0}}},
                       {"h_s", 0},
                       {"h_t", 0}}})},
        {"delta", 1.0},
        {"eps", {0.5, 1.0}}};
    const fs::path out = fresh_dir("diag");
    run_pipeline("diagnose", doc, out);
    const json rep = load(out / "diagnostics.json");
    for (const char* key : {"A_n", "a_n", "B_n", "delta_hat", "delta_stderr", "T_hat",
                            "T_stderr", "bounds", "config"}) {
        CHECK(rep.contains(key));
    }
    CHECK(rep["bounds"].contains("lemma1"));
    CHECK(rep["bounds"].contains("remark1"));
    CHECK(rep["bounds"].contains("lemma2"));
}

TEST_CASE("sweep pipeline emits ordered stages", "[cli]") {
    json doc = load(kFixtures / "clt_config.json");
    doc["replicates"] = 60;
    doc["sweep"] = {{"stages", json::array({
                                   {{"shape", {8, 8, 10}}, {"r", {4, 4, 5}}},
                                   {{"shape", {12, 12, 20}}, {"r", {4, 4, 5}}},
                               })}};
    const fs::path out = fresh_dir("sweep");
    run_pipeline("sweep", doc, out);
    const json rep = load(out / "sweep.json");
    REQUIRE(rep["stages"].size() == 2);
    const std::string csv = slurp(out / "sweep.csv");
    CHECK(csv.find("stage,n1,n2,n3") == 0);
    CHECK(csv.find("\n1,12,12,20") != std::string::npos);
}
