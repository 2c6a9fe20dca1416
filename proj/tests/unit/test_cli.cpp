#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "mcflab/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("mcflab_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_config(const std::string& name, const json& cfg) {
    const fs::path p = scratch() / (name + ".json");
    std::ofstream(p) << cfg.dump(2);
    return p;
}

struct Run {
    int code;
    std::string err;
    fs::path out;
};

Run run(const std::string& sub, const std::string& name, const json& cfg, const std::string& extra = "") {
    const fs::path config = write_config(name, cfg);
    const fs::path out = scratch() / ("out_" + name);
    const fs::path err = scratch() / (name + ".err");
    const std::string cmd = std::string(MCFLAB_BINARY) + " " + sub + " --config " + config.string() + " --out " +
                            out.string() + " --quiet " + extra + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err), out};
}

json linear_verify() {
    return {{"spec", {{"n", 2}, {"k", 1}, {"L", 1.0}, {"h", 0.0625}}},
            {"field", {{"kind", "linear"}, {"A", {{1.0, 2.0}}}}}};
}

json linear_solve(double c_tau) {
    return {{"spec", {{"n", 2}, {"k", 1}, {"L", 0.5}, {"h", 0.0625}}},
            {"boundary", {{"kind", "linear"}, {"A", {{0.4, -0.2}}}}},
            {"init", {{"kind", "boundary_field"},
                      {"perturbation", {{"kind", "bump"}, {"width", 0.4}, {"amplitude", 0.05}}}}},
            {"solver", {{"c_tau", c_tau}}}};
}

} // namespace

TEST_CASE("verify on a plane") {
    const Run r = run("verify", "verify", linear_verify());
    REQUIRE(r.code == 0);
    const json summary = json::parse(slurp(r.out / "summary.json"));
    for (auto it = summary["defects"].begin(); it != summary["defects"].end(); ++it) {
        INFO(it.key());
        CHECK(it.value().get<double>() < 1e-10);
    }
    CHECK(summary["metric"]["C_metric"].get<double>() == doctest::Approx(6.0));

    const std::string csv = slurp(r.out / "estimates.csv");
    CHECK(csv.substr(0, csv.find('\n') + 1) == "check,param,lhs,rhs,ratio\n");

    // written JSON is the canonical dump of itself
    const std::string text = slurp(r.out / "summary.json");
    CHECK(json::parse(text).dump(2) + "\n" == text);

    const json manifest = json::parse(slurp(r.out / "manifest.json"));
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["subcommand"] == "verify");
    CHECK(manifest["config"]["field"]["kind"] == "linear");
    CHECK(manifest["files"]["summary.json"] == mcflab::cli::sha256_hex(text));
}

TEST_CASE("runs are reproducible") {
    const Run a = run("blowdown", "blow_a",
                      {{"n", 2}, {"k", 1}, {"field", {{"kind", "abs_plus_const"}, {"c", 1.0}}}, {"ladder", {1, 2, 4, 8}}});
    const Run b = run("blowdown", "blow_b",
                      {{"n", 2}, {"k", 1}, {"field", {{"kind", "abs_plus_const"}, {"c", 1.0}}}, {"ladder", {1, 2, 4, 8}}});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const json ma = json::parse(slurp(a.out / "manifest.json"));
    const json mb = json::parse(slurp(b.out / "manifest.json"));
    CHECK(ma["files"] == mb["files"]);
    CHECK(ma["files"].contains("profile.json"));
}

TEST_CASE("exit codes") {
    json missing = linear_verify();
    missing["spec"].erase("h");
    const Run bad = run("verify", "missing", missing);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("spec.h") != std::string::npos);
    const json manifest = json::parse(slurp(bad.out / "manifest.json"));
    CHECK(manifest["status"] != "ok");

    const Run divergent = run("solve-soliton", "divergent", linear_solve(0.9));
    CHECK(divergent.code == 3);

    const Run solved = run("solve-soliton", "solved", linear_solve(0.2));
    CHECK(solved.code == 0);
    CHECK(fs::exists(solved.out / "field.json"));
    CHECK(slurp(solved.out / "residuals.csv").rfind("iteration,residual_sup,residual_l2,best_sup\n", 0) == 0);

    const Run unknown = run("verify", "unknown", {{"spec", {{"n", 2}, {"k", 1}, {"L", 1.0}, {"h", 0.25}}},
                                                   {"field", {{"kind", "spiral"}}}});
    CHECK(unknown.code == 2);

    CHECK(WEXITSTATUS(std::system((std::string(MCFLAB_BINARY) + " frobnicate > /dev/null 2>&1").c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((std::string(MCFLAB_BINARY) + " --help > /dev/null 2>&1").c_str())) == 0);
}

TEST_CASE("flow and geometry outputs") {
    const Run flow = run("run-flow", "flow",
                         {{"spec", {{"n", 1}, {"k", 1}, {"L", 2.0}, {"h", 0.125}}},
                          {"field", {{"kind", "bump"}, {"width", 1.0}, {"amplitude", 0.2}}},
                          {"flow", {{"t_end", 0.1}, {"snapshots", {0.05, 0.1}}}}});
    REQUIRE(flow.code == 0);
    CHECK(slurp(flow.out / "run.csv").rfind("t,sup_grad,sup_soliton_residual,sup_expander_residual\n", 0) == 0);
    CHECK(fs::exists(flow.out / "snapshots" / "snapshot_001.json"));

    const Run geo = run("geometry", "geometry",
                        {{"spec", {{"n", 2}, {"k", 1}, {"L", 1.0}, {"h", 0.125}}},
                         {"field", {{"kind", "sphere"}}}});
    REQUIRE(geo.code == 0);
    const json summary = json::parse(slurp(geo.out / "summary.json"));
    CHECK(summary["div_position_defect"].get<double>() < 1e-12);
}

TEST_CASE("cleanup") { fs::remove_all(scratch()); }
