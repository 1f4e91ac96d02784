#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "divcong/cli.hpp"
#include "divcong/error.hpp"

using namespace divcong;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("divcong_test_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string body_of(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out += line + "\n";
    return out;
}

ExperimentConfig delta_config() {
    ExperimentConfig c;
    c.command = "delta";
    c.r1 = 1;
    c.q1 = 2;
    c.r2 = 1;
    c.q2 = 2;
    c.x = 10.0;
    return c;
}

int run_args(std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("validation rejects bad configurations") {
    auto field_of = [](const ExperimentConfig& c) -> std::string {
        try {
            validate(c);
        } catch (const InvalidArgument& e) {
            return e.field();
        }
        return "";
    };
    ExperimentConfig c = delta_config();
    CHECK(field_of(c).empty());
    c.t = 3.0;
    CHECK(field_of(c) == "x");
    c = delta_config();
    c.x = -1.0;
    CHECK(field_of(c) == "x");
    c = delta_config();
    c.r1 = 2;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = delta_config();
    c.format = "xml";
    CHECK(field_of(c) == "format");
    c.command = "frobnicate";
    CHECK(field_of(c) == "command");

    ExperimentConfig m;
    m.command = "moments";
    CHECK(field_of(m).empty());
    m.k = {0};
    CHECK(field_of(m) == "k");
    m.k = {2};
    m.tmax = 2 * m.tmin;
    CHECK(field_of(m) == "tmax");

    ExperimentConfig s;
    s.command = "shortint";
    s.h0 = {4, -1};
    CHECK(field_of(s) == "h0");

    ExperimentConfig k;
    k.command = "kernel";
    k.zeta = {0};
    CHECK(field_of(k) == "zeta");
    k.zeta = {1};
    k.alpha = 1.0;
    CHECK(field_of(k) == "alpha");

    ExperimentConfig sv;
    sv.command = "sieve";
    sv.n_max = 1000;
    sv.mem_budget = 100;
    CHECK(field_of(sv) == "N");
}

TEST_CASE("delta end to end") {
    const auto r = compute_experiment(delta_config());
    CHECK(r.report_type == "delta");
    CHECK(r.result.at("D").get<std::uint64_t>() == 10);
    CHECK(r.result.at("delta").get<double>() == doctest::Approx(0.39172304020749493).epsilon(1e-14));
    CHECK(r.result.at("main_term_in_range").get<bool>());

    const fs::path dir = scratch_dir("delta");
    ExperimentConfig c = delta_config();
    c.out_dir = dir;
    const auto st = run_experiment(c);
    REQUIRE(st.exit_code == 0);
    CHECK(st.written.size() == 2);
    const json rep = json::parse(slurp(dir / "delta.json"));
    CHECK(rep.at("schema_version") == kSchemaVersion);
    CHECK(rep.at("report_type") == "delta");
    CHECK(rep.at("code_version") == code_version());
    CHECK(rep.at("csv_file") == "delta.csv");
    CHECK(rep.at("result") == r.result);
    CHECK(rep.at("config").at("params").at("q1") == 2);
    CHECK(rep.contains("timing"));
    CHECK(rep.contains("diagnostics"));
    const std::string csv = slurp(dir / "delta.csv");
    CHECK(csv.rfind("# divcong", 0) == 0);
    CHECK(body_of(csv).rfind("x,t,D,main_term,delta\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("format selection") {
    const fs::path dir = scratch_dir("format");
    ExperimentConfig c = delta_config();
    c.out_dir = dir;
    c.format = "json";
    c.name = "only_json";
    REQUIRE(run_experiment(c).exit_code == 0);
    CHECK(fs::exists(dir / "only_json.json"));
    CHECK_FALSE(fs::exists(dir / "only_json.csv"));
    CHECK_FALSE(json::parse(slurp(dir / "only_json.json")).contains("csv_file"));
    fs::remove_all(dir);
}

TEST_CASE("failures leave a structured marker") {
    const fs::path dir = scratch_dir("failed");
    ExperimentConfig c = delta_config();
    c.out_dir = dir;
    c.q1 = 4;
    c.r1 = 2;
    const auto st = run_experiment(c);
    CHECK(st.exit_code == 2);
    REQUIRE(fs::exists(dir / "delta.FAILED"));
    const json err = json::parse(slurp(dir / "delta.FAILED")).at("error");
    CHECK(err.at("type") == "invalid_argument");
    CHECK(err.at("message").get<std::string>().find("coprimality") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "delta.json"));

    // a later successful run clears the marker
    c.r1 = 1;
    CHECK(run_experiment(c).exit_code == 0);
    CHECK_FALSE(fs::exists(dir / "delta.FAILED"));

    // the sieve budget is checked during validation
    ExperimentConfig s;
    s.command = "sieve";
    s.out_dir = dir;
    s.n_max = 1000;
    s.mem_budget = 100;
    CHECK(run_experiment(s).exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("moments report") {
    ExperimentConfig c;
    c.command = "moments";
    c.r1 = 1;
    c.q1 = 3;
    c.r2 = 1;
    c.q2 = 4;
    c.tmin = 100;
    c.tmax = 1e4;
    c.per_decade = 4;
    const auto r = compute_experiment(c);
    CHECK(r.report_type == "moments");
    CHECK(r.result.at("fitted_exponent").get<double>() == doctest::Approx(1.5).epsilon(0.1));
    const auto rep = r.result.get<MomentReport>();
    CHECK(rep.grid.size() == 9);
    c.k = {1, 2, 3};
    const auto multi = compute_experiment(c);
    REQUIRE(multi.result.at("reports").size() == 3);
    CHECK(multi.result.at("reports")[1] == r.result);
}

TEST_CASE("CSV bodies are reproducible and thread-independent") {
    const fs::path dir = scratch_dir("repro");
    ExperimentConfig c;
    c.command = "shortint";
    c.r1 = 1;
    c.q1 = 2;
    c.r2 = 1;
    c.q2 = 3;
    c.T = 3000;
    c.h0 = {1, 4, 16};
    c.out_dir = dir;
    c.threads = 1;
    c.name = "a";
    REQUIRE(run_experiment(c).exit_code == 0);
    c.name = "b";
    c.threads = 2;
    REQUIRE(run_experiment(c).exit_code == 0);
    CHECK(body_of(slurp(dir / "a.csv")) == body_of(slurp(dir / "b.csv")));
    CHECK(json::parse(slurp(dir / "a.json")).at("result") == json::parse(slurp(dir / "b.json")).at("result"));

    ExperimentConfig sg;
    sg.command = "signs";
    sg.r1 = 1;
    sg.q1 = 2;
    sg.r2 = 1;
    sg.q2 = 3;
    sg.tmin = 1e3;
    sg.tmax = 1e4;
    sg.samples = 10;
    sg.threads = 1;
    const auto one = compute_experiment(sg);
    sg.threads = 3;
    CHECK(compute_experiment(sg).result == one.result);
    sg.seed = 2;
    CHECK_FALSE(compute_experiment(sg).result == one.result);
    fs::remove_all(dir);
}

TEST_CASE("sieve cache") {
    const fs::path dir = scratch_dir("cache");
    const auto p = CongruenceParams::make(1, 3, 2, 3);
    const auto path = sieve_cache_path(dir, p, 5000);
    CHECK(path == sieve_cache_path(dir, p, 5000));
    CHECK(path != sieve_cache_path(dir, p, 5001));
    CHECK(path != sieve_cache_path(dir, CongruenceParams::make(2, 3, 1, 3), 5000));
    CHECK(path.parent_path() == dir);
    CHECK(path.filename().string().rfind("sieve-", 0) == 0);

    ExperimentConfig c;
    c.command = "sieve";
    c.r1 = 1;
    c.q1 = 3;
    c.r2 = 2;
    c.q2 = 3;
    c.n_max = 5000;
    c.cache_dir = dir;
    const auto first = compute_experiment(c);
    CHECK_FALSE(first.extra_diagnostics.at("sieve_cache").at("hit").get<bool>());
    CHECK(fs::exists(path));
    const auto second = compute_experiment(c);
    CHECK(second.extra_diagnostics.at("sieve_cache").at("hit").get<bool>());
    CHECK(first.result == second.result);
    c.no_cache = true;
    CHECK_FALSE(compute_experiment(c).extra_diagnostics.contains("sieve_cache"));
    fs::remove_all(dir);
}

TEST_CASE("plot scripts") {
    const fs::path dir = scratch_dir("plot");
    ExperimentConfig c;
    c.command = "shortint";
    c.T = 2000;
    c.h0 = {2, 8};
    c.out_dir = dir;
    REQUIRE(run_experiment(c).exit_code == 0);
    const auto script = emit_plot_script(dir / "shortint.json", dir);
    CHECK(script.filename() == "plot_shortint.py");
    CHECK(slurp(script).find("load_csv") != std::string::npos);

    json bogus{{"report_type", "bogus"}, {"result", json::object()}};
    write_atomic(dir / "bogus.json", bogus.dump());
    CHECK_THROWS_AS(emit_plot_script(dir / "bogus.json", dir), InvalidArgument);
    write_atomic(dir / "broken.json", "{not json");
    CHECK_THROWS(emit_plot_script(dir / "broken.json", dir));
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
    const fs::path dir = scratch_dir("argv");
    const std::string out = dir.string();
    CHECK(run_args({"divcong", "delta", "--x", "10", "--r1", "1", "--q1", "2", "--r2", "1", "--q2", "2", "--out",
                    out}) == 0);
    CHECK(fs::exists(dir / "delta.json"));
    CHECK(run_args({"divcong", "delta", "--x", "10", "--r1", "2", "--q1", "2", "--out", out}) == 2);
    CHECK(run_args({"divcong", "moments", "--k", "12", "--out", out}) == 2);
    CHECK(run_args({"divcong", "sieve", "--N", "2.5", "--out", out}) != 0);
    CHECK(run_args({"divcong"}) != 0);
    CHECK(run_args({"divcong", "mainterm", "--x", "4", "--r1", "1", "--q1", "2", "--r2", "1", "--q2", "2", "--out",
                    out, "--format", "json"}) == 0);
    const json m = json::parse(slurp(dir / "mainterm.json"));
    CHECK(m.at("result").at("rows")[0].at("main_term").get<double>() ==
          doctest::Approx(2 * kEulerGamma + 4 * std::log(2.0) - 1).epsilon(1e-12));
    fs::remove_all(dir);
}
