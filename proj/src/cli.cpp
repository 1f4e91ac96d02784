#include "divcong/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "divcong/delta.hpp"
#include "divcong/error.hpp"
#include "divcong/sieve.hpp"
#include "divcong/voronoi.hpp"

#ifndef DIVCONG_VERSION
#define DIVCONG_VERSION "unknown"
#endif

namespace divcong {
namespace fs = std::filesystem;

const char* code_version() noexcept { return DIVCONG_VERSION; }

CongruenceParams ExperimentConfig::params() const { return CongruenceParams::make(r1, q1, r2, q2); }

namespace {

const std::vector<std::string> kCommands{"sieve", "delta",  "mainterm", "moments",          "meanvalue", "shortint",
                                         "signs", "runs",   "kernel",   "voronoi-residual", "excursion", "plot"};

constexpr double kExact = 9007199254740992.0;  // 2^53

void require(bool ok, const std::string& field, const std::string& reason) {
    if (!ok) throw InvalidArgument(field, reason);
}

void require_finite(double v, const std::string& field) { require(std::isfinite(v), field, "must be finite"); }

std::uint64_t scaled_limit(const ExperimentConfig& cfg, double t_hi) {
    const double q = static_cast<double>(cfg.q1 * cfg.q2);
    const double n = std::ceil(q * t_hi) + 1.0;
    require(n < kExact / q, "range", "q1*q2*x exceeds the exact integer range of double");
    return static_cast<std::uint64_t>(n);
}

// Upper end of the scaled t range each command touches.
double required_t(const ExperimentConfig& cfg) {
    const std::string& c = cfg.command;
    const double q = static_cast<double>(cfg.q1 * cfg.q2);
    if (c == "delta") return cfg.x ? *cfg.x / q : *cfg.t;
    if (c == "moments") return cfg.tmax;
    if (c == "meanvalue") return *std::max_element(cfg.T_values.begin(), cfg.T_values.end()) / q;
    if (c == "shortint") return cfg.T + *std::max_element(cfg.h0.begin(), cfg.h0.end());
    if (c == "signs") {
        double hi = cfg.tmax;
        if (!cfg.T_values.empty()) hi = *std::max_element(cfg.T_values.begin(), cfg.T_values.end());
        return hi + cfg.c2 * std::sqrt(hi);
    }
    if (c == "runs" || c == "excursion") return 2.0 * cfg.T;
    if (c == "kernel") {
        const double s = std::sqrt(cfg.t2max) + cfg.alpha;
        return s * s;
    }
    if (c == "voronoi-residual") return 2.0 * cfg.U;
    return 0.0;
}

void validate_step(double step) { require(step > 0.0 && step <= 1.0, "step", "must satisfy 0 < step <= 1"); }

void validate_grid(double lo, double hi, int per_decade) {
    require(lo >= 1.0, "tmin", "must be >= 1");
    require(hi >= 10.0 * lo, "tmax", "degenerate grid: tmax must be at least 10 * tmin");
    require(per_decade >= 1, "per_decade", "must be >= 1");
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    require(std::find(kCommands.begin(), kCommands.end(), cfg.command) != kCommands.end(), "command",
            "unknown command '" + cfg.command + "'");
    require(cfg.format == "json" || cfg.format == "csv" || cfg.format == "both", "format",
            "must be json, csv or both");
    require(cfg.threads >= 0, "threads", "must be >= 0");
    require(cfg.mem_budget > 0, "mem_budget", "must be positive");
    if (cfg.command == "plot") {
        require(!cfg.report.empty(), "report", "a report path is required");
        require(fs::exists(cfg.report), "report", "file does not exist: " + cfg.report.string());
        return;
    }
    const CongruenceParams p = cfg.params();
    require(cfg.tol > 0.0 && cfg.tol < 1.0, "tol", "must lie in (0, 1)");
    const std::string& c = cfg.command;

    if (c == "sieve") {
        require(cfg.n_max >= 1, "N", "must be positive");
        require(cfg.n_max * sizeof(std::uint32_t) <= cfg.mem_budget, "N",
                "sieve of " + std::to_string(cfg.n_max) + " entries exceeds the memory budget");
        require(static_cast<double>(cfg.n_max) < kExact / static_cast<double>(p.modulus_product()), "N",
                "exceeds the exact integer range of double");
        return;
    }
    if (c == "delta") {
        require(cfg.x.has_value() != cfg.t.has_value(), "x", "give exactly one of --x and --t");
        const double v = cfg.x ? *cfg.x : *cfg.t;
        require_finite(v, cfg.x ? "x" : "t");
        require(v > 0.0, cfg.x ? "x" : "t", "must be positive");
    } else if (c == "mainterm") {
        require(!cfg.x_values.empty(), "x", "at least one value required");
        for (double v : cfg.x_values) {
            require_finite(v, "x");
            require(v > 0.0, "x", "must be positive");
        }
        return;
    } else if (c == "moments") {
        require(!cfg.k.empty(), "k", "at least one order required");
        for (int k : cfg.k) require(k >= 1 && k <= kMaxMomentOrder, "k", "must lie in [1, 9]");
        validate_grid(cfg.tmin, cfg.tmax, cfg.per_decade);
    } else if (c == "meanvalue") {
        require(!cfg.T_values.empty(), "T", "at least one value required");
        for (double T : cfg.T_values) {
            require_finite(T, "T");
            require(T > 1.0, "T", "must exceed 1");
        }
    } else if (c == "shortint") {
        require_finite(cfg.T, "T");
        require(cfg.T >= 1.0, "T", "must be >= 1");
        require(!cfg.h0.empty(), "h0", "at least one value required");
        for (double h : cfg.h0) {
            require_finite(h, "h0");
            require(h > 0.0, "h0", "must be positive");
        }
    } else if (c == "signs") {
        require(cfg.c1 >= 0.0, "c1", "must be nonnegative");
        require(cfg.c2 > 0.0, "c2", "must be positive");
        validate_step(cfg.step);
        if (cfg.T_values.empty()) {
            require(cfg.samples >= 1, "samples", "must be positive");
            require(cfg.tmin >= 1.0, "tmin", "must be >= 1");
            require(cfg.tmax >= cfg.tmin, "tmax", "must be >= tmin");
        } else {
            for (double T : cfg.T_values) require(T >= 1.0, "T", "must be >= 1");
        }
    } else if (c == "runs") {
        require_finite(cfg.T, "T");
        require(cfg.T >= 1.0, "T", "must be >= 1");
        require(cfg.c5 >= 0.0, "c5", "must be nonnegative");
        require(cfg.trace_points >= 2, "trace_points", "need at least two points");
        validate_step(cfg.step);
    } else if (c == "kernel") {
        require(cfg.alpha > 1.0, "alpha", "must exceed 1");
        require(!cfg.zeta.empty(), "zeta", "at least one sign required");
        for (int z : cfg.zeta) require(z == 1 || z == -1, "zeta", "must be +1 or -1");
        require(cfg.samples >= 1, "samples", "must be positive");
        require(cfg.t2min > 0.0 && cfg.t2max >= cfg.t2min, "t2max", "need 0 < t2min <= t2max");
        require(std::sqrt(cfg.t2min) - cfg.alpha >= 1.0, "t2min", "need sqrt(t2min) - alpha >= 1");
        if (cfg.y) require(*cfg.y >= 1.0, "y", "must be >= 1");
    } else if (c == "voronoi-residual") {
        require(cfg.U >= 1.0, "U", "must be >= 1");
        require(!cfg.y_values.empty(), "y", "at least one value required");
        for (double y : cfg.y_values) require(y >= 1.0, "y", "must be >= 1");
    } else if (c == "excursion") {
        require(!cfg.k.empty(), "k", "an order is required");
        require(cfg.k.front() >= 1 && cfg.k.front() % 2 == 1, "k", "must be an odd positive integer");
        require(cfg.T >= 1.0, "T", "must be >= 1");
        require(cfg.grid_points >= 2, "grid_points", "degenerate grid: need at least two points");
        if (cfg.ck) {
            require_finite(*cfg.ck, "ck");
        } else {
            require(cfg.k.front() <= kMaxMomentOrder, "k", "Ck can only be estimated for k <= 9; pass --ck");
            require(cfg.T >= 10.0, "T", "estimating Ck needs T >= 10");
        }
    }
    scaled_limit(cfg, required_t(cfg));
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    if (cfg.command == "plot") {
        j["report"] = cfg.report.string();
        return j;
    }
    j["params"] = {{"r1", cfg.r1}, {"q1", cfg.q1}, {"r2", cfg.r2}, {"q2", cfg.q2}};
    const std::string& c = cfg.command;
    if (c == "sieve") j["N"] = cfg.n_max, j["csv_rows"] = cfg.csv_rows;
    if (c == "delta") j["x"] = cfg.x, j["t"] = cfg.t;
    if (c == "mainterm") j["x"] = cfg.x_values;
    if (c == "moments") j["k"] = cfg.k, j["tmin"] = cfg.tmin, j["tmax"] = cfg.tmax, j["per_decade"] = cfg.per_decade;
    if (c == "meanvalue") j["T"] = cfg.T_values;
    if (c == "shortint") j["T"] = cfg.T, j["h0"] = cfg.h0;
    if (c == "signs") {
        j["c1"] = cfg.c1, j["c2"] = cfg.c2, j["step"] = cfg.step;
        if (cfg.T_values.empty())
            j["tmin"] = cfg.tmin, j["tmax"] = cfg.tmax, j["samples"] = cfg.samples, j["seed"] = cfg.seed;
        else
            j["T"] = cfg.T_values;
    }
    if (c == "runs") j["T"] = cfg.T, j["c5"] = cfg.c5, j["step"] = cfg.step, j["trace_points"] = cfg.trace_points;
    if (c == "kernel") {
        j["alpha"] = cfg.alpha, j["zeta"] = cfg.zeta, j["t2min"] = cfg.t2min, j["t2max"] = cfg.t2max;
        j["samples"] = cfg.samples, j["seed"] = cfg.seed, j["y"] = cfg.y;
    }
    if (c == "voronoi-residual") j["U"] = cfg.U, j["y"] = cfg.y_values;
    if (c == "excursion") {
        j["k"] = cfg.k.front(), j["T"] = cfg.T, j["ck"] = cfg.ck, j["grid_points"] = cfg.grid_points;
        j["per_decade"] = cfg.per_decade;
    }
    j["tol"] = cfg.tol;
    j["threads"] = cfg.threads;
    j["mem_budget"] = cfg.mem_budget;
    j["force_streaming"] = cfg.force_streaming;
    j["format"] = cfg.format;
    j["no_cache"] = cfg.no_cache;
    return j;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_csv(const CsvTable& table, const std::vector<std::string>& header_lines) {
    std::ostringstream os;
    for (const auto& line : header_lines) os << "# " << line << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (row[i]) os << format_number(*row[i]);
        }
        os << '\n';
    }
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

fs::path sieve_cache_path(const fs::path& dir, const CongruenceParams& p, std::uint64_t n_max) {
    // FNV-1a over the key, stable across platforms and runs
    const std::string key = p.to_string() + ":1-" + std::to_string(n_max);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return dir / ("sieve-" + std::string(buf) + ".dcsv");
}

namespace {

std::optional<fs::path> cache_directory(const ExperimentConfig& cfg) {
    if (cfg.no_cache) return std::nullopt;
    if (cfg.cache_dir) return cfg.cache_dir;
    if (const char* env = std::getenv(kCacheDirEnv); env && *env) return fs::path(env);
    return std::nullopt;
}

std::unique_ptr<DeltaEvaluator> make_evaluator(const ExperimentConfig& cfg, double t_hi, json& diag) {
    const CongruenceParams p = cfg.params();
    const std::uint64_t n = scaled_limit(cfg, t_hi);
    EvaluatorOptions opts;
    opts.memory_budget = cfg.mem_budget;
    opts.force_streaming = cfg.force_streaming;
    const bool fits = !cfg.force_streaming && n * (sizeof(std::uint32_t) + sizeof(std::uint64_t)) <= cfg.mem_budget;
    diag["evaluator"] = {{"max_n", n}, {"mode", fits ? "cached" : "streaming"}};
    const auto dir = cache_directory(cfg);
    if (!fits || !dir) return std::make_unique<DeltaEvaluator>(p, n, opts);

    const fs::path path = sieve_cache_path(*dir, p, n);
    if (fs::exists(path)) {
        try {
            DivisorSieve s = load_sieve(path);
            if (s.params == p && s.range_start == 1 && s.range_end == n) {
                diag["sieve_cache"] = {{"path", path.string()}, {"hit", true}};
                return std::make_unique<DeltaEvaluator>(std::move(s), opts);
            }
        } catch (const FormatError&) {
            // unreadable cache entries are rebuilt below
        }
    }
    SieveOptions so;
    so.memory_budget = cfg.mem_budget;
    DivisorSieve s = sieve_divisor_counts(n, p, so);
    save_sieve(s, path);
    diag["sieve_cache"] = {{"path", path.string()}, {"hit", false}};
    return std::make_unique<DeltaEvaluator>(std::move(s), opts);
}

using Row = std::vector<std::optional<double>>;

std::vector<double> sample_uniform(double lo, double hi, std::uint64_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(count);
    for (auto& v : out) v = dist(rng);
    return out;
}

void note_tolerance(ExperimentResult& r, double tol, double achieved) {
    r.achieved_tolerances["requested"] = tol;
    const double prev = r.achieved_tolerances.value("max_relative_error", 0.0);
    r.achieved_tolerances["max_relative_error"] = std::max(prev, achieved);
}

ExperimentResult run_sieve(const ExperimentConfig& cfg) {
    const CongruenceParams p = cfg.params();
    ExperimentResult r;
    r.report_type = "sieve";
    DivisorSieve s;
    const auto dir = cache_directory(cfg);
    bool loaded = false;
    if (dir) {
        const fs::path path = sieve_cache_path(*dir, p, cfg.n_max);
        if (fs::exists(path)) {
            try {
                s = load_sieve(path);
                loaded = s.params == p && s.range_start == 1 && s.range_end == cfg.n_max;
            } catch (const FormatError&) {
                loaded = false;
            }
        }
        if (!loaded) {
            SieveOptions so;
            so.memory_budget = cfg.mem_budget;
            s = sieve_divisor_counts(cfg.n_max, p, so);
            save_sieve(s, path);
        }
        r.extra_diagnostics["sieve_cache"] = {{"path", path.string()}, {"hit", loaded}};
    } else {
        SieveOptions so;
        so.memory_budget = cfg.mem_budget;
        s = sieve_divisor_counts(cfg.n_max, p, so);
    }
    std::uint64_t total = 0;
    r.table.columns = {"n", "d", "D"};
    for (std::uint64_t n = 1; n <= cfg.n_max; ++n) {
        total += s.at(n);
        if (n <= cfg.csv_rows)
            r.table.rows.push_back(
                Row{static_cast<double>(n), static_cast<double>(s.at(n)), static_cast<double>(total)});
    }
    const std::uint64_t hyper = summatory_hyperbola_upto(cfg.n_max, p);
    r.result = {{"params", p},
                {"N", cfg.n_max},
                {"D_sieve", total},
                {"D_hyperbola", hyper},
                {"agrees", total == hyper}};
    if (total != hyper) r.warnings.push_back("sieve and hyperbola totals differ");
    return r;
}

ExperimentResult run_delta(const ExperimentConfig& cfg) {
    const CongruenceParams p = cfg.params();
    const double q = static_cast<double>(p.modulus_product());
    const double x = cfg.x ? *cfg.x : q * *cfg.t;
    EvaluatorOptions opts;
    opts.force_streaming = true;
    const DeltaEvaluator ev(p, std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(x))), opts);
    ExperimentResult r;
    r.report_type = "delta";
    const std::uint64_t D = x >= 1.0 ? ev.summatory(static_cast<std::uint64_t>(std::floor(x))) : 0;
    const double M = main_term(x, p);
    const double d = delta(x, ev);
    r.result = {{"params", p}, {"x", x}, {"t", x / q}, {"D", D}, {"main_term", M}, {"delta", d},
                {"main_term_in_range", main_term_in_range(x, p)}};
    if (!main_term_in_range(x, p)) r.warnings.push_back("x < q1*q2: main term is outside its asymptotic range");
    r.table.columns = {"x", "t", "D", "main_term", "delta"};
    r.table.rows.push_back(Row{x, x / q, static_cast<double>(D), M, d});
    return r;
}

ExperimentResult run_mainterm(const ExperimentConfig& cfg) {
    const CongruenceParams p = cfg.params();
    ExperimentResult r;
    r.report_type = "mainterm";
    json rows = json::array();
    r.table.columns = {"x", "main_term", "in_range"};
    for (double x : cfg.x_values) {
        const double M = main_term(x, p);
        const bool in = main_term_in_range(x, p);
        rows.push_back({{"x", x}, {"main_term", M}, {"in_range", in}});
        r.table.rows.push_back(Row{x, M, in ? 1.0 : 0.0});
        if (!in) r.warnings.push_back("x = " + format_number(x) + " is below q1*q2");
    }
    r.result = {{"params", p},
                {"psi1", digamma_rational(cfg.r1, cfg.q1)},
                {"psi2", digamma_rational(cfg.r2, cfg.q2)},
                {"coefficient", main_term_coefficient(p)},
                {"rows", rows}};
    return r;
}

ExperimentResult run_moments(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "moments";
    const auto ev = make_evaluator(cfg, cfg.tmax, r.extra_diagnostics);
    const std::vector<double> grid = log_grid(cfg.tmin, cfg.tmax, cfg.per_decade);
    const int kmax = *std::max_element(cfg.k.begin(), cfg.k.end());
    const std::vector<MomentReport> all = estimate_Ck_all(kmax, grid, *ev, cfg.tol);
    std::vector<MomentReport> chosen;
    for (int k : cfg.k) chosen.push_back(all[k - 1]);

    r.table.columns = {"T"};
    const bool single = chosen.size() == 1;
    for (const auto& m : chosen) {
        const std::string sfx = single ? "" : "_k" + std::to_string(m.k);
        for (const char* c : {"integral", "ck_hat", "residual"}) r.table.columns.push_back(c + sfx);
        for (const auto& w : m.warnings) r.warnings.push_back("k = " + std::to_string(m.k) + ": " + w);
        note_tolerance(r, cfg.tol, m.error_estimate);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Row row{grid[i]};
        for (const auto& m : chosen) {
            row.push_back(m.integrals[i]);
            row.push_back(m.ck_hat[i]);
            row.push_back(m.residuals[i]);
        }
        r.table.rows.push_back(row);
    }
    if (single)
        r.result = chosen.front();
    else
        r.result = {{"reports", chosen}};
    return r;
}

ExperimentResult run_meanvalue(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "meanvalue";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    std::vector<double> Ts = cfg.T_values;
    std::sort(Ts.begin(), Ts.end());
    std::vector<MeanValueResult> rows;
    double worst = 0.0;
    r.table.columns = {"T", "integral", "slope_estimate", "slope_target", "residual_normalized"};
    for (double T : Ts) {
        const MeanValueResult m = mean_value_check(T, *ev, cfg.tol);
        worst = std::max(worst, std::abs(m.residual_normalized));
        note_tolerance(r, cfg.tol, m.error_estimate);
        r.table.rows.push_back(Row{m.T, m.integral, m.slope_estimate, m.slope_target, m.residual_normalized});
        rows.push_back(m);
    }
    r.result = {{"params", ev->params()},
                {"slope_target", mean_value_slope_target(ev->params())},
                {"rows", rows},
                {"max_abs_residual_normalized", worst}};
    return r;
}

ExperimentResult run_shortint(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "shortint";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    std::vector<double> hs = cfg.h0;
    std::sort(hs.begin(), hs.end());
    std::vector<ShortIntervalResult> rows;
    double max_ratio = 0.0;
    r.table.columns = {"h0", "integral", "envelope", "ratio", "in_lemma_range"};
    for (double h : hs) {
        const ShortIntervalResult s = short_interval_variance(cfg.T, h, *ev, cfg.tol);
        max_ratio = std::max(max_ratio, s.ratio);
        if (!s.in_lemma_range) r.warnings.push_back("h0 = " + format_number(h) + " outside 1 <= h0 <= sqrt(T)/2");
        note_tolerance(r, cfg.tol, s.error_estimate);
        r.table.rows.push_back(Row{s.h0, s.integral, s.envelope, s.ratio, s.in_lemma_range ? 1.0 : 0.0});
        rows.push_back(s);
    }
    r.result = {{"params", ev->params()}, {"T", cfg.T}, {"rows", rows}, {"max_ratio", max_ratio}};
    return r;
}

ExperimentResult run_signs(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "signs";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    const std::vector<double> starts =
        cfg.T_values.empty() ? sample_uniform(cfg.tmin, cfg.tmax, cfg.samples, cfg.seed) : cfg.T_values;
    const std::vector<WindowResult> windows = scan_windows(starts, cfg.c1, cfg.c2, cfg.step, *ev);
    std::size_t with_crossing = 0, with_both = 0;
    r.table.columns = {"window_start", "window_end", "crossing_count", "first_crossing", "t1", "t2"};
    for (const auto& w : windows) {
        with_crossing += w.crossing_count > 0;
        with_both += w.found_positive_extreme && w.found_negative_extreme;
        r.table.rows.push_back(Row{w.window_start, w.window_end, static_cast<double>(w.crossing_count),
                                   w.first_crossing, w.t1, w.t2});
    }
    const bool hyp = sign_change_hypothesis_holds(ev->params());
    if (!hyp) r.warnings.push_back("params outside q1 >= 2, q2 >= 3, where sign changes are not guaranteed; reported only");
    r.result = {{"params", ev->params()},
                {"c1", cfg.c1},
                {"c2", cfg.c2},
                {"step", cfg.step},
                {"hypothesis_holds", hyp},
                {"windows", windows},
                {"windows_with_crossing", with_crossing},
                {"windows_with_both_witnesses", with_both},
                {"minimal_c2_crossings", minimal_c2_for_crossings(windows)},
                {"minimal_c2_witnesses", minimal_c2_for_witnesses(windows)}};
    return r;
}

ExperimentResult run_runs(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "runs";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    const SignRunReport rep = detect_runs(cfg.T, cfg.c5, *ev, cfg.step);
    r.table.columns = {"t", "delta", "upper", "lower"};
    const auto m = cfg.trace_points;
    for (std::uint64_t i = 0; i < m; ++i) {
        double t = cfg.T + cfg.T * static_cast<double>(i) / static_cast<double>(m - 1);
        if (i + 1 == m) t = 2.0 * cfg.T;
        const double env = cfg.c5 * std::pow(t, 0.25);
        r.table.rows.push_back(Row{t, ev->at(t), env, -env});
    }
    json j = rep;
    j["params"] = ev->params();
    j["run_count_plus"] = rep.runs_plus.size();
    j["run_count_minus"] = rep.runs_minus.size();
    j["measure_plus_fraction"] = rep.measure_plus / cfg.T;
    j["measure_minus_fraction"] = rep.measure_minus / cfg.T;
    r.result = j;
    return r;
}

ExperimentResult run_kernel(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "kernel";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    std::vector<double> ts = sample_uniform(cfg.t2min, cfg.t2max, cfg.samples, cfg.seed);
    for (auto& t : ts) t = std::sqrt(t);
    const double y = cfg.y ? *cfg.y : std::ceil(*std::max_element(ts.begin(), ts.end()));
    const KernelExperiment k = kernel_experiment(ts, cfg.alpha, cfg.zeta, *ev, y, cfg.tol);
    r.table.columns = {"t", "zeta", "measured", "prediction", "series", "residual"};
    for (const auto& s : k.samples) {
        r.table.rows.push_back(
            Row{s.t, static_cast<double>(s.zeta), s.measured, s.prediction, s.series, s.measured - s.prediction});
        note_tolerance(r, cfg.tol, s.error_estimate);
    }
    r.result = k;
    return r;
}

ExperimentResult run_voronoi(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "voronoi-residual";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    std::vector<double> ys = cfg.y_values;
    std::sort(ys.begin(), ys.end());
    std::vector<SeriesComparison> rows;
    r.table.columns = {"y", "mean_square", "envelope", "ratio", "correlation"};
    bool decreasing = true;
    for (double y : ys) {
        const SeriesComparison c = compare_delta_r0(cfg.U, {y, ev->params()}, *ev, cfg.tol);
        if (!rows.empty() && !(c.residual.mean_square < rows.back().residual.mean_square)) decreasing = false;
        if (c.residual.constraint_violated)
            r.warnings.push_back("y = " + format_number(y) + " outside the truncation range for U = " +
                                 format_number(cfg.U));
        note_tolerance(r, cfg.tol, c.residual.error_estimate);
        r.table.rows.push_back(
            Row{y, c.residual.mean_square, c.residual.envelope, c.residual.ratio, c.correlation});
        rows.push_back(c);
    }
    r.result = {{"params", ev->params()}, {"U", cfg.U}, {"rows", rows}, {"residual_decreasing_in_y", decreasing}};
    return r;
}

ExperimentResult run_excursion(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.report_type = "excursion";
    const auto ev = make_evaluator(cfg, required_t(cfg), r.extra_diagnostics);
    const int k = cfg.k.front();
    double ck = 0.0;
    std::string source = "given";
    if (cfg.ck) {
        ck = *cfg.ck;
    } else {
        const std::vector<double> grid = log_grid(std::max(1.0, cfg.T / 1000.0), cfg.T, cfg.per_decade);
        const MomentReport m = estimate_Ck(k, grid, *ev, cfg.tol);
        ck = m.fitted_Ck;
        source = "median of ck_hat over [" + format_number(grid.front()) + ", " + format_number(grid.back()) + "]";
        note_tolerance(r, cfg.tol, m.error_estimate);
    }
    const ExcursionReport e = f_k_excursion(k, cfg.T, ck, *ev, cfg.grid_points, cfg.tol);
    for (const auto& w : e.warnings) r.warnings.push_back(w);
    r.table.columns = {"X", "F_k"};
    for (std::size_t i = 0; i < e.X_grid.size(); ++i) r.table.rows.push_back(Row{e.X_grid[i], e.F_values[i]});
    json j = e;
    j["params"] = ev->params();
    j["ck_source"] = source;
    r.result = j;
    return r;
}

}  // namespace

ExperimentResult compute_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    const std::string& c = cfg.command;
    if (c == "sieve") return run_sieve(cfg);
    if (c == "delta") return run_delta(cfg);
    if (c == "mainterm") return run_mainterm(cfg);
    if (c == "moments") return run_moments(cfg);
    if (c == "meanvalue") return run_meanvalue(cfg);
    if (c == "shortint") return run_shortint(cfg);
    if (c == "signs") return run_signs(cfg);
    if (c == "runs") return run_runs(cfg);
    if (c == "kernel") return run_kernel(cfg);
    if (c == "voronoi-residual") return run_voronoi(cfg);
    if (c == "excursion") return run_excursion(cfg);
    throw InvalidArgument("command", "'" + c + "' produces no report");
}

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json error_record(const std::exception& e, int& code) {
    json err{{"message", e.what()}};
    if (const auto* ia = dynamic_cast<const InvalidArgument*>(&e)) {
        err["type"] = "invalid_argument";
        err["field"] = ia->field();
        code = 2;
    } else if (const auto* be = dynamic_cast<const BudgetExceeded*>(&e)) {
        err["type"] = "budget_exceeded";
        err["requested"] = be->requested();
        err["allowed"] = be->allowed();
        code = 3;
    } else if (const auto* tn = dynamic_cast<const ToleranceNotMet*>(&e)) {
        err["type"] = "tolerance_not_met";
        err["achieved"] = tn->achieved();
        err["requested"] = tn->requested();
        code = 4;
    } else if (dynamic_cast<const RangeError*>(&e)) {
        err["type"] = "range_error";
        code = 5;
    } else if (dynamic_cast<const FormatError*>(&e)) {
        err["type"] = "format_error";
        code = 6;
    } else {
        err["type"] = "runtime_error";
        code = 1;
    }
    return json{{"error", err}};
}

}  // namespace

RunStatus run_experiment(const ExperimentConfig& cfg) {
    RunStatus status;
    const fs::path marker = cfg.out_dir / (cfg.stem() + ".FAILED");
    try {
        if (cfg.command == "plot") {
            validate(cfg);
            status.written.push_back(emit_plot_script(cfg.report, cfg.out_dir));
            return status;
        }
        const std::string started = utc_timestamp();
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentResult r = compute_experiment(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();

        fs::create_directories(cfg.out_dir);
        const bool want_json = cfg.format != "csv";
        const bool want_csv = cfg.format != "json";
        const fs::path json_path = cfg.out_dir / (cfg.stem() + ".json");
        const fs::path csv_path = cfg.out_dir / (cfg.stem() + ".csv");
        if (want_csv) {
            const std::vector<std::string> header{
                "divcong " + cfg.command,
                "code_version: " + std::string(code_version()),
                "config: " + config_to_json(cfg).dump(),
                "started_at: " + started,
                "wall_seconds: " + format_number(wall),
            };
            write_atomic(csv_path, format_csv(r.table, header));
            status.written.push_back(csv_path);
        }
        if (want_json) {
            json diag = r.extra_diagnostics;
            diag["warnings"] = r.warnings;
            diag["achieved_tolerances"] = r.achieved_tolerances;
            json report{{"schema_version", kSchemaVersion},
                        {"report_type", r.report_type},
                        {"code_version", code_version()},
                        {"config", config_to_json(cfg)},
                        {"result", r.result},
                        {"diagnostics", diag},
                        {"timing", {{"started_at", started}, {"wall_seconds", wall}, {"threads", threads}}}};
            if (want_csv) report["csv_file"] = csv_path.filename().string();
            write_atomic(json_path, report.dump(2) + "\n");
            status.written.push_back(json_path);
        }
        if (fs::exists(marker)) fs::remove(marker);
    } catch (const std::exception& e) {
        const json rec = error_record(e, status.exit_code);
        status.error = rec.dump();
        try {
            write_atomic(marker, rec.dump(2) + "\n");
        } catch (const std::exception&) {
            // the error record still reaches stderr
        }
    }
    return status;
}

namespace {

const char* kPlotPrelude = R"py(import json
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def load_csv(path):
    with open(path) as fh:
        body = [line for line in fh if not line.startswith("#")]
    return np.genfromtxt(body, delimiter=",", names=True)

)py";

std::string py_string(const std::string& s) { return json(s).dump(); }

}  // namespace

fs::path emit_plot_script(const fs::path& report_path, const fs::path& out_dir) {
    std::ifstream in(report_path);
    if (!in) throw InvalidArgument("report", "cannot open " + report_path.string());
    json report;
    try {
        in >> report;
    } catch (const json::exception& e) {
        throw FormatError("report does not parse: " + std::string(e.what()));
    }
    const std::string type = report.value("report_type", "");
    const fs::path csv = fs::absolute(report_path).parent_path() / report.value("csv_file", "");
    const fs::path rep = fs::absolute(report_path);

    std::ostringstream py;
    py << kPlotPrelude;
    py << "REPORT = " << py_string(rep.string()) << "\n";
    py << "CSV = " << py_string(csv.string()) << "\n\n";
    py << "with open(REPORT) as fh:\n    report = json.load(fh)\n";
    py << "result = report[\"result\"]\n";
    py << "data = load_csv(CSV)\n\n";

    const std::string out_png = fs::path(report_path).stem().string() + ".png";
    if (type == "runs") {
                py << R"py(fig, ax = plt.subplots(figsize=(10, 4))
ax.plot(data["t"], data["delta"], lw=0.6, label="Delta(q1 q2 t)")
ax.plot(data["t"], data["upper"], "r--", lw=1, label="+c t^(1/4)")
ax.plot(data["t"], data["lower"], "b--", lw=1, label="-c t^(1/4)")
for a, b in result["runs_plus"]:
    ax.axvspan(a, b, color="red", alpha=0.08, lw=0)
for a, b in result["runs_minus"]:
    ax.axvspan(a, b, color="blue", alpha=0.08, lw=0)
ax.set_xlabel("t")
ax.set_ylabel("Delta")
ax.legend(loc="upper right")
)py";
    } else if (type == "signs") {
                py << R"py(fig, ax = plt.subplots(figsize=(8, 4))
offset = (data["first_crossing"] - data["window_start"]) / np.sqrt(data["window_start"])
ax.semilogx(data["window_start"], offset, "o", ms=3, label="first crossing offset / sqrt(T)")
ax.axhline(result["c2"], color="k", ls="--", lw=1, label="c2")
ax.set_xlabel("T")
ax.set_ylabel("(t - T) / sqrt(T)")
ax.legend()
)py";
    } else if (type == "moments") {
                py << R"py(reports = result["reports"] if "reports" in result else [result]
fig, axes = plt.subplots(1, 2, figsize=(11, 4))
for rep in reports:
    k = rep["k"]
    T = np.array(rep["grid"])
    I = np.abs(np.array(rep["integrals"]))
    axes[0].loglog(T, I, "o-", ms=3, label=f"|int Delta^{k}|")
    ref = I[-1] * (T / T[-1]) ** (1 + k / 4)
    axes[0].loglog(T, ref, "k--", lw=0.8, label=f"slope {1 + k / 4:g}")
    axes[1].semilogx(T, rep["ck_hat"], "o-", ms=3, label=f"C_{k} hat")
    axes[1].axhline(rep["fitted_Ck"], ls=":", lw=1)
axes[0].set_xlabel("T")
axes[1].set_xlabel("T")
axes[0].legend(fontsize=8)
axes[1].legend(fontsize=8)
)py";
    } else if (type == "shortint") {
                py << R"py(fig, ax = plt.subplots(figsize=(7, 4))
ax.semilogx(data["h0"], data["ratio"], "o-")
ax.set_xlabel("h0")
ax.set_ylabel("I(T, h0) / envelope")
ax.set_title(f"T = {result['T']:g}")
)py";
    } else if (type == "kernel") {
                py << R"py(fig, ax = plt.subplots(figsize=(9, 4))
for z, colour in ((1, "tab:red"), (-1, "tab:blue")):
    sel = data["zeta"] == z
    if not np.any(sel):
        continue
    order = np.argsort(data["t"][sel])
    t = data["t"][sel][order]
    ax.plot(t, data["measured"][sel][order], "o", ms=3, color=colour, label=f"measured, zeta={z:+d}")
    grid = np.linspace(t.min(), t.max(), 2000)
    p = result["params"]
    shift = p["r2"] / p["q2"] + p["r1"] / p["q1"] + 0.125
    ax.plot(grid, -z / 2 * np.sin(4 * np.pi * grid - 2 * np.pi * shift), "-", lw=0.8, color=colour,
            label=f"-(zeta/2) sin(...), zeta={z:+d}")
ax.set_xlabel("t")
ax.legend(fontsize=8)
)py";
    } else if (type == "meanvalue") {
                py << R"py(fig, ax = plt.subplots(figsize=(7, 4))
ax.semilogx(data["T"], data["slope_estimate"], "o-", label="integral / T")
ax.axhline(result["slope_target"], color="k", ls="--", label="target")
ax.set_xlabel("T")
ax.legend()
)py";
    } else if (type == "voronoi-residual") {
                py << R"py(fig, ax = plt.subplots(figsize=(7, 4))
ax.loglog(data["y"], data["mean_square"], "o-", label="(1/U) int (Delta - R0)^2")
ax.loglog(data["y"], data["envelope"], "k--", label="envelope")
ax.set_xlabel("y")
ax.legend()
)py";
    } else if (type == "excursion") {
                py << R"py(fig, ax = plt.subplots(figsize=(8, 4))
ax.plot(data["X"], data["F_k"], lw=0.8)
ax.axvline(result["X_star"], color="k", ls=":")
ax.set_xlabel("X")
ax.set_ylabel(f"F_{result['k']}(X)")
)py";
    } else {
        throw InvalidArgument("report", "unknown report type '" + type + "'");
    }
    py << "fig.tight_layout()\n";
    py << "fig.savefig(os.path.join(HERE, " << py_string(out_png) << "), dpi=150)\n";

    fs::path script = out_dir / ("plot_" + fs::path(report_path).stem().string() + ".py");
    std::string name = script.filename().string();
    std::replace(name.begin(), name.end(), '-', '_');
    script.replace_filename(name);
    write_atomic(script, py.str());
    return script;
}

namespace {

void add_common(CLI::App* sub, ExperimentConfig& cfg, double& mem_budget) {
    sub->add_option("--r1", cfg.r1, "residue of n1");
    sub->add_option("--q1", cfg.q1, "modulus of n1");
    sub->add_option("--r2", cfg.r2, "residue of n2");
    sub->add_option("--q2", cfg.q2, "modulus of n2");
    sub->add_option("--tol", cfg.tol, "relative quadrature tolerance");
    sub->add_option("--threads", cfg.threads, "OpenMP threads (0: runtime default)");
    sub->add_option("--mem-budget", mem_budget, "bytes available to sieve caches");
    sub->add_flag("--streaming", cfg.force_streaming, "never cache the sieve in memory");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--name", cfg.name, "output file stem (default: command)");
    sub->add_option("--format", cfg.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--cache-dir", cfg.cache_dir, std::string("sieve cache directory (default: $") + kCacheDirEnv + ")");
    sub->add_flag("--no-cache", cfg.no_cache, "bypass the sieve cache");
    sub->add_option("--seed", cfg.seed, "seed for sampled experiments");
}

std::uint64_t to_count(double v, const std::string& field) {
    require(std::isfinite(v) && v >= 0.0 && v == std::floor(v) && v < kExact, field, "must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Divisor problem in arithmetic progressions: exact error terms, moments and sign statistics"};
    app.set_version_flag("--version", code_version());
    app.require_subcommand(1);

    ExperimentConfig cfg;
    double mem_budget = static_cast<double>(cfg.mem_budget);
    double n_max = 0, csv_rows = static_cast<double>(cfg.csv_rows), grid_points = static_cast<double>(cfg.grid_points);
    double samples = static_cast<double>(cfg.samples), trace_points = static_cast<double>(cfg.trace_points);
    double x = 0, t = 0, ck = 0, y = 0;
    CLI::Option *x_opt = nullptr, *t_opt = nullptr, *ck_opt = nullptr, *y_opt = nullptr;

    auto* s = app.add_subcommand("sieve", "d(n; p) for n <= N, checked against the hyperbola method");
    add_common(s, cfg, mem_budget);
    s->add_option("--N", n_max, "upper end of the sieve")->required();
    s->add_option("--csv-rows", csv_rows, "rows of (n, d, D) in the CSV");

    auto* d = app.add_subcommand("delta", "D(x), M(x) and Delta(x) at one point");
    add_common(d, cfg, mem_budget);
    x_opt = d->add_option("--x", x, "unscaled argument");
    t_opt = d->add_option("--t", t, "scaled argument, x = q1 q2 t");

    auto* mt = app.add_subcommand("mainterm", "main term M(x) and its coefficient");
    add_common(mt, cfg, mem_budget);
    mt->add_option("--x", cfg.x_values, "arguments")->required();

    auto* mo = app.add_subcommand("moments", "int_1^T Delta^k(q1 q2 x) dx over a log grid, C_k and exponent fits");
    add_common(mo, cfg, mem_budget);
    mo->add_option("--k", cfg.k, "moment orders (1..9)");
    mo->add_option("--tmin", cfg.tmin, "smallest grid point");
    mo->add_option("--tmax", cfg.tmax, "largest grid point");
    mo->add_option("--per-decade", cfg.per_decade, "grid points per decade");

    auto* mv = app.add_subcommand("meanvalue", "int_1^T Delta(x) dx against its linear term");
    add_common(mv, cfg, mem_budget);
    cfg.T_values.clear();
    auto* mv_T = mv->add_option("--T", cfg.T_values, "upper limits (unscaled)");

    auto* si = app.add_subcommand("shortint", "short-interval variance I(T, h0)");
    add_common(si, cfg, mem_budget);
    si->add_option("--T", cfg.T, "upper limit");
    si->add_option("--h0", cfg.h0, "shifts");

    auto* sg = app.add_subcommand("signs", "sign changes and witnesses in windows [T, T + c2 sqrt(T)]");
    add_common(sg, cfg, mem_budget);
    sg->add_option("--T", cfg.T_values, "window starts (default: random in [tmin, tmax])");
    sg->add_option("--tmin", cfg.tmin, "lower end for random window starts");
    sg->add_option("--tmax", cfg.tmax, "upper end for random window starts");
    sg->add_option("--samples", samples, "number of random windows");
    sg->add_option("--c1", cfg.c1, "witness threshold");
    sg->add_option("--c2", cfg.c2, "window length factor");
    sg->add_option("--step", cfg.step, "sampling step inside segments");

    auto* rn = app.add_subcommand("runs", "same-sign runs above c t^{1/4} on [T, 2T]");
    add_common(rn, cfg, mem_budget);
    rn->add_option("--T", cfg.T, "start of the range");
    rn->add_option("--c5,--c", cfg.c5, "threshold");
    rn->add_option("--step", cfg.step, "sampling step inside segments");
    rn->add_option("--trace-points", trace_points, "samples of Delta in the CSV trace");

    auto* kn = app.add_subcommand("kernel", "kernel-smoothed integrals against the leading sinusoid");
    add_common(kn, cfg, mem_budget);
    kn->add_option("--alpha", cfg.alpha, "kernel half-width");
    kn->add_option("--zeta", cfg.zeta, "kernel signs (+1, -1)");
    kn->add_option("--t2min", cfg.t2min, "lower end of t^2");
    kn->add_option("--t2max", cfg.t2max, "upper end of t^2");
    kn->add_option("--samples", samples, "number of sampled t");
    y_opt = kn->add_option("--y", y, "series truncation for the residual split (default: max t)");

    auto* vr = app.add_subcommand("voronoi-residual", "mean square of Delta - R0(x; y) on [U, 2U]");
    add_common(vr, cfg, mem_budget);
    vr->add_option("--U", cfg.U, "start of the range (scaled)");
    vr->add_option("--y", cfg.y_values, "truncation lengths");

    auto* ex = app.add_subcommand("excursion", "largest |F_k(X)| for X in [T, 2T]");
    add_common(ex, cfg, mem_budget);
    ex->add_option("--k", cfg.k, "odd moment order");
    ex->add_option("--T", cfg.T, "start of the range");
    ck_opt = ex->add_option("--ck", ck, "C_k to subtract (default: estimated on [T/1000, T])");
    ex->add_option("--grid-points", grid_points, "X grid size");
    ex->add_option("--per-decade", cfg.per_decade, "grid density for the C_k estimate");

    auto* pl = app.add_subcommand("plot", "write a matplotlib script for a JSON report");
    pl->add_option("--report", cfg.report, "JSON report")->required();
    pl->add_option("--out", cfg.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    RunStatus status;
    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.mem_budget = to_count(mem_budget, "mem_budget");
        cfg.n_max = to_count(n_max, "N");
        cfg.csv_rows = to_count(csv_rows, "csv_rows");
        cfg.grid_points = to_count(grid_points, "grid_points");
        cfg.samples = to_count(samples, "samples");
        cfg.trace_points = to_count(trace_points, "trace_points");
        if (x_opt->count()) cfg.x = x;
        if (t_opt->count()) cfg.t = t;
        if (ck_opt->count()) cfg.ck = ck;
        if (y_opt->count()) cfg.y = y;
        if (cfg.command == "meanvalue" && !mv_T->count()) cfg.T_values = {1e4, 1e5, 1e6};
        status = run_experiment(cfg);
    } catch (const std::exception& e) {
        const json rec = error_record(e, status.exit_code);
        status.error = rec.dump();
    }
    if (status.exit_code != 0) {
        std::cerr << status.error << '\n';
        return status.exit_code;
    }
    for (const auto& p : status.written) std::cout << p.string() << '\n';
    return 0;
}

}  // namespace divcong
