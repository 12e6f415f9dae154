// gaugep command-line runner: simulate, oracle, compare, sweep, recipes.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gaugep/runner.hpp"

namespace fs = std::filesystem;
using namespace gaugep;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kDiverged = 3, kCompareFail = 4 };

struct Common {
    std::string config;
    std::string recipe;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out = ".";
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "key = value run configuration");
    app->add_option("--recipe", c.recipe, "named figure recipe");
    app->add_option("--seed", c.seed, "override the master seed");
    app->add_option("--workers", c.workers, "worker threads (default WORKER_COUNT or all cores)");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--set", c.sets, "extra key=value override (repeatable)");
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << text;
}

void apply_overrides(RunConfig& cfg, const Common& c) {
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        const std::string source = cfg.source;
        cfg.source = "--set";
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        cfg.source = source;
    }
    if (c.seed) apply_setting(cfg, "seed", std::to_string(*c.seed));
}

// Configs selected by --config or by the runs of --recipe matching `command`.
std::vector<RunConfig> selected(const Common& c, const std::string& command) {
    if (c.config.empty() == c.recipe.empty())
        throw CLI::ValidationError("give exactly one of --config or --recipe");
    std::vector<RunConfig> out;
    if (!c.config.empty()) {
        out.push_back(load_config(c.config));
    } else {
        const Recipe& r = find_recipe(c.recipe);
        for (const auto& run : r.runs)
            if (run.command == command) out.push_back(r.config(run.name));
        if (out.empty())
            throw ConfigError("recipe '" + c.recipe + "' has no " + command + " runs");
    }
    for (auto& cfg : out) apply_overrides(cfg, c);
    return out;
}

int cmd_simulate(const Common& c) {
    for (const RunConfig& cfg : selected(c, "simulate")) {
        const SimulationResult res = run_simulation(cfg, c.workers);
        const fs::path base = fs::path(c.out) / cfg.name;
        write_file(base.string() + ".csv", write_csv(res.table()));
        write_file(base.string() + ".json", res.summary_json());
        const auto& fin = res.moments.front().back();
        std::cout << cfg.name << ": " << res.records.times.size() << " records, final "
                  << cfg.moments.front().label() << " = " << format_complex(fin.value) << " +- "
                  << format_double(fin.std_err) << ", diverged " << res.records.diverged() << ", "
                  << res.wall_seconds << " s -> " << base.string() << ".csv\n";
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    }
    return kOk;
}

int cmd_oracle(const Common& c) {
    for (const RunConfig& cfg : selected(c, "oracle")) {
        const OracleResult res = run_oracle(cfg, c.workers);
        const fs::path base = fs::path(c.out) / cfg.name;
        write_file(base.string() + ".csv", write_csv(res.table()));
        write_file(base.string() + ".json", res.summary_json());
        std::cout << cfg.name << ": oracle written to " << base.string() << ".csv (" << res.wall_seconds
                  << " s)\n";
    }
    return kOk;
}

int cmd_sweep(const Common& c) {
    for (const RunConfig& cfg : selected(c, "sweep")) {
        const SweepResult res = run_sweep(cfg, c.workers);
        const fs::path base = fs::path(c.out) / cfg.name;
        write_file(base.string() + ".csv", write_csv(res.table()));
        write_file(base.string() + ".json", res.summary_json());
        int failed = 0;
        for (const auto& row : res.rows) {
            if (!row.error.empty()) {
                ++failed;
                std::cerr << cfg.sweep_key << "=" << row.value << ": " << row.error << "\n";
            }
        }
        std::cout << cfg.name << ": " << res.rows.size() << " points (" << failed << " failed) -> "
                  << base.string() << ".csv\n";
    }
    return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, double z, const std::string& report) {
    const CompareOutcome out = compare_tables(load_csv(a), load_csv(b), z, a, b);
    std::cout << out.markdown;
    if (!report.empty()) write_file(report, out.markdown);
    return out.pass ? kOk : kCompareFail;
}

int cmd_recipes(const std::string& show, const std::string& run_name, const Common& c) {
    if (show.empty() && run_name.empty()) {
        for (const auto& r : recipes()) {
            std::cout << r.name << "  " << r.description << "\n";
            for (const auto& run : r.runs) std::cout << "    " << run.command << " " << run.name << "\n";
        }
        return kOk;
    }
    if (!show.empty()) {
        const Recipe& r = find_recipe(show);
        for (const auto& run : r.runs) std::cout << "# --- " << run.command << " " << run.name << "\n" << run.config << "\n";
        return kOk;
    }
    // Execute every run of the recipe, then its comparisons.
    const Recipe& r = find_recipe(run_name);
    std::map<std::string, fs::path> outputs;
    for (const auto& run : r.runs) {
        RunConfig cfg = r.config(run.name);
        apply_overrides(cfg, c);
        const fs::path base = fs::path(c.out) / cfg.name;
        if (run.command == "simulate") {
            const SimulationResult res = run_simulation(cfg, c.workers);
            write_file(base.string() + ".csv", write_csv(res.table()));
            write_file(base.string() + ".json", res.summary_json());
        } else if (run.command == "oracle") {
            const OracleResult res = run_oracle(cfg, c.workers);
            write_file(base.string() + ".csv", write_csv(res.table()));
            write_file(base.string() + ".json", res.summary_json());
        } else {
            const SweepResult res = run_sweep(cfg, c.workers);
            write_file(base.string() + ".csv", write_csv(res.table()));
            write_file(base.string() + ".json", res.summary_json());
        }
        outputs[run.name] = base.string() + ".csv";
        std::cout << run.command << " " << run.name << " -> " << base.string() << ".csv\n";
    }
    bool as_expected = true;
    for (const auto& cmp : r.compares) {
        const CompareOutcome out =
            compare_tables(load_csv(outputs.at(cmp.a)), load_csv(outputs.at(cmp.b)), cmp.z_threshold,
                           cmp.a, cmp.b);
        std::cout << out.markdown << "(expected " << (cmp.expect_pass ? "PASS" : "FAIL") << ")\n\n";
        as_expected = as_expected && out.pass == cmp.expect_pass;
    }
    return as_expected ? kOk : kCompareFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauge-P weighted trajectory simulator"};
    app.require_subcommand(1);

    Common sim, ora, swp, rec;
    auto* s_sim = app.add_subcommand("simulate", "run stochastic trajectories");
    add_common(s_sim, sim);
    auto* s_ora = app.add_subcommand("oracle", "exact number-basis reference");
    add_common(s_ora, ora);
    auto* s_swp = app.add_subcommand("sweep", "one simulation per value of a swept key");
    add_common(s_swp, swp);

    std::string file_a, file_b, report;
    double z = 3.0;
    auto* s_cmp = app.add_subcommand("compare", "z-score comparison of two series CSVs");
    s_cmp->add_option("a", file_a, "first CSV")->required();
    s_cmp->add_option("b", file_b, "second CSV")->required();
    s_cmp->add_option("--z", z, "z threshold");
    s_cmp->add_option("--report", report, "write the markdown report here");

    std::string show, run_name;
    auto* s_rec = app.add_subcommand("recipes", "list, show or run figure recipes");
    s_rec->add_option("--show", show, "print the configs of a recipe");
    s_rec->add_option("--run", run_name, "run every step of a recipe");
    s_rec->add_option("--seed", rec.seed, "override the master seed");
    s_rec->add_option("--workers", rec.workers, "worker threads");
    s_rec->add_option("--out", rec.out, "output directory");
    s_rec->add_option("--set", rec.sets, "extra key=value override (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*s_sim) return cmd_simulate(sim);
        if (*s_ora) return cmd_oracle(ora);
        if (*s_swp) return cmd_sweep(swp);
        if (*s_cmp) return cmd_compare(file_a, file_b, z, report);
        if (*s_rec) return cmd_recipes(show, run_name, rec);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DivergenceAbort& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kValidation;
    } catch (const TruncationError& e) {
        std::cerr << "truncation error: " << e.what() << "\n";
        return kValidation;
    } catch (const UnsupportedInput& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return kValidation;
    }
    return kUsage;
}
