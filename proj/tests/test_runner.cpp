#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gaugep/runner.hpp"

using namespace gaugep;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "test.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kSmall = R"(model = absorber
alpha0 = 0.70710678118654752
gauge = circular
n_traj = 600
batch_count = 20
seed = 9
scheme = strat_semi_implicit
dt = 0.01
t_end = 0.5
record_stride = 10
)";

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / ("gaugep_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(GAUGEP_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config errors name the line") {
    CHECK(error_of("model = absorber\nbogus = 1\n").find("test.cfg:2: unknown key 'bogus'") == 0);
    CHECK(error_of("# comment\n\nseed = 1\nseed = 2\n").find("test.cfg:4: duplicate key 'seed'") == 0);
    CHECK(error_of("dt = fast\n").find("test.cfg:1:") == 0);
    CHECK(error_of("n_traj 100\n").find("test.cfg:1: expected 'key = value'") == 0);
    CHECK(error_of("alpha0 = 1 # trailing comment\n").empty());

    RunConfig bad = parse_config("n_traj = 1001\nbatch_count = 20\n", "x.cfg");
    try {
        validate_config(bad);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x.cfg:1: n_traj") == 0);
    }
    CHECK_THROWS_AS(validate_config(parse_config("model = absorber\ngauge = laser\n")), ConfigError);
    CHECK_THROWS_AS(validate_config(parse_config("model = laser\ngauge = circular\n")), ConfigError);
    CHECK_THROWS_AS(validate_config(parse_config("gamma = -1\n")), ConfigError);
}

TEST_CASE("complex and double formatting") {
    CHECK(parse_complex("1.5") == cplx{1.5, 0});
    CHECK(parse_complex("2i") == cplx{0, 2});
    CHECK(parse_complex("-i") == cplx{0, -1});
    CHECK(parse_complex("1-2i") == cplx{1, -2});
    CHECK(parse_complex("1e-3+4e+2j") == cplx{1e-3, 4e2});
    CHECK(parse_complex("(0.5, -0.25)") == cplx{0.5, -0.25});
    CHECK_THROWS(parse_complex(""));
    CHECK_THROWS(parse_complex("abc"));
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(parse_complex(format_complex(cplx{0.1, -1.0 / 3})) == cplx{0.1, -1.0 / 3});
}

TEST_CASE("CSV round trip") {
    CsvTable t;
    t.meta = {{"axis", "tau"}, {"name", "x"}};
    t.columns = {"time", "n1m1_re", "n1m1_im", "n1m1_se"};
    t.rows = {{0.0, 0.5, 0.0, 0.0}, {0.2, 1.0 / 3, -0.0, std::numeric_limits<double>::infinity()}};
    const std::string text = write_csv(t);
    const CsvTable back = read_csv(text);
    CHECK(back.kind == "series");
    CHECK(back.meta == t.meta);
    CHECK(back.columns == t.columns);
    CHECK(back.rows[1][1] == 1.0 / 3);
    CHECK(std::isinf(back.rows[1][3]));
    CHECK(write_csv(back) == text);

    const Series s = table_series(back, {1, 1, 0});
    CHECK(s[0].valid);
    CHECK_FALSE(s[1].valid);
    CHECK_THROWS_AS(read_csv("time,x\n1,2\n"), ConfigError);
    CHECK_THROWS_AS(read_csv("# gaugep-series v9\ntime\n"), ConfigError);
}

TEST_CASE("simulation output is identical across worker counts and repeats") {
    const RunConfig cfg = parse_config(kSmall);
    const std::string one = write_csv(run_simulation(cfg, 1).table());
    CHECK(write_csv(run_simulation(cfg, 2).table()) == one);
    CHECK(write_csv(run_simulation(cfg, 8).table()) == one);
    CHECK(write_csv(run_simulation(cfg, 1).table()) == one);

    RunConfig other = cfg;
    apply_setting(other, "seed", "10");
    CHECK(write_csv(run_simulation(other, 1).table()) != one);

    const CsvTable t = read_csv(one);
    CHECK(t.meta.at("axis") == "tau");
    CHECK(t.rows.size() == 6);
    CHECK(t.rows.back()[0] == doctest::Approx(1.0));
    const CompareOutcome same = compare_tables(t, t, 3.0);
    CHECK(same.pass);
    CHECK(same.reports.front().second.max_z == 0.0);
}

TEST_CASE("zero duration gives the initial row only") {
    RunConfig cfg = parse_config(kSmall);
    apply_setting(cfg, "t_end", "0");
    const SimulationResult res = run_simulation(cfg, 1);
    REQUIRE(res.table().rows.size() == 1);
    CHECK(res.series().front().value.real() == doctest::Approx(0.5));
}

TEST_CASE("worker count resolution") {
    RunConfig cfg;
    cfg.workers = 3;
    ::unsetenv("WORKER_COUNT");
    CHECK(resolve_workers(cfg) == 3);
    CHECK(resolve_workers(cfg, 5) == 5);
    ::setenv("WORKER_COUNT", "2", 1);
    CHECK(resolve_workers(cfg) == 2);
    ::setenv("WORKER_COUNT", "two", 1);
    CHECK_THROWS_AS(resolve_workers(cfg), ConfigError);
    ::setenv("WORKER_COUNT", "0", 1);
    CHECK_THROWS_AS(resolve_workers(cfg), ConfigError);
    ::unsetenv("WORKER_COUNT");
    cfg.workers = 0;
    CHECK(resolve_workers(cfg) >= 1);
}

TEST_CASE("oracle runs") {
    RunConfig cfg = parse_config("model = absorber\nalpha0 = 0\nt_end = 1\ndt = 0.01\nrecord_stride = 10\n");
    const OracleResult vac = run_oracle(cfg);
    for (const auto& p : vac.moment_series()) CHECK(p.value == cplx{});

    apply_setting(cfg, "init", "fock");
    apply_setting(cfg, "fock_n", "2");
    const OracleResult two = run_oracle(cfg);
    const Series s = two.moment_series();
    for (const auto& p : s) CHECK(std::abs(p.value.real() - 2.0 * std::exp(-p.time)) < 1e-8);

    apply_setting(cfg, "init", "gaussian");
    CHECK_THROWS_AS(run_oracle(cfg), ConfigError);
}

TEST_CASE("sweeps record failures and continue") {
    RunConfig cfg = parse_config(kSmall);
    cfg.gauge = "none";
    apply_setting(cfg, "sweep_key", "gamma");
    apply_setting(cfg, "sweep_values", "0, -1, 0.1");
    const SweepResult res = run_sweep(cfg, 1);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].error.empty());
    CHECK_FALSE(res.rows[1].error.empty());
    CHECK(res.rows[2].error.empty());
    CHECK(std::isfinite(res.rows[0].exact));
    CHECK(std::isnan(res.rows[2].exact));
    const CsvTable t = read_csv(write_csv(res.table()));
    CHECK(t.kind == "sweep");
    CHECK(t.rows[1][t.column("error")] == 1.0);

    RunConfig empty = parse_config(kSmall);
    apply_setting(empty, "sweep_key", "gamma");
    CHECK_THROWS_AS(run_sweep(empty), ConfigError);
    apply_setting(empty, "sweep_values", "1");
    apply_setting(empty, "sweep_key", "nonsense");
    CHECK_THROWS_AS(run_sweep(empty), ConfigError);
}

TEST_CASE("recipes parse and validate") {
    for (const char* name : {"fig1_absorber", "fig2_sweep", "fig3_one_two_boson", "fig4_driven", "fig5_laser",
                             "kerr_demo", "variance_laws"}) {
        const Recipe& r = find_recipe(name);
        CHECK_FALSE(r.runs.empty());
        for (const auto& run : r.runs) {
            INFO(name << "/" << run.name);
            const RunConfig cfg = r.config(run.name);
            if (run.command == "simulate") CHECK_NOTHROW(validate_config(cfg));
        }
        for (const auto& c : r.compares) {
            CHECK_NOTHROW(r.run(c.a));
            CHECK_NOTHROW(r.run(c.b));
        }
    }
    CHECK_THROWS_AS(find_recipe("fig9"), ConfigError);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch();
    write(dir / "ok.cfg", std::string(kSmall) + "name = ok\n");
    write(dir / "bad.cfg", "model = absorber\nbogus = 1\n");
    write(dir / "blowup.cfg",
          "model = absorber\ninit = coherent\nalpha0 = 3\nn_traj = 40\nbatch_count = 2\nscheme = ito_euler\n"
          "dt = 0.5\nt_end = 20\nrecord_stride = 1\noverflow_guard = 1e6\nabort_fraction = 0.1\nname = blow\n");
    const std::string out = " --workers 1 --out " + dir.string();

    CHECK(cli("simulate --config " + (dir / "ok.cfg").string() + out) == 0);
    CHECK(fs::exists(dir / "ok.csv"));
    CHECK(fs::exists(dir / "ok.json"));
    const std::string first = slurp(dir / "ok.csv");
    CHECK(cli("simulate --config " + (dir / "ok.cfg").string() + out) == 0);
    CHECK(slurp(dir / "ok.csv") == first);

    CHECK(cli("") == 1);
    CHECK(cli("simulate") == 1);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("simulate --config " + (dir / "bad.cfg").string() + out) == 2);
    CHECK(cli("simulate --config " + (dir / "missing.cfg").string() + out) == 2);
    CHECK(cli("simulate --config " + (dir / "blowup.cfg").string() + out) == 3);

    const std::string ok_csv = (dir / "ok.csv").string();
    CHECK(cli("compare " + ok_csv + " " + ok_csv) == 0);
    // Shift one value far outside its error bar.
    CsvTable shifted = read_csv(first);
    shifted.rows.back()[shifted.column("n1m1_re")] += 10.0;
    write(dir / "shifted.csv", write_csv(shifted));
    CHECK(cli("compare " + ok_csv + " " + (dir / "shifted.csv").string()) == 4);
    CHECK(cli("recipes") == 0);
    CHECK(cli("recipes --show fig1_absorber") == 0);
    fs::remove_all(dir);
}
