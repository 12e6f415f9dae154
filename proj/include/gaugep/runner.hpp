#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaugep/ensemble.hpp"
#include "gaugep/estimator.hpp"
#include "gaugep/fock.hpp"
#include "gaugep/gauges.hpp"
#include "gaugep/integrator.hpp"
#include "gaugep/models.hpp"

namespace gaugep {

inline constexpr int kCsvSchemaVersion = 1;

/// Everything needed to run one simulation, oracle or sweep. Times are in the
/// model's native units; CSV output uses the figure axis (tau = 2t for the absorber).
struct RunConfig {
    std::string name = "run";

    std::string model = "absorber";  // absorber | laser | kerr | frozen
    AbsorberParams absorber;
    LaserParams laser;
    KerrParams kerr;
    int frozen_noises = 1;

    std::string gauge = "none";  // none | circular | laser | constant
    double lambda = 4.0;
    std::vector<cplx> gauge_values;
    std::vector<cplx> diffusion_generators;

    std::string init = "coherent";  // coherent | gaussian | fock (oracle only)
    cplx alpha0{};
    double sigma0sq = 0.0;
    int fock_n = 0;

    long n_traj = 1000;
    int batch_count = kDefaultBatchCount;
    std::uint64_t seed = 1;
    StepConfig step;

    std::vector<MomentSpec> moments{MomentSpec{1, 1, 0}};
    int workers = 0;  // 0: WORKER_COUNT or hardware concurrency
    double abort_fraction = 0.5;
    double overflow_guard = kOverflowGuard;

    int fock_dim = 20;
    double oracle_dt = 1e-3;
    std::string oracle_populations_only = "auto";  // auto | true | false

    std::string sweep_key;
    std::vector<std::string> sweep_values;
    double readout_time = -1.0;  // native; < 0 means t_end

    double z_threshold = 3.0;

    // Provenance for error messages: source name and the line of each key.
    std::string source = "config";
    std::map<std::string, int> lines;
    std::vector<std::pair<std::string, std::string>> entries;  // as given, in order

    std::string where(const std::string& key) const;
};

/// Parse "key = value" lines; '#' starts a comment. Unknown keys, duplicates and
/// malformed values raise ConfigError naming the line.
RunConfig parse_config(std::string_view text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Set one key as if it appeared in the file (used by --set, --seed and sweeps).
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0);

/// Keys understood by parse_config.
std::vector<std::string> config_keys();

/// Cross-field validation; runs before any compute.
void validate_config(const RunConfig& cfg);

cplx parse_complex(const std::string& s);
std::string format_complex(cplx v);
std::string format_double(double v);

ModelSpec build_model(const RunConfig& cfg);
GaugedSystem build_system(const RunConfig& cfg);
Ensemble build_ensemble(const RunConfig& cfg);
double axis_scale(const RunConfig& cfg);

/// Worker count: explicit flag, then WORKER_COUNT, then config, then hardware.
int resolve_workers(const RunConfig& cfg, std::optional<int> flag = std::nullopt);

// ---- results -----------------------------------------------------------------

struct CsvTable {
    std::string kind = "series";  // series | sweep
    std::map<std::string, std::string> meta;  // written to the header comment
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  // throws ConfigError
    bool has_column(const std::string& name) const;
};

std::string write_csv(const CsvTable& t);
CsvTable read_csv(std::string_view text, const std::string& source = "csv");
CsvTable load_csv(const std::filesystem::path& path);

/// Moment column of a series table as a Series (std_err column; non-finite
/// std_err marks a point invalid).
Series table_series(const CsvTable& t, const MomentSpec& m);

struct SimulationResult {
    RunConfig cfg;
    TrajectoryRecordSet records;
    std::vector<std::vector<MomentEstimate>> moments;  // [moment][record]
    std::vector<WeightDiagnostics> weights;
    double axis_scale = 1.0;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;

    Series series(std::size_t k = 0) const;
    CsvTable table() const;
    std::string summary_json() const;
};

struct OracleResult {
    RunConfig cfg;
    OracleSeries series;
    std::optional<SimulationResult> reference;  // laser: delta-initial positive-P run
    double axis_scale = 1.0;
    double wall_seconds = 0.0;

    Series moment_series(std::size_t k = 0) const;
    CsvTable table() const;
    std::string summary_json() const;
};

SimulationResult run_simulation(const RunConfig& cfg, std::optional<int> workers = std::nullopt);
OracleResult run_oracle(const RunConfig& cfg, std::optional<int> workers = std::nullopt);

struct SweepRow {
    std::string value;
    std::vector<MomentEstimate> estimates;  // per moment at the readout time
    double readout_axis = 0.0;
    double exact = std::numeric_limits<double>::quiet_NaN();
    long diverged = 0;
    std::string error;
};

struct SweepResult {
    RunConfig cfg;
    std::vector<SweepRow> rows;
    double wall_seconds = 0.0;

    CsvTable table() const;
    std::string summary_json() const;
};

/// One simulation per sweep value; failures are recorded per row and the sweep
/// continues.
SweepResult run_sweep(const RunConfig& cfg, std::optional<int> workers = std::nullopt);

struct CompareOutcome {
    std::vector<std::pair<MomentSpec, ComparisonReport>> reports;
    bool pass = true;
    std::string markdown;
};

CompareOutcome compare_tables(const CsvTable& a, const CsvTable& b, double z_threshold,
                              const std::string& name_a = "a", const std::string& name_b = "b");

// ---- recipes -------------------------------------------------------------------

struct RecipeRun {
    std::string name;
    std::string command;  // simulate | oracle | sweep
    std::string config;   // key = value text
};

struct RecipeCompare {
    std::string a;
    std::string b;
    double z_threshold = 3.0;
    bool expect_pass = true;
};

struct Recipe {
    std::string name;
    std::string description;
    std::vector<RecipeRun> runs;
    std::vector<RecipeCompare> compares;

    const RecipeRun& run(const std::string& name) const;
    RunConfig config(const std::string& run_name) const;
};

const std::vector<Recipe>& recipes();
const Recipe& find_recipe(const std::string& name);

}  // namespace gaugep
