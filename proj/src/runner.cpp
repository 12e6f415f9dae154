#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gaugep/runner.hpp"

namespace gaugep {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// JSON has no inf/nan; they are written as strings.
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

json config_echo(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.entries) j[k] = v;
    return j;
}

std::string axis_name(const RunConfig& cfg) { return axis_scale(cfg) == 2.0 ? "tau" : "t"; }

std::string moment_name(const MomentSpec& m) { return m.label(); }

std::size_t nearest_record(const std::vector<double>& times, double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return best;
}

bool oracle_populations(const RunConfig& cfg) {
    if (cfg.oracle_populations_only == "true") return true;
    if (cfg.oracle_populations_only == "false") return false;
    if (cfg.absorber.epsilon != cplx{}) return false;
    return std::all_of(cfg.moments.begin(), cfg.moments.end(),
                       [](const MomentSpec& m) { return m.n == m.m; });
}

}  // namespace

// ---- CSV -----------------------------------------------------------------------

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::string write_csv(const CsvTable& t) {
    std::ostringstream os;
    os << "# gaugep-" << t.kind << " v" << kCsvSchemaVersion;
    for (const auto& [k, v] : t.meta) os << ' ' << k << '=' << v;
    os << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
    return os.str();
}

CsvTable read_csv(std::string_view text, const std::string& source) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (!std::getline(in, line)) fail("empty file");
    ++lineno;
    {
        std::istringstream hs(line);
        std::string hash, tag;
        hs >> hash >> tag;
        const std::string prefix = "gaugep-";
        if (hash != "#" || tag.rfind(prefix, 0) != 0) fail("missing gaugep schema header");
        t.kind = tag.substr(prefix.size());
        std::string version;
        hs >> version;
        if (version != "v" + std::to_string(kCsvSchemaVersion))
            fail("unsupported schema version '" + version + "'");
        std::string kv;
        while (hs >> kv) {
            const auto eq = kv.find('=');
            if (eq != std::string::npos) t.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }
    if (!std::getline(in, line)) fail("missing column header");
    ++lineno;
    {
        std::stringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) t.columns.push_back(col);
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        std::string cell;
        while (std::getline(rs, cell, ',')) {
            if (cell == "inf") {
                row.push_back(std::numeric_limits<double>::infinity());
            } else if (cell == "-inf") {
                row.push_back(-std::numeric_limits<double>::infinity());
            } else if (cell == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0') fail("bad number '" + cell + "'");
                row.push_back(v);
            }
        }
        if (row.size() != t.columns.size())
            fail("expected " + std::to_string(t.columns.size()) + " fields, got " + std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable load_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return read_csv(ss.str(), path.string());
}

Series table_series(const CsvTable& t, const MomentSpec& m) {
    const std::string base = moment_name(m);
    const std::size_t ct = t.column("time");
    const std::size_t cre = t.column(base + "_re");
    const std::size_t cim = t.column(base + "_im");
    const std::size_t cse = t.column(base + "_se");
    Series s;
    for (const auto& row : t.rows) {
        SeriesPoint p;
        p.time = row[ct];
        p.value = {row[cre], row[cim]};
        p.std_err = row[cse];
        p.valid = std::isfinite(row[cse]) && std::isfinite(row[cre]) && std::isfinite(row[cim]);
        s.push_back(p);
    }
    return s;
}

// ---- simulation ------------------------------------------------------------------

Series SimulationResult::series(std::size_t k) const {
    Series s;
    for (std::size_t r = 0; r < records.times.size(); ++r) {
        const MomentEstimate& e = moments[k][r];
        s.push_back({axis_scale * records.times[r], e.value, e.std_err, e.valid});
    }
    return s;
}

CsvTable SimulationResult::table() const {
    CsvTable t;
    t.kind = "series";
    t.meta = {{"axis", axis_name(cfg)}, {"model", cfg.model}, {"gauge", cfg.gauge},
              {"name", cfg.name}, {"seed", std::to_string(cfg.seed)}};
    t.columns.push_back("time");
    for (const auto& m : cfg.moments) {
        t.columns.push_back(moment_name(m) + "_re");
        t.columns.push_back(moment_name(m) + "_im");
        t.columns.push_back(moment_name(m) + "_se");
    }
    for (const char* c : {"mean_re_omega", "var_re_omega", "var_im_omega", "diverged_count"})
        t.columns.emplace_back(c);
    for (std::size_t r = 0; r < records.times.size(); ++r) {
        std::vector<double> row{axis_scale * records.times[r]};
        for (std::size_t k = 0; k < moments.size(); ++k) {
            const MomentEstimate& e = moments[k][r];
            // Invalid estimates (denominator below the floor) carry an infinite error.
            row.push_back(e.value.real());
            row.push_back(e.value.imag());
            row.push_back(e.valid ? e.std_err : std::numeric_limits<double>::infinity());
        }
        row.push_back(weights[r].mean_re);
        row.push_back(weights[r].var_re);
        row.push_back(weights[r].var_im);
        row.push_back(static_cast<double>(records.sums[r].diverged));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string SimulationResult::summary_json() const {
    json j;
    j["kind"] = "simulate";
    j["name"] = cfg.name;
    j["config"] = config_echo(cfg);
    j["seed"] = cfg.seed;
    j["n_traj"] = cfg.n_traj;
    j["batch_count"] = cfg.batch_count;
    j["scheme"] = to_string(cfg.step.scheme);
    j["axis"] = axis_name(cfg);
    j["wall_seconds"] = wall_seconds;
    j["diverged"] = records.diverged();
    j["denom_floor"] = records.denom_floor;
    json fin = json::object();
    bool all_valid = true;
    for (std::size_t k = 0; k < moments.size(); ++k) {
        const MomentEstimate& e = moments[k].back();
        fin[moment_name(cfg.moments[k])] = {{"re", num(e.value.real())},
                                            {"im", num(e.value.imag())},
                                            {"std_err", num(e.std_err)},
                                            {"valid", e.valid}};
        for (const auto& est : moments[k]) all_valid = all_valid && est.valid;
    }
    j["final_time"] = axis_scale * records.times.back();
    j["final"] = fin;
    j["all_valid"] = all_valid;
    json div = json::array();
    const std::size_t shown = std::min<std::size_t>(records.divergences.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        const auto& d = records.divergences[i];
        div.push_back({{"trajectory", d.trajectory_index}, {"step", d.step},
                       {"variable", d.variable}, {"magnitude", num(d.magnitude)}});
    }
    j["divergences_first"] = div;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

SimulationResult run_simulation(const RunConfig& cfg, std::optional<int> workers) {
    validate_config(cfg);
    const auto t0 = Clock::now();
    SimulationResult res;
    res.cfg = cfg;
    res.axis_scale = axis_scale(cfg);
    const GaugedSystem sys = build_system(cfg);
    const Ensemble ens = build_ensemble(cfg);
    if (cfg.gauge == "laser") {
        const LaserGaugeInfo info = laser_gauge_info(cfg.lambda, cfg.laser);
        if (info.warning)
            res.warnings.push_back("lambda < 1 leaves the moving singularity in place");
        else if (!info.removes_stationary_points)
            res.warnings.push_back("lambda <= " + format_double(info.safe_threshold) +
                                   " leaves stationary points in the gauged region");
    }
    RunOptions opts;
    opts.workers = resolve_workers(cfg, workers);
    opts.abort_fraction = cfg.abort_fraction;
    opts.overflow_guard = cfg.overflow_guard;
    opts.moments = cfg.moments;
    res.records = run_ensemble(ens, sys, cfg.step, opts);
    for (const auto& m : cfg.moments) res.moments.push_back(moment(res.records, m.n, m.m, m.mode));
    res.weights = weight_series(res.records);
    if (res.records.diverged() > 0)
        res.warnings.push_back(std::to_string(res.records.diverged()) +
                               " trajectories diverged and were excluded");
    res.wall_seconds = seconds_since(t0);
    return res;
}

// ---- oracle ----------------------------------------------------------------------

Series OracleResult::moment_series(std::size_t k) const {
    if (reference) return reference->series(k);
    return series.series(k, axis_scale);
}

CsvTable OracleResult::table() const {
    if (reference) {
        CsvTable t = reference->table();
        t.meta["oracle"] = "delta_positive_p";
        return t;
    }
    CsvTable t;
    t.kind = "series";
    t.meta = {{"axis", axis_name(cfg)}, {"model", cfg.model}, {"gauge", "oracle"},
              {"name", cfg.name}, {"fock_dim", std::to_string(cfg.fock_dim)}};
    t.columns.push_back("time");
    for (const auto& m : cfg.moments) {
        t.columns.push_back(moment_name(m) + "_re");
        t.columns.push_back(moment_name(m) + "_im");
        t.columns.push_back(moment_name(m) + "_se");
    }
    for (const char* c : {"mean_re_omega", "var_re_omega", "var_im_omega", "diverged_count"})
        t.columns.emplace_back(c);
    for (std::size_t r = 0; r < series.times.size(); ++r) {
        std::vector<double> row{axis_scale * series.times[r]};
        for (std::size_t k = 0; k < series.moments.size(); ++k) {
            row.push_back(series.values[k][r].real());
            row.push_back(series.values[k][r].imag());
            row.push_back(0.0);
        }
        row.insert(row.end(), {1.0, 0.0, 0.0, 0.0});
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string OracleResult::summary_json() const {
    if (reference) {
        json j = json::parse(reference->summary_json());
        j["kind"] = "oracle";
        j["method"] = "delta_positive_p";
        return j.dump(2) + "\n";
    }
    json j;
    j["kind"] = "oracle";
    j["method"] = "fock_rk4";
    j["name"] = cfg.name;
    j["config"] = config_echo(cfg);
    j["fock_dim"] = cfg.fock_dim;
    j["substep"] = series.substep;
    j["axis"] = axis_name(cfg);
    j["wall_seconds"] = wall_seconds;
    double max_trace_err = 0.0, max_tail = 0.0;
    for (double tr : series.trace) max_trace_err = std::max(max_trace_err, std::abs(tr - 1.0));
    for (double tl : series.tail) max_tail = std::max(max_tail, tl);
    j["max_trace_error"] = max_trace_err;
    j["max_tail"] = max_tail;
    j["final_time"] = axis_scale * series.times.back();
    json fin = json::object();
    for (std::size_t k = 0; k < series.moments.size(); ++k)
        fin[moment_name(series.moments[k])] = {{"re", series.values[k].back().real()},
                                               {"im", series.values[k].back().imag()}};
    j["final"] = fin;
    return j.dump(2) + "\n";
}

OracleResult run_oracle(const RunConfig& cfg, std::optional<int> workers) {
    const auto t0 = Clock::now();
    OracleResult res;
    res.cfg = cfg;
    res.axis_scale = axis_scale(cfg);

    if (cfg.model == "laser" || cfg.model == "frozen") {
        // No number-basis reference: the delta-initial positive-P run is the reference.
        RunConfig ref = cfg;
        ref.gauge = "none";
        ref.init = "coherent";
        ref.diffusion_generators.clear();
        validate_config(ref);
        res.reference = run_simulation(ref, workers);
        res.wall_seconds = seconds_since(t0);
        return res;
    }
    validate_config(cfg);

    FockDensityMatrix rho0;
    if (cfg.init == "coherent") {
        rho0 = coherent_rho(cfg.alpha0, cfg.fock_dim);
    } else if (cfg.init == "fock") {
        rho0 = fock_rho(cfg.fock_n, cfg.fock_dim);
    } else {
        throw ConfigError(cfg.where("init") + ": the oracle needs a coherent or fock initial state");
    }
    const std::vector<double> times = record_times(cfg.step);
    OracleOptions opts;
    opts.dt = cfg.oracle_dt;
    opts.moments = cfg.moments;
    if (cfg.model == "absorber") {
        opts.populations_only = oracle_populations(cfg);
        res.series = evolve_absorber(rho0, cfg.absorber, times, opts);
    } else {
        res.series = evolve_kerr(rho0, cfg.kerr, times, opts);
    }
    res.wall_seconds = seconds_since(t0);
    return res;
}

// ---- sweep -------------------------------------------------------------------------

CsvTable SweepResult::table() const {
    CsvTable t;
    t.kind = "sweep";
    const double readout = cfg.readout_time >= 0.0 ? cfg.readout_time : cfg.step.t_end;
    t.meta = {{"key", cfg.sweep_key}, {"axis", axis_name(cfg)}, {"model", cfg.model},
              {"gauge", cfg.gauge}, {"readout", format_double(axis_scale(cfg) * readout)},
              {"name", cfg.name}};
    t.columns.push_back("value");
    for (const auto& m : cfg.moments) {
        t.columns.push_back(moment_name(m) + "_re");
        t.columns.push_back(moment_name(m) + "_im");
        t.columns.push_back(moment_name(m) + "_se");
    }
    t.columns.insert(t.columns.end(), {"exact", "diverged_count", "error"});
    for (const SweepRow& r : rows) {
        std::vector<double> row;
        try {
            row.push_back(std::stod(r.value));
        } catch (const std::exception&) {
            row.push_back(std::abs(parse_complex(r.value)));
        }
        for (std::size_t k = 0; k < cfg.moments.size(); ++k) {
            if (r.error.empty()) {
                const MomentEstimate& e = r.estimates[k];
                row.push_back(e.value.real());
                row.push_back(e.value.imag());
                row.push_back(e.valid ? e.std_err : std::numeric_limits<double>::infinity());
            } else {
                row.insert(row.end(), 3, std::numeric_limits<double>::quiet_NaN());
            }
        }
        row.push_back(r.exact);
        row.push_back(static_cast<double>(r.diverged));
        row.push_back(r.error.empty() ? 0.0 : 1.0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string SweepResult::summary_json() const {
    json j;
    j["kind"] = "sweep";
    j["name"] = cfg.name;
    j["config"] = config_echo(cfg);
    j["key"] = cfg.sweep_key;
    j["wall_seconds"] = wall_seconds;
    json rs = json::array();
    for (const SweepRow& r : rows) {
        json row{{"value", r.value}, {"diverged", r.diverged}, {"exact", num(r.exact)}};
        if (!r.error.empty()) {
            row["error"] = r.error;
        } else {
            const MomentEstimate& e = r.estimates.front();
            row["re"] = num(e.value.real());
            row["std_err"] = num(e.std_err);
            row["valid"] = e.valid;
        }
        rs.push_back(row);
    }
    j["rows"] = rs;
    return j.dump(2) + "\n";
}

SweepResult run_sweep(const RunConfig& cfg, std::optional<int> workers) {
    if (cfg.sweep_key.empty()) throw ConfigError(cfg.where("sweep_key") + ": sweep needs sweep_key");
    if (cfg.sweep_values.empty())
        throw ConfigError(cfg.where("sweep_values") + ": sweep needs at least one value");
    const auto keys = config_keys();
    if (std::find(keys.begin(), keys.end(), cfg.sweep_key) == keys.end())
        throw ConfigError(cfg.where("sweep_key") + ": unknown key '" + cfg.sweep_key + "'");
    validate_config(cfg);

    const auto t0 = Clock::now();
    SweepResult res;
    res.cfg = cfg;
    const double readout = cfg.readout_time >= 0.0 ? cfg.readout_time : cfg.step.t_end;
    for (const std::string& v : cfg.sweep_values) {
        SweepRow row;
        row.value = v;
        try {
            RunConfig point = cfg;
            apply_setting(point, cfg.sweep_key, v, cfg.lines.count("sweep_values") ? cfg.lines.at("sweep_values") : 0);
            if (point.model == "absorber" && point.absorber.gamma == 0.0 &&
                point.absorber.epsilon == cplx{} && point.init == "coherent")
                row.exact = absorber_steady_coherent(point.alpha0);
            const SimulationResult sim = run_simulation(point, workers);
            const std::size_t r = nearest_record(sim.records.times, readout);
            row.readout_axis = sim.axis_scale * sim.records.times[r];
            for (const auto& series : sim.moments) row.estimates.push_back(series[r]);
            row.diverged = sim.records.sums[r].diverged;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        res.rows.push_back(std::move(row));
    }
    res.wall_seconds = seconds_since(t0);
    return res;
}

// ---- compare -----------------------------------------------------------------------

CompareOutcome compare_tables(const CsvTable& a, const CsvTable& b, double z_threshold,
                              const std::string& name_a, const std::string& name_b) {
    if (a.kind != "series" || b.kind != "series")
        throw ConfigError("compare needs two time-series CSV files");
    const auto axis_a = a.meta.count("axis") ? a.meta.at("axis") : "";
    const auto axis_b = b.meta.count("axis") ? b.meta.at("axis") : "";
    if (axis_a != axis_b)
        throw ConfigError("time axes differ: '" + axis_a + "' vs '" + axis_b + "'");
    CompareOutcome out;
    std::ostringstream md;
    md << "# Comparison: " << name_a << " vs " << name_b << "\n\n";
    md << "z threshold: " << format_double(z_threshold) << " (axis " << axis_a << ")\n\n";
    md << "| moment | points | max z | at time | result |\n|---|---|---|---|---|\n";
    for (const std::string& col : a.columns) {
        const std::string suffix = "_re";
        if (col.size() < suffix.size() || col.compare(col.size() - 3, 3, suffix) != 0) continue;
        const std::string base = col.substr(0, col.size() - 3);
        if (!b.has_column(col)) continue;
        MomentSpec ms;
        if (std::sscanf(base.c_str(), "n%dm%d", &ms.n, &ms.m) != 2) continue;
        const auto rep = compare_series(table_series(a, ms), table_series(b, ms), z_threshold);
        md << "| " << base << " | " << rep.times.size() << " | " << format_double(rep.max_z) << " | "
           << format_double(rep.max_z_time) << " | " << (rep.pass ? "PASS" : "FAIL") << " |\n";
        out.pass = out.pass && rep.pass;
        out.reports.emplace_back(ms, rep);
    }
    if (out.reports.empty()) throw ConfigError("no moment columns in common");
    md << "\nOverall: " << (out.pass ? "PASS" : "FAIL") << "\n";
    out.markdown = md.str();
    return out;
}

}  // namespace gaugep
