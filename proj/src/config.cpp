#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "gaugep/runner.hpp"

namespace gaugep {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ';') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw std::invalid_argument("empty");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw std::invalid_argument("not a number");
    return v;
}

long to_long(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw std::invalid_argument("empty");
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw std::invalid_argument("not an integer");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("not a boolean");
}

MomentSpec to_moment(const std::string& s) {
    // n:m or n:m@mode
    MomentSpec ms;
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected n:m");
    const auto at = s.find('@');
    ms.n = static_cast<int>(to_long(s.substr(0, colon)));
    ms.m = static_cast<int>(to_long(s.substr(colon + 1, at == std::string::npos ? std::string::npos
                                                                               : at - colon - 1)));
    if (at != std::string::npos) ms.mode = static_cast<int>(to_long(s.substr(at + 1)));
    return ms;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"name", [](RunConfig& c, const std::string& v) { c.name = v; }},
        {"model", [](RunConfig& c, const std::string& v) { c.model = v; }},
        {"gamma", [](RunConfig& c, const std::string& v) { c.absorber.gamma = to_double(v); }},
        {"epsilon", [](RunConfig& c, const std::string& v) { c.absorber.epsilon = parse_complex(v); }},
        {"G", [](RunConfig& c, const std::string& v) { c.laser.G = to_double(v); }},
        {"Q", [](RunConfig& c, const std::string& v) { c.laser.Q = to_double(v); }},
        {"N_scale", [](RunConfig& c, const std::string& v) { c.laser.N_scale = to_double(v); }},
        {"omega0", [](RunConfig& c, const std::string& v) { c.kerr.omega0 = to_double(v); }},
        {"kappa", [](RunConfig& c, const std::string& v) { c.kerr.kappa = to_double(v); }},
        {"noises", [](RunConfig& c, const std::string& v) { c.frozen_noises = static_cast<int>(to_long(v)); }},
        {"gauge", [](RunConfig& c, const std::string& v) { c.gauge = v; }},
        {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = to_double(v); }},
        {"gauge_values",
         [](RunConfig& c, const std::string& v) {
             c.gauge_values.clear();
             for (const auto& x : split_list(v)) c.gauge_values.push_back(parse_complex(x));
         }},
        {"diffusion_generators",
         [](RunConfig& c, const std::string& v) {
             c.diffusion_generators.clear();
             for (const auto& x : split_list(v)) c.diffusion_generators.push_back(parse_complex(x));
         }},
        {"init", [](RunConfig& c, const std::string& v) { c.init = v; }},
        {"alpha0", [](RunConfig& c, const std::string& v) { c.alpha0 = parse_complex(v); }},
        {"sigma0sq", [](RunConfig& c, const std::string& v) { c.sigma0sq = to_double(v); }},
        {"fock_n", [](RunConfig& c, const std::string& v) { c.fock_n = static_cast<int>(to_long(v)); }},
        {"n_traj", [](RunConfig& c, const std::string& v) { c.n_traj = to_long(v); }},
        {"batch_count", [](RunConfig& c, const std::string& v) { c.batch_count = static_cast<int>(to_long(v)); }},
        {"seed",
         [](RunConfig& c, const std::string& v) {
             const std::string t = trim(v);
             char* end = nullptr;
             const unsigned long long s = std::strtoull(t.c_str(), &end, 10);
             if (t.empty() || t[0] == '-' || end != t.c_str() + t.size())
                 throw std::invalid_argument("not an unsigned integer");
             c.seed = s;
         }},
        {"scheme", [](RunConfig& c, const std::string& v) { c.step.scheme = parse_scheme(v); }},
        {"dt", [](RunConfig& c, const std::string& v) { c.step.dt = to_double(v); }},
        {"t_end", [](RunConfig& c, const std::string& v) { c.step.t_end = to_double(v); }},
        {"record_stride",
         [](RunConfig& c, const std::string& v) { c.step.record_stride = static_cast<int>(to_long(v)); }},
        {"midpoint_iters",
         [](RunConfig& c, const std::string& v) { c.step.midpoint_iters = static_cast<int>(to_long(v)); }},
        {"ramp_factor",
         [](RunConfig& c, const std::string& v) {
             if (!c.step.ramp) c.step.ramp = RampSchedule{};
             c.step.ramp->factor = to_double(v);
         }},
        {"ramp_dt_max",
         [](RunConfig& c, const std::string& v) {
             if (!c.step.ramp) c.step.ramp = RampSchedule{};
             c.step.ramp->dt_max = to_double(v);
         }},
        {"moments",
         [](RunConfig& c, const std::string& v) {
             c.moments.clear();
             for (const auto& x : split_list(v)) c.moments.push_back(to_moment(x));
             if (c.moments.empty()) throw std::invalid_argument("empty moment list");
         }},
        {"workers", [](RunConfig& c, const std::string& v) { c.workers = static_cast<int>(to_long(v)); }},
        {"abort_fraction", [](RunConfig& c, const std::string& v) { c.abort_fraction = to_double(v); }},
        {"overflow_guard", [](RunConfig& c, const std::string& v) { c.overflow_guard = to_double(v); }},
        {"fock_dim", [](RunConfig& c, const std::string& v) { c.fock_dim = static_cast<int>(to_long(v)); }},
        {"oracle_dt", [](RunConfig& c, const std::string& v) { c.oracle_dt = to_double(v); }},
        {"oracle_populations_only",
         [](RunConfig& c, const std::string& v) {
             if (v != "auto") to_bool(v);
             c.oracle_populations_only = v;
         }},
        {"sweep_key", [](RunConfig& c, const std::string& v) { c.sweep_key = v; }},
        {"sweep_values", [](RunConfig& c, const std::string& v) { c.sweep_values = split_list(v); }},
        {"readout_time", [](RunConfig& c, const std::string& v) { c.readout_time = to_double(v); }},
        {"z_threshold", [](RunConfig& c, const std::string& v) { c.z_threshold = to_double(v); }},
    };
    return table;
}

}  // namespace

std::string RunConfig::where(const std::string& key) const {
    const auto it = lines.find(key);
    if (it == lines.end() || it->second <= 0) return source + ": " + key;
    return source + ":" + std::to_string(it->second) + ": " + key;
}

cplx parse_complex(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty complex value");
    if (s.front() == '(' && s.back() == ')') {
        const auto comma = s.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("expected (re,im)");
        return {to_double(s.substr(1, comma - 1)), to_double(s.substr(comma + 1, s.size() - comma - 2))};
    }
    const char last = s.back();
    if (last != 'i' && last != 'j') return {to_double(s), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    // Split at the last sign that is not an exponent sign or the leading sign.
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    auto imag_of = [](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return to_double(t);
    };
    if (split == std::string::npos) return {0.0, imag_of(body)};
    return {to_double(body.substr(0, split)), imag_of(body.substr(split))};
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_complex(cplx v) {
    if (v.imag() == 0.0) return format_double(v.real());
    std::string im = format_double(v.imag());
    if (im[0] != '-') im = "+" + im;
    return format_double(v.real()) + im + "i";
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) keys.push_back(k);
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
    const auto& table = setters();
    const auto it = table.find(key);
    const std::string loc = line > 0 ? cfg.source + ":" + std::to_string(line) + ": " : cfg.source + ": ";
    if (it == table.end()) throw ConfigError(loc + "unknown key '" + key + "'");
    try {
        it->second(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError(loc + "key '" + key + "': " + e.what());
    } catch (const std::exception& e) {
        throw ConfigError(loc + "key '" + key + "': cannot parse '" + value + "' (" + e.what() + ")");
    }
    cfg.lines[key] = line;
    auto existing = std::find_if(cfg.entries.begin(), cfg.entries.end(),
                                 [&](const auto& kv) { return kv.first == key; });
    if (existing != cfg.entries.end()) {
        existing->second = value;
    } else {
        cfg.entries.emplace_back(key, value);
    }
}

RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig cfg;
    cfg.source = source;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value', got '" +
                              body + "'");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": missing key");
        if (seen.count(key)) {
            throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key +
                              "' (first set on line " + std::to_string(seen[key]) + ")");
        }
        seen[key] = line;
        apply_setting(cfg, key, value, line);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

void validate_config(const RunConfig& cfg) {
    auto fail = [&](const std::string& key, const std::string& msg) {
        throw ConfigError(cfg.where(key) + ": " + msg);
    };
    static const std::vector<std::string> models{"absorber", "laser", "kerr", "frozen"};
    if (std::find(models.begin(), models.end(), cfg.model) == models.end())
        fail("model", "unknown model '" + cfg.model + "' (absorber, laser, kerr, frozen)");
    static const std::vector<std::string> gauges{"none", "circular", "laser", "constant"};
    if (std::find(gauges.begin(), gauges.end(), cfg.gauge) == gauges.end())
        fail("gauge", "unknown gauge '" + cfg.gauge + "' (none, circular, laser, constant)");
    if (cfg.gauge == "circular" && cfg.model != "absorber")
        fail("gauge", "the circular gauge applies to the absorber model only");
    if (cfg.gauge == "laser" && cfg.model != "laser")
        fail("gauge", "the laser gauge applies to the laser model only");
    if (cfg.gauge == "laser" && !(cfg.lambda > 0.0)) fail("lambda", "must be > 0");
    if (cfg.gauge == "constant" && cfg.gauge_values.empty())
        fail("gauge_values", "constant gauge needs gauge_values");
    if (cfg.model == "frozen" && cfg.frozen_noises < 1) fail("noises", "must be >= 1");

    static const std::vector<std::string> inits{"coherent", "gaussian", "fock"};
    if (std::find(inits.begin(), inits.end(), cfg.init) == inits.end())
        fail("init", "unknown initial condition '" + cfg.init + "' (coherent, gaussian, fock)");
    if (cfg.sigma0sq < 0.0) fail("sigma0sq", "must be >= 0");
    if (cfg.fock_n < 0) fail("fock_n", "must be >= 0");
    if (cfg.batch_count < 2) fail("batch_count", "must be >= 2");
    if (cfg.n_traj < cfg.batch_count) fail("n_traj", "must be >= batch_count");
    if (cfg.n_traj % cfg.batch_count != 0)
        fail("n_traj", std::to_string(cfg.n_traj) + " is not divisible by batch_count " +
                           std::to_string(cfg.batch_count));
    if (cfg.workers < 0) fail("workers", "must be >= 0");
    if (!(cfg.abort_fraction > 0.0)) fail("abort_fraction", "must be > 0");
    if (!(cfg.overflow_guard > 0.0)) fail("overflow_guard", "must be > 0");
    if (cfg.fock_dim < 2) fail("fock_dim", "must be >= 2");
    if (!(cfg.oracle_dt > 0.0)) fail("oracle_dt", "must be > 0");
    if (!(cfg.z_threshold > 0.0)) fail("z_threshold", "must be > 0");
    for (const auto& m : cfg.moments) {
        if (m.n < 0 || m.m < 0) fail("moments", "orders must be >= 0");
        if (m.mode != 0) fail("moments", "shipped models have a single mode (mode 0)");
    }
    try {
        validate_step_config(cfg.step);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        std::string key = "dt";
        for (const char* k : {"t_end", "midpoint_iters", "record_stride", "ramp"})
            if (msg.find(k) != std::string::npos) key = k == std::string("ramp") ? "ramp_factor" : k;
        fail(key, msg);
    }
    if (cfg.readout_time > cfg.step.t_end * (1.0 + 1e-12))
        fail("readout_time", "is after t_end");
    // Parameter checks live in the model and gauge constructors.
    try {
        (void)build_system(cfg);
    } catch (const ConfigError& e) {
        fail(cfg.gauge != "none" ? "gauge" : "model", e.what());
    }
}

double axis_scale(const RunConfig& cfg) { return cfg.model == "absorber" ? 2.0 : 1.0; }

ModelSpec build_model(const RunConfig& cfg) {
    if (cfg.model == "absorber") return absorber_model(cfg.absorber);
    if (cfg.model == "laser") return laser_model(cfg.laser);
    if (cfg.model == "kerr") return kerr_model(cfg.kerr);
    if (cfg.model == "frozen") return frozen_model(cfg.frozen_noises);
    throw ConfigError("unknown model '" + cfg.model + "'");
}

GaugedSystem build_system(const RunConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    GaugedSystem sys;
    if (cfg.gauge == "none") {
        sys = positive_p(model);
    } else if (cfg.gauge == "circular") {
        sys = apply_drift_gauge(model, circular_gauge());
    } else if (cfg.gauge == "laser") {
        sys = apply_drift_gauge(model, laser_gauge(cfg.lambda, cfg.laser));
    } else if (cfg.gauge == "constant") {
        sys = apply_drift_gauge(model, constant_gauge(cfg.gauge_values));
    } else {
        throw ConfigError("unknown gauge '" + cfg.gauge + "'");
    }
    if (!cfg.diffusion_generators.empty()) {
        DiffusionGauge dg;
        dg.generators = cfg.diffusion_generators;
        sys = apply_diffusion_gauge(std::move(sys), dg);
    }
    return sys;
}

Ensemble build_ensemble(const RunConfig& cfg) {
    const int modes = cfg.model == "frozen" ? 1 : build_model(cfg).modes;
    Ensemble ens;
    if (cfg.init == "coherent") {
        std::vector<cplx> a(static_cast<std::size_t>(modes), cfg.alpha0);
        ens = init_coherent(a, static_cast<int>(cfg.n_traj), cfg.seed, cfg.batch_count);
    } else if (cfg.init == "gaussian") {
        ens = init_gaussian(cfg.sigma0sq, static_cast<int>(cfg.n_traj), cfg.seed, cfg.batch_count, modes);
    } else {
        throw ConfigError(cfg.where("init") + ": '" + cfg.init +
                          "' initial states are available to the oracle only");
    }
    ens.model_id = cfg.model;
    ens.gauge_id = cfg.gauge;
    return ens;
}

int resolve_workers(const RunConfig& cfg, std::optional<int> flag) {
    if (flag && *flag > 0) return *flag;
    if (const char* env = std::getenv("WORKER_COUNT")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw ConfigError("WORKER_COUNT must be a positive integer, got '" + std::string(env) + "'");
    }
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace gaugep
