#include "gaugep/runner.hpp"

namespace gaugep {

namespace {

// Absorber times are native t; the figures are plotted against tau = 2t.
const char* kFig1Base = R"(model = absorber
gamma = 0
epsilon = 0
init = coherent
alpha0 = 0.70710678118654752
n_traj = 40000
seed = 1
scheme = strat_semi_implicit
dt = 0.005
t_end = 3.5          # tau = 7
record_stride = 20   # every 0.2 in tau
fock_dim = 20
)";

const char* kFig2Base = R"(model = absorber
gamma = 0
epsilon = 0
init = coherent
alpha0 = 0.5
n_traj = 100000
seed = 202
scheme = strat_semi_implicit
dt = 0.01
t_end = 3.5          # tau = 7
record_stride = 50
readout_time = 3.5
sweep_key = alpha0
sweep_values = 0.25, 0.5, 0.70710678118654752, 1, 1.5, 2
)";

const char* kFig3Base = R"(model = absorber
gamma = 0.1
epsilon = 0
init = coherent
alpha0 = 10
seed = 303
scheme = strat_semi_implicit
dt = 0.0005
t_end = 10           # tau = 20
record_stride = 100  # every 0.1 in tau
fock_dim = 180
)";

const char* kFig4Base = R"(model = absorber
gamma = 0
epsilon = 0.05
init = coherent
alpha0 = 0
seed = 404
scheme = strat_semi_implicit
dt = 0.025
t_end = 10           # tau = 20
record_stride = 8    # every 0.4 in tau
fock_dim = 20
)";

const char* kFig5Base = R"(model = laser
G = 1
Q = 0.25
seed = 505
scheme = strat_semi_implicit
dt = 0.005
t_end = 4
record_stride = 20
)";

const char* kKerrBase = R"(model = kerr
omega0 = 0.5
kappa = 1
init = coherent
alpha0 = 1
n_traj = 100000
seed = 606
scheme = strat_semi_implicit
dt = 0.001
t_end = 0.5
record_stride = 100
moments = 0:1, 1:1
fock_dim = 24
)";

const char* kVarianceBase = R"(model = frozen
noises = 1
gauge = constant
init = coherent
alpha0 = 0
n_traj = 100000
seed = 707
scheme = ito_euler
dt = 0.001
t_end = 1
record_stride = 100
)";

std::string cat(const char* base, const std::string& extra) { return std::string(base) + extra; }

std::vector<Recipe> build_recipes() {
    std::vector<Recipe> out;

    out.push_back({"fig1_absorber",
                   "Two-boson absorber from |1/sqrt2>: circular gauge, positive-P and number-basis oracle",
                   {{"gauge", "simulate", cat(kFig1Base, "name = fig1_gauge\ngauge = circular\n")},
                    {"posp", "simulate", cat(kFig1Base, "name = fig1_posp\ngauge = none\n")},
                    {"exact", "oracle", cat(kFig1Base, "name = fig1_exact\n")}},
                   {{"gauge", "exact", 3.0, true}, {"posp", "exact", 5.0, false}}});

    out.push_back({"fig2_sweep",
                   "Steady-state <n> at tau = 7 over initial coherent amplitudes",
                   {{"gauge", "sweep", cat(kFig2Base, "name = fig2_gauge\ngauge = circular\n")},
                    {"posp", "sweep", cat(kFig2Base, "name = fig2_posp\ngauge = none\n")}},
                   {}});

    out.push_back({"fig3_one_two_boson",
                   "One- plus two-boson absorber (gamma = 0.1) from <n> = 100",
                   {{"gauge", "simulate", cat(kFig3Base, "name = fig3_gauge\ngauge = circular\nn_traj = 100000\n")},
                    {"posp", "simulate", cat(kFig3Base, "name = fig3_posp\ngauge = none\nn_traj = 10000\n")},
                    {"exact", "oracle", cat(kFig3Base, "name = fig3_exact\n")}},
                   {{"gauge", "exact", 3.0, true}, {"posp", "exact", 5.0, false}}});

    out.push_back({"fig4_driven",
                   "Driven two-boson absorber (epsilon = 0.05) from vacuum",
                   {{"gauge", "simulate",
                     cat(kFig4Base, "name = fig4_gauge\ngauge = circular\nn_traj = 100000\n")},
                    {"posp", "simulate", cat(kFig4Base, "name = fig4_posp\ngauge = none\nn_traj = 1000\n")},
                    {"exact", "oracle", cat(kFig4Base, "name = fig4_exact\nn_traj = 1000\n")}},
                   {{"gauge", "exact", 3.0, true}, {"posp", "exact", 5.0, false}}});

    out.push_back(
        {"fig5_laser",
         "Single-mode laser G = 1, Q = 0.25 from vacuum",
         {{"reference", "oracle",
           cat(kFig5Base, "name = fig5_reference\ninit = coherent\nalpha0 = 0\nn_traj = 100000\n")},
          {"gauge", "simulate",
           cat(kFig5Base,
               "name = fig5_gauge\ngauge = laser\nlambda = 4\ninit = gaussian\nsigma0sq = 0.1\nn_traj = 4000\n")},
          {"posp_broad", "simulate",
           cat(kFig5Base, "name = fig5_posp_broad\ninit = gaussian\nsigma0sq = 0.1\nn_traj = 100000\n")},
          {"posp_wide", "simulate",
           cat(kFig5Base,
               "name = fig5_posp_wide\ninit = gaussian\nsigma0sq = 1\nn_traj = 10000\nabort_fraction = 1\n")}},
         {{"gauge", "reference", 3.0, true}, {"posp_broad", "reference", 5.0, false}}});

    out.push_back({"kerr_demo",
                   "Kerr oscillator with and without an imaginary diffusion gauge",
                   {{"plain", "simulate", cat(kKerrBase, "name = kerr_plain\n")},
                    {"rotated", "simulate",
                     cat(kKerrBase, "name = kerr_rotated\ndiffusion_generators = 0.5i\n")},
                    {"exact", "oracle", cat(kKerrBase, "name = kerr_exact\n")}},
                   {{"plain", "exact", 3.0, true}, {"rotated", "exact", 3.0, true}}});

    out.push_back({"variance_laws",
                   "Weight spread under constant imaginary and real gauges",
                   {{"imaginary", "simulate", cat(kVarianceBase, "name = variance_imaginary\ngauge_values = 1i\n")},
                    {"real", "simulate", cat(kVarianceBase, "name = variance_real\ngauge_values = 1\n")}},
                   {}});
    return out;
}

}  // namespace

const RecipeRun& Recipe::run(const std::string& run_name) const {
    for (const auto& r : runs)
        if (r.name == run_name) return r;
    throw ConfigError("recipe '" + name + "' has no run '" + run_name + "'");
}

RunConfig Recipe::config(const std::string& run_name) const {
    return parse_config(run(run_name).config, name + "/" + run_name);
}

const std::vector<Recipe>& recipes() {
    static const std::vector<Recipe> all = build_recipes();
    return all;
}

const Recipe& find_recipe(const std::string& name) {
    for (const auto& r : recipes())
        if (r.name == name) return r;
    std::string known;
    for (const auto& r : recipes()) known += (known.empty() ? "" : ", ") + r.name;
    throw ConfigError("unknown recipe '" + name + "' (known: " + known + ")");
}

}  // namespace gaugep
