#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gaugep/estimator.hpp"
#include "gaugep/models.hpp"
#include "gaugep/types.hpp"

namespace gaugep {

inline constexpr double kTailTol = 1e-10;

/// Density matrix in the number basis |0> .. |dim-1>.
struct FockDensityMatrix {
    int dim = 0;
    Eigen::MatrixXcd rho;
    double time = 0.0;
    double renormalization = 0.0;  // probability mass dropped by truncation

    double trace() const { return rho.trace().real(); }
    double tail() const { return rho(dim - 1, dim - 1).real(); }
};

/// |alpha0><alpha0| truncated to `dim` levels and renormalized. Throws
/// TruncationError when the Poisson weight beyond dim exceeds tail_tol.
FockDensityMatrix coherent_rho(cplx alpha0, int dim, double tail_tol = kTailTol);

/// |n><n|.
FockDensityMatrix fock_rho(int n, int dim);

/// Tr(a^dag^n a^m rho).
cplx fock_moment(const FockDensityMatrix& r, int n, int m);

struct OracleOptions {
    double dt = 1e-3;
    double tail_tol = kTailTol;
    double trace_tol = 1e-6;
    // Shrink the RK4 step below dt when the truncated Liouvillian would be unstable.
    bool auto_substep = true;
    // Evolve the diagonal only. Exact for epsilon = 0, where populations decouple
    // from coherences; off-diagonal elements of the result are then zero.
    bool populations_only = false;
    std::vector<MomentSpec> moments{MomentSpec{1, 1, 0}};
    bool keep_states = false;
};

struct OracleSeries {
    std::vector<double> times;
    std::vector<MomentSpec> moments;
    std::vector<std::vector<cplx>> values;  // values[k][record]
    std::vector<double> trace;
    std::vector<double> tail;
    std::vector<FockDensityMatrix> states;  // only with keep_states
    FockDensityMatrix final_state;
    double substep = 0.0;

    /// Series of moment k as zero-error points on `axis_scale * time`.
    Series series(std::size_t k, double axis_scale = 1.0) const;
};

/// RK4 integration of the one- plus two-boson absorber master equation
/// (native time t), sampled at `times` (ascending, starting at or after rho0.time).
OracleSeries evolve_absorber(const FockDensityMatrix& rho0, const AbsorberParams& p,
                             std::span<const double> times, const OracleOptions& opts = {});

/// RK4 step bound for the truncated absorber Liouvillian.
double absorber_stable_step(int dim, const AbsorberParams& p);

/// Kerr evolution. H is diagonal in the number basis, so the evolution is the exact
/// phase rho_mn e^{-i (E_m - E_n) t}, E_n = omega0 n + kappa n (n - 1) / 2.
OracleSeries evolve_kerr(const FockDensityMatrix& rho0, const KerrParams& p,
                         std::span<const double> times, const OracleOptions& opts = {});

/// Steady-state <n> of the pure two-boson absorber from a coherent state:
/// (1 - exp(-2 |alpha0|^2)) / 2.
double absorber_steady_coherent(cplx alpha0);

/// Odd-sector population sum_j rho(1+2j, 1+2j): the pure two-boson absorber steady
/// state <n> for any initial rho.
double absorber_parity_sum(const FockDensityMatrix& rho0);

/// Even- and odd-number population totals.
std::pair<double, double> parity_populations(const FockDensityMatrix& r);

struct DensityCheck {
    double hermiticity = 0.0;  // ||rho - rho^dag||
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
};

DensityCheck check_density(const FockDensityMatrix& r);

}  // namespace gaugep
