#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"
#include "evodiff/operators.hpp"

namespace evodiff {

enum class Stepper { ExplicitRK4, ImexCN };
enum class Termination { Completed, BlowupDetected, Error };
enum class PositivityMonitor { Auto, On, Off };

const char* to_string(Termination t);

/// Numerical controls of a run (the file-format layer wraps this into the
/// full application config).
struct SolveOptions {
    double t_end = 1.0;
    Stepper stepper = Stepper::ExplicitRK4;
    double dt = 0.0;                // 0 = auto (stable_dt for explicit RK4)
    double safety = 0.9;            // multiplies the diffusive stability bound
    int snapshot_every = 0;         // steps between stored snapshots; 0 = auto
    double overshoot_tol = 1e-8;    // tolerated negative undershoot scale
    double blowup_threshold = 0.0;  // sup-norm cap; 0 = auto 1e6*(1+sup u0)
    PositivityMonitor positivity = PositivityMonitor::Auto;
    FluxConvention flux = FluxConvention::DScaled;
    bool quasi_positivity_precheck = true;
    int lyapunov_p = 2;             // degree of the monitored polynomial
    std::vector<double> mass_weights; // b for evolving_mass; empty = model meta or ones
};

/// Per-snapshot scalar diagnostics (one CSV row).
struct DiagnosticsRecord {
    double t = 0.0;
    std::vector<double> l1_bulk;     // per component, \int_Omega |u_i|
    std::vector<double> l1_boundary; // per component, \int_Gamma |u_i|
    std::vector<double> sup;
    std::vector<double> min;
    double evolving_mass = 0.0;
    double lyapunov_P = 0.0;
    double conservation_residual = 0.0;
};

struct Trajectory {
    std::vector<StateField> snapshots;
    std::vector<DiagnosticsRecord> records;
    Termination termination = Termination::Completed;
    std::string message;      // blow-up / positivity / error detail
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;
    double blowup_threshold = 0.0; // the effective cap the run used
};

/// Largest explicit step the diffusive part allows on [t0, t1]:
///   dt = safety / (2 max_i d_i sum_k Lambda2 / h_k^2 + max(k2, 0))
/// with Lambda2 and k2 sampled from the growth law on the window.
double stable_dt(const GrowthLaw& law, const Grid& grid, const std::vector<double>& d, double t0,
                 double t1, double safety);

/// Advances the state one step of `dt`.  RK4 rebuilds the operator
/// coefficients and recloses the ghost layer at every stage time; IMEX-CN
/// treats d_i Delta_t - a(t) implicitly at the midpoint time with the
/// nonlinear flux g lagged at the step start.  Throws NumericsError with
/// the node location if the state stops being finite.
void step(StateField& state, double dt, const GrowthLaw& law, const Grid& grid,
          const ReactionModel& model, Stepper stepper = Stepper::ExplicitRK4,
          FluxConvention flux = FluxConvention::DScaled);

/// Integrates the full system to t_end with blow-up and nonnegativity
/// monitoring.  The positivity monitor auto-disables for sign-indefinite
/// initial data (the nonnegativity theory only covers u0 >= 0); a note is
/// added to warnings when that happens.
Trajectory run(const GrowthLaw& law, const Grid& grid, const ReactionModel& model,
               const StateField& initial, const SolveOptions& options);

/// Result of a manufactured-solution refinement study.
struct ConvergenceResult {
    std::string case_id;
    std::vector<int> levels;      // nodes per axis
    std::vector<double> errors;   // discrete relative L2 at t_end
    std::vector<double> orders;   // log2(e_k / e_{k+1})
    double overall_order = 0.0;   // least-squares slope across levels
    bool exact = false;           // errors at rounding level
    bool degraded = false;        // order fell below the 2nd-order band
    std::string note;
};

/// Known cases: "anisotropic-2d" (time-dependent anisotropic scales, RK4,
/// dt ~ h^2), "linear-exact" (exact on linears, rounding-level errors),
/// "anisotropic-2d-fixed-dt" (IMEX-CN with a deliberately coarse fixed dt;
/// reports the degraded order).
ConvergenceResult manufactured_convergence(const std::string& case_id);
std::vector<std::string> convergence_case_names();

} // namespace evodiff
