#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"

namespace evodiff {

/// Entropy-like polynomial for a pair (u, v):
///   P(u, v) = sum_{beta=0}^{p} C(p, beta) Theta^(beta^2) u^beta v^(p-beta).
/// Requires p >= 2 and Theta > 0.  Delegates to the m-component form so
/// the two agree bitwise for m = 2.
double lyapunov_P(double u, double v, int p, double Theta);

/// m-component generalization with one weight per leading component:
///   P(z) = sum_{|beta| <= p} p! / (beta! (p-|beta|)!) *
///          prod_j theta_j^(beta_j^2) z_j^(beta_j) * z_m^(p-|beta|),
/// beta ranging over multi-indices on the first m-1 components
/// (theta.size() == z.size() - 1).  For m = 1 this is z^p.
double lyapunov_P_m(std::span<const double> z, int p, std::span<const double> theta);

/// Exact time derivative of P(u(t), v(t)) given the instantaneous rates:
///   dP/dt = sum_{beta=0}^{p-1} p!/(beta! (p-1-beta)!) Theta^(beta^2)
///           u^beta v^(p-1-beta) (Theta^(2beta+1) du/dt + dv/dt).
double lyapunov_P_rate(double u, double v, double du_dt, double dv_dt, int p, double Theta);

/// \int_Omega P(z(x)) dx over the reference box with pairing weights theta
/// (theta may be empty for m == 1).
double lyapunov_P_field(const Grid& grid, const StateField& state, int p,
                        std::span<const double> theta);

/// Smallest admissible pairing weight:
///   Theta* = max{ K, (D + Dtilde) / (2 sqrt(D * Dtilde)) }.
/// Weights above the threshold make the quadratic diffusion form
/// nonnegative while staying compatible with the flux comparison.
double theta_threshold(double D, double Dtilde, double K);

/// Pairing weights the run-time monitor uses: 1.05 * theta_threshold of
/// (d_j, d_m) for each leading component j, with K from the model
/// certificate (1 when absent).  Empty for m == 1.
std::vector<double> default_theta(const ReactionModel& model);

/// 2x2 comparison matrix of the cross-diffusion quadratic form at order
/// beta:  [[D Theta^(4beta+4), (D+Dtilde)/2 Theta^(2beta+1)],
///         [   symmetric,            Dtilde            ]].
struct BMatrix {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    double det = 0.0;
    bool positive_definite = false;
};
BMatrix b_matrix_posdef(double Theta, double D, double Dtilde, int beta);

/// Linear backward dual problem, solved forward in the reversed time
/// tau = T - t:
///   d(phi)/dt + D Delta_t phi = -L1 phi - xi   in the bulk,
///   D grad_t(phi) . eta = L2 phi               on the boundary,
///   phi(T) = 0,
/// with no dilution term.  xi is a fixed nonnegative spatial field on the
/// grid.  Returns phi sampled at the requested times (ascending, from 0 to
/// T), each snapshot stamped with its forward time t.
struct DualConfig {
    std::vector<double> xi; // spatial source, one value per grid node, >= 0
    double D = 1.0;         // dual diffusivity
    double Dtilde = 1.0;    // partner diffusivity (for the L2 admissibility check)
    double L1 = 0.0;        // bulk comparison constant
    double L2 = 0.0;        // boundary comparison constant, L2 >= max(L1, Dtilde*L1/D)
    double T = 1.0;
    double safety = 0.4;    // explicit step safety factor
};
std::vector<StateField> dual_solve(const DualConfig& cfg, const GrowthLaw& law, const Grid& grid,
                                   std::span<const double> times);

/// Scales a nonnegative spatial field so that its space-time Lp' norm over
/// [0, T] x Omega equals 1, where p' = p/(p-1) is the conjugate exponent.
/// Returns the scale factor applied.
double normalize_dual_source(const Grid& grid, std::span<double> xi, int p, double T);

/// Both sides of the duality comparison for a component pair (iu, iv) of a
/// primal trajectory against a dual solution phi on aligned time stamps:
///   LHS = int_0^T int_Omega (u + v) xi
///   RHS = int_Omega (u0 + v0) phi(0)
///       + int int (Dtilde - D) v Delta_t phi
///       + L1 (int int_Omega phi + int int_Gamma phi)
///       - int int a(t) (u + v)
/// (time integrals by the trapezoid rule on the snapshot stamps).  Passes
/// when LHS - RHS <= tol_rel |RHS| + tol_abs.
struct DualityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0; // lhs - rhs
    bool pass = false;
    std::map<std::string, double> terms;
};
DualityResult duality_check(const std::vector<StateField>& primal, std::size_t iu, std::size_t iv,
                            const std::vector<StateField>& phi, std::span<const double> xi,
                            const GrowthLaw& law, const Grid& grid, double D, double Dtilde,
                            double L1, double L2, double tol_rel = 1e-2, double tol_abs = 1e-12);

/// Growth summary of the weighted L1 norms along a trajectory:  fits
/// W(t) = sum_i b_i \int |u_i| to C * exp(rate * t) by least squares on
/// log W and flags super-exponential growth (late-time rate a multiple of
/// the global fit).  Boundary mass is reported in both scalings that the
/// source formulation uses: the determinant-root surface element
/// sqrt(det A(t)) and the exact per-face element (product of the scales
/// tangent to each face).
struct L1Report {
    double max_bulk = 0.0;
    double max_boundary = 0.0; // reference-frame trace integral
    double C = 0.0;
    double rate = 0.0;
    double late_rate = 0.0;
    bool superexponential = false;
    double max_boundary_det_root = 0.0;  // sqrt(det A) scaling
    double max_boundary_face_exact = 0.0; // per-face tangent-scale product
};
L1Report l1_report(const std::vector<StateField>& snapshots, const GrowthLaw& law,
                   const Grid& grid, std::span<const double> b = {});

} // namespace evodiff
