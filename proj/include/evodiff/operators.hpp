#pragma once

#include <span>
#include <vector>

#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"

namespace evodiff {

/// How the nonlinear flux condition couples to the stencil:
///   DScaled (default): d_i * grad_t(u_i) . eta = g_i(u)  -- each component's
///     flux is read as already scaled by its own diffusivity;
///   Plain: grad_t(u_i) . eta = g_i(u)  -- the diffusivity-free reading.
/// The two differ by the factor d_i in the ghost increment; the active
/// choice is recorded in run manifests because the source formulation
/// writes the boundary system both ways.
enum class FluxConvention { DScaled, Plain };

/// Frozen-time coefficients of the pulled-back operator
///   L u_i = d_i * sum_k (1/lambda_k(t)^2) d^2/dx_k^2 u_i - a(t) u_i
/// on the reference grid, plus everything the ghost closure needs.
struct OperatorContext {
    const GrowthLaw* law = nullptr;
    const Grid* grid = nullptr;
    std::vector<double> d;
    double t = 0.0;
    std::vector<double> lambda;     // lambda_k(t)
    std::vector<double> inv_lam_sq; // 1/lambda_k(t)^2
    std::vector<double> inv_h_sq;   // 1/h_k^2
    double a = 0.0;                 // dilution rate at t
    FluxConvention flux = FluxConvention::DScaled;
};

OperatorContext make_context(const GrowthLaw& law, const Grid& grid, const std::vector<double>& d,
                             double t, FluxConvention flux = FluxConvention::DScaled);

/// One ghost layer per component per face, aligned with Face::nodes.
/// values[component][face][face-node].
struct GhostValues {
    std::vector<std::vector<std::vector<double>>> values;
    bool has_component(std::size_t i, std::size_t faces) const {
        return i < values.size() && values[i].size() == faces;
    }
};

/// Second-order ghost closure of the flux condition: with the outward
/// normal on face k and the centered one-sided derivative
/// (u_ghost - u_mirror) / (2 h_k), the condition
///   d_i (1/lambda_k) du_i/dx_k . eta = g_i(u_trace)
/// gives u_ghost = u_mirror + 2 h_k lambda_k g_i(u_trace) / d_i on both
/// sides (the sign of the normal cancels against the ghost position).
/// Plain convention drops the 1/d_i.
GhostValues close_boundary(const OperatorContext& ctx, const StateField& state,
                           const ReactionModel& model);

/// Same closure with explicit flux values (already g_i at each face node),
/// for manufactured solutions and the linear dual problem.
/// flux[component][face][face-node].
GhostValues close_boundary(const OperatorContext& ctx, const StateField& state,
                           const std::vector<std::vector<std::vector<double>>>& flux);

/// Applies L to one component.  Ghost values must cover the component
/// (contract violation otherwise).  out[p] =
///   d_i * sum_k inv_lam_sq[k] (west - 2u + east) inv_h_sq[k] - a u[p].
void apply_L(const OperatorContext& ctx, std::span<const double> comp, std::size_t i,
             const GhostValues& ghosts, std::span<double> out);

/// Applies L to one component with the *homogeneous* (zero-flux) ghost
/// closure, i.e. ghost = mirror on every face.  This is the symmetric part
/// a semi-implicit stepper treats implicitly; the nonlinear flux enters as
/// an explicit boundary source instead.
void apply_L_homogeneous(const OperatorContext& ctx, double di, std::span<const double> comp,
                         std::span<double> out);

/// Interpolates the reference-frame field at a physical point y in the
/// current domain A(t) * box: pulls y back to x = A(t)^{-1} y and runs
/// multilinear interpolation.  Throws RangeError if y leaves the domain.
double pushforward(const Grid& grid, const GrowthLaw& law, std::span<const double> comp, double t,
                   std::span<const double> y);

/// Weighted mass on the *evolving* domain: volume_factor(t) * sum_i b_i
/// \int u_i dx (b defaults to all-ones).  With a(t) equal to the log
/// derivative of volume_factor, f = 0, and zero-sum weighted fluxes this is
/// a conserved quantity of the semi-discrete system.
double evolving_mass(const Grid& grid, const GrowthLaw& law, const StateField& state,
                     std::span<const double> b = {});

} // namespace evodiff
