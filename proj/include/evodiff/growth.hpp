#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evodiff/expr.hpp"

namespace evodiff {

/// Convention for the volume change-of-variables factor.
///
/// PaperSqrt keeps the square-root factor sqrt(prod lambda_i) that the
/// source formulation carries through its estimates; StandardDet uses the
/// plain determinant prod lambda_i of the dilation map.  The dilution rate
/// a(t) is the logarithmic derivative of the selected factor, so
/// StandardDet yields exactly twice the PaperSqrt rate.
enum class JacobianMode { PaperSqrt, StandardDet };

enum class GrowthKind { Static, IsotropicExponential, IsotropicLogistic, PerAxisAnalytic, Tabulated };

/// Empirical admissibility record over a time window:
///   lambda1 <= 1/lambda_i(t)^2 <= lambda2   and   k1 <= a(t) <= k2.
/// k1 may be 0 (static domains); negative k1 means the domain contracts
/// somewhere in the window.
struct GrowthBounds {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
};

/// Diagonal dilation history A(t) = diag(lambda_1(t), ..., lambda_n(t))
/// with lambda_i(0) = 1.  The fixed reference domain is mapped to the
/// physical one by x -> A(t) x; all solver fields live on the reference
/// domain and see the dilation only through 1/lambda_i^2 stencil
/// coefficients and the dilution term a(t).
class GrowthLaw {
public:
    /// lambda_i(t) = 1 for all axes.
    static GrowthLaw make_static(int dim, double horizon);

    /// lambda_i(t) = exp(rho t) on every axis.
    static GrowthLaw isotropic_exponential(int dim, double horizon, double rho);

    /// Logistic dilation lambda' = rho lambda (1 - lambda/saturation),
    /// lambda(0) = 1, i.e. lambda(t) = S e^{rho t} / (S - 1 + e^{rho t}).
    static GrowthLaw isotropic_logistic(int dim, double horizon, double rho, double saturation);

    /// One closed-form scale per axis, each an expression in t
    /// (e.g. {"1 + t", "1", "1"}).  Must evaluate to 1 at t = 0.
    static GrowthLaw per_axis(double horizon, const std::vector<std::string>& exprs,
                              const std::map<std::string, double>& constants = {});

    /// Sampled scales with monotone cubic (PCHIP) interpolation.
    /// `values[axis]` holds lambda_axis at the given times; times must be
    /// strictly increasing, start at 0 with lambda = 1, stay positive, and
    /// cover the horizon.  Values interpolate with a monotone cubic
    /// (PCHIP); scale_rate is the exact derivative of that interpolant.
    static GrowthLaw tabulated(double horizon, const std::vector<double>& times,
                               const std::vector<std::vector<double>>& values);

    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    GrowthKind kind() const { return kind_; }

    JacobianMode jacobian() const { return jacobian_; }
    void set_jacobian(JacobianMode m) { jacobian_ = m; }

    /// lambda_axis(t); t must lie in [0, horizon].
    double scale(int axis, double t) const;
    std::vector<double> scales(double t) const;

    /// d/dt lambda_axis(t).
    double scale_rate(int axis, double t) const;

    /// Volume change-of-variables factor in the active Jacobian mode.
    double volume_factor(double t) const;

    /// a(t) = (volume_factor)'(t) / volume_factor(t).
    double dilution_rate(double t) const;

    /// Samples [0, horizon] uniformly; throws ValidationError naming the
    /// offending time and axis if any scale is non-positive or non-finite.
    GrowthBounds verify_bounds(int samples = 257) const;

    /// Same record restricted to [t0, t1] (used by the step-size bound).
    GrowthBounds bounds_on(double t0, double t1, int samples = 257) const;

private:
    GrowthLaw() = default;
    void check_time(double t) const;
    double raw_scale(int axis, double t) const;      // no horizon check
    double raw_scale_rate(int axis, double t) const; // no horizon check

    GrowthKind kind_ = GrowthKind::Static;
    JacobianMode jacobian_ = JacobianMode::PaperSqrt;
    int dim_ = 1;
    double horizon_ = 1.0;
    double rho_ = 0.0;
    double saturation_ = 1.0;
    std::vector<Expression> exprs_;
    // tabulated data
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;   // [axis][sample]
    std::vector<std::vector<double>> slopes_;   // PCHIP endpoint slopes per interval
};

} // namespace evodiff
