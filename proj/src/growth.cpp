#include "evodiff/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evodiff/common.hpp"

namespace evodiff {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > 3)
        throw ValidationError(strfmt("growth law dimension must be 1..3, got %d", dim));
}

void check_horizon(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ValidationError(strfmt("growth horizon must be positive, got %g", horizon));
}

// Fritsch-Carlson monotone slopes for a PCHIP interpolant.
std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    std::vector<double> h(n - 1), s(n - 1), m(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = t[k + 1] - t[k];
        s[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        m[0] = m[1] = s[0];
        return m;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (s[k - 1] * s[k] <= 0.0) {
            m[k] = 0.0;
        } else {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
        }
    }
    auto endpoint = [](double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) d = 0.0;
        else if (s0 * s1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(s0)) d = 3.0 * s0;
        return d;
    };
    m[0] = endpoint(h[0], h[1], s[0], s[1]);
    m[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    return m;
}

double hermite(double t0, double t1, double y0, double y1, double m0, double m1, double t) {
    const double h = t1 - t0;
    const double x = (t - t0) / h;
    const double x2 = x * x, x3 = x2 * x;
    return y0 * (2.0 * x3 - 3.0 * x2 + 1.0) + h * m0 * (x3 - 2.0 * x2 + x) +
           y1 * (-2.0 * x3 + 3.0 * x2) + h * m1 * (x3 - x2);
}

double hermite_rate(double t0, double t1, double y0, double y1, double m0, double m1, double t) {
    const double h = t1 - t0;
    const double x = (t - t0) / h;
    return (y1 - y0) * 6.0 * x * (1.0 - x) / h + m0 * (3.0 * x * x - 4.0 * x + 1.0) +
           m1 * (3.0 * x * x - 2.0 * x);
}

} // namespace

GrowthLaw GrowthLaw::make_static(int dim, double horizon) {
    check_dim(dim);
    check_horizon(horizon);
    GrowthLaw law;
    law.kind_ = GrowthKind::Static;
    law.dim_ = dim;
    law.horizon_ = horizon;
    return law;
}

GrowthLaw GrowthLaw::isotropic_exponential(int dim, double horizon, double rho) {
    check_dim(dim);
    check_horizon(horizon);
    if (!std::isfinite(rho))
        throw ValidationError("isotropic-exponential rate must be finite");
    GrowthLaw law;
    law.kind_ = GrowthKind::IsotropicExponential;
    law.dim_ = dim;
    law.horizon_ = horizon;
    law.rho_ = rho;
    return law;
}

GrowthLaw GrowthLaw::isotropic_logistic(int dim, double horizon, double rho, double saturation) {
    check_dim(dim);
    check_horizon(horizon);
    if (!(saturation > 0.0))
        throw ValidationError(strfmt("logistic saturation must be positive, got %g", saturation));
    GrowthLaw law;
    law.kind_ = GrowthKind::IsotropicLogistic;
    law.dim_ = dim;
    law.horizon_ = horizon;
    law.rho_ = rho;
    law.saturation_ = saturation;
    return law;
}

GrowthLaw GrowthLaw::per_axis(double horizon, const std::vector<std::string>& exprs,
                              const std::map<std::string, double>& constants) {
    check_dim(static_cast<int>(exprs.size()));
    check_horizon(horizon);
    GrowthLaw law;
    law.kind_ = GrowthKind::PerAxisAnalytic;
    law.dim_ = static_cast<int>(exprs.size());
    law.horizon_ = horizon;
    for (const auto& text : exprs)
        law.exprs_.push_back(Expression::parse(text, {"t"}, constants));
    for (int axis = 0; axis < law.dim_; ++axis) {
        const double zero = 0.0;
        const double at0 = law.exprs_[axis].eval(std::span(&zero, 1));
        if (std::fabs(at0 - 1.0) > 1e-9)
            throw ValidationError(strfmt(
                "axis %d scale \"%s\" must equal 1 at t=0 (got %.17g)",
                axis + 1, exprs[axis].c_str(), at0));
    }
    return law;
}

GrowthLaw GrowthLaw::tabulated(double horizon, const std::vector<double>& times,
                               const std::vector<std::vector<double>>& values) {
    check_dim(static_cast<int>(values.size()));
    check_horizon(horizon);
    if (times.size() < 2)
        throw ValidationError("tabulated growth law needs at least two samples");
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1]))
            throw ValidationError(strfmt("table times must be strictly increasing (row %zu)", k + 2));
    if (times.front() != 0.0)
        throw ValidationError(strfmt("table must start at t=0, got %g", times.front()));
    if (times.back() < horizon)
        throw ValidationError(strfmt("table ends at t=%g but horizon is %g", times.back(), horizon));
    GrowthLaw law;
    law.kind_ = GrowthKind::Tabulated;
    law.dim_ = static_cast<int>(values.size());
    law.horizon_ = horizon;
    law.times_ = times;
    law.values_ = values;
    for (int axis = 0; axis < law.dim_; ++axis) {
        const auto& col = values[axis];
        if (col.size() != times.size())
            throw ValidationError(strfmt("axis %d has %zu samples, expected %zu",
                                         axis + 1, col.size(), times.size()));
        for (std::size_t k = 0; k < col.size(); ++k)
            if (!(col[k] > 0.0) || !std::isfinite(col[k]))
                throw ValidationError(strfmt("axis %d scale must be positive/finite at t=%g (got %g)",
                                             axis + 1, times[k], col[k]));
        if (std::fabs(col.front() - 1.0) > 1e-12)
            throw ValidationError(strfmt("axis %d scale must be 1 at t=0, got %.17g", axis + 1, col.front()));
        law.slopes_.push_back(pchip_slopes(times, col));
    }
    return law;
}

void GrowthLaw::check_time(double t) const {
    const double slack = 1e-12 * std::max(1.0, horizon_);
    if (!(t >= -slack) || !(t <= horizon_ + slack))
        throw RangeError(strfmt("time %g outside growth horizon [0, %g]", t, horizon_));
}

double GrowthLaw::raw_scale(int axis, double t) const {
    switch (kind_) {
    case GrowthKind::Static:
        return 1.0;
    case GrowthKind::IsotropicExponential:
        return std::exp(rho_ * t);
    case GrowthKind::IsotropicLogistic: {
        const double e = std::exp(rho_ * t);
        return saturation_ * e / (saturation_ - 1.0 + e);
    }
    case GrowthKind::PerAxisAnalytic:
        return exprs_[axis].eval(std::span(&t, 1));
    case GrowthKind::Tabulated: {
        const double tc = std::clamp(t, times_.front(), times_.back());
        const auto it = std::upper_bound(times_.begin(), times_.end(), tc);
        const std::size_t k = std::min(times_.size() - 2,
                                       static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                           0, it - times_.begin() - 1)));
        return hermite(times_[k], times_[k + 1], values_[axis][k], values_[axis][k + 1],
                       slopes_[axis][k], slopes_[axis][k + 1], tc);
    }
    }
    return 1.0;
}

double GrowthLaw::raw_scale_rate(int axis, double t) const {
    switch (kind_) {
    case GrowthKind::Static:
        return 0.0;
    case GrowthKind::IsotropicExponential:
        return rho_ * std::exp(rho_ * t);
    case GrowthKind::IsotropicLogistic: {
        const double lam = raw_scale(axis, t);
        return rho_ * lam * (1.0 - lam / saturation_);
    }
    case GrowthKind::PerAxisAnalytic: {
        // 4th-order central difference on the closed form; the step
        // balances truncation against rounding for O(1) times.
        const double h = 1e-3 * std::max(1.0, std::fabs(t));
        auto f = [&](double s) { return exprs_[axis].eval(std::span(&s, 1)); };
        return (-f(t + 2 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2 * h)) / (12.0 * h);
    }
    case GrowthKind::Tabulated: {
        // Exact derivative of the interpolating cubic, so scale_rate is
        // the derivative of scale and the dilution a(t) integrates to the
        // interpolant's volume change (the monitor checks exactly that).
        const double tc = std::clamp(t, times_.front(), times_.back());
        const auto it = std::upper_bound(times_.begin(), times_.end(), tc);
        const std::size_t k = std::min(times_.size() - 2,
                                       static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                           0, it - times_.begin() - 1)));
        return hermite_rate(times_[k], times_[k + 1], values_[axis][k], values_[axis][k + 1],
                            slopes_[axis][k], slopes_[axis][k + 1], tc);
    }
    }
    return 0.0;
}

double GrowthLaw::scale(int axis, double t) const {
    if (axis < 0 || axis >= dim_)
        throw RangeError(strfmt("axis %d outside [0, %d)", axis, dim_));
    check_time(t);
    return raw_scale(axis, t);
}

std::vector<double> GrowthLaw::scales(double t) const {
    check_time(t);
    std::vector<double> out(static_cast<std::size_t>(dim_));
    for (int axis = 0; axis < dim_; ++axis) out[static_cast<std::size_t>(axis)] = raw_scale(axis, t);
    return out;
}

double GrowthLaw::scale_rate(int axis, double t) const {
    if (axis < 0 || axis >= dim_)
        throw RangeError(strfmt("axis %d outside [0, %d)", axis, dim_));
    check_time(t);
    return raw_scale_rate(axis, t);
}

double GrowthLaw::volume_factor(double t) const {
    check_time(t);
    double det = 1.0;
    for (int axis = 0; axis < dim_; ++axis) det *= raw_scale(axis, t);
    return jacobian_ == JacobianMode::PaperSqrt ? std::sqrt(det) : det;
}

double GrowthLaw::dilution_rate(double t) const {
    check_time(t);
    double sum = 0.0;
    for (int axis = 0; axis < dim_; ++axis)
        sum += raw_scale_rate(axis, t) / raw_scale(axis, t);
    return jacobian_ == JacobianMode::PaperSqrt ? 0.5 * sum : sum;
}

GrowthBounds GrowthLaw::bounds_on(double t0, double t1, int samples) const {
    check_time(t0);
    check_time(t1);
    if (!(t0 <= t1))
        throw ValidationError(strfmt("bounds window [%g, %g] is reversed", t0, t1));
    if (samples < 2) samples = 2;
    GrowthBounds b;
    b.lambda1 = b.k1 = std::numeric_limits<double>::infinity();
    b.lambda2 = b.k2 = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const double t = t0 + (t1 - t0) * static_cast<double>(s) / (samples - 1);
        for (int axis = 0; axis < dim_; ++axis) {
            const double lam = raw_scale(axis, t);
            if (!(lam > 0.0) || !std::isfinite(lam))
                throw ValidationError(strfmt(
                    "growth law inadmissible: scale %g on axis %d at t=%g", lam, axis + 1, t));
            const double c = 1.0 / (lam * lam);
            b.lambda1 = std::min(b.lambda1, c);
            b.lambda2 = std::max(b.lambda2, c);
        }
        const double a = dilution_rate(t);
        if (!std::isfinite(a))
            throw ValidationError(strfmt("growth law inadmissible: dilution rate at t=%g", t));
        b.k1 = std::min(b.k1, a);
        b.k2 = std::max(b.k2, a);
    }
    return b;
}

GrowthBounds GrowthLaw::verify_bounds(int samples) const {
    return bounds_on(0.0, horizon_, samples);
}

} // namespace evodiff
