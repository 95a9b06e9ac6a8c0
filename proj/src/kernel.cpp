#include "evodiff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evodiff/common.hpp"

namespace evodiff {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double exponent_denominator(double tau, ExponentMode mode) {
    return mode == ExponentMode::PaperLiteral ? 4.0 * kPi * tau : 4.0 * tau;
}

double det_of(const std::vector<double>& lambda) {
    double det = 1.0;
    for (double l : lambda) det *= l;
    return det;
}

void check_point_size(std::span<const double> v, int n, const char* what) {
    if (static_cast<int>(v.size()) != n)
        throw ValidationError(strfmt("%s has %zu coordinates, context dimension is %d", what,
                                     v.size(), n));
}

/// Quadratic form <A^-1 w, w> for the diagonal dilation.
double quad_form(std::span<const double> w, const std::vector<double>& lambda) {
    double q = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) q += w[i] * w[i] / lambda[i];
    return q;
}

/// Graded time panels accumulating toward the upper limit: geometric
/// bisection with ratio 0.5, 20 levels, then the terminal sliver.
std::vector<double> graded_breakpoints(double upper) {
    std::vector<double> pts;
    pts.push_back(0.0);
    for (int l = 1; l <= 20; ++l) pts.push_back(upper * (1.0 - std::pow(0.5, l)));
    pts.push_back(upper);
    return pts;
}

} // namespace

BoundaryGeometry BoundaryGeometry::interval(double a, double b) {
    if (!(b > a)) throw ValidationError(strfmt("interval endpoints must satisfy %g < %g", a, b));
    BoundaryGeometry geo;
    geo.kind = GeometryKind::Interval;
    geo.x0 = a;
    geo.x1 = b;
    return geo;
}

BoundaryGeometry BoundaryGeometry::circle(const std::array<double, 2>& center, double radius,
                                          int segments) {
    if (!(radius > 0.0)) throw ValidationError(strfmt("circle radius must be positive, got %g", radius));
    if (segments < 8)
        throw ValidationError(strfmt("circle needs at least 8 segments, got %d", segments));
    BoundaryGeometry geo;
    geo.kind = GeometryKind::Circle;
    geo.center = center;
    geo.radius = radius;
    geo.segments = segments;
    return geo;
}

std::vector<BoundaryGeometry::Node> BoundaryGeometry::nodes() const {
    std::vector<Node> out;
    if (kind == GeometryKind::Interval) {
        out.push_back({{x0, 0.0}, {-1.0, 0.0}, 1.0});
        out.push_back({{x1, 0.0}, {1.0, 0.0}, 1.0});
        return out;
    }
    const double w = 2.0 * kPi * radius / segments;
    for (int j = 0; j < segments; ++j) {
        const double th = 2.0 * kPi * j / segments;
        const double c = std::cos(th), s = std::sin(th);
        out.push_back({{center[0] + radius * c, center[1] + radius * s}, {c, s}, w});
    }
    return out;
}

std::vector<double> KernelContext::scales_at(double s) const {
    if (law) {
        const auto lam = law->scales(s);
        if (static_cast<int>(lam.size()) != n)
            throw ValidationError(strfmt("growth law is %zu-dimensional, kernel context is %d",
                                         lam.size(), n));
        return lam;
    }
    return constant_scales;
}

static void check_kernel_dim(int n) {
    if (n < 1 || n > 3)
        throw ValidationError(strfmt("kernel dimension must be 1, 2 or 3, got %d", n));
}

KernelContext make_kernel_context(int n, const BoundaryGeometry& geometry, ExponentMode mode,
                                  const std::vector<double>& scales) {
    check_kernel_dim(n);
    KernelContext ctx;
    ctx.n = n;
    ctx.mode = mode;
    ctx.geometry = geometry;
    ctx.constant_scales = scales.empty() ? std::vector<double>(static_cast<std::size_t>(n), 1.0)
                                         : scales;
    if (static_cast<int>(ctx.constant_scales.size()) != n)
        throw ValidationError(strfmt("expected %d constant scales, got %zu", n,
                                     ctx.constant_scales.size()));
    for (double l : ctx.constant_scales)
        if (!(l > 0.0)) throw ValidationError(strfmt("dilation scale %g must be positive", l));
    return ctx;
}

KernelContext make_kernel_context(int n, const BoundaryGeometry& geometry, const GrowthLaw& law,
                                  ExponentMode mode) {
    check_kernel_dim(n);
    if (law.dim() != n)
        throw ValidationError(strfmt("growth law is %d-dimensional, kernel context is %d",
                                     law.dim(), n));
    KernelContext ctx;
    ctx.n = n;
    ctx.mode = mode;
    ctx.geometry = geometry;
    ctx.law = &law;
    return ctx;
}

double z0(std::span<const double> r, double s, double t, const KernelContext& ctx) {
    if (!(t > s)) throw RangeError(strfmt("z0 needs t > s, got t=%g, s=%g", t, s));
    check_point_size(r, ctx.n, "offset");
    const double tau = t - s;
    const auto lambda = ctx.scales_at(s);
    const double pref =
        1.0 / (std::pow(4.0 * kPi * tau, ctx.n / 2.0) * std::sqrt(det_of(lambda)));
    return pref * std::exp(-quad_form(r, lambda) / exponent_denominator(tau, ctx.mode));
}

FundamentalReport verify_fundamental(const KernelContext& ctx, double s) {
    const auto lambda = ctx.scales_at(s);
    const int n = ctx.n;
    const double dx = 1e-3;
    const double dt = 1e-5;

    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    std::vector<double> shifted(static_cast<std::size_t>(n), 0.0);

    FundamentalReport rep;
    const int points_per_axis = 9;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (double tau : {0.3, 0.55, 0.8, 1.05, 1.3}) {
        const double t = s + tau;
        std::fill(idx.begin(), idx.end(), 0);
        bool done = false;
        while (!done) {
            for (int k = 0; k < n; ++k)
                r[static_cast<std::size_t>(k)] =
                    -1.2 + 2.4 * idx[static_cast<std::size_t>(k)] / (points_per_axis - 1);

            const double dzdt = (z0(r, s, t + dt, ctx) - z0(r, s, t - dt, ctx)) / (2.0 * dt);
            double matched = dzdt, displayed = dzdt;
            const double center = z0(r, s, t, ctx);
            for (int k = 0; k < n; ++k) {
                shifted = r;
                shifted[static_cast<std::size_t>(k)] += dx;
                const double plus = z0(shifted, s, t, ctx);
                shifted[static_cast<std::size_t>(k)] -= 2.0 * dx;
                const double minus = z0(shifted, s, t, ctx);
                const double second = (plus - 2.0 * center + minus) / (dx * dx);
                const double lam = lambda[static_cast<std::size_t>(k)];
                matched -= lam * second;
                displayed -= second / (lam * lam);
            }
            rep.matched_residual = std::max(rep.matched_residual, std::abs(matched));
            rep.displayed_residual = std::max(rep.displayed_residual, std::abs(displayed));

            done = true;
            for (int k = 0; k < n; ++k) {
                auto& ik = idx[static_cast<std::size_t>(k)];
                if (++ik < points_per_axis) {
                    done = false;
                    break;
                }
                ik = 0;
            }
        }
    }
    rep.flagged = rep.matched_residual > 1e-3;
    return rep;
}

H0Result h0_and_cn(int n) {
    if (n < 1 || n > 3)
        throw ValidationError(strfmt("layer constant defined for n in {1,2,3}, got %d", n));
    // Substitute s = e^y: the integrand becomes exp(-n y / 2 - e^{-y}/4),
    // smooth and double-exponentially decaying on the left; refine the
    // trapezoid until the value settles.
    auto integrand = [n](double y) { return std::exp(-0.5 * n * y - std::exp(-y) / 4.0); };
    const double lo = -12.0, hi = 80.0;
    double h = 0.5;
    double prev = 0.0;
    double value = 0.0;
    for (int pass = 0; pass < 14; ++pass) {
        const auto steps = static_cast<std::size_t>(std::llround((hi - lo) / h));
        double sum = 0.5 * (integrand(lo) + integrand(hi));
        for (std::size_t j = 1; j < steps; ++j) sum += integrand(lo + h * static_cast<double>(j));
        value = sum * h;
        if (pass > 0 && std::abs(value - prev) <= 1e-13 * std::abs(value)) break;
        prev = value;
        h /= 2.0;
    }
    H0Result res;
    res.h0 = value;
    res.h0_closed = std::exp2(n) * std::tgamma(n / 2.0);
    const double omega = n == 1 ? 2.0 : (n == 2 ? 2.0 * kPi : 4.0 * kPi);
    res.cn = omega * res.h0 / 2.0;
    res.relative_gap = std::abs(res.h0 - res.h0_closed) / res.h0_closed;
    return res;
}

double w_kernel(double tau, std::span<const double> x, std::span<const double> Q,
                const KernelContext& ctx, double s) {
    if (!(tau > 0.0)) throw RangeError(strfmt("w_kernel needs t - s > 0, got %g", tau));
    check_point_size(x, ctx.n, "field point");
    check_point_size(Q, ctx.n, "boundary point");
    const auto lambda = ctx.scales_at(s);
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = x[i] - Q[i];
        q += w * w / lambda[i];
    }
    return std::exp(-q / exponent_denominator(tau, ctx.mode)) /
           (std::sqrt(det_of(lambda)) * std::pow(tau, ctx.n / 2.0 + 1.0));
}

namespace {

/// Directional layer kernel <A(s)^-1 (y-Q), eta_Q> W-style integrand.
double layer_kernel(double tau, const std::array<double, 2>& y, const std::array<double, 2>& Q,
                    const std::array<double, 2>& etaQ, const std::vector<double>& lambda,
                    ExponentMode mode, int n) {
    double num = 0.0, q = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double w = y[ii] - Q[ii];
        num += w / lambda[ii] * etaQ[ii];
        q += w * w / lambda[ii];
    }
    return num / (std::sqrt(det_of(lambda)) * std::pow(tau, n / 2.0 + 1.0)) *
           std::exp(-q / exponent_denominator(tau, mode));
}

} // namespace

double j_epsilon(const std::function<double(double, const std::array<double, 2>&)>& f,
                 double eps, const std::array<double, 2>& Q, const std::array<double, 2>& etaQ,
                 double t, const KernelContext& ctx) {
    if (!(eps > 0.0) || !(eps < t))
        throw RangeError(strfmt("truncation must satisfy 0 < eps < t, got eps=%g, t=%g", eps, t));
    const auto bnodes = ctx.geometry.nodes();
    const int n = ctx.n;

    auto integrand = [&](double s) {
        const auto lambda = ctx.scales_at(s);
        const double tau = t - s;
        double sum = 0.0;
        for (const auto& node : bnodes)
            sum += node.weight * layer_kernel(tau, node.y, Q, etaQ, lambda, ctx.mode, n) *
                   f(s, node.y);
        return sum;
    };

    const auto pts = graded_breakpoints(t - eps);
    const int sub = std::max(2, ctx.time_subdivisions);
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
        const double a = pts[seg], b = pts[seg + 1];
        if (!(b > a)) continue;
        const double hs = (b - a) / sub;
        double acc = 0.5 * (integrand(a) + integrand(b));
        for (int j = 1; j < sub; ++j) acc += integrand(a + hs * j);
        total += acc * hs;
    }
    return total;
}

DensityResult solve_density(const std::vector<std::vector<double>>& gamma, double T,
                            const KernelContext& ctx) {
    if (!(T > 0.0)) throw ValidationError(strfmt("time horizon must be positive, got %g", T));
    if (gamma.size() < 2)
        throw ValidationError("density solve needs boundary data at two or more times");
    const auto bnodes = ctx.geometry.nodes();
    const std::size_t nb = bnodes.size();
    for (std::size_t k = 0; k < gamma.size(); ++k)
        if (gamma[k].size() != nb)
            throw ValidationError(strfmt("boundary data row %zu has %zu values, geometry has "
                                         "%zu nodes",
                                         k, gamma[k].size(), nb));
    const std::size_t M = gamma.size() - 1;
    const double dt = T / static_cast<double>(M);
    const int n = ctx.n;

    DensityResult res;
    res.cn = h0_and_cn(n).cn;
    res.points = bnodes;
    for (std::size_t k = 0; k <= M; ++k) res.times.push_back(dt * static_cast<double>(k));
    res.g.assign(M + 1, std::vector<double>(nb, 0.0));

    // K[j](q, y) for row time t_k: kernel at tau = t_k - s_j, scales at s_j.
    auto kernel_entry = [&](double tk, std::size_t j, std::size_t q, std::size_t y,
                            const std::vector<double>& lambda) {
        return layer_kernel(tk - res.times[j], bnodes[y].y, bnodes[q].y, bnodes[q].normal,
                            lambda, ctx.mode, n);
    };

    // Forward march: row k couples only to earlier samples (trapezoid over
    // [0, s_{k-1}]), so -c_n g_k closes each step.
    double max_row_sum = 0.0;
    auto apply_row = [&](std::size_t k, const std::vector<std::vector<double>>& gtab,
                         std::vector<double>& out, double* row_sum) {
        std::fill(out.begin(), out.end(), 0.0);
        if (row_sum) *row_sum = 0.0;
        if (k < 2) return;
        for (std::size_t j = 0; j < k; ++j) {
            const double wt = dt * ((j == 0 || j == k - 1) ? 0.5 : 1.0);
            const auto lambda = ctx.scales_at(res.times[j]);
            for (std::size_t q = 0; q < nb; ++q) {
                double acc = 0.0, acc_abs = 0.0;
                for (std::size_t y = 0; y < nb; ++y) {
                    const double kv = kernel_entry(res.times[k], j, q, y, lambda);
                    acc += kv * bnodes[y].weight * gtab[j][y];
                    acc_abs += std::abs(kv) * bnodes[y].weight;
                }
                out[q] += wt * acc;
                if (row_sum) *row_sum += wt * acc_abs;
            }
        }
    };

    std::vector<double> Jg(nb);
    for (std::size_t k = 0; k <= M; ++k) {
        double row_sum = 0.0;
        apply_row(k, res.g, Jg, &row_sum);
        max_row_sum = std::max(max_row_sum, row_sum);
        for (std::size_t q = 0; q < nb; ++q) res.g[k][q] = (Jg[q] + 2.0 * gamma[k][q]) / res.cn;
    }
    res.condition_estimate = (res.cn + max_row_sum) / res.cn;

    // Solve-then-apply residual of (-c_n I + J) g + 2 gamma.
    for (std::size_t k = 0; k <= M; ++k) {
        apply_row(k, res.g, Jg, nullptr);
        for (std::size_t q = 0; q < nb; ++q)
            res.max_residual = std::max(
                res.max_residual,
                std::abs(-res.cn * res.g[k][q] + Jg[q] + 2.0 * gamma[k][q]));
    }
    return res;
}

double classical_solution(const DensityResult& density, std::span<const double> x, double t,
                          const KernelContext& ctx) {
    check_point_size(x, ctx.n, "evaluation point");
    if (!(t > 0.0)) throw ValidationError(strfmt("evaluation time must be positive, got %g", t));
    if (density.times.size() < 2 || density.g.size() != density.times.size())
        throw ValidationError("density table is empty or inconsistent");
    if (t > density.times.back() + 1e-9 * std::max(1.0, density.times.back()))
        throw ValidationError(strfmt("evaluation time %g lies beyond the density table end %g",
                                     t, density.times.back()));
    const auto& bnodes = density.points;
    const int n = ctx.n;
    for (const auto& node : bnodes) {
        double dist = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            dist += (x[ii] - node.y[ii]) * (x[ii] - node.y[ii]);
        }
        if (dist < 1e-24)
            throw ValidationError("evaluation point lies on the boundary; the single-layer "
                                  "kernel is not integrable there");
    }
    const double dt = density.times[1] - density.times[0];

    auto g_at = [&](double s, std::size_t q) {
        const double pos = s / dt;
        const auto lo = std::min(static_cast<std::size_t>(std::max(0.0, pos)),
                                 density.times.size() - 2);
        const double frac = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
        return (1.0 - frac) * density.g[lo][q] + frac * density.g[lo + 1][q];
    };
    auto integrand = [&](double s) {
        if (!(s < t)) return 0.0; // tau -> 0 limit off the boundary
        double sum = 0.0;
        for (std::size_t q = 0; q < bnodes.size(); ++q)
            sum += bnodes[q].weight * w_kernel(t - s, x, std::span(bnodes[q].y).first(n), ctx, s) *
                   g_at(s, q);
        return sum;
    };

    const auto pts = graded_breakpoints(t);
    const int sub = std::max(2, ctx.time_subdivisions);
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
        const double a = pts[seg], b = pts[seg + 1];
        if (!(b > a)) continue;
        const double hs = (b - a) / sub;
        double acc = 0.5 * (integrand(a) + integrand(b));
        for (int j = 1; j < sub; ++j) acc += integrand(a + hs * j);
        total += acc * hs;
    }
    return total;
}

double holder_seminorm(const std::vector<SpaceTimeSample>& samples, double a) {
    if (!(a > 0.0) || !(a < 1.0))
        throw ValidationError(strfmt("exponent must lie in (0, 1), got %g", a));
    double best = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double dx0 = samples[i].x[0] - samples[j].x[0];
            const double dx1 = samples[i].x[1] - samples[j].x[1];
            const double dist =
                std::sqrt(std::abs(samples[i].t - samples[j].t)) + std::hypot(dx0, dx1);
            if (dist <= 0.0) continue;
            best = std::max(best,
                            std::abs(samples[i].value - samples[j].value) / std::pow(dist, a));
        }
    return best;
}

} // namespace evodiff
