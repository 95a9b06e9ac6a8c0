#include "evodiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evodiff/common.hpp"
#include "evodiff/operators.hpp"

namespace evodiff {

namespace {

double ipow(double base, int k) {
    double out = 1.0;
    for (int j = 0; j < k; ++j) out *= base;
    return out;
}

double binom(int n, int k) {
    double out = 1.0;
    for (int j = 1; j <= k; ++j) out = out * static_cast<double>(n - k + j) / j;
    return std::round(out);
}

void check_pairing(int p, std::size_t m, std::span<const double> theta) {
    if (p < 2) throw ValidationError(strfmt("pairing degree p must be >= 2, got %d", p));
    if (p > 40) throw ValidationError(strfmt("pairing degree p=%d is too large", p));
    if (m == 0) throw ValidationError("pairing needs at least one component");
    if (theta.size() + 1 != m)
        throw ValidationError(strfmt("expected %zu pairing weights for %zu components, got %zu",
                                     m - 1, m, theta.size()));
    for (std::size_t j = 0; j < theta.size(); ++j)
        if (!(theta[j] > 0.0))
            throw ValidationError(strfmt("pairing weight theta%zu must be positive, got %g",
                                         j + 1, theta[j]));
}

/// Recursive enumeration of multi-indices beta on the first m-1 components
/// with |beta| <= p, in lexicographic order (fixed summation order keeps
/// the result bitwise reproducible).
double enumerate_terms(std::span<const double> z, std::span<const double> theta, int remaining,
                       std::size_t j, double partial) {
    if (j + 1 == z.size()) return partial * ipow(z[j], remaining);
    double sum = 0.0;
    for (int beta = 0; beta <= remaining; ++beta) {
        const double coeff = binom(remaining, beta);
        const double factor =
            coeff * ipow(theta[j], beta * beta) * ipow(z[j], beta);
        sum += enumerate_terms(z, theta, remaining - beta, j + 1, partial * factor);
    }
    return sum;
}

double time_weight(std::span<const double> t, std::size_t k) {
    if (t.size() < 2) return 0.0;
    if (k == 0) return (t[1] - t[0]) / 2.0;
    if (k + 1 == t.size()) return (t[k] - t[k - 1]) / 2.0;
    return (t[k + 1] - t[k - 1]) / 2.0;
}

double fit_log_slope(std::span<const double> t, std::span<const double> logw, double* intercept) {
    const auto n = static_cast<double>(t.size());
    double mt = 0.0, mw = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        mw += logw[i];
    }
    mt /= n;
    mw /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - mt) * (logw[i] - mw);
        den += (t[i] - mt) * (t[i] - mt);
    }
    const double slope = den > 0.0 ? num / den : 0.0;
    if (intercept) *intercept = mw - slope * mt;
    return slope;
}

} // namespace

double lyapunov_P(double u, double v, int p, double Theta) {
    const double z[2] = {u, v};
    const double th[1] = {Theta};
    return lyapunov_P_m(z, p, th);
}

double lyapunov_P_m(std::span<const double> z, int p, std::span<const double> theta) {
    check_pairing(p, z.size(), theta);
    return enumerate_terms(z, theta, p, 0, 1.0);
}

double lyapunov_P_rate(double u, double v, double du_dt, double dv_dt, int p, double Theta) {
    const double th[1] = {Theta};
    check_pairing(p, 2, th);
    double sum = 0.0;
    for (int beta = 0; beta <= p - 1; ++beta) {
        const double coeff = static_cast<double>(p) * binom(p - 1, beta);
        sum += coeff * ipow(Theta, beta * beta) * ipow(u, beta) * ipow(v, p - 1 - beta) *
               (ipow(Theta, 2 * beta + 1) * du_dt + dv_dt);
    }
    return sum;
}

double lyapunov_P_field(const Grid& grid, const StateField& state, int p,
                        std::span<const double> theta) {
    const std::size_t m = state.components();
    check_pairing(p, m, theta);
    for (const auto& comp : state.comp)
        if (comp.size() != grid.num_nodes())
            throw ValidationError(strfmt("component has %zu nodes, grid has %zu", comp.size(),
                                         grid.num_nodes()));
    std::vector<double> z(m);
    double total = 0.0;
    for (std::size_t q = 0; q < grid.num_nodes(); ++q) {
        for (std::size_t i = 0; i < m; ++i) z[i] = state.comp[i][q];
        total += grid.weight(q) * enumerate_terms(z, theta, p, 0, 1.0);
    }
    return total;
}

double theta_threshold(double D, double Dtilde, double K) {
    if (!(D > 0.0) || !(Dtilde > 0.0))
        throw ValidationError(strfmt("diffusivities must be positive, got %g and %g", D, Dtilde));
    if (!(K > 0.0)) throw ValidationError(strfmt("threshold constant K must be positive, got %g", K));
    return std::max(K, (D + Dtilde) / (2.0 * std::sqrt(D * Dtilde)));
}

std::vector<double> default_theta(const ReactionModel& model) {
    std::vector<double> theta;
    for (std::size_t j = 0; j + 1 < model.m; ++j)
        theta.push_back(1.05 * theta_threshold(model.d[j], model.d[model.m - 1], model.meta.K));
    return theta;
}

BMatrix b_matrix_posdef(double Theta, double D, double Dtilde, int beta) {
    if (!(Theta > 0.0)) throw ValidationError(strfmt("Theta must be positive, got %g", Theta));
    if (!(D > 0.0) || !(Dtilde > 0.0))
        throw ValidationError(strfmt("diffusivities must be positive, got %g and %g", D, Dtilde));
    if (beta < 0) throw ValidationError(strfmt("order beta must be >= 0, got %d", beta));
    BMatrix B;
    B.a11 = D * ipow(Theta, 4 * beta + 4);
    B.a12 = 0.5 * (D + Dtilde) * ipow(Theta, 2 * beta + 1);
    B.a22 = Dtilde;
    B.det = B.a11 * B.a22 - B.a12 * B.a12;
    B.positive_definite = B.a11 > 0.0 && B.det > 0.0;
    return B;
}

std::vector<StateField> dual_solve(const DualConfig& cfg, const GrowthLaw& law, const Grid& grid,
                                   std::span<const double> times) {
    if (cfg.xi.size() != grid.num_nodes())
        throw ValidationError(strfmt("dual source has %zu values, grid has %zu nodes",
                                     cfg.xi.size(), grid.num_nodes()));
    for (std::size_t p = 0; p < cfg.xi.size(); ++p)
        if (!(cfg.xi[p] >= 0.0) || !std::isfinite(cfg.xi[p]))
            throw ValidationError(strfmt("dual source must be nonnegative; node %zu holds %g", p,
                                         cfg.xi[p]));
    if (!(cfg.D > 0.0) || !(cfg.Dtilde > 0.0))
        throw ValidationError(strfmt("dual diffusivities must be positive, got %g and %g", cfg.D,
                                     cfg.Dtilde));
    if (cfg.L1 < 0.0)
        throw ValidationError(strfmt("bulk comparison constant L1 must be >= 0, got %g", cfg.L1));
    const double l2_floor = std::max(cfg.L1, cfg.Dtilde * cfg.L1 / cfg.D);
    if (cfg.L2 < l2_floor - 1e-12)
        throw ValidationError(strfmt("boundary constant L2=%g is below the admissible floor "
                                     "max(L1, Dtilde*L1/D)=%g",
                                     cfg.L2, l2_floor));
    if (!(cfg.T > 0.0)) throw ValidationError(strfmt("dual horizon T must be positive, got %g", cfg.T));
    law.scales(cfg.T); // range check
    if (times.size() < 2) throw ValidationError("dual solve needs at least two sample times");
    const double slack = 1e-9 * std::max(1.0, cfg.T);
    if (std::abs(times.front()) > slack || std::abs(times.back() - cfg.T) > slack)
        throw ValidationError(strfmt("sample times must span [0, %g], got [%g, %g]", cfg.T,
                                     times.front(), times.back()));
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1]))
            throw ValidationError(strfmt("sample times must be strictly increasing at index %zu",
                                         k));

    // Explicit step bound for the reversed-time problem: diffusion plus the
    // linear bulk and boundary reaction rates.
    const GrowthBounds bounds = law.bounds_on(0.0, cfg.T);
    double diffusive = 0.0;
    double hmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.dim(); ++k) {
        const double h = grid.spacing(k);
        diffusive += bounds.lambda2 / (h * h);
        hmin = std::min(hmin, h);
    }
    const double rate = 2.0 * cfg.D * diffusive + cfg.L1 +
                        2.0 * cfg.L2 * std::sqrt(bounds.lambda2) / hmin;
    const double dt_max = cfg.safety / rate;

    const std::size_t n = grid.num_nodes();
    std::vector<double> psi(n, 0.0);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);

    // d(psi)/d(tau) at reversed time tau: D Delta_{t(tau)} psi + L1 psi + xi,
    // closed with the boundary rate L2 psi and *no* dilution term.
    auto rhs = [&](const std::vector<double>& v, double tau, std::vector<double>& out) {
        auto ctx = make_context(law, grid, {cfg.D}, cfg.T - tau, FluxConvention::DScaled);
        ctx.a = 0.0;
        StateField s(0, 0);
        s.comp.push_back(v);
        s.t = cfg.T - tau;
        std::vector<std::vector<std::vector<double>>> flux(1);
        const auto& faces = grid.faces();
        flux[0].resize(faces.size());
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            flux[0][fi].resize(faces[fi].nodes.size());
            for (std::size_t nn = 0; nn < faces[fi].nodes.size(); ++nn)
                flux[0][fi][nn] = cfg.L2 * v[faces[fi].nodes[nn]];
        }
        const GhostValues gh = close_boundary(ctx, s, flux);
        apply_L(ctx, s.comp[0], 0, gh, out);
        for (std::size_t p = 0; p < n; ++p) out[p] += cfg.L1 * v[p] + cfg.xi[p];
    };
    auto rk4 = [&](double tau, double dt) {
        rhs(psi, tau, k1);
        for (std::size_t p = 0; p < n; ++p) stage[p] = psi[p] + 0.5 * dt * k1[p];
        rhs(stage, tau + 0.5 * dt, k2);
        for (std::size_t p = 0; p < n; ++p) stage[p] = psi[p] + 0.5 * dt * k2[p];
        rhs(stage, tau + 0.5 * dt, k3);
        for (std::size_t p = 0; p < n; ++p) stage[p] = psi[p] + dt * k3[p];
        rhs(stage, tau + dt, k4);
        for (std::size_t p = 0; p < n; ++p)
            psi[p] += dt / 6.0 * (k1[p] + 2.0 * (k2[p] + k3[p]) + k4[p]);
    };

    std::vector<StateField> out(times.size());
    double tau = 0.0;
    for (std::size_t idx = times.size(); idx-- > 0;) {
        const double target = cfg.T - times[idx];
        if (target > tau) {
            const auto steps = static_cast<std::size_t>(std::ceil((target - tau) / dt_max - 1e-9));
            const double dt = (target - tau) / static_cast<double>(std::max<std::size_t>(1, steps));
            for (std::size_t s = 0; s < std::max<std::size_t>(1, steps); ++s)
                rk4(tau + static_cast<double>(s) * dt, dt);
            tau = target;
        }
        StateField snap(0, 0);
        snap.comp.push_back(psi);
        snap.t = times[idx];
        out[idx] = std::move(snap);
    }
    return out;
}

double normalize_dual_source(const Grid& grid, std::span<double> xi, int p, double T) {
    if (p < 2) throw ValidationError(strfmt("duality exponent p must be >= 2, got %d", p));
    if (!(T > 0.0)) throw ValidationError(strfmt("horizon T must be positive, got %g", T));
    if (xi.size() != grid.num_nodes())
        throw ValidationError(strfmt("source has %zu values, grid has %zu nodes", xi.size(),
                                     grid.num_nodes()));
    const double q = static_cast<double>(p) / (p - 1.0); // conjugate exponent
    double integral = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        if (!(xi[k] >= 0.0))
            throw ValidationError(strfmt("source must be nonnegative; node %zu holds %g", k,
                                         xi[k]));
        integral += grid.weight(k) * std::pow(xi[k], q);
    }
    const double norm = std::pow(T * integral, 1.0 / q);
    if (!(norm > 0.0)) throw ValidationError("source vanishes identically; cannot normalize");
    const double scale = 1.0 / norm;
    for (double& v : xi) v *= scale;
    return scale;
}

DualityResult duality_check(const std::vector<StateField>& primal, std::size_t iu, std::size_t iv,
                            const std::vector<StateField>& phi, std::span<const double> xi,
                            const GrowthLaw& law, const Grid& grid, double D, double Dtilde,
                            double L1, double L2, double tol_rel, double tol_abs) {
    if (primal.size() < 2) throw ValidationError("duality check needs at least two snapshots");
    if (primal.size() != phi.size())
        throw ValidationError(strfmt("primal trajectory has %zu snapshots, dual has %zu",
                                     primal.size(), phi.size()));
    if (xi.size() != grid.num_nodes())
        throw ValidationError(strfmt("source has %zu values, grid has %zu nodes", xi.size(),
                                     grid.num_nodes()));
    const double T = primal.back().t;
    std::vector<double> stamps;
    for (std::size_t k = 0; k < primal.size(); ++k) {
        if (phi[k].components() != 1)
            throw ValidationError("dual snapshots must have exactly one component");
        if (std::abs(primal[k].t - phi[k].t) > 1e-9 * std::max(1.0, T))
            throw ValidationError(strfmt("misaligned trajectories: primal t=%.12g vs dual "
                                         "t=%.12g at snapshot %zu",
                                         primal[k].t, phi[k].t, k));
        stamps.push_back(primal[k].t);
    }
    const std::size_t m = primal.front().components();
    if (iu >= m || iv >= m)
        throw ValidationError(strfmt("component pair (%zu, %zu) out of range for %zu components",
                                     iu + 1, iv + 1, m));

    const std::size_t n = grid.num_nodes();
    std::vector<double> lap(n);
    double lhs = 0.0, initial = 0.0, ddiff = 0.0, bulk_cmp = 0.0, bdry_cmp = 0.0, dilution = 0.0;

    for (std::size_t p = 0; p < n; ++p)
        initial += grid.weight(p) *
                   (primal.front().comp[iu][p] + primal.front().comp[iv][p]) *
                   phi.front().comp[0][p];

    for (std::size_t k = 0; k < stamps.size(); ++k) {
        const double wt = time_weight(stamps, k);
        const auto& up = primal[k].comp[iu];
        const auto& vp = primal[k].comp[iv];
        const auto& ph = phi[k].comp[0];

        double sum_lhs = 0.0, sum_uv = 0.0, sum_phi = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double w = grid.weight(p);
            sum_lhs += w * (up[p] + vp[p]) * xi[p];
            sum_uv += w * (up[p] + vp[p]);
            sum_phi += w * ph[p];
        }

        // Delta_t(phi) with the dual closure D grad(phi).eta = L2 phi.
        auto ctx_d = make_context(law, grid, {D}, stamps[k], FluxConvention::DScaled);
        ctx_d.a = 0.0;
        std::vector<std::vector<std::vector<double>>> flux(1);
        const auto& faces = grid.faces();
        flux[0].resize(faces.size());
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            flux[0][fi].resize(faces[fi].nodes.size());
            for (std::size_t nn = 0; nn < faces[fi].nodes.size(); ++nn)
                flux[0][fi][nn] = L2 * ph[faces[fi].nodes[nn]];
        }
        const GhostValues gh = close_boundary(ctx_d, phi[k], flux);
        auto ctx_1 = ctx_d;
        ctx_1.d = {1.0};
        apply_L(ctx_1, ph, 0, gh, lap);
        double sum_vlap = 0.0;
        for (std::size_t p = 0; p < n; ++p) sum_vlap += grid.weight(p) * vp[p] * lap[p];

        const double phi_gamma = integrate_boundary(grid, ph);

        lhs += wt * sum_lhs;
        ddiff += wt * (Dtilde - D) * sum_vlap;
        bulk_cmp += wt * L1 * sum_phi;
        bdry_cmp += wt * L1 * phi_gamma;
        dilution -= wt * law.dilution_rate(stamps[k]) * sum_uv;
    }

    DualityResult res;
    res.lhs = lhs;
    res.rhs = initial + ddiff + bulk_cmp + bdry_cmp + dilution;
    res.residual = res.lhs - res.rhs;
    res.pass = res.residual <= tol_rel * std::abs(res.rhs) + tol_abs;
    res.terms = {{"lhs", lhs},
                 {"initial", initial},
                 {"cross_diffusion", ddiff},
                 {"bulk_comparison", bulk_cmp},
                 {"boundary_comparison", bdry_cmp},
                 {"dilution", dilution},
                 {"rhs", res.rhs},
                 {"residual", res.residual}};
    return res;
}

L1Report l1_report(const std::vector<StateField>& snapshots, const GrowthLaw& law,
                   const Grid& grid, std::span<const double> b) {
    if (snapshots.empty()) throw ValidationError("growth report needs at least one snapshot");
    const std::size_t m = snapshots.front().components();
    if (!b.empty() && b.size() != m)
        throw ValidationError(strfmt("weight vector has %zu entries, state has %zu components",
                                     b.size(), m));

    L1Report rep;
    std::vector<double> ts, logw;
    std::vector<double> absbuf(grid.num_nodes());
    for (const StateField& snap : snapshots) {
        const auto lambda = law.scales(snap.t);
        double W = 0.0, B = 0.0, B_face = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double bi = b.empty() ? 1.0 : b[i];
            for (std::size_t p = 0; p < grid.num_nodes(); ++p)
                absbuf[p] = std::abs(snap.comp[i][p]);
            W += bi * integrate_bulk(grid, absbuf);
            B += bi * integrate_boundary(grid, absbuf);
            for (const Face& face : grid.faces()) {
                double tangent = 1.0;
                for (int ax = 0; ax < grid.dim(); ++ax)
                    if (ax != face.axis) tangent *= lambda[static_cast<std::size_t>(ax)];
                double face_int = 0.0;
                for (std::size_t nn = 0; nn < face.nodes.size(); ++nn)
                    face_int += face.weights[nn] * absbuf[face.nodes[nn]];
                B_face += bi * tangent * face_int;
            }
        }
        double det_root = 1.0;
        for (double lam : lambda) det_root *= lam;
        det_root = std::sqrt(det_root);

        rep.max_bulk = std::max(rep.max_bulk, W);
        rep.max_boundary = std::max(rep.max_boundary, B);
        rep.max_boundary_det_root = std::max(rep.max_boundary_det_root, det_root * B);
        rep.max_boundary_face_exact = std::max(rep.max_boundary_face_exact, B_face);
        ts.push_back(snap.t);
        logw.push_back(std::log(std::max(W, 1e-300)));
    }

    if (ts.size() >= 2) {
        double intercept = 0.0;
        rep.rate = fit_log_slope(ts, logw, &intercept);
        rep.C = std::exp(intercept);
        const std::size_t tail = std::max<std::size_t>(2, ts.size() / 3);
        const std::size_t lo = ts.size() - tail;
        rep.late_rate = fit_log_slope(std::span(ts).subspan(lo), std::span(logw).subspan(lo),
                                      nullptr);
        rep.superexponential = rep.late_rate > 2.0 * std::max(rep.rate, 0.0) + 1.0;
    } else {
        rep.C = std::exp(logw.front());
    }
    return rep;
}

} // namespace evodiff
