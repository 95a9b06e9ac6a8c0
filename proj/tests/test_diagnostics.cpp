#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "evodiff/common.hpp"
#include "evodiff/diagnostics.hpp"
#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"
#include "evodiff/solver.hpp"

using namespace evodiff;

namespace {

double rnd() { return static_cast<double>(std::rand()) / RAND_MAX; }

// Trapezoid quadrature helpers for the trace-inequality property test.
double bulk_sq(const Grid& g, const std::vector<double>& u) {
    std::vector<double> sq(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) sq[p] = u[p] * u[p];
    return integrate_bulk(g, sq);
}

double grad_sq(const Grid& g, const std::vector<double>& u) {
    const double h = g.spacing(0);
    std::vector<double> sq(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) {
        double du;
        if (p == 0)
            du = (u[1] - u[0]) / h;
        else if (p + 1 == u.size())
            du = (u[p] - u[p - 1]) / h;
        else
            du = (u[p + 1] - u[p - 1]) / (2.0 * h);
        sq[p] = du * du;
    }
    return integrate_bulk(g, sq);
}

double trace_sq(const Grid& g, const std::vector<double>& u) {
    std::vector<double> sq(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) sq[p] = u[p] * u[p];
    return integrate_boundary(g, sq);
}

} // namespace

TEST_CASE("pairing polynomial at hand-computed points") {
    // p = 2, Theta = 2: u^2 Theta^4 + 2 Theta u v + v^2 = 16 + 4 + 1
    CHECK(lyapunov_P(1.0, 1.0, 2, 2.0) == 21.0);

    // three components, theta = (2, 2), z = (1, 1, 1):
    // 1 + 4 + 4 + 16 + 16 + 8
    const double z[3] = {1.0, 1.0, 1.0};
    const double th[2] = {2.0, 2.0};
    CHECK(lyapunov_P_m(z, 2, th) == 49.0);

    // one component: plain power
    const double z1[1] = {3.0};
    CHECK(lyapunov_P_m(std::span(z1, 1), 4, {}) == 81.0);
}

TEST_CASE("two-component pairing agrees bitwise with the general form") {
    std::srand(31);
    for (int trial = 0; trial < 50; ++trial) {
        const double u = 4.0 * rnd(), v = 4.0 * rnd(), Theta = 0.5 + 2.0 * rnd();
        const int p = 2 + std::rand() % 4;
        const double z[2] = {u, v};
        const double th[1] = {Theta};
        CHECK(lyapunov_P(u, v, p, Theta) == lyapunov_P_m(z, p, th));
    }
}

TEST_CASE("unit pairing weight collapses to the binomial power") {
    std::srand(37);
    for (int p = 2; p <= 6; ++p) {
        const double u = 0.3 + rnd(), v = 0.3 + rnd();
        const double ref = std::pow(u + v, p);
        CHECK(lyapunov_P(u, v, p, 1.0) == doctest::Approx(ref).epsilon(1e-12));
    }
    // same collapse for three components with all weights 1
    const double z[3] = {0.4, 1.1, 0.7};
    const double th[2] = {1.0, 1.0};
    CHECK(lyapunov_P_m(z, 3, th) == doctest::Approx(std::pow(0.4 + 1.1 + 0.7, 3)).epsilon(1e-12));
}

TEST_CASE("pairing rate matches the analytic and numeric derivative") {
    // p = 2: P = Theta^4 u^2 + 2 Theta u v + v^2, dP/du at (1,1,Theta=2) = 36
    CHECK(lyapunov_P_rate(1.0, 1.0, 1.0, 0.0, 2, 2.0) == 36.0);

    const double u = 0.7, v = 1.1, du = 0.4, dv = -0.2, Theta = 1.3;
    const int p = 3;
    const double rate = lyapunov_P_rate(u, v, du, dv, p, Theta);
    const double h = 1e-5;
    const double fd = (lyapunov_P(u + h * du, v + h * dv, p, Theta) -
                       lyapunov_P(u - h * du, v - h * dv, p, Theta)) /
                      (2.0 * h);
    CHECK(rate == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("field pairing integrates the nodal polynomial") {
    const Grid grid({1.0, 1.0}, {9, 9});
    StateField s(2, grid.num_nodes());
    for (auto& x : s.comp[0]) x = 1.0;
    for (auto& x : s.comp[1]) x = 1.0;
    const double th[1] = {2.0};
    CHECK(lyapunov_P_field(grid, s, 2, th) == doctest::Approx(21.0).epsilon(1e-13));

    StateField one(1, grid.num_nodes());
    for (auto& x : one.comp[0]) x = 0.5;
    CHECK(lyapunov_P_field(grid, one, 3, {}) == doctest::Approx(0.125).epsilon(1e-13));

    CHECK_THROWS_AS(lyapunov_P_field(grid, s, 1, th), ValidationError);
    CHECK_THROWS_AS(lyapunov_P_field(grid, s, 2, {}), ValidationError);
}

TEST_CASE("pairing weight threshold") {
    CHECK(theta_threshold(1.0, 1.0, 1.0) == 1.0);
    CHECK(theta_threshold(4.0, 1.0, 1.0) == 1.25);
    CHECK(theta_threshold(1.0, 1.0, 7.0) == 7.0);
    CHECK(theta_threshold(1.0, 4.0, 1.0) == 1.25); // symmetric in the diffusivities
    CHECK_THROWS_AS(theta_threshold(0.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(theta_threshold(1.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("default pairing weights sit 5% above the threshold") {
    const auto bruss = ReactionModel::builtin("brusselator-surface");
    const auto th2 = default_theta(bruss);
    REQUIRE(th2.size() == 1);
    CHECK(th2[0] == doctest::Approx(1.05).epsilon(1e-15));

    const auto rev = ReactionModel::builtin("reversible-reaction");
    CHECK(default_theta(rev).size() == 2);

    const auto single = ReactionModel::from_expressions({"0"}, {"0"}, {1.0});
    CHECK(default_theta(single).empty());
}

TEST_CASE("comparison matrix determinant and definiteness") {
    const BMatrix B = b_matrix_posdef(2.0, 1.0, 1.0, 0);
    CHECK(B.a11 == 16.0);
    CHECK(B.a12 == 2.0);
    CHECK(B.a22 == 1.0);
    CHECK(B.det == 12.0);
    CHECK(B.positive_definite);

    // Theta = 1 is exactly singular for equal diffusivities
    const BMatrix S = b_matrix_posdef(1.0, 1.0, 1.0, 0);
    CHECK(S.det == 0.0);
    CHECK_FALSE(S.positive_definite);

    // equal diffusivities: det = D^2 (Theta^(4b+4) - Theta^(4b+2))
    const BMatrix E = b_matrix_posdef(1.5, 2.0, 2.0, 1);
    CHECK(E.det ==
          doctest::Approx(4.0 * (std::pow(1.5, 8) - std::pow(1.5, 6))).epsilon(1e-12));

    // the margin grows with Theta above the threshold
    double prev = b_matrix_posdef(1.05, 1.0, 1.0, 0).det;
    for (double Theta = 1.15; Theta < 2.05; Theta += 0.1) {
        const double det = b_matrix_posdef(Theta, 1.0, 1.0, 0).det;
        CHECK(det > prev);
        prev = det;
    }

    CHECK_THROWS_AS(b_matrix_posdef(0.0, 1.0, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(b_matrix_posdef(1.0, 1.0, 1.0, -1), ValidationError);
}

TEST_CASE("dual problem with zero source stays identically zero") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);
    DualConfig cfg;
    cfg.xi.assign(grid.num_nodes(), 0.0);
    cfg.L1 = 0.5;
    cfg.L2 = 0.5;
    cfg.T = 0.5;
    const std::vector<double> times = {0.0, 0.25, 0.5};
    const auto phi = dual_solve(cfg, law, grid, times);
    REQUIRE(phi.size() == 3);
    for (const auto& snap : phi)
        for (double v : snap.comp[0]) CHECK(v == 0.0);
}

TEST_CASE("unit source with no reaction gives phi = T - t") {
    const Grid grid({1.0}, {17});
    const auto law = GrowthLaw::make_static(1, 1.0);
    DualConfig cfg;
    cfg.xi.assign(grid.num_nodes(), 1.0);
    cfg.T = 0.75;
    const std::vector<double> times = {0.0, 0.25, 0.5, 0.75};
    const auto phi = dual_solve(cfg, law, grid, times);
    REQUIRE(phi.size() == times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        CHECK(phi[k].t == doctest::Approx(times[k]).epsilon(1e-14));
        for (double v : phi[k].comp[0])
            CHECK(v == doctest::Approx(cfg.T - times[k]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("dual solution of a nonnegative source stays nonnegative") {
    const Grid grid({1.0}, {17});
    const auto law = GrowthLaw::isotropic_exponential(1, 1.0, 0.2);
    DualConfig cfg;
    cfg.xi.resize(grid.num_nodes());
    for (std::size_t p = 0; p < grid.num_nodes(); ++p) {
        const double x = grid.position(p)[0];
        cfg.xi[p] = x * (1.0 - x);
    }
    cfg.L1 = 0.5;
    cfg.L2 = 0.75;
    cfg.T = 0.5;
    const std::vector<double> times = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    const auto phi = dual_solve(cfg, law, grid, times);
    double sup = 0.0, mn = 0.0;
    for (const auto& snap : phi)
        for (double v : snap.comp[0]) {
            sup = std::max(sup, std::abs(v));
            mn = std::min(mn, v);
        }
    CHECK(sup > 0.0);
    CHECK(mn >= -1e-8 * (1.0 + sup));
}

TEST_CASE("dual solve validates source, constants and sample times") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);
    DualConfig cfg;
    cfg.xi.assign(grid.num_nodes(), 1.0);
    cfg.T = 0.5;
    const std::vector<double> ok = {0.0, 0.5};

    DualConfig bad = cfg;
    bad.xi[3] = -0.1;
    CHECK_THROWS_AS(dual_solve(bad, law, grid, ok), ValidationError);

    bad = cfg;
    bad.xi.pop_back();
    CHECK_THROWS_AS(dual_solve(bad, law, grid, ok), ValidationError);

    bad = cfg;
    bad.L1 = 1.0;
    bad.Dtilde = 2.0;
    bad.L2 = 1.0; // floor is max(L1, Dtilde L1 / D) = 2
    CHECK_THROWS_AS(dual_solve(bad, law, grid, ok), ValidationError);

    bad = cfg;
    bad.T = 2.0; // beyond the law horizon
    CHECK_THROWS_AS(dual_solve(bad, law, grid, ok), RangeError);

    CHECK_THROWS_AS(dual_solve(cfg, law, grid, std::vector<double>{0.0, 0.25}), ValidationError);
    CHECK_THROWS_AS(dual_solve(cfg, law, grid, std::vector<double>{0.5, 0.0}), ValidationError);
    CHECK_THROWS_AS(dual_solve(cfg, law, grid, std::vector<double>{0.0}), ValidationError);
}

TEST_CASE("dual source normalization yields a unit space-time norm") {
    const Grid grid({1.0}, {33});
    std::vector<double> xi(grid.num_nodes(), 3.0);
    const double T = 2.0;
    const int p = 2;
    const double scale = normalize_dual_source(grid, xi, p, T);
    CHECK(scale == doctest::Approx(1.0 / std::sqrt(18.0)).epsilon(1e-13));

    const double q = static_cast<double>(p) / (p - 1);
    std::vector<double> powq(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) powq[k] = std::pow(xi[k], q);
    CHECK(std::pow(T * integrate_bulk(grid, powq), 1.0 / q) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> zero(grid.num_nodes(), 0.0);
    CHECK_THROWS_AS(normalize_dual_source(grid, zero, p, T), ValidationError);
    CHECK_THROWS_AS(normalize_dual_source(grid, xi, 1, T), ValidationError);
}

TEST_CASE("duality comparison on a conservative pair") {
    const Grid grid({1.0}, {33});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = ReactionModel::builtin("reversible-reaction");

    StateField s(3, grid.num_nodes());
    for (auto& v : s.comp[0]) v = 1.0;
    for (auto& v : s.comp[1]) v = 0.5;
    for (auto& v : s.comp[2]) v = 0.25;

    SolveOptions opts;
    opts.t_end = 0.2;
    const Trajectory traj = run(law, grid, model, s, opts);
    REQUIRE(traj.termination == Termination::Completed);

    std::vector<double> stamps;
    for (const auto& snap : traj.snapshots) stamps.push_back(snap.t);

    DualConfig cfg;
    cfg.xi.assign(grid.num_nodes(), 1.0);
    normalize_dual_source(grid, cfg.xi, 2, stamps.back());
    cfg.T = stamps.back();
    const auto phi = dual_solve(cfg, law, grid, stamps);

    // pair (u1, u3): the boundary rates cancel, so the comparison is an
    // identity up to quadrature error
    const auto res = duality_check(traj.snapshots, 0, 2, phi, cfg.xi, law, grid, 1.0, 1.0, 0.0,
                                   0.0);
    CHECK(res.pass);
    CHECK(std::abs(res.residual) <= 1e-3 * (1.0 + std::abs(res.rhs)));
    CHECK(res.terms.at("lhs") == res.lhs);
    CHECK(res.terms.at("rhs") == res.rhs);
}

TEST_CASE("duality comparison trivial and error paths") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);

    std::vector<StateField> primal;
    std::vector<StateField> phi;
    const std::vector<double> stamps = {0.0, 0.5, 1.0};
    for (double t : stamps) {
        primal.emplace_back(2, grid.num_nodes(), t);
        phi.emplace_back(1, grid.num_nodes(), t);
        for (auto& v : phi.back().comp[0]) v = 1.0 - t;
    }
    std::vector<double> xi(grid.num_nodes(), 1.0);

    // zero primal data: lhs = 0 <= rhs = L1 * (positive phi mass)
    const auto res = duality_check(primal, 0, 1, phi, xi, law, grid, 1.0, 1.0, 0.5, 0.5);
    CHECK(res.pass);
    CHECK(res.lhs == 0.0);
    CHECK(res.rhs > 0.0);

    // misaligned stamps are rejected
    auto shifted = phi;
    shifted[1].t += 0.01;
    CHECK_THROWS_AS(duality_check(primal, 0, 1, shifted, xi, law, grid, 1.0, 1.0, 0.5, 0.5),
                    ValidationError);
    CHECK_THROWS_AS(duality_check(primal, 0, 5, phi, xi, law, grid, 1.0, 1.0, 0.5, 0.5),
                    ValidationError);
    std::vector<StateField> one_snap(primal.begin(), primal.begin() + 1);
    CHECK_THROWS_AS(duality_check(one_snap, 0, 1, phi, xi, law, grid, 1.0, 1.0, 0.5, 0.5),
                    ValidationError);
}

TEST_CASE("mass growth report fits rates and flags explosions") {
    const Grid grid({1.0}, {17});
    const auto law = GrowthLaw::make_static(1, 2.0);

    auto make_traj = [&](auto weight_of_t) {
        std::vector<StateField> snaps;
        for (int k = 0; k <= 32; ++k) {
            const double t = static_cast<double>(k) / 32.0;
            StateField s(1, grid.num_nodes(), t);
            for (auto& v : s.comp[0]) v = weight_of_t(t);
            snaps.push_back(std::move(s));
        }
        return snaps;
    };

    // constant in time: rate ~ 0
    const auto flat = l1_report(make_traj([](double) { return 2.0; }), law, grid);
    CHECK(flat.max_bulk == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(std::abs(flat.rate) <= 1e-10);
    CHECK_FALSE(flat.superexponential);

    // clean exponential decay: the fitted rate is the exact exponent
    const auto decay = l1_report(make_traj([](double t) { return std::exp(-0.15 * t); }), law, grid);
    CHECK(decay.rate == doctest::Approx(-0.15).epsilon(1e-9));
    CHECK(decay.C == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(decay.superexponential);

    // doubly exponential growth: the late-time rate runs away from the fit
    const auto burst = l1_report(make_traj([](double t) { return std::exp(std::exp(5.0 * t)); }),
                                 law, grid);
    CHECK(burst.superexponential);

    // single snapshot: no rate, C is the initial mass
    std::vector<StateField> one;
    one.emplace_back(1, grid.num_nodes(), 0.0);
    for (auto& v : one.back().comp[0]) v = 3.0;
    const auto single = l1_report(one, law, grid);
    CHECK(single.rate == 0.0);
    CHECK(single.C == doctest::Approx(3.0).epsilon(1e-12));

    CHECK_THROWS_AS(l1_report({}, law, grid), ValidationError);
    const std::vector<double> wrong_b = {1.0, 1.0};
    CHECK_THROWS_AS(l1_report(one, law, grid, wrong_b), ValidationError);
}

TEST_CASE("boundary mass is reported in both surface scalings") {
    const Grid grid({1.0, 1.0}, {5, 5});
    const auto law = GrowthLaw::per_axis(2.0, {"1 + t", "1"});
    std::vector<StateField> snaps;
    snaps.emplace_back(1, grid.num_nodes(), 1.0); // lambda = (2, 1) here
    for (auto& v : snaps.back().comp[0]) v = 1.0;

    const auto rep = l1_report(snaps, law, grid);
    CHECK(rep.max_boundary == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(rep.max_boundary_det_root == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-13));
    // axis-0 faces carry tangent scale 1, axis-1 faces tangent scale 2
    CHECK(rep.max_boundary_face_exact == doctest::Approx(6.0).epsilon(1e-13));
}

TEST_CASE("trace interpolation inequality: fitted constants are finite and monotone") {
    const Grid grid({1.0}, {201});
    std::vector<std::vector<double>> family;
    for (int k = 0; k <= 6; ++k) {
        std::vector<double> u(grid.num_nodes());
        for (std::size_t p = 0; p < u.size(); ++p)
            u[p] = std::cos(k * 3.14159265358979323846 * grid.position(p)[0]);
        family.push_back(std::move(u));
    }
    std::vector<double> shifted(grid.num_nodes());
    for (std::size_t p = 0; p < shifted.size(); ++p)
        shifted[p] = std::exp(grid.position(p)[0]) - 0.5;
    family.push_back(std::move(shifted));

    auto fitted_C = [&](double eps) {
        double worst = 0.0;
        for (const auto& u : family) {
            const double mass = bulk_sq(grid, u);
            REQUIRE(mass > 0.0);
            worst = std::max(worst, (trace_sq(grid, u) - eps * grad_sq(grid, u)) / mass);
        }
        return worst;
    };

    const double C_half = fitted_C(0.5);
    const double C_quarter = fitted_C(0.25);
    const double C_tenth = fitted_C(0.1);
    CHECK(std::isfinite(C_tenth));
    // fitted constants shrink as more gradient is admitted
    CHECK(C_tenth >= C_quarter);
    CHECK(C_quarter >= C_half);
    // and stay below the analytic envelope C(eps) = 2 + 8 / eps
    CHECK(C_half <= 2.0 + 8.0 / 0.5);
    CHECK(C_quarter <= 2.0 + 8.0 / 0.25);
    CHECK(C_tenth <= 2.0 + 8.0 / 0.1);

    // the inequality itself holds for every member with the fitted constant
    for (const auto& u : family)
        CHECK(trace_sq(grid, u) <=
              0.25 * grad_sq(grid, u) + (C_quarter + 1e-12) * bulk_sq(grid, u) + 1e-12);
}
