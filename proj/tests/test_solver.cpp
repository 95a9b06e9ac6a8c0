#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "evodiff/common.hpp"
#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"
#include "evodiff/solver.hpp"

using namespace evodiff;

namespace {

constexpr double kPi = 3.14159265358979323846;

ReactionModel inert_model() { return ReactionModel::from_expressions({"0"}, {"0"}, {1.0}); }

StateField constant_state(const Grid& grid, std::size_t m, double value, double t = 0.0) {
    StateField s(m, grid.num_nodes(), t);
    for (auto& comp : s.comp)
        for (auto& v : comp) v = value;
    return s;
}

double max_abs_diff(const std::vector<double>& a, double ref) {
    double worst = 0.0;
    for (double v : a) worst = std::max(worst, std::abs(v - ref));
    return worst;
}

} // namespace

TEST_CASE("explicit step bound on a static interval") {
    const Grid grid({1.0}, {11}); // h = 0.1
    const auto law = GrowthLaw::make_static(1, 1.0);
    const double dt = stable_dt(law, grid, {1.0}, 0.0, 1.0, 0.9);
    CHECK(dt == doctest::Approx(4.5e-3).epsilon(1e-12)); // 0.9 / (2 * 1 / h^2)

    // halving h divides the bound by four
    const Grid fine({1.0}, {21});
    CHECK(dt / stable_dt(law, fine, {1.0}, 0.0, 1.0, 0.9) == doctest::Approx(4.0).epsilon(1e-12));

    // the largest diffusivity governs
    CHECK(stable_dt(law, grid, {1.0, 4.0}, 0.0, 1.0, 0.9) == doctest::Approx(dt / 4.0).epsilon(1e-12));
}

TEST_CASE("explicit step bound tracks the growth window") {
    const Grid grid({1.0}, {11});

    // growing domain: 1/lambda^2 <= 1, positive dilution enters the rate
    const auto grow = GrowthLaw::isotropic_exponential(1, 1.0, 0.1);
    const auto gb = grow.bounds_on(0.0, 1.0);
    CHECK(stable_dt(grow, grid, {1.0}, 0.0, 1.0, 0.9) ==
          doctest::Approx(0.9 / (2.0 * gb.lambda2 / 0.01 + gb.k2)).epsilon(1e-12));

    // contracting domain: 1/lambda^2 grows to 4, negative dilution is ignored
    const auto shrink = GrowthLaw::per_axis(1.0, {"1 / (1 + t)"});
    CHECK(stable_dt(shrink, grid, {1.0}, 0.0, 1.0, 0.9) ==
          doctest::Approx(0.9 / (2.0 * 4.0 / 0.01)).epsilon(1e-10));
}

TEST_CASE("explicit step bound rejects bad inputs") {
    const Grid grid({1.0}, {11});
    const auto law = GrowthLaw::make_static(1, 1.0);
    CHECK_THROWS_AS(stable_dt(law, grid, {1.0}, 0.0, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(stable_dt(law, grid, {1.0}, 0.0, 1.0, 1.5), ValidationError);
    CHECK_THROWS_AS(stable_dt(law, grid, {1.0}, 1.0, 0.5, 0.9), ValidationError);
    CHECK_THROWS_AS(stable_dt(law, grid, {}, 0.0, 1.0, 0.9), ValidationError);
    CHECK_THROWS_AS(stable_dt(law, grid, {-1.0}, 0.0, 1.0, 0.9), ValidationError);
}

TEST_CASE("a zero step leaves the state bitwise unchanged") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::isotropic_exponential(1, 1.0, 0.2);
    const auto model = ReactionModel::builtin("brusselator-surface");
    StateField s = constant_state(grid, 2, 0.0, 0.25);
    std::srand(21);
    for (auto& comp : s.comp)
        for (auto& v : comp) v = 0.1 + static_cast<double>(std::rand()) / RAND_MAX;
    const StateField before = s;

    step(s, 0.0, law, grid, model);
    CHECK(s.t == before.t);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t p = 0; p < s.comp[i].size(); ++p) CHECK(s.comp[i][p] == before.comp[i][p]);

    CHECK_THROWS_AS(step(s, -0.1, law, grid, model), ValidationError);
}

TEST_CASE("one explicit step of the dilution equation matches the Taylor decay") {
    // constant data, f = g = 0: the semi-discrete system is u' = -a(t) u
    // with a = 0.15 for this law, so one RK4 step reproduces exp(-a dt) to
    // fifth order.
    const Grid grid({1.0, 1.0, 1.0}, {5, 5, 5});
    const auto law = GrowthLaw::isotropic_exponential(3, 1.0, 0.1);
    const auto model = ReactionModel::from_expressions({"0"}, {"0"}, {1.0});
    StateField s = constant_state(grid, 1, 1.0);

    step(s, 0.01, law, grid, model);
    CHECK(s.t == doctest::Approx(0.01).epsilon(1e-15));
    for (double v : s.comp[0]) CHECK(v == doctest::Approx(std::exp(-0.0015)).epsilon(1e-12));
}

TEST_CASE("constant data decays by the inverse volume factor for every law kind") {
    const Grid grid({1.0}, {5});
    const auto model = inert_model();

    std::vector<double> times(33);
    std::vector<std::vector<double>> table(1, std::vector<double>(33));
    for (std::size_t k = 0; k < times.size(); ++k) {
        times[k] = 0.6 * static_cast<double>(k) / 32.0;
        table[0][k] = std::exp(0.1 * times[k]);
    }

    std::vector<GrowthLaw> laws;
    laws.push_back(GrowthLaw::make_static(1, 1.0));
    laws.push_back(GrowthLaw::isotropic_exponential(1, 1.0, 0.3));
    laws.push_back(GrowthLaw::isotropic_logistic(1, 1.0, 0.8, 2.5));
    laws.push_back(GrowthLaw::per_axis(1.0, {"1 + t^2 / 2"}));
    laws.push_back(GrowthLaw::tabulated(0.6, times, table));

    for (const auto& law : laws) {
        StateField s = constant_state(grid, 1, 1.0);
        const double t_end = 0.5;
        const int nsteps = 500;
        for (int k = 0; k < nsteps; ++k) step(s, t_end / nsteps, law, grid, model);
        const double expected = 1.0 / law.volume_factor(t_end);
        CAPTURE(static_cast<int>(law.kind()));
        CHECK(max_abs_diff(s.comp[0], expected) <= 1e-8);
    }
}

TEST_CASE("cosine mode on a static interval decays at the Neumann rate") {
    const Grid grid({1.0}, {65});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = inert_model();

    StateField s(1, grid.num_nodes());
    for (std::size_t p = 0; p < grid.num_nodes(); ++p)
        s.comp[0][p] = std::cos(kPi * grid.position(p)[0]);

    SolveOptions opts;
    opts.t_end = 0.1;
    const Trajectory traj = run(law, grid, model, s, opts);
    REQUIRE(traj.termination == Termination::Completed);

    // sign-indefinite data must have switched the positivity monitor off
    bool noted = false;
    for (const auto& w : traj.warnings) noted = noted || w.find("positivity monitor") != std::string::npos;
    CHECK(noted);

    const auto& last = traj.snapshots.back();
    CHECK(last.t == doctest::Approx(0.1).epsilon(1e-12));
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < grid.num_nodes(); ++p) {
        const double exact = std::exp(-kPi * kPi * 0.1) * std::cos(kPi * grid.position(p)[0]);
        const double diff = last.comp[0][p] - exact;
        num += grid.weight(p) * diff * diff;
        den += grid.weight(p) * exact * exact;
    }
    CHECK(std::sqrt(num / den) <= 1e-3);
}

TEST_CASE("weighted mass is conserved on a static domain") {
    const Grid grid({1.0, 1.0}, {17, 17});
    const auto law = GrowthLaw::make_static(2, 1.0);
    const auto model = ReactionModel::builtin("reversible-reaction");

    StateField s(3, grid.num_nodes());
    for (auto& v : s.comp[0]) v = 1.0;
    for (auto& v : s.comp[1]) v = 0.5;
    for (auto& v : s.comp[2]) v = 0.25;

    SolveOptions opts;
    opts.t_end = 0.5;
    const Trajectory rk = run(law, grid, model, s, opts);
    REQUIRE(rk.termination == Termination::Completed);
    for (const auto& rec : rk.records) CHECK(rec.conservation_residual <= 1e-10);

    opts.stepper = Stepper::ImexCN;
    const Trajectory cn = run(law, grid, model, s, opts);
    REQUIRE(cn.termination == Termination::Completed);
    for (const auto& rec : cn.records) CHECK(rec.conservation_residual <= 1e-8);
}

TEST_CASE("weighted mass is conserved on a growing domain") {
    const Grid grid({1.0}, {33});
    const auto law = GrowthLaw::isotropic_exponential(1, 1.5, 0.1);
    const auto model = ReactionModel::builtin("reversible-reaction");

    StateField s(3, grid.num_nodes());
    for (auto& v : s.comp[0]) v = 1.0;
    for (auto& v : s.comp[1]) v = 0.5;
    for (auto& v : s.comp[2]) v = 0.25;

    SolveOptions opts;
    opts.t_end = 1.0;
    const Trajectory traj = run(law, grid, model, s, opts);
    REQUIRE(traj.termination == Termination::Completed);
    for (const auto& rec : traj.records) CHECK(rec.conservation_residual <= 1e-6);
}

TEST_CASE("the semi-implicit stepper is second order on the dilution equation") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::isotropic_exponential(1, 1.0, 0.4);
    const auto model = inert_model();
    const double T = 0.5;
    const double exact = 1.0 / law.volume_factor(T);

    auto error_at = [&](int nsteps) {
        StateField s = constant_state(grid, 1, 1.0);
        for (int k = 0; k < nsteps; ++k)
            step(s, T / nsteps, law, grid, model, Stepper::ImexCN);
        return max_abs_diff(s.comp[0], exact);
    };
    const double e1 = error_at(8);
    const double e2 = error_at(16);
    const double e3 = error_at(32);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("quadratic boundary feedback blows up and is caught") {
    const Grid grid({1.0}, {17});
    const auto law = GrowthLaw::make_static(1, 2.0);
    const auto model = ReactionModel::from_expressions({"0"}, {"u1^2"}, {1.0});
    const StateField s = constant_state(grid, 1, 1.0);

    SolveOptions opts;
    opts.t_end = 1.0;
    const Trajectory traj = run(law, grid, model, s, opts);
    CHECK(traj.termination == Termination::BlowupDetected);
    CHECK(traj.blowup_threshold == doctest::Approx(2e6)); // auto: 1e6 (1 + sup u0)
    CHECK(traj.message.find("blow-up threshold") != std::string::npos);
    CHECK(traj.steps < 1000000);
    CHECK(traj.snapshots.back().t < 1.0);
}

TEST_CASE("a blow-up cap below the initial sup norm is rejected") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = inert_model();
    const StateField s = constant_state(grid, 1, 1.0);
    SolveOptions opts;
    opts.t_end = 0.5;
    opts.blowup_threshold = 0.5;
    CHECK_THROWS_AS(run(law, grid, model, s, opts), ValidationError);
}

TEST_CASE("monitored nonnegative data stops on a genuine positivity failure") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 2.0);
    // bulk sink drives the state negative; the system is not quasi-positive
    const auto model = ReactionModel::from_expressions({"0 - 1"}, {"0"}, {1.0});
    const StateField s = constant_state(grid, 1, 0.0);

    SolveOptions opts;
    opts.t_end = 1.0;
    const Trajectory traj = run(law, grid, model, s, opts);
    CHECK(traj.termination == Termination::Error);
    CHECK(traj.message.find("positivity failure") != std::string::npos);
    bool flagged = false;
    for (const auto& w : traj.warnings) flagged = flagged || w.find("quasi-positive") != std::string::npos;
    CHECK(flagged);

    // the same run with the monitor off completes (negative but finite)
    opts.positivity = PositivityMonitor::Off;
    const Trajectory off = run(law, grid, model, s, opts);
    CHECK(off.termination == Termination::Completed);
    CHECK(off.snapshots.back().comp[0][0] == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("snapshot cadence follows snapshot_every") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = inert_model();
    const StateField s = constant_state(grid, 1, 1.0);

    SolveOptions opts;
    opts.t_end = 0.05;
    opts.dt = 0.005; // 10 steps, below the stability bound for h = 1/8
    opts.snapshot_every = 4;
    const Trajectory traj = run(law, grid, model, s, opts);
    REQUIRE(traj.termination == Termination::Completed);
    CHECK(traj.steps == 10);
    REQUIRE(traj.snapshots.size() == 4); // steps 0, 4, 8, 10
    CHECK(traj.snapshots[0].t == doctest::Approx(0.0));
    CHECK(traj.snapshots[1].t == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(traj.snapshots[2].t == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(traj.snapshots[3].t == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(traj.records.size() == traj.snapshots.size());
}

TEST_CASE("run validates horizon, times and weights") {
    const Grid grid({1.0}, {9});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = inert_model();
    const StateField s = constant_state(grid, 1, 1.0);

    SolveOptions opts;
    opts.t_end = 2.0; // beyond the horizon
    CHECK_THROWS_AS(run(law, grid, model, s, opts), RangeError);

    opts.t_end = 0.0;
    CHECK_THROWS_AS(run(law, grid, model, s, opts), ValidationError);

    opts.t_end = 0.5;
    opts.mass_weights = {1.0, 1.0};
    CHECK_THROWS_AS(run(law, grid, model, s, opts), ValidationError);

    opts.mass_weights.clear();
    opts.stepper = Stepper::ExplicitRK4;
    opts.dt = 1.0; // far above the stability bound
    CHECK_THROWS_AS(run(law, grid, model, s, opts), ValidationError);
}

TEST_CASE("manufactured refinement bookkeeping") {
    const auto names = convergence_case_names();
    REQUIRE(names.size() == 3);
    CHECK_THROWS_AS(manufactured_convergence("no-such-case"), ValidationError);

    const auto res = manufactured_convergence("linear-exact");
    CHECK(res.exact);
    CHECK_FALSE(res.degraded);
    REQUIRE(res.errors.size() == 3);
    for (double e : res.errors) CHECK(e <= 1e-11);
    CHECK(res.note.find("rounding level") != std::string::npos);
}

TEST_CASE("terminations render as words") {
    CHECK(std::string(to_string(Termination::Completed)) == "completed");
    CHECK(std::string(to_string(Termination::BlowupDetected)) == "blowup-detected");
    CHECK(std::string(to_string(Termination::Error)) == "error");
}
