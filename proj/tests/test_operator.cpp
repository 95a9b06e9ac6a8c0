#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "evodiff/common.hpp"
#include "evodiff/grid.hpp"
#include "evodiff/growth.hpp"
#include "evodiff/models.hpp"
#include "evodiff/operators.hpp"

using namespace evodiff;

namespace {

ReactionModel unit_flux_model() {
    // one component, no bulk source, boundary rate identically 1
    return ReactionModel::from_expressions({"0"}, {"1"}, {1.0});
}

StateField random_state(const Grid& grid, std::size_t m, unsigned seed) {
    std::srand(seed);
    StateField s(m, grid.num_nodes());
    for (auto& comp : s.comp)
        for (auto& v : comp) v = static_cast<double>(std::rand()) / RAND_MAX;
    return s;
}

} // namespace

TEST_CASE("ghost closure on a hand-worked 1-D example") {
    const Grid grid({1.0}, {11}); // h = 0.1
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto model = unit_flux_model();
    const auto ctx = make_context(law, grid, model.d, 0.0);

    StateField s(1, grid.num_nodes());
    s.comp[0][1] = 5.0; // mirror of the left boundary node
    s.comp[0][9] = 5.0; // mirror of the right boundary node

    const auto ghosts = close_boundary(ctx, s, model);
    // ghost = mirror + 2 h lambda g / d = 5 + 2*0.1*1*1/1
    CHECK(ghosts.values[0][0][0] == doctest::Approx(5.2).epsilon(1e-15));
    CHECK(ghosts.values[0][1][0] == doctest::Approx(5.2).epsilon(1e-15));

    // the explicit-flux overload agrees when handed the same rates
    const std::vector<std::vector<std::vector<double>>> flux = {{{1.0}, {1.0}}};
    const auto ghosts2 = close_boundary(ctx, s, flux);
    CHECK(ghosts2.values[0][0][0] == ghosts.values[0][0][0]);
    CHECK(ghosts2.values[0][1][0] == ghosts.values[0][1][0]);
}

TEST_CASE("ghost increment scales with the dilation and the flux convention") {
    const Grid grid({1.0}, {11});
    const auto law = GrowthLaw::per_axis(2.0, {"1 + t"});
    StateField s(1, grid.num_nodes());

    // lambda = 2 at t = 1 doubles the increment
    const auto model = unit_flux_model();
    const auto ctx0 = make_context(law, grid, model.d, 0.0);
    const auto ctx1 = make_context(law, grid, model.d, 1.0);
    const double inc0 = close_boundary(ctx0, s, model).values[0][0][0];
    const double inc1 = close_boundary(ctx1, s, model).values[0][0][0];
    CHECK(inc0 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(inc1 == doctest::Approx(0.4).epsilon(1e-15));

    // with d = 4 the diffusivity-scaled reading divides by d, plain does not
    const auto model4 = ReactionModel::from_expressions({"0"}, {"1"}, {4.0});
    const auto ctx_ds = make_context(law, grid, model4.d, 0.0, FluxConvention::DScaled);
    const auto ctx_pl = make_context(law, grid, model4.d, 0.0, FluxConvention::Plain);
    CHECK(close_boundary(ctx_ds, s, model4).values[0][0][0] == doctest::Approx(0.05));
    CHECK(close_boundary(ctx_pl, s, model4).values[0][0][0] == doctest::Approx(0.2));
}

TEST_CASE("zero flux reduces to the mirror and to the homogeneous stencil") {
    const Grid grid({1.0, 1.0}, {9, 7});
    const auto law = GrowthLaw::make_static(2, 1.0);
    const auto model = ReactionModel::from_expressions({"0"}, {"0"}, {1.0});
    const auto ctx = make_context(law, grid, model.d, 0.0);
    const auto s = random_state(grid, 1, 3);

    const auto ghosts = close_boundary(ctx, s, model);
    for (std::size_t fi = 0; fi < grid.faces().size(); ++fi) {
        const Face& face = grid.faces()[fi];
        const auto into = face.side == 0 ? static_cast<std::ptrdiff_t>(grid.stride(face.axis))
                                         : -static_cast<std::ptrdiff_t>(grid.stride(face.axis));
        for (std::size_t n = 0; n < face.nodes.size(); ++n) {
            const auto mirror = static_cast<std::size_t>(
                static_cast<std::ptrdiff_t>(face.nodes[n]) + into);
            CHECK(ghosts.values[0][fi][n] == s.comp[0][mirror]);
        }
    }

    std::vector<double> via_ghosts(grid.num_nodes()), homogeneous(grid.num_nodes());
    apply_L(ctx, s.comp[0], 0, ghosts, via_ghosts);
    apply_L_homogeneous(ctx, 1.0, s.comp[0], homogeneous);
    for (std::size_t p = 0; p < grid.num_nodes(); ++p) CHECK(via_ghosts[p] == homogeneous[p]);
}

TEST_CASE("static unit dilation reduces bitwise to the plain mirrored Laplacian") {
    const Grid grid({1.0}, {21});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto ctx = make_context(law, grid, {1.0}, 0.5);
    const auto s = random_state(grid, 1, 5);
    const auto& u = s.comp[0];
    const std::size_t N = grid.num_nodes();

    std::vector<double> out(N);
    apply_L_homogeneous(ctx, 1.0, u, out);

    const double inv_h2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    for (std::size_t p = 0; p < N; ++p) {
        const double west = p > 0 ? u[p - 1] : u[p + 1];
        const double east = p < N - 1 ? u[p + 1] : u[p - 1];
        const double by_hand = 1.0 * ((west - 2.0 * u[p] + east) * inv_h2);
        CHECK(out[p] == by_hand);
    }
}

TEST_CASE("the operator is linear") {
    const Grid grid({1.0}, {17});
    const auto law = GrowthLaw::isotropic_exponential(1, 1.0, 0.3);
    const auto ctx = make_context(law, grid, {2.0}, 0.7);
    const auto s = random_state(grid, 2, 9);
    const auto& u = s.comp[0];
    const auto& v = s.comp[1];

    std::vector<double> combo(grid.num_nodes());
    for (std::size_t p = 0; p < combo.size(); ++p) combo[p] = 2.0 * u[p] - 3.0 * v[p];

    std::vector<double> Lu(grid.num_nodes()), Lv(grid.num_nodes()), Lc(grid.num_nodes());
    apply_L_homogeneous(ctx, 2.0, u, Lu);
    apply_L_homogeneous(ctx, 2.0, v, Lv);
    apply_L_homogeneous(ctx, 2.0, combo, Lc);
    for (std::size_t p = 0; p < combo.size(); ++p)
        CHECK(Lc[p] == doctest::Approx(2.0 * Lu[p] - 3.0 * Lv[p])
                           .epsilon(1e-12)
                           .scale(1.0 + std::abs(Lu[p]) + std::abs(Lv[p])));
}

TEST_CASE("quadratics are differentiated exactly when the flux matches") {
    const Grid grid({1.0}, {11});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto ctx = make_context(law, grid, {1.0}, 0.0);

    StateField s(1, grid.num_nodes());
    for (std::size_t p = 0; p < grid.num_nodes(); ++p) {
        const double x = grid.position(p)[0];
        s.comp[0][p] = x * x;
    }
    // d u' . eta: -2x at x=0 gives 0, +2x at x=1 gives 2
    const std::vector<std::vector<std::vector<double>>> flux = {{{0.0}, {2.0}}};
    const auto ghosts = close_boundary(ctx, s, flux);
    std::vector<double> out(grid.num_nodes());
    apply_L(ctx, s.comp[0], 0, ghosts, out);
    for (double v : out) CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("affine fields with matching flux are annihilated") {
    const Grid grid({1.0}, {11});
    const auto law = GrowthLaw::make_static(1, 1.0);
    const auto ctx = make_context(law, grid, {1.0}, 0.0);

    StateField s(1, grid.num_nodes());
    for (std::size_t p = 0; p < grid.num_nodes(); ++p)
        s.comp[0][p] = 1.0 + 2.0 * grid.position(p)[0];
    const std::vector<std::vector<std::vector<double>>> flux = {{{-2.0}, {2.0}}};
    const auto ghosts = close_boundary(ctx, s, flux);
    std::vector<double> out(grid.num_nodes());
    apply_L(ctx, s.comp[0], 0, ghosts, out);
    for (double v : out) CHECK(std::abs(v) <= 1e-11);
}

TEST_CASE("weighted sum of L u equals the discrete boundary flux integral") {
    // Summation by parts: sum_p w_p (L u)_p telescopes to
    // sum_faces (1/lambda_axis) int_face g dsigma - a int u dx, exactly.
    const Grid grid({1.0, 2.0}, {9, 11});
    const auto law = GrowthLaw::per_axis(2.0, {"1 + t", "1 + t/2"});
    const auto model = ReactionModel::from_expressions({"0"}, {"u1"}, {3.0});
    const double t = 1.0;
    const auto ctx = make_context(law, grid, model.d, t);
    const auto s = random_state(grid, 1, 13);

    const auto ghosts = close_boundary(ctx, s, model);
    std::vector<double> Lu(grid.num_nodes());
    apply_L(ctx, s.comp[0], 0, ghosts, Lu);
    const double lhs = integrate_bulk(grid, Lu);

    double flux_total = 0.0;
    std::vector<double> g(1);
    for (const Face& face : grid.faces()) {
        const double lam = ctx.lambda[static_cast<std::size_t>(face.axis)];
        for (std::size_t n = 0; n < face.nodes.size(); ++n) {
            model.eval_g(std::span(&s.comp[0][face.nodes[n]], 1), g);
            flux_total += face.weights[n] * g[0] / lam;
        }
    }
    const double rhs = flux_total - ctx.a * integrate_bulk(grid, s.comp[0]);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11).scale(1.0 + std::abs(rhs)));
}

TEST_CASE("pushforward interpolates on the evolving domain") {
    const Grid grid({1.0}, {11});
    const auto law = GrowthLaw::per_axis(2.0, {"1 + t"});

    std::vector<double> linear(grid.num_nodes());
    for (std::size_t p = 0; p < grid.num_nodes(); ++p) linear[p] = grid.position(p)[0];

    // at t = 0 the map is the identity
    const double y0[] = {0.35};
    CHECK(pushforward(grid, law, linear, 0.0, y0) == doctest::Approx(0.35).epsilon(1e-14));

    // at t = 1 the physical point y = 1 pulls back to x = 0.5
    const double y1[] = {1.0};
    CHECK(pushforward(grid, law, linear, 1.0, y1) == doctest::Approx(0.5).epsilon(1e-14));

    // constants are reproduced anywhere in the current domain
    const std::vector<double> ones(grid.num_nodes(), 4.0);
    const double y2[] = {1.99};
    CHECK(pushforward(grid, law, ones, 1.0, y2) == doctest::Approx(4.0).epsilon(1e-14));

    // outside the dilated box [0, 2] the query is rejected
    const double yout[] = {2.5};
    CHECK_THROWS_AS(pushforward(grid, law, linear, 1.0, yout), RangeError);
    const double yneg[] = {-0.1};
    CHECK_THROWS_AS(pushforward(grid, law, linear, 1.0, yneg), RangeError);
}

TEST_CASE("evolving mass carries the volume factor of the active convention") {
    const Grid grid({1.0, 1.0, 1.0}, {5, 5, 5});
    StateField s(1, grid.num_nodes(), 1.0);
    for (auto& v : s.comp[0]) v = 1.0;

    auto paper = GrowthLaw::isotropic_exponential(3, 2.0, 0.1);
    CHECK(evolving_mass(grid, paper, s) == doctest::Approx(std::exp(0.15)).epsilon(1e-12));

    auto det = GrowthLaw::isotropic_exponential(3, 2.0, 0.1);
    det.set_jacobian(JacobianMode::StandardDet);
    CHECK(evolving_mass(grid, det, s) == doctest::Approx(std::exp(0.3)).epsilon(1e-12));

    // static law: plain weighted L1 norm
    const auto stat = GrowthLaw::make_static(3, 1.0);
    const double b[] = {2.0};
    CHECK(evolving_mass(grid, stat, s, b) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("context construction and apply_L validate their inputs") {
    const Grid grid({1.0}, {5});
    const auto law1 = GrowthLaw::make_static(1, 1.0);
    const auto law2 = GrowthLaw::make_static(2, 1.0);
    CHECK_THROWS_AS(make_context(law2, grid, {1.0}, 0.0), ValidationError);
    CHECK_THROWS_AS(make_context(law1, grid, {}, 0.0), ValidationError);
    CHECK_THROWS_AS(make_context(law1, grid, {0.0}, 0.0), ValidationError);

    const auto ctx = make_context(law1, grid, {1.0}, 0.0);
    std::vector<double> u(grid.num_nodes(), 1.0), out(grid.num_nodes());
    const GhostValues empty;
    CHECK_THROWS_AS(apply_L(ctx, u, 0, empty, out), ValidationError);
    CHECK_THROWS_AS(apply_L(ctx, u, 5, empty, out), ValidationError);
}
