#include "doctest.h"

#include <cmath>
#include <vector>

#include "evodiff/common.hpp"
#include "evodiff/growth.hpp"

using namespace evodiff;

namespace {

/// Finite-difference oracle for the dilution rate: a(t) is the logarithmic
/// derivative of the volume factor, independently of how the law computes it.
double fd_dilution(const GrowthLaw& law, double t, double dt = 1e-6) {
    const double lo = std::log(law.volume_factor(t - dt));
    const double hi = std::log(law.volume_factor(t + dt));
    return (hi - lo) / (2.0 * dt);
}

} // namespace

TEST_CASE("static law is the identity dilation") {
    const GrowthLaw law = GrowthLaw::make_static(2, 1.0);
    CHECK(law.scale(0, 0.5) == 1.0);
    CHECK(law.scale(1, 1.0) == 1.0);
    CHECK(law.dilution_rate(0.3) == 0.0);
    CHECK(law.volume_factor(0.7) == 1.0);
    const GrowthBounds b = law.verify_bounds(100);
    CHECK(b.lambda1 == 1.0);
    CHECK(b.lambda2 == 1.0);
    CHECK(b.k1 == 0.0);
    CHECK(b.k2 == 0.0);
}

TEST_CASE("isotropic exponential growth, paper-sqrt dilution") {
    const GrowthLaw law = GrowthLaw::isotropic_exponential(3, 1.0, 0.1);
    CHECK(law.scale(0, 0.5) == doctest::Approx(std::exp(0.05)).epsilon(1e-14));
    // a(t) = (1/2) * sum_i lambda_i'/lambda_i = (1/2) * 3 * 0.1 = 0.15
    CHECK(law.dilution_rate(0.4) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(fd_dilution(law, 0.4) == doctest::Approx(0.15).epsilon(1e-8));

    const GrowthBounds b = law.verify_bounds(101);
    CHECK(b.lambda1 == doctest::Approx(std::exp(-0.2)).epsilon(1e-10));
    CHECK(b.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.k1 == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(b.k2 == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("standard-det dilution is exactly twice paper-sqrt") {
    GrowthLaw paper = GrowthLaw::isotropic_exponential(2, 2.0, 0.35);
    GrowthLaw det = GrowthLaw::isotropic_exponential(2, 2.0, 0.35);
    det.set_jacobian(JacobianMode::StandardDet);
    for (double t : {0.0, 0.5, 1.25, 2.0})
        CHECK(det.dilution_rate(t) == doctest::Approx(2.0 * paper.dilution_rate(t)).epsilon(1e-14));

    GrowthLaw logi = GrowthLaw::isotropic_logistic(1, 1.0, 0.8, 3.0);
    GrowthLaw logi_det = GrowthLaw::isotropic_logistic(1, 1.0, 0.8, 3.0);
    logi_det.set_jacobian(JacobianMode::StandardDet);
    CHECK(logi_det.dilution_rate(0.6) ==
          doctest::Approx(2.0 * logi.dilution_rate(0.6)).epsilon(1e-14));
}

TEST_CASE("per-axis analytic law: bounds and dilution") {
    const GrowthLaw law = GrowthLaw::per_axis(1.0, {"1 + t", "1", "1"});
    CHECK(law.dim() == 3);
    CHECK(law.scale(0, 1.0) == doctest::Approx(2.0));
    CHECK(law.scale(1, 1.0) == doctest::Approx(1.0));
    // a(t) = (1/2) * 1/(1+t): decreasing from 0.5 to 0.25 on [0,1]
    CHECK(law.dilution_rate(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(law.dilution_rate(1.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fd_dilution(law, 0.5) == doctest::Approx(law.dilution_rate(0.5)).epsilon(1e-8));

    const GrowthBounds b = law.verify_bounds(257);
    CHECK(b.lambda1 == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(b.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.k1 == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(b.k2 == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("logistic law matches its closed form") {
    const double rho = 0.8, S = 3.0;
    const GrowthLaw law = GrowthLaw::isotropic_logistic(1, 1.0, rho, S);
    for (double t : {0.0, 0.25, 0.6, 1.0}) {
        const double expect = S * std::exp(rho * t) / (S - 1.0 + std::exp(rho * t));
        CHECK(law.scale(0, t) == doctest::Approx(expect).epsilon(1e-13));
    }
    // lambda' = rho lambda (1 - lambda/S)
    const double lam = law.scale(0, 0.5);
    CHECK(law.scale_rate(0, 0.5) == doctest::Approx(rho * lam * (1.0 - lam / S)).epsilon(1e-10));
    CHECK(fd_dilution(law, 0.5) == doctest::Approx(law.dilution_rate(0.5)).epsilon(1e-7));
}

TEST_CASE("tabulated law cross-checks the exponential it samples") {
    const double rho = 0.1;
    std::vector<double> times;
    std::vector<double> samples;
    for (int k = 0; k <= 32; ++k) {
        const double t = static_cast<double>(k) / 32.0;
        times.push_back(t);
        samples.push_back(std::exp(rho * t));
    }
    const GrowthLaw tab = GrowthLaw::tabulated(1.0, times, {samples});
    const GrowthLaw exact = GrowthLaw::isotropic_exponential(1, 1.0, rho);
    for (double t : {0.11, 0.37, 0.5, 0.83}) {
        CHECK(tab.scale(0, t) == doctest::Approx(exact.scale(0, t)).epsilon(1e-6));
        CHECK(tab.dilution_rate(t) == doctest::Approx(exact.dilution_rate(t)).epsilon(1e-3));
    }
    // scale_rate is the derivative of the interpolant itself: a centered
    // difference of tab.scale must reproduce it, including at a table knot
    // (0.5), where the interpolant is C1.
    for (double t : {0.11, 0.37, 0.5, 0.83}) {
        const double h = 1e-6;
        const double fd = (tab.scale(0, t + h) - tab.scale(0, t - h)) / (2.0 * h);
        CHECK(tab.scale_rate(0, t) == doctest::Approx(fd).epsilon(1e-7));
    }
    // at the table edges the rate matches a one-sided second-order stencil
    const double h = 1e-6;
    const double fd0 =
        (-3.0 * tab.scale(0, 0.0) + 4.0 * tab.scale(0, h) - tab.scale(0, 2.0 * h)) / (2.0 * h);
    CHECK(tab.scale_rate(0, 0.0) == doctest::Approx(fd0).epsilon(1e-7));
    const double fd1 =
        (3.0 * tab.scale(0, 1.0) - 4.0 * tab.scale(0, 1.0 - h) + tab.scale(0, 1.0 - 2.0 * h)) /
        (2.0 * h);
    CHECK(tab.scale_rate(0, 1.0) == doctest::Approx(fd1).epsilon(1e-7));
}

TEST_CASE("query outside the horizon is a range error") {
    const GrowthLaw law = GrowthLaw::make_static(1, 1.0);
    CHECK_THROWS_AS(law.scale(0, 1.5), RangeError);
    CHECK_THROWS_AS(law.dilution_rate(-0.1), RangeError);
}

TEST_CASE("construction rejects inadmissible laws") {
    CHECK_THROWS_AS(GrowthLaw::make_static(0, 1.0), ValidationError);
    CHECK_THROWS_AS(GrowthLaw::make_static(1, 0.0), ValidationError);
    // per-axis scale must equal 1 at t = 0
    CHECK_THROWS_AS(GrowthLaw::per_axis(1.0, {"2 + t"}), ValidationError);
    // tabulated scales must stay positive and start at 1
    CHECK_THROWS_AS(GrowthLaw::tabulated(1.0, {0.0, 0.5, 1.0}, {{1.0, -0.5, 1.0}}),
                    ValidationError);
    CHECK_THROWS_AS(GrowthLaw::tabulated(1.0, {0.0, 1.0}, {{2.0, 3.0}}), ValidationError);
    // table must cover the horizon
    CHECK_THROWS_AS(GrowthLaw::tabulated(2.0, {0.0, 1.0}, {{1.0, 1.5}}), ValidationError);
    // logistic saturation 1 makes lambda constant at the unstable branch
    CHECK_THROWS_AS(GrowthLaw::isotropic_logistic(1, 1.0, 0.5, 0.0), ValidationError);
}

TEST_CASE("verify_bounds orders its output") {
    for (const GrowthLaw& law :
         {GrowthLaw::isotropic_exponential(2, 1.0, 0.3), GrowthLaw::per_axis(1.0, {"1/(1 + t)"}),
          GrowthLaw::isotropic_logistic(3, 1.0, 0.2, 2.0)}) {
        const GrowthBounds b = law.verify_bounds(129);
        CHECK(b.lambda1 <= b.lambda2);
        CHECK(b.k1 <= b.k2);
        CHECK(b.lambda1 > 0.0);
    }
}

TEST_CASE("contracting axes push k1 negative") {
    const GrowthLaw law = GrowthLaw::per_axis(1.0, {"1/(1 + t)"});
    CHECK(law.dilution_rate(0.0) < 0.0);
    const GrowthBounds b = law.verify_bounds(65);
    CHECK(b.k1 < 0.0);
    CHECK(b.lambda2 == doctest::Approx(4.0).epsilon(1e-10)); // 1/lambda^2 at t=1
}
