#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bbm/wave.hpp"

using namespace bbm;

namespace {

ModelConfig binary_cfg(double mu, Numerics num = {}) {
    return ModelConfig(OffspringLaw::binary(), 0.5, mu, num);
}

}  // namespace

TEST_CASE("driftless binary wave against the first-integral oracle") {
    // (Q')^2 = 4 beta Q^2 (1/2 - Q/3) gives Q'(0) = -1/sqrt(3) and the
    // left-extension endpoint Q(x0) = 3/2 where Q' vanishes
    const WaveProfile p = solve_profile(binary_cfg(0.0));
    CHECK(p.qp0 == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-9));
    CHECK(p.q == doctest::Approx(0.0));
    CHECK(p.q_x0() == doctest::Approx(1.5).epsilon(1e-7));
    CHECK(p.lambda_tilde == doctest::Approx(1.0));
    CHECK(p.regime_hint == WaveProfile::RegimeHint::qprime_zero);
    CHECK(p.q_at(0.0) == doctest::Approx(1.0));
    // interior point against the first integral
    const double q1 = p.q_at(1.0);
    const double qp1 = p.qp_at(1.0);
    CHECK(qp1 * qp1 ==
          doctest::Approx(4.0 * 0.5 * q1 * q1 * (0.5 - q1 / 3.0))
              .epsilon(1e-7));
}

TEST_CASE("tail decay rate matches the linearization rate") {
    for (double mu : {-0.5, 0.0, 0.5}) {
        const WaveProfile p = solve_profile(binary_cfg(mu));
        const double rel =
            std::abs(p.diag.tail_rate_fit - p.lambda_tilde) / p.lambda_tilde;
        CHECK(rel < 1e-3);
        CHECK(p.diag.tail_fit_r2 > 0.999);
        CHECK(p.k_tail > 0.0);
    }
}

TEST_CASE("residual metrics on solved profiles") {
    for (double mu : {-0.5, 0.0, 1.0}) {
        const WaveProfile p = solve_profile(binary_cfg(mu));
        CHECK(ode_residual_fd(p) < p.config.numerics.residual_tol);
        // the identity metric carries ~1e-7 of its own quadrature error
        // (see the manufactured-solution case below)
        CHECK(qprime_identity_residual(p) < 5e-7);
    }
}

TEST_CASE("manufactured solution: exact closed-form wave segment") {
    // Q(x) = 1 - (1 + e^{-bx})^{-2} solves Q'' + 2 mu Q' + 2 beta (Q^2 - Q)
    // = 0 for b = sqrt(beta/3), mu = -5b/2; the first-order identity for Q'
    // must hold on any exact solution segment regardless of boundary data
    const double beta = 0.5;
    const double b = std::sqrt(beta / 3.0);
    const double mu = -2.5 * b;
    WaveProfile p(ModelConfig(OffspringLaw::binary(), beta, mu));
    const double h = 1e-3;
    p.grid_h = h;
    p.i0 = 0;
    p.x0 = 0.0;
    for (int j = 0; j <= 4000; ++j) {
        const double x = h * j;
        const double u = std::exp(-b * x);
        const double D = 1.0 + u;
        p.xs.push_back(x);
        p.q_values.push_back(1.0 - 1.0 / (D * D));
        p.qp_values.push_back(-2.0 * b * u / (D * D * D));
    }
    p.qp0 = p.qp_values[0];
    p.y_max = p.xs.back();

    // sanity: the segment really solves the wave equation
    double res = 0.0;
    for (int j = 2; j + 2 < 4000; j += 10) {
        const double qpp = (-p.q_values[j - 2] + 16 * p.q_values[j - 1] -
                            30 * p.q_values[j] + 16 * p.q_values[j + 1] -
                            p.q_values[j + 2]) /
                           (12 * h * h);
        const double q = p.q_values[j];
        res = std::max(res, std::abs(0.5 * qpp + mu * p.qp_values[j] +
                                     beta * (q * q - q)));
    }
    REQUIRE(res < 1e-8);

    // the residual on an exact solution measures the metric's own
    // quadrature error, two decades below the corruption threshold
    CHECK(qprime_identity_residual(p) < 5e-7);

    // corrupting the derivative must be detected
    for (double& v : p.qp_values) v += 1e-4;
    CHECK(qprime_identity_residual(p) > 1e-5);
}

TEST_CASE("monotone iteration without acceleration") {
    Numerics num;
    num.accelerate = false;
    const WaveProfile p = solve_profile(binary_cfg(0.3, num));
    CHECK(p.diag.min_increment >= -1e-13);
    CHECK(p.diag.increment < num.picard_tol);
}

TEST_CASE("inverse and generating-function evaluation") {
    const WaveProfile p = solve_profile(binary_cfg(0.2));
    CHECK(p.q_inverse(1.0) == 0.0);
    for (double s : {0.05, 0.3, 0.6, 0.9, 0.99}) {
        const double x = p.q_inverse(s);
        CHECK(p.q_at(x) == doctest::Approx(s).epsilon(1e-9));
    }
    // f_0(s) = s
    for (double s : {0.2, 0.5, 0.8}) {
        CHECK(p.f_eval(0.0, s) == doctest::Approx(s).epsilon(1e-9));
    }
    // f_x(1) = Q(x)
    CHECK(p.f_eval(0.7, 1.0) == doctest::Approx(p.q_at(0.7)).epsilon(1e-10));
    CHECK_THROWS_AS((void)p.q_inverse(p.q_x0() + 0.1), DomainError);
}

TEST_CASE("upper tail bound") {
    const WaveProfile p = solve_profile(binary_cfg(0.0));
    CHECK(tail_bound_check(p));
}

TEST_CASE("interpolation consistency between grid and evaluator") {
    const WaveProfile p = solve_profile(binary_cfg(0.0));
    // midpoints between grid nodes stay within the interpolation budget of
    // a five-point local polynomial reference
    const std::size_t j0 = p.i0 + 100;
    const double h = p.grid_h;
    for (std::size_t j = j0; j < j0 + 50; ++j) {
        const double xm = p.xs[j] + 0.5 * h;
        // cubic through the four surrounding nodes
        const double ym =
            (-p.q_values[j - 1] + 9 * p.q_values[j] + 9 * p.q_values[j + 1] -
             p.q_values[j + 2]) /
            16.0;
        CHECK(std::abs(p.q_at(xm) - ym) < p.config.numerics.interp_tol);
    }
}

TEST_CASE("profile preconditions") {
    CHECK_THROWS_AS((void)solve_profile(binary_cfg(-1.0)), DomainError);
    CHECK_THROWS_AS((void)solve_profile(binary_cfg(-2.0)), DomainError);
    const OffspringLaw critical = OffspringLaw::explicit_law({0.5, 0.0, 0.5});
    CHECK_THROWS_AS((void)solve_profile(ModelConfig(critical, 0.5, 0.0)),
                    DomainError);
}

TEST_CASE("subcritical drift raises the plateau") {
    // Q decreases to q > 0 when the no-barrier process can die out
    const OffspringLaw law = OffspringLaw::explicit_law({0.2, 0.0, 0.8});
    const WaveProfile p = solve_profile(ModelConfig(law, 0.5, 0.4));
    CHECK(p.q == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.q_at(40.0) == doctest::Approx(0.25).epsilon(1e-6));
}
