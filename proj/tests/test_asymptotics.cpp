#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "bbm/asymptotics.hpp"
#include "bbm/coeffs.hpp"
#include "bbm/generator.hpp"
#include "bbm/numerics.hpp"

using namespace bbm;

namespace {

const OffspringLaw& heavy_law() {
    static OffspringLaw law = OffspringLaw::polylog_tail(0.5, 3.0);
    return law;
}

double heavy_mu_c() {
    static double mu_c = mu_c_locate(heavy_law(), 0.5, 1e-6).mu_c;
    return mu_c;
}

Numerics coarse() {
    Numerics num;
    num.coeffs_grid_factor = 20.0;  // relative accuracy ~1e-5 suffices here
    return num;
}

const ModelConfig& critical_cfg() {
    static ModelConfig cfg(heavy_law(), 0.5, heavy_mu_c(), coarse());
    return cfg;
}

const ModelConfig& super_cfg() {
    static ModelConfig cfg(heavy_law(), 0.5, heavy_mu_c() + 0.5, coarse());
    return cfg;
}

const WaveProfile& critical_profile() {
    static WaveProfile p = solve_profile(critical_cfg());
    return p;
}

const WaveProfile& super_profile() {
    static WaveProfile p = solve_profile(super_cfg());
    return p;
}

const ModelConfig& binary_cfg() {
    static ModelConfig cfg(OffspringLaw::binary(), 0.5, 0.0);
    return cfg;
}

const WaveProfile& binary_profile() {
    static WaveProfile p = solve_profile(binary_cfg());
    return p;
}

const CoefficientTable& binary_table() {
    // the deepest coefficients are ~2e-10, so iterate well below them
    static CoefficientTable t = picard_coefficients(
        binary_cfg(), &binary_profile(), 48, {1.0}, 1e-14);
    return t;
}

}  // namespace

TEST_CASE("singularity fit: finite limit at the radius") {
    const TailFit fit = fit_g_tail(heavy_law(), 0);
    CHECK(fit.rho_tail == 0.0);
    CHECK(fit.r2 == 1.0);
    const double rg = heavy_law().radius_g();
    CHECK(fit.C == doctest::Approx(heavy_law().g(rg) - rg).epsilon(1e-12));
    CHECK(fit.C > 0.0);
    // adding an atom at zero shifts the limit but keeps it finite
    const OffspringLaw atom = OffspringLaw::polylog_tail(0.5, 3.0, 0.1);
    const TailFit fa = fit_g_tail(atom, 0);
    CHECK(fa.rho_tail == 0.0);
    CHECK(fa.C == doctest::Approx(atom.g(2.0) - 2.0).epsilon(1e-12));
}

TEST_CASE("singularity fit: third derivative blows up with unit exponent") {
    const TailFit fit = fit_g_tail(heavy_law(), 3);
    CHECK(fit.m == 3);
    CHECK(std::abs(fit.rho_tail - 1.0) < 0.05);
    CHECK(fit.r2 > 0.999);
    CHECK(fit.C > 0.0);
}

TEST_CASE("singularity fit requires a finite radius") {
    CHECK_THROWS_AS((void)fit_g_tail(OffspringLaw::binary(), 0), DomainError);
}

TEST_CASE("drift regime read from the wave left end") {
    CHECK(profile_regime(binary_profile()) ==
          GeneratorCurve::Regime::below_muc);
    CHECK(profile_regime(critical_profile()) ==
          GeneratorCurve::Regime::at_muc);
    CHECK(profile_regime(super_profile()) ==
          GeneratorCurve::Regime::above_muc);
}

TEST_CASE("coefficient equivalent: ratio trend, slope, and root test") {
    const GeneratorCurve curve = integrate_a(binary_cfg());
    const CoefficientTable& t = binary_table();
    const double R = curve.R;

    std::vector<double> err(48 + 1, 0.0), li, ly;
    for (int i = 20; i <= 40; ++i) {
        const double pred =
            coefficient_asymptotic(i, 1.0, binary_profile(), curve);
        err[i] = std::abs(t.values[0][i + 1] / pred - 1.0);
        // geometric factor removed: q_{i+1} R^i ~ c i^{-3/2}
        li.push_back(std::log(static_cast<double>(i)));
        ly.push_back(std::log(t.values[0][i + 1] * std::pow(R, i)));
    }
    CHECK(err[40] < 0.25);
    double early = 0.0, late = 0.0;
    for (int i = 20; i <= 26; ++i) early += err[i];
    for (int i = 34; i <= 40; ++i) late += err[i];
    CHECK(late < early);

    const LineFit line = fit_line(li, ly);
    CHECK(line.slope == doctest::Approx(-1.5).epsilon(0.034));

    // ratio test on the coefficients themselves
    CHECK(std::abs(t.values[0][42] / t.values[0][41] - 1.0 / R) < 5e-2);
    CHECK_THROWS_AS(
        (void)coefficient_asymptotic(0, 1.0, binary_profile(), curve),
        DomainError);
}

TEST_CASE("classical limit-law formulas") {
    const ModelConfig crit(OffspringLaw::binary(), 0.5, -1.0);
    // mu0 = 1 for the binary law at beta = 1/2
    const double n = 1000.0, x = 1.0;
    const double tail =
        classical_tail_formula(crit, n, x, ZTailFormula::CriticalSurvivalTail);
    const double ln2 = std::log(n) * std::log(n);
    CHECK(tail == doctest::Approx(std::exp(1.0) / (n * ln2)).epsilon(1e-12));
    // point mass = tail / (span * n)
    const double pm =
        classical_tail_formula(crit, n, x, ZTailFormula::CriticalPointMass);
    CHECK(pm * n == doctest::Approx(tail).epsilon(1e-12));

    // subcritical shape scales by 2^{-(d+1)} when n doubles
    const ModelConfig sub(OffspringLaw::binary(), 0.5, -1.5);
    const double root = std::sqrt(1.5 * 1.5 - 1.0);
    const double d = (1.5 + root) / (1.5 - root);
    const double s1 = classical_tail_formula(
        sub, n, x, ZTailFormula::SubcriticalPointMass);
    const double s2 = classical_tail_formula(
        sub, 2.0 * n, x, ZTailFormula::SubcriticalPointMass);
    CHECK(s2 / s1 == doctest::Approx(std::pow(2.0, -(d + 1.0))).epsilon(1e-12));

    // drift gates
    CHECK_THROWS_AS((void)classical_tail_formula(
                        sub, n, x, ZTailFormula::CriticalSurvivalTail),
                    DomainError);
    CHECK_THROWS_AS((void)classical_tail_formula(
                        crit, n, x, ZTailFormula::SubcriticalPointMass),
                    DomainError);
    CHECK_THROWS_AS((void)classical_tail_formula(
                        crit, 1.0, x, ZTailFormula::CriticalSurvivalTail),
                    DomainError);
}

TEST_CASE("subcritical scale fit recovers a synthetic constant") {
    const ModelConfig sub(OffspringLaw::binary(), 0.5, -1.5);
    const std::vector<double> ns{100.0, 200.0, 400.0, 800.0};
    std::vector<double> values;
    for (double n : ns)
        values.push_back(3.7 * classical_tail_formula(
                                   sub, n, 1.0,
                                   ZTailFormula::SubcriticalPointMass));
    CHECK(fit_subcritical_scale(sub, 1.0, ns, values) ==
          doctest::Approx(3.7).epsilon(1e-12));
}

TEST_CASE("critical-drift weighted tail sum against the coefficients") {
    const WaveProfile& p = critical_profile();
    const TailFit tail = fit_g_tail(heavy_law(), 0);
    const double rg = heavy_law().radius_g();

    // the weighted tail decays like n^{-1/2}, too slowly for a truncated
    // partial sum; compute it instead from the generating-function value at
    // the radius, f_x(R_G) = Q(x0 + x), minus the accurate head
    const CoefficientTable t =
        picard_coefficients(critical_cfg(), &p, 48, {1.0}, 1e-10);
    const double f_at_rg = p.q_at(p.x0 + 1.0);
    double head = 0.0;
    int done = 0;
    for (int n : {8, 16, 24, 32, 40}) {
        for (int i = done; i < n; ++i)
            head += t.values[0][i] * std::pow(rg, i);
        done = n;
        const double computed = f_at_rg - head;
        const double predicted = critical_drift_tail_sum(n, 1.0, tail, p);
        CHECK(computed / predicted == doctest::Approx(1.0).epsilon(0.08));
    }

    // closed-form structure at exponent zero: prefactor Gamma(1/2) = sqrt(pi)
    const double s8 = critical_drift_tail_sum(8.0, 1.0, tail, p);
    CHECK(critical_drift_tail_sum(32.0, 1.0, tail, p) ==
          doctest::Approx(0.5 * s8).epsilon(1e-12));
    const double A = -s8 * std::sqrt(8.0) / p.qp_at(p.x0 + 1.0);
    const double pi = 3.14159265358979323846;
    CHECK(A * std::sqrt(critical_cfg().beta * tail.C * pi) ==
          doctest::Approx(std::sqrt(rg)).epsilon(1e-12));
}

TEST_CASE("supercritical weighted tail sum against the coefficients") {
    const WaveProfile& p = super_profile();
    const TailFit tail = fit_g_tail(heavy_law(), 3);
    const double rg = heavy_law().radius_g();

    // here the weighted tail decays like n^{-(m+2-rho)} ~ n^{-4}, so a
    // truncated partial sum of a deep table converges
    const CoefficientTable t =
        picard_coefficients(super_cfg(), &p, 96, {1.0}, 1e-10);
    double prev_ratio = 1e30, prev_lhs = 1e30;
    for (int n : {8, 16, 24}) {
        double computed = 0.0;
        for (int i = n; i <= t.N; ++i)
            computed += t.values[0][i] * std::pow(rg, i);
        const auto [lhs, rhs] = supercritical_tail_sum(n, 1.0, 0.0, tail, p);
        CHECK(lhs > 0.0);
        CHECK(rhs > 0.0);
        CHECK(lhs < prev_lhs);
        // the two equivalents agree up to the o(1) corrections
        CHECK(lhs / rhs > 0.5);
        CHECK(lhs / rhs < 2.0);
        const double ratio = computed / lhs;
        CHECK(ratio > 0.3);
        CHECK(ratio < 8.0);
        CHECK(ratio < prev_ratio);  // trending toward the equivalent
        prev_ratio = ratio;
        prev_lhs = lhs;
    }
    // moment-style weights shift the exponent but stay within the gate
    const auto [w1, w0] = supercritical_tail_sum(16.0, 1.0, 1.0, tail, p);
    CHECK(w1 > supercritical_tail_sum(16.0, 1.0, 0.0, tail, p).first);
    CHECK(w0 > 0.0);
    CHECK_THROWS_AS(
        (void)supercritical_tail_sum(16.0, 1.0, 4.5, tail, p),
        DomainError);  // weight exponent too large for m + 2 - rho
}

TEST_CASE("offspring weighted tail sums") {
    // polylog tail: p_i R_G^i ~ c i^{-3}, summable against i^t for t < 2
    const double s0 = offspring_tail_sum(heavy_law(), 8.0, 0.0);
    const double sm2 = offspring_tail_sum(heavy_law(), 8.0, -2.0);
    CHECK(s0 > 0.0);
    CHECK(sm2 > 0.0);
    CHECK(sm2 < s0);
    CHECK(offspring_tail_sum(heavy_law(), 16.0, 0.0) < s0);
    // geometric tail: p_i R_G^i is constant, not summable
    CHECK_THROWS_AS(
        (void)offspring_tail_sum(OffspringLaw::geometric_tail(0.5), 8.0, 0.0),
        DomainError);
}

TEST_CASE("critical-drift derivative asymptote near the radius") {
    const WaveProfile& p = critical_profile();
    const double rg = heavy_law().radius_g();
    double prev_err = 1e30;
    for (double gap : {1e-2, 1e-3, 1e-4}) {
        const double s = rg - gap * (rg - 1.0);
        // f'_x(s) through the wave representation f_x = Q(Q^{-1}(s) + x)
        const double xs = p.q_inverse(s);
        const double fp = p.qp_at(xs + 1.0) / p.qp_at(xs);
        const double err =
            std::abs(fp / fprime_asymptotic_critical(s, 1.0, p) - 1.0);
        CHECK(err < 0.05);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK_THROWS_AS(
        (void)fprime_asymptotic_critical(heavy_law().extinction_q(), 1.0, p),
        DomainError);
}

TEST_CASE("regime gates reject the wrong drift range") {
    const TailFit t0 = fit_g_tail(heavy_law(), 0);
    const TailFit t3 = fit_g_tail(heavy_law(), 3);
    CHECK_THROWS_AS(
        (void)critical_drift_tail_sum(8.0, 1.0, t0, binary_profile()),
        DomainError);
    CHECK_THROWS_AS(
        (void)critical_drift_tail_sum(8.0, 1.0, t0, super_profile()),
        DomainError);
    CHECK_THROWS_AS(
        (void)supercritical_tail_sum(8.0, 1.0, 0.0, t3, critical_profile()),
        DomainError);
    // exponent gate: a finite-limit fit has no blow-up to integrate
    CHECK_THROWS_AS(
        (void)supercritical_tail_sum(8.0, 1.0, 0.0, t0, super_profile()),
        DomainError);
    CHECK_THROWS_AS(
        (void)fprime_asymptotic_critical(1.5, 1.0, super_profile()),
        DomainError);
    const GeneratorCurve above = integrate_a(super_cfg());
    CHECK_THROWS_AS(
        (void)coefficient_asymptotic(20, 1.0, super_profile(), above),
        DomainError);
}
