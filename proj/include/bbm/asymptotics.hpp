#ifndef BBMZ_ASYMPTOTICS_HPP
#define BBMZ_ASYMPTOTICS_HPP

#include <utility>
#include <vector>

#include "bbm/generator.hpp"
#include "bbm/offspring.hpp"
#include "bbm/wave.hpp"

namespace bbm {

// Power-law model of the generating-function singularity:
// G^(m)(s) ~ C (R_G - s)^{-rho_tail} as s -> R_G (for m = 0 the fitted
// quantity is G(s) - s). rho_tail = 0 encodes a finite limit, with
// C = G(R_G) - R_G.
struct TailFit {
    int m = 0;
    double C = 0.0;
    double rho_tail = 0.0;
    double r2 = 0.0;
};

// Log-log fit of the singularity model on a grid approaching R_G;
// requires a finite radius of convergence.
TailFit fit_g_tail(const OffspringLaw& law, int m);

// Drift regime read off the left end of the wave profile: the decreasing
// branch ends either with Q'(x0) = 0 strictly inside (1, R_G) (below the
// critical drift), at Q(x0) = R_G with Q'(x0) < 0 (above), or at a joint
// zero/contact point (at the critical drift, within a 5% band since the
// bisected drift is never exact).
GeneratorCurve::Regime profile_regime(const WaveProfile& profile);

// Below the critical drift: the large-i equivalent of the coefficient
// q_{delta i + 1}(x),
//   -Q'(x0 + x) / (2 R^{delta i + 1/2} sqrt(delta beta (G(R) - R) i^3 pi)).
double coefficient_asymptotic(int i, double x, const WaveProfile& profile,
                              const GeneratorCurve& curve);

// Classical limit laws for the absorbed count at strongly negative drift.
enum class ZTailFormula {
    CriticalSurvivalTail,   // P(Z_x > n) at mu = -mu0
    CriticalPointMass,      // P(Z_x = delta n + 1) at mu = -mu0, R_G > 1
    SubcriticalPointMass,   // shape of P(Z_x = delta n + 1), mu < -mu0;
                            // the overall constant is fitted, not given
};
double classical_tail_formula(const ModelConfig& config, double n, double x,
                              ZTailFormula which);

// Least-squares scale K matching values[j] ~ K * shape(ns[j]) for the
// subcritical point-mass shape.
double fit_subcritical_scale(const ModelConfig& config, double x,
                             const std::vector<double>& ns,
                             const std::vector<double>& values);

// At the critical drift: equivalent of the weighted tail sum
// sum_{i >= n} q_i(x) R_G^i. Requires the m = 0 singularity fit (gate:
// r2 >= 0.99 when rho_tail > 0).
double critical_drift_tail_sum(double n, double x, const TailFit& tail,
                               const WaveProfile& profile);

// Above the critical drift: the two equivalents of
// sum_{i >= n} q_i(x) R_G^i i^t (a closed-form power of n, and a multiple
// of the matching offspring tail sum); requires t < m + 2 - rho_tail.
std::pair<double, double> supercritical_tail_sum(double n, double x, double t,
                                                 const TailFit& tail,
                                                 const WaveProfile& profile);

// sum_{i >= n} p_i R_G^i i^power (direct sum plus power-law closure).
double offspring_tail_sum(const OffspringLaw& law, double n, double power);

// At the critical drift: f'_x(s) ~ -Q'(x + x0) /
// (2 sqrt(beta int_s^{R_G} (G(u) - u) du)) as s -> R_G.
double fprime_asymptotic_critical(double s, double x,
                                  const WaveProfile& profile);

}  // namespace bbm

#endif
