#ifndef BBMZ_GENERATOR_HPP
#define BBMZ_GENERATOR_HPP

#include <vector>

#include "bbm/offspring.hpp"
#include "bbm/wave.hpp"

namespace bbm {

// The generator curve a(s, mu) = Q'(Q^{-1}(s)) on (q, R(mu)], obtained by
// integrating a'(s) a(s) = -2 mu a(s) - 2 beta (G(s) - s) from the
// asymptote a ~ -lambda_tilde (s - q) at s = q+.
struct GeneratorCurve {
    enum class Termination { a_hit_zero, s_hit_rg };
    enum class Regime { below_muc, at_muc, above_muc };

    double mu = 0.0, beta = 0.0;
    std::vector<double> s_grid;   // increasing, in (q, R]
    std::vector<double> a_values; // a <= 0
    double R = 0.0;               // radius of convergence estimate (= s_end)
    double a_end = 0.0;           // a(R) (= Q'(x0))
    Termination termination = Termination::a_hit_zero;
    Regime regime = Regime::below_muc;

    // shape-preserving cubic interpolation on the stored samples
    double a_at(double s) const;

    Pchip interp;  // interpolant of a over s_grid
};

GeneratorCurve integrate_a(const ModelConfig& config);

// R(mu): 1 for mu <= -mu0, otherwise s_end of integrate_a, cross-validated
// against Q(x0) from the wave left extension.
double radius(const ModelConfig& config);

GeneratorCurve::Regime regime_classify(const ModelConfig& config);

struct MuCResult {
    enum class Status { finite, infinite, undecidable } status;
    double mu_c = 0.0;            // valid when status == finite
    IntegralG criterion;          // the integral test that decided the route
};

MuCResult mu_c_locate(const OffspringLaw& law, double beta, double tol,
                      const Numerics& numerics = {});

}  // namespace bbm

#endif
