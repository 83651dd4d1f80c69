#ifndef BBMZ_OFFSPRING_HPP
#define BBMZ_OFFSPRING_HPP

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbm {

class DomainError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class DivergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class ConvergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LawFamily { Explicit, GeometricTail, PolylogTail, CustomRule };
enum class IntegralG { Finite, Infinite, Undecidable };

// Reproduction law L of the branching process, with generating function
// G(s) = sum p_k s^k. Laws with p_1 > 0 are reduced at construction by
// moving the L=1 events into a rescaled branching rate (reported via
// beta_scale); the reduction leaves beta*(G(s)-s) unchanged.
class OffspringLaw {
public:
    static OffspringLaw explicit_law(std::vector<double> p);
    static OffspringLaw binary();                      // L == 2
    static OffspringLaw deterministic(unsigned k);     // L == k
    // Tail families: p_k proportional to r^k (geometric) or r^k * k^-gamma
    // (polylog) for k >= 2, plus an optional atom p_0 at zero.
    static OffspringLaw geometric_tail(double r, double p0 = 0.0);
    static OffspringLaw polylog_tail(double r, double gamma, double p0 = 0.0);
    // Materialized coefficients of a law whose analytic tail is not known;
    // radius of convergence must be declared (may be infinity).
    static OffspringLaw custom_rule(std::vector<double> p, double radius_g);

    // order-th derivative of G at s, as a partial sum with a certified
    // relative tail bound below 1e-14.
    double g(double s, int order = 0) const;

    double mean() const { return m_; }
    double extinction_q() const { return q_; }
    unsigned span() const { return span_; }
    double radius_g() const { return radius_g_; }
    double gprime_q() const { return gprime_q_; }
    double beta_scale() const { return beta_scale_; }
    LawFamily family() const { return family_; }
    IntegralG integral_g_finite() const;

    // Prolific-tree reduction followed by removal of the unit-offspring
    // atom; the second member is the branching-rate factor (1 - p~_1).
    std::pair<OffspringLaw, double> tilde_transform() const;

    // Coefficients materialized up to the index where the remaining mass is
    // below 1e-15 (exact and complete for explicit laws).
    const std::vector<double>& probabilities() const { return p_; }

    double tail_r() const { return r_; }
    double tail_gamma() const { return gamma_; }
    // Scale of the analytic tail rule (tail families only).
    double tail_scale() const { return c_; }

private:
    OffspringLaw() = default;
    void finalize();

    LawFamily family_ = LawFamily::Explicit;
    std::vector<double> p_;
    std::vector<double> kpow_;  // k^-gamma cache (polylog family)
    double r_ = 0.0, gamma_ = 0.0, c_ = 0.0;
    double radius_g_ = std::numeric_limits<double>::infinity();
    double m_ = 0.0, q_ = 0.0, gprime_q_ = 0.0;
    double beta_scale_ = 1.0;
    unsigned span_ = 1;
};

// Scalar constants of the model (law, beta, mu).
struct Constants {
    double mu0;           // critical drift sqrt(2 beta (m-1))
    double alpha;         // sqrt(2 beta + mu^2)
    double lambda;        // alpha + mu
    double lambda_tilde;  // sqrt(2 beta (1 - G'(q)) + mu^2) + mu
    std::optional<double> lambda1, lambda2, d;  // defined when mu^2 >= 2 beta
};

Constants constants(const OffspringLaw& law, double beta, double mu);

// Numeric knobs shared across the solvers.
struct Numerics {
    double grid_h = 1e-3;
    double picard_tol = 1e-10;
    int picard_max_iter = 200000;
    bool accelerate = true;  // Aitken sweeps after the initial monotone phase
    double residual_tol = 1e-6;
    double event_tol = 1e-6;
    double interp_tol = 1e-8;
    double cross_tol = 1e-6;
    double tail_floor = 1e-12;   // target for k * exp(-lambda~ * Y_max)
    double a_seed_eps = 1e-6;    // generator seed offset, relative to 1-q
    double coeffs_grid_factor = 4.0;   // coeffs quadrature step / wave step
    int coeffs_max_iter = 400;
    double mu_max = 64.0;  // bracket ceiling for the mu_c search
};

struct ModelConfig {
    OffspringLaw law;
    double beta = 1.0;  // branching rate, already scaled by law.beta_scale()
    double mu = 0.0;
    Numerics numerics;

    ModelConfig(OffspringLaw l, double b, double drift, Numerics n = {})
        : law(std::move(l)), beta(b * law.beta_scale()), mu(drift),
          numerics(n) {
        if (!(b > 0.0)) throw DomainError("ModelConfig: beta must be positive");
    }

    Constants consts() const { return constants(law, beta, mu); }
};

}  // namespace bbm

#endif
