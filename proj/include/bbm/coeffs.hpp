#ifndef BBMZ_COEFFS_HPP
#define BBMZ_COEFFS_HPP

#include <cstddef>
#include <vector>

#include "bbm/offspring.hpp"
#include "bbm/wave.hpp"

namespace bbm {

// Table of q_i(x) = P(Z_x = i, extinction), i = 0..N, computed by monotone
// Picard iteration on the coefficient-wise renewal equation (the
// first-branch decomposition with the absorbed particle carrying weight s).
struct CoefficientTable {
    std::vector<double> x_grid;              // requested abscissas (on grid)
    int N = 0;                               // max coefficient index
    std::size_t K = 0;                       // offspring truncation used
    std::vector<std::vector<double>> values; // values[j][i] = q_i(x_grid[j])
    std::vector<double> tail_mass_bound;     // bound on Q(x) - sum_{i<=N} q_i
    int iterations = 0;
    double increment_norm = 0.0;   // last sup-norm Picard increment
    double min_increment = 0.0;    // most negative pointwise increment seen
    double radius_sigma = 0.0;     // evaluation point used in the tail bound
};

// profile may be null (the tail bound is then unavailable and the tail
// closure falls back to kernel-rate decay); sweeps_limit >= 0 runs exactly
// that many Picard sweeps instead of iterating to the tolerance.
CoefficientTable picard_coefficients(const ModelConfig& config,
                                     const WaveProfile* profile, int N,
                                     const std::vector<double>& x_grid,
                                     double tol, int sweeps_limit = -1);

// Closed form for the probability of extinction with exactly one branch
// event: k >= 2 offspring all absorbed, or k = 0 (branch to nothing).
double single_branch_exact(const OffspringLaw& law, double beta, double mu,
                           double x, unsigned k);

struct TableEval {
    double value;
    double remainder_bound;
};

// sum_{i<=N} q_i(x) s^i; x must be one of the table abscissas.
TableEval f_from_table(const CoefficientTable& table, double x, double s);

}  // namespace bbm

#endif
