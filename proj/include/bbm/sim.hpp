#ifndef BBMZ_SIM_HPP
#define BBMZ_SIM_HPP

#include <cstdint>
#include <vector>

#include "bbm/numerics.hpp"
#include "bbm/offspring.hpp"

namespace bbm {

// Counter-based stream (Philox4x32-10): the draw sequence is a pure
// function of (seed, replicate, draw index), so replicates can be run on
// any worker in any order with bit-identical results.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t replicate);
    double uniform();  // in the open interval (0, 1)

private:
    void fill_block();
    std::uint32_t key_[2];
    std::uint32_t ctr_[4];
    std::uint64_t block_ = 0;
    std::uint64_t out_[2];
    int avail_ = 0;
};

struct SimConfig {
    ModelConfig model;
    double x;                           // initial distance to the barrier
    std::uint64_t replicates = 100000;
    std::uint64_t event_budget = 100000;  // branch events per run before censor
    std::uint64_t seed = 0;
    int workers = 1;

    SimConfig(ModelConfig m, double x0) : model(std::move(m)), x(x0) {
        if (!(x0 > 0.0)) throw DomainError("SimConfig: x > 0 required");
    }
};

struct RunOutcome {
    enum class Status { Extinct, Censored };
    Status status = Status::Extinct;
    std::uint64_t z = 0;           // particles absorbed at the barrier
    std::uint64_t d = 0;           // branch events
    std::uint64_t max_population = 0;
};

struct SimSummary {
    std::uint64_t replicates = 0;
    std::uint64_t extinct = 0;
    std::uint64_t censored = 0;
    std::vector<std::uint64_t> z_counts;  // extinct runs with Z == index
    double censored_fraction = 0.0;
    double q_hat_low = 0.0;   // extinct fraction
    double q_hat_high = 0.0;  // extinct + censored fraction
    std::uint64_t seed = 0;
    std::uint64_t event_budget = 0;

    // Exact binomial confidence interval for P(Z = i, extinction).
    Interval z_ci(std::size_t i, double confidence = 0.99) const;
};

// Inverse of the branch-position CDF: y such that the probability that the
// first branch (before absorption) happens below y equals u. The density
// is (beta/alpha) e^{mu (y-z)} (e^{-alpha |y-z|} - e^{-alpha (y+z)}) with
// total mass 1 - e^{-lambda z}; inversion is safeguarded Newton/bisection
// to |CDF(y) - u (1 - e^{-lambda z})| < 1e-12.
double position_sampler(double z, double mu, double beta, double u);

// One exact jump-chain realization: LIFO stack of distances, absorption
// with probability e^{-lambda z}, otherwise a branch draw; censored when
// the branch-event budget is exceeded.
RunOutcome run_once(const SimConfig& config, std::uint64_t replicate);

SimSummary estimate(const SimConfig& config);

}  // namespace bbm

#endif
