#include "bbm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace bbm {

namespace {

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
    const std::uint64_t p0 = 0xD2511F53ull * c[0];
    const std::uint64_t p1 = 0xCD9E8D57ull * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
    const std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
    c[0] = n0;
    c[1] = lo1;
    c[2] = n2;
    c[3] = lo0;
}

}  // namespace

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t replicate) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_[2] = static_cast<std::uint32_t>(replicate);
    ctr_[3] = static_cast<std::uint32_t>(replicate >> 32);
    ctr_[0] = ctr_[1] = 0;
}

void PhiloxStream::fill_block() {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32), ctr_[2],
                          ctr_[3]};
    std::uint32_t k[2] = {key_[0], key_[1]};
    for (int r = 0; r < 10; ++r) {
        philox_round(c, k);
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
    }
    out_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
    out_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
    avail_ = 2;
    ++block_;
}

double PhiloxStream::uniform() {
    if (avail_ == 0) fill_block();
    const std::uint64_t v = out_[--avail_];
    return (static_cast<double>(v >> 11) + 0.5) * 0x1p-53;
}

double position_sampler(double z, double mu, double beta, double u) {
    if (!(z > 0.0)) throw DomainError("position_sampler: z > 0 required");
    if (!(u > 0.0 && u < 1.0))
        throw DomainError("position_sampler: u in (0,1) required");
    const double alpha = std::sqrt(2.0 * beta + mu * mu);
    const double lambda = alpha + mu;
    const double c2 = alpha - mu;
    const double ba = beta / alpha;
    const double elz = std::exp(-lambda * z);
    const double mass = 1.0 - elz;

    // closed-form CDF of the unnormalized branch-position measure
    const double cdf_z =
        ba * ((1.0 - elz) / lambda - elz * (1.0 - std::exp(-c2 * z)) / c2);
    auto cdf = [&](double y) {
        if (y <= z)
            return ba * ((std::exp(-lambda * (z - y)) - elz) / lambda -
                         elz * (1.0 - std::exp(-c2 * y)) / c2);
        return cdf_z + ba * ((1.0 - std::exp(-c2 * (y - z))) / c2 -
                             elz * (std::exp(-c2 * z) - std::exp(-c2 * y)) /
                                 c2);
    };
    auto pdf = [&](double y) {
        const double near = (y <= z) ? std::exp(-lambda * (z - y))
                                     : std::exp(-c2 * (y - z));
        return ba * (near - std::exp(-c2 * y - lambda * z));
    };

    const double target = u * mass;
    double lo = 0.0, hi = z + 1.0;
    while (cdf(hi) < target) {
        lo = hi;
        hi = z + 2.0 * (hi - z);
        if (hi > z + 1e6)
            throw ConvergenceError("position_sampler: bracket failure");
    }
    if (lo == 0.0 && cdf_z >= target) hi = std::min(hi, z);

    double y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = cdf(y) - target;
        if (std::abs(f) < 1e-12) return y;
        if (f > 0.0)
            hi = y;
        else
            lo = y;
        const double d = pdf(y);
        double step = (d > 0.0) ? y - f / d : lo - 1.0;
        y = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
    }
    return y;
}

RunOutcome run_once(const SimConfig& config, std::uint64_t replicate) {
    PhiloxStream rng(config.seed, replicate);
    const ModelConfig& m = config.model;
    const Constants c = m.consts();
    const std::vector<double>& p = m.law.probabilities();

    RunOutcome out;
    std::vector<double> stack{config.x};
    out.max_population = 1;
    while (!stack.empty()) {
        const double z = stack.back();
        stack.pop_back();
        if (rng.uniform() < std::exp(-c.lambda * z)) {
            ++out.z;
            continue;
        }
        if (++out.d > config.event_budget) {
            out.status = RunOutcome::Status::Censored;
            return out;
        }
        const double y = position_sampler(z, m.mu, m.beta, rng.uniform());
        double u = rng.uniform();
        std::size_t k = p.size() - 1;
        for (std::size_t i = 0; i < p.size(); ++i) {
            u -= p[i];
            if (u < 0.0) {
                k = i;
                break;
            }
        }
        for (std::size_t i = 0; i < k; ++i) stack.push_back(y);
        out.max_population =
            std::max<std::uint64_t>(out.max_population, stack.size());
    }
    out.status = RunOutcome::Status::Extinct;
    return out;
}

Interval SimSummary::z_ci(std::size_t i, double confidence) const {
    const std::uint64_t k = (i < z_counts.size()) ? z_counts[i] : 0;
    return clopper_pearson(k, replicates, confidence);
}

SimSummary estimate(const SimConfig& config) {
    const int workers = std::max(1, config.workers);
    const std::uint64_t n = config.replicates;

    struct Partial {
        std::uint64_t extinct = 0, censored = 0;
        std::vector<std::uint64_t> z_counts;
    };
    std::vector<Partial> parts(workers);

    auto work = [&](int w) {
        Partial& pt = parts[w];
        for (std::uint64_t r = w; r < n; r += workers) {
            const RunOutcome out = run_once(config, r);
            if (out.status == RunOutcome::Status::Censored) {
                ++pt.censored;
                continue;
            }
            ++pt.extinct;
            if (out.z >= pt.z_counts.size()) pt.z_counts.resize(out.z + 1, 0);
            ++pt.z_counts[out.z];
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    SimSummary s;
    s.replicates = n;
    s.seed = config.seed;
    s.event_budget = config.event_budget;
    for (const Partial& pt : parts) {
        s.extinct += pt.extinct;
        s.censored += pt.censored;
        if (pt.z_counts.size() > s.z_counts.size())
            s.z_counts.resize(pt.z_counts.size(), 0);
        for (std::size_t i = 0; i < pt.z_counts.size(); ++i)
            s.z_counts[i] += pt.z_counts[i];
    }
    s.censored_fraction = static_cast<double>(s.censored) / n;
    s.q_hat_low = static_cast<double>(s.extinct) / n;
    s.q_hat_high = s.q_hat_low + s.censored_fraction;
    return s;
}

}  // namespace bbm
