#include "bbm/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bbm/numerics.hpp"

namespace bbm {

namespace {

constexpr double kMassCutoff = 1e-15;
constexpr double kRelTarget = 1e-14;
constexpr std::size_t kTermCap = 400000;

unsigned support_span(const std::vector<double>& p, bool tail_from_two) {
    unsigned g = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0) continue;
        g = std::gcd(g, static_cast<unsigned>(k > 1 ? k - 1 : 1 - k));
    }
    if (tail_from_two) g = std::gcd(g, 1u);  // tail support contains k=2
    return g == 0 ? 1 : g;
}

double falling_factorial(double k, int order) {
    double f = 1.0;
    for (int i = 0; i < order; ++i) f *= (k - i);
    return f;
}

}  // namespace

OffspringLaw OffspringLaw::explicit_law(std::vector<double> p) {
    OffspringLaw law;
    law.family_ = LawFamily::Explicit;
    law.p_ = std::move(p);
    law.radius_g_ = std::numeric_limits<double>::infinity();
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::binary() { return deterministic(2); }

OffspringLaw OffspringLaw::deterministic(unsigned k) {
    std::vector<double> p(k + 1, 0.0);
    p[k] = 1.0;
    return explicit_law(std::move(p));
}

OffspringLaw OffspringLaw::geometric_tail(double r, double p0) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("geometric_tail: r in (0,1)");
    if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("geometric_tail: p0");
    OffspringLaw law;
    law.family_ = LawFamily::GeometricTail;
    law.r_ = r;
    law.radius_g_ = 1.0 / r;
    law.c_ = (1.0 - p0) * (1.0 - r) / (r * r);
    // Materialize the head until the remaining mass drops below cutoff.
    law.p_ = {p0, 0.0};
    double mass_left = 1.0 - p0;
    double term = law.c_ * r * r;
    for (std::size_t k = 2; mass_left > kMassCutoff && k < kTermCap; ++k) {
        law.p_.push_back(term);
        mass_left -= term;
        term *= r;
    }
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::polylog_tail(double r, double gamma, double p0) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("polylog_tail: r in (0,1)");
    if (!(gamma > 0.0)) throw DomainError("polylog_tail: gamma > 0");
    if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("polylog_tail: p0");
    OffspringLaw law;
    law.family_ = LawFamily::PolylogTail;
    law.r_ = r;
    law.gamma_ = gamma;
    law.radius_g_ = 1.0 / r;
    law.kpow_.resize(kTermCap + 1);
    law.kpow_[0] = 0.0;
    for (std::size_t k = 1; k <= kTermCap; ++k)
        law.kpow_[k] = std::pow(static_cast<double>(k), -gamma);
    // Normalize: sum_{k>=2} r^k k^-gamma = Li_gamma(r) - r.
    double s = 0.0, rk = r;
    for (std::size_t k = 2; k < kTermCap; ++k) {
        rk *= r;
        const double t = rk * law.kpow_[k];
        s += t;
        if (t < kRelTarget * s * (1.0 - r)) break;
    }
    law.c_ = (1.0 - p0) / s;
    law.p_ = {p0, 0.0};
    double mass_left = 1.0 - p0;
    rk = r;
    for (std::size_t k = 2; mass_left > kMassCutoff && k < kTermCap; ++k) {
        rk *= r;
        const double t = law.c_ * rk * law.kpow_[k];
        law.p_.push_back(t);
        mass_left -= t;
    }
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::custom_rule(std::vector<double> p, double radius_g) {
    if (!(radius_g >= 1.0)) throw DomainError("custom_rule: radius_g >= 1");
    OffspringLaw law;
    law.family_ = LawFamily::CustomRule;
    law.p_ = std::move(p);
    law.radius_g_ = radius_g;
    law.finalize();
    return law;
}

void OffspringLaw::finalize() {
    if (p_.size() < 2) p_.resize(2, 0.0);
    double sum = 0.0;
    for (double v : p_) {
        if (v < 0.0) throw DomainError("offspring law: negative probability");
        sum += v;
    }
    const bool tail = family_ == LawFamily::GeometricTail ||
                      family_ == LawFamily::PolylogTail;
    if (!tail && std::abs(sum - 1.0) > 1e-12)
        throw DomainError("offspring law: probabilities must sum to 1");

    // Reduce p_1 into the branching rate.
    if (p_[1] > 0.0) {
        const double p1 = p_[1];
        if (p1 >= 1.0) throw DomainError("offspring law: L == 1 a.s.");
        beta_scale_ = 1.0 - p1;
        p_[1] = 0.0;
        for (double& v : p_) v /= beta_scale_;
        p_[1] = 0.0;
        if (tail) c_ /= beta_scale_;
    }

    if (tail) {
        m_ = 0.0;  // placeholder so g() is usable below
        m_ = g(1.0, 1);
    } else {
        m_ = 0.0;
        for (std::size_t k = 0; k < p_.size(); ++k)
            m_ += static_cast<double>(k) * p_[k];
    }
    if (!std::isfinite(m_)) throw DomainError("offspring law: infinite mean");

    span_ = support_span(p_, tail);

    // Smallest non-negative fixed point of G.
    if (p_[0] == 0.0) {
        q_ = 0.0;
    } else if (m_ <= 1.0) {
        q_ = 1.0;
    } else {
        const double hi = 1.0 - 1e-9;
        const auto f = [this](double s) { return g(s) - s; };
        if (f(hi) >= 0.0)
            throw ConvergenceError("extinction probability too close to 1");
        q_ = bisect_root(f, 0.0, hi, 1e-15);
    }
    gprime_q_ = g(q_, 1);
}

double OffspringLaw::g(double s, int order) const {
    if (s < 0.0) throw DomainError("g: s must be non-negative");
    if (s > radius_g_ * (1.0 + 1e-12)) throw DomainError("g: s beyond R_G");

    if (family_ == LawFamily::Explicit || family_ == LawFamily::CustomRule) {
        if (family_ == LawFamily::CustomRule && s > radius_g_ * (1.0 - 1e-9) &&
            std::isfinite(radius_g_))
            throw DivergenceError("g: custom rule has no certified tail at R_G");
        double acc = 0.0;
        for (std::size_t k = p_.size(); k-- > static_cast<std::size_t>(order);) {
            acc = acc * s +
                  p_[k] * falling_factorial(static_cast<double>(k), order);
        }
        // acc currently holds sum p_k ff(k) s^{k-order} via Horner in s
        return acc;
    }

    const double z = r_ * std::min(s, radius_g_);
    const bool at_rg = z >= 1.0 - 1e-12;

    if (family_ == LawFamily::GeometricTail) {
        if (at_rg) throw DivergenceError("g: geometric tail diverges at R_G");
        const double u = 1.0 / (1.0 - z);
        if (order == 0) return p_[0] + c_ * (u - 1.0 - z);
        if (order == 1) return c_ * r_ * (u * u - 1.0);
        double fac = 1.0;
        for (int i = 2; i <= order; ++i) fac *= i;
        return c_ * std::pow(r_, order) * fac * std::pow(u, order + 1);
    }

    // Polylog tail.
    if (at_rg && !(gamma_ > order + 1))
        throw DivergenceError("g: polylog series diverges at R_G");
    double acc = (order == 0) ? p_[0] : 0.0;
    const double sp = at_rg ? radius_g_ : s;
    const std::size_t k0 = std::max<std::size_t>(2, order);
    if (sp == 0.0) {
        // only the k = order term survives
        if (order >= 2)
            acc += falling_factorial(order, order) * c_ *
                   std::pow(static_cast<double>(order), -gamma_) *
                   std::pow(r_, order);
        return acc;
    }
    // term k is c * k^-gamma * ff(k, order) * w_k, w_k = r^k s^{k-order}
    double w = std::pow(r_, static_cast<double>(k0)) *
               std::pow(sp, static_cast<double>(k0) - order);
    const double ratio = r_ * sp;  // w_{k+1} / w_k (= z)
    double kd = 0.0;
    double w_cut = w;
    double tail_bound = std::numeric_limits<double>::infinity();
    for (std::size_t kk = k0; kk <= kTermCap; ++kk, w *= ratio) {
        kd = static_cast<double>(kk);
        w_cut = w;
        const double t =
            c_ * kpow_[kk] * falling_factorial(kd, order) * w;
        acc += t;
        if (ratio < 1.0 && kd > order) {
            const double rho = ratio * (kd + 1.0) / (kd + 1.0 - order);
            if (rho < 1.0) {
                tail_bound = t * rho / (1.0 - rho);
                if (tail_bound < kRelTarget * std::abs(acc)) break;
            }
        }
        if (t == 0.0) {
            tail_bound = 0.0;
            break;
        }
    }
    if (!(tail_bound < kRelTarget * std::abs(acc))) {
        // Midpoint Euler-Maclaurin closure: past the cut,
        // t_k ~ c * w_cut * (k^{order-gamma} - (order(order-1)/2)
        // k^{order-gamma-1}), with the geometric factor (rs)^k frozen
        // (rs is 1 or within ~1e-8 of it whenever this branch is reached).
        const double K = kd + 0.5;
        const double e = gamma_ - order;  // > 1 required at rs == 1
        if (!(e > 1.0))
            throw DivergenceError("g: polylog tail not summable here");
        const double a1 = std::pow(K, 1.0 - e) / (e - 1.0);
        const double a2 = std::pow(K, -e) / e;
        const double corr = 0.5 * order * (order - 1.0);
        acc += c_ * w_cut * (a1 - corr * a2);
    }
    return acc;
}

IntegralG OffspringLaw::integral_g_finite() const {
    // Exact series identity: int_0^{R_G} G = sum p_k R_G^{k+1} / (k+1).
    switch (family_) {
        case LawFamily::Explicit:
            return IntegralG::Infinite;  // R_G is infinite
        case LawFamily::GeometricTail:
            // p_k R_G^k = c, so terms ~ c R_G / (k+1): harmonic divergence.
            return IntegralG::Infinite;
        case LawFamily::PolylogTail:
            // terms ~ c R_G k^-(gamma+1): convergent for gamma > 0.
            return IntegralG::Finite;
        case LawFamily::CustomRule:
            if (!std::isfinite(radius_g_)) return IntegralG::Infinite;
            return IntegralG::Undecidable;
    }
    return IntegralG::Undecidable;
}

std::pair<OffspringLaw, double> OffspringLaw::tilde_transform() const {
    if (q_ == 0.0) {
        // p_1 is already zero after construction: fixed point of the map.
        return {*this, 1.0};
    }
    const double w = 1.0 - q_;
    std::vector<double> acc(p_.size(), 0.0);
    std::vector<double> bin;
    for (std::size_t k = 0; k < p_.size(); ++k) {
        if (p_[k] == 0.0) continue;
        // weights C(k,j) w^j q^{k-j}, j = 0..k
        bin.assign(k + 1, 0.0);
        bin[0] = std::pow(q_, static_cast<double>(k));
        for (std::size_t j = 0; j < k; ++j)
            bin[j + 1] = bin[j] * (static_cast<double>(k - j) /
                                   static_cast<double>(j + 1)) *
                         (w / q_);
        for (std::size_t j = 0; j <= k; ++j) acc[j] += p_[k] * bin[j];
    }
    std::vector<double> pt(acc.size(), 0.0);
    pt[0] = std::max(0.0, (acc[0] - q_) / w);
    for (std::size_t j = 1; j < acc.size(); ++j) pt[j] = acc[j] / w;
    double total = 0.0;
    for (double v : pt) total += v;
    for (double& v : pt) v /= total;  // absorb tail-truncation dust
    // explicit_law() removes the unit atom itself and reports the factor.
    OffspringLaw out = explicit_law(std::move(pt));
    return {out, out.beta_scale()};
}

Constants constants(const OffspringLaw& law, double beta, double mu) {
    if (!(beta > 0.0)) throw DomainError("constants: beta > 0");
    Constants c{};
    const double m = law.mean();
    c.mu0 = (m > 1.0) ? std::sqrt(2.0 * beta * (m - 1.0)) : 0.0;
    c.alpha = std::sqrt(2.0 * beta + mu * mu);
    c.lambda = c.alpha + mu;
    c.lambda_tilde =
        std::sqrt(2.0 * beta * (1.0 - law.gprime_q()) + mu * mu) + mu;
    if (mu * mu >= 2.0 * beta) {
        const double root = std::sqrt(mu * mu - 2.0 * beta);
        c.lambda1 = -mu + root;
        c.lambda2 = -mu - root;
        c.d = *c.lambda1 / *c.lambda2;
    }
    return c;
}

}  // namespace bbm
