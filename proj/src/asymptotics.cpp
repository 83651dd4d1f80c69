#include "bbm/asymptotics.hpp"

#include <cmath>
#include <limits>

namespace bbm {

namespace {

constexpr double kPi = 3.14159265358979323846;

double g_deriv_gap(const OffspringLaw& law, double s, int m) {
    return (m == 0) ? law.g(s) - s : law.g(s, m);
}

void require(bool ok, const char* msg) {
    if (!ok) throw DomainError(msg);
}

}  // namespace

TailFit fit_g_tail(const OffspringLaw& law, int m) {
    const double rg = law.radius_g();
    require(std::isfinite(rg), "fit_g_tail: finite radius required");
    TailFit fit;
    fit.m = m;
    if (m == 0) {
        // finite limit at the radius: exponent zero, constant G(R_G) - R_G
        try {
            fit.C = law.g(rg) - rg;
            fit.rho_tail = 0.0;
            fit.r2 = 1.0;
            return fit;
        } catch (const DivergenceError&) {
        }
    }
    const double scale = rg - 1.0;
    // derivative series converge slowly near the singularity, so the fit
    // window backs off with the order
    const double e_hi = (m == 0) ? -2.0 : -1.5;
    const double e_lo = (m == 0) ? -5.0 : -3.0;
    std::vector<double> lx, ly;
    for (int k = 0; k < 25; ++k) {
        const double gap =
            scale * std::pow(10.0, e_hi + (e_lo - e_hi) * k / 24.0);
        lx.push_back(std::log(gap));
        ly.push_back(std::log(g_deriv_gap(law, rg - gap, m)));
    }
    const LineFit line = fit_line(lx, ly);
    fit.rho_tail = -line.slope;
    fit.C = std::exp(line.intercept);
    fit.r2 = line.r2;
    return fit;
}

GeneratorCurve::Regime profile_regime(const WaveProfile& profile) {
    const double rg = profile.config.law.radius_g();
    const double q_x0 = profile.q_values.front();
    const double qp_x0 = profile.qp_values.front();
    const bool at_rg =
        std::isfinite(rg) && std::abs(q_x0 - rg) < 0.05 * (rg - 1.0);
    const bool qp_small = std::abs(qp_x0) < 0.05 * std::abs(profile.qp0);
    if (at_rg && !qp_small) return GeneratorCurve::Regime::above_muc;
    if (at_rg) return GeneratorCurve::Regime::at_muc;
    return GeneratorCurve::Regime::below_muc;
}

double coefficient_asymptotic(int i, double x, const WaveProfile& profile,
                              const GeneratorCurve& curve) {
    require(curve.regime == GeneratorCurve::Regime::below_muc,
            "coefficient_asymptotic: drift not below the critical drift");
    require(i >= 1, "coefficient_asymptotic: i >= 1 required");
    const OffspringLaw& law = profile.config.law;
    const double beta = profile.config.beta;
    const double delta = law.span();
    const double R = curve.R;
    const double gap = law.g(R) - R;
    const double id = static_cast<double>(i);
    return -profile.qp_at(profile.x0 + x) /
           (2.0 * std::pow(R, delta * id + 0.5) *
            std::sqrt(delta * beta * gap * id * id * id * kPi));
}

double classical_tail_formula(const ModelConfig& config, double n, double x,
                              ZTailFormula which) {
    require(n >= 2.0, "classical_tail_formula: n >= 2 required");
    require(x > 0.0, "classical_tail_formula: x > 0 required");
    const Constants c = config.consts();
    const double mu = config.mu;
    const double ln2 = std::log(n) * std::log(n);
    switch (which) {
        case ZTailFormula::CriticalSurvivalTail:
        case ZTailFormula::CriticalPointMass: {
            require(std::abs(mu + c.mu0) <= 1e-8,
                    "classical_tail_formula: requires mu = -mu0");
            const double head = c.mu0 * x * std::exp(c.mu0 * x);
            if (which == ZTailFormula::CriticalSurvivalTail)
                return head / (n * ln2);
            require(config.law.radius_g() > 1.0,
                    "classical_tail_formula: requires R_G > 1");
            return head / (config.law.span() * n * n * ln2);
        }
        case ZTailFormula::SubcriticalPointMass: {
            require(mu < -c.mu0 && mu * mu >= 2.0 * config.beta,
                    "classical_tail_formula: requires mu < -mu0, mu^2 >= "
                    "2 beta");
            const double root = std::sqrt(mu * mu - 2.0 * config.beta);
            const double l1 = -mu + root, l2 = -mu - root;
            const double d = l1 / l2;
            return (std::exp(l1 * x) - std::exp(l2 * x)) /
                   std::pow(n, d + 1.0);
        }
    }
    throw DomainError("classical_tail_formula: unknown formula");
}

double fit_subcritical_scale(const ModelConfig& config, double x,
                             const std::vector<double>& ns,
                             const std::vector<double>& values) {
    require(ns.size() == values.size() && !ns.empty(),
            "fit_subcritical_scale: matching nonempty data required");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < ns.size(); ++j) {
        const double s = classical_tail_formula(
            config, ns[j], x, ZTailFormula::SubcriticalPointMass);
        num += values[j] * s;
        den += s * s;
    }
    return num / den;
}

double critical_drift_tail_sum(double n, double x, const TailFit& tail,
                               const WaveProfile& profile) {
    require(profile_regime(profile) == GeneratorCurve::Regime::at_muc,
            "critical_drift_tail_sum: drift not at the critical drift");
    require(tail.m == 0 && tail.rho_tail >= 0.0 && tail.rho_tail < 1.0,
            "critical_drift_tail_sum: singularity exponent outside [0,1)");
    if (tail.rho_tail > 0.0 && tail.r2 < 0.99)
        throw ConvergenceError(
            "critical_drift_tail_sum: singularity model fit rejected");
    const double rho = tail.rho_tail;
    const double rg = profile.config.law.radius_g();
    const double beta = profile.config.beta;
    const double A = std::sqrt((1.0 - rho) * std::pow(rg, 1.0 + rho)) /
                     ((1.0 + rho) * std::sqrt(beta * tail.C) *
                      std::tgamma(0.5 * (1.0 - rho)));
    return -A * profile.qp_at(profile.x0 + x) /
           std::pow(n, 0.5 * (1.0 + rho));
}

double offspring_tail_sum(const OffspringLaw& law, double n, double power) {
    const double rg = law.radius_g();
    const std::vector<double>& p = law.probabilities();
    // keep the geometric factors combined: r^i and R_G^i overflow
    // separately long before their product (r R_G = 1 for tail rules) does
    auto term = [&](double i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (k < p.size()) return p[k] * std::pow(rg, i) * std::pow(i, power);
        const double geo = std::pow(law.tail_r() * rg, i);
        if (law.family() == LawFamily::GeometricTail)
            return law.tail_scale() * geo * std::pow(i, power);
        if (law.family() == LawFamily::PolylogTail)
            return law.tail_scale() * geo *
                   std::pow(i, power - law.tail_gamma());
        return 0.0;
    };
    double acc = 0.0, last = 0.0, prev = 0.0;
    double i = std::max(1.0, std::ceil(n));
    const double i_stop = i + 20000.0;
    for (; i < i_stop; ++i) {
        prev = last;
        last = term(i);
        acc += last;
        if (last > 0.0 && last < 1e-12 * acc) return acc;
    }
    if (last <= 0.0 || prev <= 0.0) return acc;
    // power-law closure: estimate the local exponent and integrate onward
    const double sigma = std::log(last / prev) / std::log(i / (i - 1.0));
    require(sigma < -1.0, "offspring_tail_sum: divergent tail");
    return acc + last * (i - 0.5) / (-sigma - 1.0);
}

std::pair<double, double> supercritical_tail_sum(double n, double x, double t,
                                                 const TailFit& tail,
                                                 const WaveProfile& profile) {
    require(profile_regime(profile) == GeneratorCurve::Regime::above_muc,
            "supercritical_tail_sum: drift not above the critical drift");
    const double m = tail.m;
    const double rho = tail.rho_tail;
    require(rho > 0.0 && rho < m + 1.0,
            "supercritical_tail_sum: exponent outside (0, m+1)");
    require(t < m + 2.0 - rho, "supercritical_tail_sum: t < m+2-rho required");
    if (tail.r2 < 0.99)
        throw ConvergenceError(
            "supercritical_tail_sum: singularity model fit rejected");
    const OffspringLaw& law = profile.config.law;
    const double rg = law.radius_g();
    const double beta = profile.config.beta;
    const double qp_x0 = profile.qp_values.front();
    const double qp3 = qp_x0 * qp_x0 * qp_x0;
    const double K1 = 2.0 * beta * tail.C * std::pow(rg, m + 2.0 - rho) /
                      (std::tgamma(rho) * (m + 2.0 - t - rho) * qp3);
    const double K2 = 2.0 * beta * rg * rg / qp3;
    const double qp_x = profile.qp_at(profile.x0 + x);
    const double lhs = K1 * qp_x / std::pow(n, m + 2.0 - t - rho);
    const double rhs = K2 * qp_x * offspring_tail_sum(law, n, t - 2.0);
    return {lhs, rhs};
}

double fprime_asymptotic_critical(double s, double x,
                                  const WaveProfile& profile) {
    require(profile_regime(profile) == GeneratorCurve::Regime::at_muc,
            "fprime_asymptotic_critical: drift not at the critical drift");
    const OffspringLaw& law = profile.config.law;
    const double rg = law.radius_g();
    require(s > law.extinction_q() && s < rg,
            "fprime_asymptotic_critical: s in (q, R_G) required");
    const TailFit tail = fit_g_tail(law, 0);
    // integrate G(u) - u up to a cut, then close with the singularity model
    const double cut = rg - 1e-6 * (rg - 1.0);
    double integral =
        (s < cut) ? adaptive_simpson([&](double u) { return law.g(u) - u; },
                                     s, cut, 1e-12)
                  : 0.0;
    const double lo = std::max(s, cut);
    integral += tail.C * std::pow(rg - lo, 1.0 - tail.rho_tail) /
                (1.0 - tail.rho_tail);
    require(integral > 0.0, "fprime_asymptotic_critical: empty integral");
    return -profile.qp_at(profile.x0 + x) /
           (2.0 * std::sqrt(profile.config.beta * integral));
}

}  // namespace bbm
