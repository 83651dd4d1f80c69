#include "bbm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bbm {

double GeneratorCurve::a_at(double s) const {
    if (s_grid.empty() || s < s_grid.front() - 1e-12 ||
        s > s_grid.back() + 1e-12)
        throw DomainError("a_at: s outside the integrated range");
    return interp(std::clamp(s, s_grid.front(), s_grid.back()));
}

GeneratorCurve integrate_a(const ModelConfig& config) {
    const OffspringLaw& law = config.law;
    const double beta = config.beta;
    const double mu = config.mu;
    if (!(law.mean() > 1.0))
        throw DomainError("integrate_a: requires a supercritical law");
    const Constants c = config.consts();
    if (!(mu > -c.mu0))
        throw DomainError("integrate_a: requires mu > -mu0");

    const Numerics& num = config.numerics;
    const double q = law.extinction_q();
    const double lt = c.lambda_tilde;
    const double rg = law.radius_g();
    const bool has_rg = std::isfinite(rg);
    const double eps = num.a_seed_eps * (1.0 - q);
    const double swap_thr = 1e-4 * lt;

    GeneratorCurve curve;
    curve.mu = mu;
    curve.beta = beta;

    const auto g_clamped = [&](double s) {
        return law.g(has_rg ? std::min(s, rg) : s);
    };

    // Phase 1: march in s with state [a].
    const OdeRhs rhs_s = [&](double s, std::span<const double> y,
                             std::span<double> dy) {
        dy[0] = -2.0 * mu - 2.0 * beta * (g_clamped(s) - s) / y[0];
    };
    std::vector<OdeEvent> events;
    // swap trigger, gated to the region where G(s) > s
    events.push_back([swap_thr](double s, std::span<const double> y) {
        return (s <= 1.0) ? -1.0 : y[0] + swap_thr;
    });
    OdeOptions opts;
    opts.initial_step = eps * 0.1;
    opts.max_step = 1e-2;
    const double s_end = has_rg ? rg : 1e6;
    // integrate in two legs so that s = 1 is an exact sample (a(1) = Q'(0))
    OdeResult leg = integrate_ode(rhs_s, q + eps, {-lt * eps}, 1.0, events,
                                  opts);
    for (std::size_t i = 0; i < leg.xs.size(); ++i) {
        curve.s_grid.push_back(leg.xs[i]);
        curve.a_values.push_back(leg.ys[i][0]);
    }
    OdeResult ph1(std::move(leg));
    if (ph1.event < 0) {
        OdeOptions opts2 = opts;
        opts2.initial_step = 1e-6;
        ph1 = integrate_ode(rhs_s, 1.0, {curve.a_values.back()}, s_end,
                            events, opts2);
        for (std::size_t i = 1; i < ph1.xs.size(); ++i) {
            curve.s_grid.push_back(ph1.xs[i]);
            curve.a_values.push_back(ph1.ys[i][0]);
        }
    }
    if (ph1.event < 0) {
        if (!has_rg)
            throw ConvergenceError("integrate_a: no termination before s cap");
        // reached s = R_G with a bounded away from 0
        curve.termination = GeneratorCurve::Termination::s_hit_rg;
        curve.R = rg;
        curve.a_end = ph1.ys.back()[0];
    } else {
        // Phase 2: swap the independent variable to a to resolve the
        // square-root vanishing a ~ -c sqrt(s* - s).
        const double a_sw = ph1.ys.back()[0];
        const double s_sw = ph1.xs.back();
        const OdeRhs rhs_a = [&](double a, std::span<const double> y,
                                 std::span<double> dy) {
            dy[0] = a / (-2.0 * mu * a - 2.0 * beta * (g_clamped(y[0]) - y[0]));
        };
        std::vector<OdeEvent> ev2;
        if (has_rg)
            ev2.push_back([rg](double, std::span<const double> y) {
                return y[0] - rg;
            });
        OdeOptions opts2;
        opts2.initial_step = std::abs(a_sw) * 0.1;
        opts2.max_step = std::abs(a_sw);
        OdeResult ph2 = integrate_ode(rhs_a, a_sw, {s_sw}, 0.0, ev2, opts2);
        for (std::size_t i = 1; i < ph2.xs.size(); ++i) {
            curve.s_grid.push_back(ph2.ys[i][0]);
            curve.a_values.push_back(ph2.xs[i]);
        }
        if (ph2.event == 0) {
            curve.termination = GeneratorCurve::Termination::s_hit_rg;
            curve.R = rg;
            curve.a_end = ph2.xs.back();
        } else {
            curve.termination = GeneratorCurve::Termination::a_hit_zero;
            curve.R = ph2.ys.back()[0];
            curve.a_end = 0.0;
        }
    }
    // classification; the measure-zero "at" case is reported within tol
    if (curve.termination == GeneratorCurve::Termination::a_hit_zero)
        curve.regime = GeneratorCurve::Regime::below_muc;
    else if (std::abs(curve.a_end) < num.event_tol)
        curve.regime = GeneratorCurve::Regime::at_muc;
    else
        curve.regime = GeneratorCurve::Regime::above_muc;

    // enforce strictly increasing s samples (phase boundaries may repeat)
    std::vector<double> ss, aa;
    ss.reserve(curve.s_grid.size());
    aa.reserve(curve.s_grid.size());
    for (std::size_t i = 0; i < curve.s_grid.size(); ++i) {
        if (!ss.empty() && curve.s_grid[i] <= ss.back()) continue;
        ss.push_back(curve.s_grid[i]);
        aa.push_back(curve.a_values[i]);
    }
    curve.s_grid = std::move(ss);
    curve.a_values = std::move(aa);
    curve.interp = Pchip(curve.s_grid, curve.a_values);
    return curve;
}

double radius(const ModelConfig& config) {
    const Constants c = config.consts();
    if (config.mu <= -c.mu0) return 1.0;
    const GeneratorCurve curve = integrate_a(config);
    const WaveProfile prof = solve_profile(config);
    const double r_wave = prof.q_x0();
    const double tol = config.numerics.cross_tol;
    if (std::abs(curve.R - r_wave) > 100.0 * tol)
        throw ConvergenceError(
            "radius: generator/wave cross-check mismatch: " +
            std::to_string(curve.R) + " vs " + std::to_string(r_wave));
    return curve.R;
}

GeneratorCurve::Regime regime_classify(const ModelConfig& config) {
    return integrate_a(config).regime;
}

MuCResult mu_c_locate(const OffspringLaw& law, double beta, double tol,
                      const Numerics& numerics) {
    MuCResult res{};
    res.criterion = law.integral_g_finite();
    if (res.criterion == IntegralG::Infinite) {
        res.status = MuCResult::Status::infinite;
        res.mu_c = std::numeric_limits<double>::infinity();
        return res;
    }
    if (res.criterion == IntegralG::Undecidable) {
        res.status = MuCResult::Status::undecidable;
        res.mu_c = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    const double mu0 = constants(law, beta, 0.0).mu0;
    const auto below = [&](double mu) {
        ModelConfig cfg(law, beta, mu, numerics);
        return integrate_a(cfg).termination ==
               GeneratorCurve::Termination::a_hit_zero;
    };
    double lo = std::max(-mu0 + 1e-3, -5.0);
    double hi = 5.0;
    if (!below(lo))
        throw ConvergenceError("mu_c_locate: lower bracket already above mu_c");
    while (below(hi)) {
        hi *= 2.0;
        if (hi > numerics.mu_max)
            throw ConvergenceError("mu_c_locate: bracket exceeded mu_max");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (below(mid) ? lo : hi) = mid;
    }
    res.status = MuCResult::Status::finite;
    res.mu_c = 0.5 * (lo + hi);
    return res;
}

}  // namespace bbm
