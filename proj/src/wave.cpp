#include "bbm/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bbm {

namespace {

struct SweepState {
    std::vector<double> g, p, s;  // G(Q), prefix integral, suffix integral
};

// One application of the renewal operator. qv/gpq/lt describe the analytic
// tail closure beyond the grid: G(Q(Y+t)) ~ q + G'(q)(Q_J - q) e^{-lt t}.
// Returns the sup-norm increment and updates min_inc with the most
// negative pointwise increment.
double renewal_sweep(const OffspringLaw& law, double beta, double alpha,
                     double lambda, double c2, double h, double qv,
                     double gpq, double lt, std::vector<double>& Q,
                     SweepState& st, double& min_inc) {
    const std::size_t J = Q.size() - 1;
    st.g.resize(Q.size());
    st.p.resize(Q.size());
    st.s.resize(Q.size());
    for (std::size_t j = 0; j <= J; ++j) st.g[j] = law.g(Q[j]);

    const double E1 = std::exp(-lambda * h);
    const double E2 = std::exp(-c2 * h);
    const ProductQuadWeights w1 = product_quad_weights(lambda, h);
    const ProductQuadWeights w2 = product_quad_weights(c2, h);

    st.p[0] = 0.0;
    st.p[1] = w1.c0 * st.g[1] + w1.cp * st.g[0] + w1.cm * st.g[2];
    for (std::size_t j = 2; j <= J; ++j)
        st.p[j] = E1 * st.p[j - 1] + w1.f0 * st.g[j] + w1.f1 * st.g[j - 1] +
                  w1.f2 * st.g[j - 2];

    st.s[J] = qv / c2 + gpq * (Q[J] - qv) / (c2 + lt);
    if (J >= 2)
        st.s[J - 1] = E2 * st.s[J] + w2.c0 * st.g[J - 1] + w2.cp * st.g[J] +
                      w2.cm * st.g[J - 2];
    for (std::size_t j = J - 1; j-- > 0;)
        st.s[j] = E2 * st.s[j + 1] + w2.f0 * st.g[j] + w2.f1 * st.g[j + 1] +
                  w2.f2 * st.g[j + 2];

    const double s0 = st.s[0];
    const double ba = beta / alpha;
    double sup = 0.0;
    for (std::size_t j = 0; j <= J; ++j) {
        const double e = std::exp(-lambda * h * static_cast<double>(j));
        const double qn = e + ba * (st.p[j] + st.s[j] - e * s0);
        const double inc = qn - Q[j];
        sup = std::max(sup, std::abs(inc));
        min_inc = std::min(min_inc, inc);
        Q[j] = qn;
    }
    return sup;
}

}  // namespace

WaveProfile solve_profile(const ModelConfig& config) {
    const OffspringLaw& law = config.law;
    const double beta = config.beta;
    const double mu = config.mu;
    if (!(law.mean() > 1.0))
        throw DomainError("solve_profile: requires a supercritical law (m > 1)");
    const Constants c = config.consts();
    if (!(mu > -c.mu0))
        throw DomainError("solve_profile: no traveling wave for mu <= -mu0");

    const Numerics& num = config.numerics;
    const double h = num.grid_h;
    const double qv = law.extinction_q();
    const double gpq = law.gprime_q();
    const double lt = c.lambda_tilde;
    const double c2 = c.alpha - mu;

    double y_max = std::ceil(32.0 / lt / h) * h;
    std::size_t J = static_cast<std::size_t>(std::llround(y_max / h));
    J = std::max<std::size_t>(J, 64);
    y_max = static_cast<double>(J) * h;

    std::vector<double> Q(J + 1, 0.0);
    SweepState st;
    WaveProfile prof(config);
    prof.q = qv;
    prof.lambda_tilde = lt;
    prof.grid_h = h;

    double min_inc = 0.0;
    double diff = std::numeric_limits<double>::infinity();
    double prev_diff = diff;
    int iter = 0;
    int since_accel = 0;
    std::vector<double> q_old;
    for (;;) {
        if (iter >= num.picard_max_iter)
            throw ConvergenceError("solve_profile: Picard did not converge");
        q_old = Q;
        prev_diff = diff;
        diff = renewal_sweep(law, beta, c.alpha, c.lambda, c2, h, qv, gpq, lt,
                             Q, st, min_inc);
        ++iter;
        ++since_accel;
        if (diff < num.picard_tol) {
            // Converged on this grid; verify the truncation is far enough out.
            if (Q[J] - qv < num.tail_floor) break;
            const std::size_t J2 = J + J / 2;
            Q.resize(J2 + 1);
            for (std::size_t j = J + 1; j <= J2; ++j)
                Q[j] = qv + (Q[J] - qv) *
                                std::exp(-lt * h * static_cast<double>(j - J));
            J = J2;
            y_max = static_cast<double>(J) * h;
            diff = std::numeric_limits<double>::infinity();
            continue;
        }
        if (num.accelerate && iter > 10 && since_accel >= 10 &&
            prev_diff > 0.0) {
            const double rho = diff / prev_diff;
            if (rho > 0.2 && rho < 0.999) {
                // One vector-Aitken extrapolation along the dominant mode.
                const double gain = rho / (1.0 - rho);
                for (std::size_t j = 0; j <= J; ++j) {
                    double v = Q[j] + gain * (Q[j] - q_old[j]);
                    Q[j] = std::min(1.0, std::max(Q[j], v));
                }
                since_accel = 0;
            }
        }
    }

    // Final application to get consistent (g, P, S) buffers, then Q'.
    diff = renewal_sweep(law, beta, c.alpha, c.lambda, c2, h, qv, gpq, lt, Q,
                         st, min_inc);
    prof.diag.picard_iterations = iter + 1;
    prof.diag.increment = diff;
    prof.diag.min_increment = min_inc;
    prof.diag.s0 = st.s[0];
    prof.y_max = y_max;

    const double s0 = st.s[0];
    prof.qp0 = 2.0 * beta * s0 - c.lambda;
    std::vector<double> Qp(J + 1);
    const double ba = beta / c.alpha;
    for (std::size_t j = 0; j <= J; ++j) {
        const double e = std::exp(-c.lambda * h * static_cast<double>(j));
        Qp[j] = -c.lambda * e +
                ba * (-c.lambda * (st.p[j] - e * s0) + c2 * st.s[j]);
    }

    // Tail constants: fit the decay rate on a late window, and the
    // prefactor against the analytic rate.
    {
        std::vector<double> fx, fy;
        double lo = 1e-7, hi = 1e-5;
        while (fx.size() < 10) {
            fx.clear();
            fy.clear();
            for (std::size_t j = 0; j <= J; ++j) {
                const double d = Q[j] - qv;
                if (d > lo && d < hi) {
                    fx.push_back(h * static_cast<double>(j));
                    fy.push_back(std::log(d));
                }
            }
            lo *= 0.1;
            hi *= 10.0;
            if (hi > 1.0) break;
        }
        if (fx.size() >= 2) {
            const LineFit fit = fit_line(fx, fy);
            prof.diag.tail_rate_fit = -fit.slope;
            prof.diag.tail_fit_r2 = fit.r2;
            double acc = 0.0;
            for (std::size_t i = 0; i < fx.size(); ++i)
                acc += fy[i] + lt * fx[i];
            prof.k_tail = std::exp(acc / static_cast<double>(fx.size()));
        } else {
            prof.diag.tail_rate_fit = lt;
            prof.k_tail = std::max(Q[0] - qv, 0.0);
        }
    }

    // Left extension: integrate the wave ODE backward from (1, Q'(0)).
    // In u = -x: Q_u = -V, V_u = 2 mu V + 2 beta (G(Q) - Q).
    const double rg = law.radius_g();
    const OdeRhs rhs = [&](double, std::span<const double> y,
                           std::span<double> dy) {
        const double s = std::isfinite(rg)
                             ? std::min(y[0], rg * (1.0 - 1e-13))
                             : y[0];
        dy[0] = -y[1];
        dy[1] = 2.0 * mu * y[1] + 2.0 * beta * (law.g(s) - y[0]);
    };
    std::vector<OdeEvent> events;
    events.push_back([](double, std::span<const double> y) { return y[1]; });
    const bool has_rg = std::isfinite(rg);
    if (has_rg)
        events.push_back(
            [rg](double, std::span<const double> y) { return y[0] - rg; });
    events.push_back(
        [](double, std::span<const double> y) { return y[1] + 1e6; });
    if (has_rg)
        events.push_back([rg](double, std::span<const double> y) {
            return (rg + 1.0) - y[0];
        });
    OdeOptions opts;
    opts.max_step = 5e-3;
    opts.event_x_tol = 1e-10;
    OdeResult left = integrate_ode(rhs, 0.0, {1.0, prof.qp0}, 100.0, events,
                                   opts);
    if (left.event < 0 || left.event >= (has_rg ? 2 : 1)) {
        throw ConvergenceError(
            "solve_profile: left extension hit a guard at x = " +
            std::to_string(-left.xs.back()));
    }
    prof.regime_hint = (left.event == 1 && has_rg)
                           ? WaveProfile::RegimeHint::q_hit_rg
                           : WaveProfile::RegimeHint::qprime_zero;
    prof.x0 = -left.xs.back();

    // Assemble the combined grid: reversed left samples, then the uniform
    // right grid (skipping the duplicated x = 0 sample).
    const std::size_t nl = left.xs.size();
    prof.xs.reserve(nl + J);
    prof.q_values.reserve(nl + J);
    prof.qp_values.reserve(nl + J);
    for (std::size_t i = nl; i-- > 1;) {
        const double x = -left.xs[i];
        if (!prof.xs.empty() && x - prof.xs.back() < 1e-12) continue;
        prof.xs.push_back(x);
        prof.q_values.push_back(left.ys[i][0]);
        prof.qp_values.push_back(left.ys[i][1]);
    }
    prof.i0 = prof.xs.size();
    for (std::size_t j = 0; j <= J; ++j) {
        prof.xs.push_back(h * static_cast<double>(j));
        prof.q_values.push_back(Q[j]);
        prof.qp_values.push_back(Qp[j]);
    }
    prof.interp = Pchip(prof.xs, prof.q_values);
    prof.diag.residual_fd = ode_residual_fd(prof);
    return prof;
}

double WaveProfile::q_at(double x) const {
    if (x < x0 - 1e-9) throw DomainError("q_at: x left of x0");
    if (x > y_max) return q + k_tail * std::exp(-lambda_tilde * x);
    return interp(std::max(x, xs.front()));
}

double WaveProfile::qp_at(double x) const {
    if (x < x0 - 1e-9) throw DomainError("qp_at: x left of x0");
    if (x > y_max)
        return -lambda_tilde * k_tail * std::exp(-lambda_tilde * x);
    x = std::max(x, xs.front());
    // piecewise-cubic Hermite slope from the stored derivative samples
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t j = (it == xs.begin()) ? 0 : (it - xs.begin() - 1);
    if (j + 1 >= xs.size()) j = xs.size() - 2;
    const double t = (x - xs[j]) / (xs[j + 1] - xs[j]);
    return qp_values[j] * (1.0 - t) + qp_values[j + 1] * t;
}

double WaveProfile::q_inverse(double s) const {
    if (s == 1.0) return 0.0;
    const double top = q_values.front();
    if (!(s > q) || s > top * (1.0 + 1e-12))
        throw DomainError("q_inverse: s outside (q, Q(x0)]");
    if (s >= top) return x0;
    const double bottom = q_values.back();
    if (s <= bottom) {
        // analytic tail: s = q + k e^{-lt x}
        return std::log(k_tail / (s - q)) / lambda_tilde;
    }
    // bracket on the (decreasing) grid values, refine on the interpolant
    std::size_t lo = 0, hi = q_values.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (q_values[mid] >= s)
            lo = mid;
        else
            hi = mid;
    }
    if (q_values[lo] == s) return xs[lo];
    if (q_values[hi] == s) return xs[hi];
    return bisect_root([&](double x) { return interp(x) - s; }, xs[lo],
                       xs[hi], 1e-13);
}

double WaveProfile::f_eval(double x, double s) const {
    if (x < 0.0) throw DomainError("f_eval: x must be non-negative");
    return q_at(q_inverse(s) + x);
}

double qprime_identity_residual(const WaveProfile& profile) {
    const OffspringLaw& law = profile.config.law;
    const double beta = profile.config.beta;
    const double mu = profile.config.mu;
    const double h = profile.grid_h;
    const std::size_t n = profile.xs.size() - profile.i0;
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = h * static_cast<double>(j);
        const double Qj = profile.q_values[profile.i0 + j];
        w[j] = std::exp(2.0 * mu * x) * (law.g(Qj) - Qj);
    }
    std::vector<double> cum;
    cumulative_integral(w, h, cum);
    const double qp0 = profile.qp_values[profile.i0];
    double sup = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = h * static_cast<double>(j);
        const double amp = std::exp(-2.0 * mu * x);
        if (amp > 1e4) break;  // cancellation would swamp the metric
        const double rhs = (qp0 - 2.0 * beta * cum[j]) * amp;
        sup = std::max(sup, std::abs(profile.qp_values[profile.i0 + j] - rhs));
    }
    return sup;
}

double ode_residual_fd(const WaveProfile& profile) {
    const OffspringLaw& law = profile.config.law;
    const double beta = profile.config.beta;
    const double mu = profile.config.mu;
    const double h = profile.grid_h;
    const std::size_t i0 = profile.i0;
    const std::size_t J = profile.xs.size() - 1 - i0;
    const auto& Q = profile.q_values;
    double sup = 0.0;
    for (std::size_t j = 2; j + 2 <= J; ++j) {
        const double qm2 = Q[i0 + j - 2], qm1 = Q[i0 + j - 1], q0 = Q[i0 + j],
                     qp1 = Q[i0 + j + 1], qp2 = Q[i0 + j + 2];
        const double d1 = (-qp2 + 8.0 * qp1 - 8.0 * qm1 + qm2) / (12.0 * h);
        const double d2 =
            (-qp2 + 16.0 * qp1 - 30.0 * q0 + 16.0 * qm1 - qm2) /
            (12.0 * h * h);
        const double r = 0.5 * d2 + mu * d1 + beta * (law.g(q0) - q0);
        sup = std::max(sup, std::abs(r));
    }
    return sup;
}

bool tail_bound_check(const WaveProfile& profile) {
    if (profile.q != 0.0)
        throw DomainError(
            "tail_bound_check: requires q = 0 (apply tilde_transform first)");
    const double beta = profile.config.beta;
    const double mu = profile.config.mu;
    for (double y : {0.5, 1.0}) {
        const double Qy = profile.q_at(y);
        const double rho = std::sqrt(mu * mu + 2.0 * beta * (1.0 - Qy)) + mu;
        const double cap = Qy * std::exp(rho * y);
        for (std::size_t i = profile.i0; i < profile.xs.size(); ++i) {
            const double x = profile.xs[i];
            if (x <= y) continue;
            if (profile.q_values[i] > cap * std::exp(-rho * x) + 1e-9)
                return false;
        }
    }
    return true;
}

}  // namespace bbm
