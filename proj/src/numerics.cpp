#include "bbm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace bbm {

ExpMoments exp_moments(double c, double h) {
    const double z = c * h;
    ExpMoments m;
    if (std::abs(z) < 1e-4) {
        // Taylor in z; relative error below 1e-17 at |z| = 1e-4.
        const double z2 = z * z, z3 = z2 * z;
        m.m0 = h * (1.0 - z / 2.0 + z2 / 6.0 - z3 / 24.0);
        m.m1 = h * h * (0.5 - z / 3.0 + z2 / 8.0 - z3 / 30.0);
        m.m2 = h * h * h * (1.0 / 3.0 - z / 4.0 + z2 / 10.0 - z3 / 36.0);
    } else {
        const double e = std::exp(-z);
        m.m0 = (1.0 - e) / c;
        m.m1 = (m.m0 - h * e) / c;
        m.m2 = (2.0 * m.m1 - h * h * e) / c;
    }
    return m;
}

double exp_weighted_quad(double c, double h, double f0, double f1, double f2) {
    // p(t) = f0 + b t + a t^2 through (0,f0), (h,f1), (2h,f2)
    const double b = (4.0 * f1 - 3.0 * f0 - f2) / (2.0 * h);
    const double a = (f2 - 2.0 * f1 + f0) / (2.0 * h * h);
    const ExpMoments m = exp_moments(c, h);
    return f0 * m.m0 + b * m.m1 + a * m.m2;
}

ProductQuadWeights product_quad_weights(double c, double h) {
    const ExpMoments m = exp_moments(c, h);
    const double m1h = m.m1 / h;
    const double m2h2 = m.m2 / (h * h);
    ProductQuadWeights w;
    w.f0 = m.m0 - 1.5 * m1h + 0.5 * m2h2;
    w.f1 = 2.0 * m1h - m2h2;
    w.f2 = -0.5 * m1h + 0.5 * m2h2;
    w.c0 = m.m0 - m2h2;
    w.cp = 0.5 * m1h + 0.5 * m2h2;
    w.cm = -0.5 * m1h + 0.5 * m2h2;
    return w;
}

void cumulative_integral(std::span<const double> y, double h,
                         std::vector<double>& out) {
    const std::size_t n = y.size();
    out.assign(n, 0.0);
    if (n < 2) return;
    if (n == 2) {
        out[1] = 0.5 * h * (y[0] + y[1]);
        return;
    }
    // Interval [x_j, x_{j+1}] integrated with the quadratic through the
    // three nearest knots.
    for (std::size_t j = 0; j + 1 < n; ++j) {
        double inc;
        if (j == 0) {
            inc = h * (5.0 * y[0] + 8.0 * y[1] - y[2]) / 12.0;
        } else {
            inc = h * (-y[j - 1] + 8.0 * y[j] + 5.0 * y[j + 1]) / 12.0;
        }
        out[j + 1] = out[j] + inc;
    }
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2)
        throw std::invalid_argument("Pchip: need >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("Pchip: knots must increase");
    d_.assign(n, 0.0);
    std::vector<double> slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        slope[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (n == 2) {
        d_[0] = d_[1] = slope[0];
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (slope[i - 1] * slope[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double h1 = x_[i] - x_[i - 1], h2 = x_[i + 1] - x_[i];
            const double w1 = 2.0 * h2 + h1, w2 = h2 + 2.0 * h1;
            d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
        }
    }
    auto end_slope = [](double h1, double h2, double s1, double s2) {
        double d = ((2.0 * h1 + h2) * s1 - h1 * s2) / (h1 + h2);
        if (d * s1 <= 0.0)
            d = 0.0;
        else if (s1 * s2 < 0.0 && std::abs(d) > 3.0 * std::abs(s1))
            d = 3.0 * s1;
        return d;
    };
    d_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], slope[0], slope[1]);
    d_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3],
                          slope[n - 2], slope[n - 3]);
}

std::size_t Pchip::segment(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
}

double Pchip::operator()(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
}

double Pchip::derivative(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double g00 = (6 * t2 - 6 * t) / h, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = (-6 * t2 + 6 * t) / h, g11 = 3 * t2 - 2 * t;
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

namespace {

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Dopri {
    const OdeRhs& rhs;
    std::size_t n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y5;

    explicit Dopri(const OdeRhs& f, std::size_t dim) : rhs(f), n(dim) {
        for (auto* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &tmp, &y5})
            v->assign(n, 0.0);
    }

    // One trial step from (x, y) with size h. Returns scaled error estimate.
    double step(double x, std::span<const double> y, double h,
                std::span<const double> scale_y) {
        rhs(x, y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        rhs(x + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(x + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(x + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                 a54 * k4[i]);
        rhs(x + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                 a64 * k4[i] + a65 * k5[i]);
        rhs(x + h, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                b5 * k5[i] + b6 * k6[i]);
        rhs(x + h, y5, k7);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err = std::max(err, std::abs(ei) / scale_y[i]);
        }
        return err;
    }
};

}  // namespace

OdeResult integrate_ode(const OdeRhs& rhs, double x0, std::vector<double> y0,
                        double x_end, const std::vector<OdeEvent>& events,
                        const OdeOptions& opts) {
    const std::size_t n = y0.size();
    const double dir = (x_end >= x0) ? 1.0 : -1.0;
    OdeResult res;
    res.xs.push_back(x0);
    res.ys.push_back(y0);

    Dopri stepper(rhs, n);
    std::vector<double> y = std::move(y0), scale(n);
    std::vector<double> ev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) ev[e] = events[e](x0, y);

    double x = x0;
    double h = std::min(opts.initial_step, std::abs(x_end - x0));
    for (std::size_t steps = 0; steps < opts.max_steps; ++steps) {
        if (dir * (x - x_end) >= 0.0) break;
        h = std::min(h, std::abs(x_end - x));
        if (h < opts.min_step) {
            res.step_underflow = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i)
            scale[i] = opts.abs_tol + opts.rel_tol * std::abs(y[i]);
        const double err = stepper.step(x, y, dir * h, scale);
        if (err > 1.0) {
            h = std::max(opts.min_step,
                         0.9 * h * std::pow(err, -0.25));
            continue;
        }
        // Accepted. Check events on [x, x+dir*h] before committing.
        double x_new = x + dir * h;
        std::vector<double> y_new = stepper.y5;
        int hit = -1;
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double v = events[e](x_new, y_new);
            if (ev[e] != 0.0 && v * ev[e] < 0.0) {
                hit = static_cast<int>(e);
                break;
            }
            if (v == 0.0) {
                hit = static_cast<int>(e);
                break;
            }
        }
        if (hit >= 0) {
            // Localize by bisection on the step size, re-integrating the
            // sub-step from (x, y) each trial.
            double lo = 0.0, hi = h;
            std::vector<double> y_hi = y_new;
            while (hi - lo > opts.event_x_tol) {
                const double mid = 0.5 * (lo + hi);
                for (std::size_t i = 0; i < n; ++i)
                    scale[i] = opts.abs_tol + opts.rel_tol * std::abs(y[i]);
                stepper.step(x, y, dir * mid, scale);
                const double v =
                    events[static_cast<std::size_t>(hit)](x + dir * mid,
                                                          stepper.y5);
                if (ev[static_cast<std::size_t>(hit)] != 0.0 &&
                    v * ev[static_cast<std::size_t>(hit)] < 0.0) {
                    hi = mid;
                    y_hi = stepper.y5;
                } else {
                    lo = mid;
                }
            }
            res.xs.push_back(x + dir * hi);
            res.ys.push_back(y_hi);
            res.event = hit;
            return res;
        }
        x = x_new;
        y = std::move(y_new);
        for (std::size_t e = 0; e < events.size(); ++e) ev[e] = events[e](x, y);
        res.xs.push_back(x);
        res.ys.push_back(y);
        const double grow = (err <= 1e-30) ? 5.0
                                           : std::min(5.0, 0.9 * std::pow(err, -0.2));
        h = std::min(opts.max_step, h * grow);
    }
    return res;
}

namespace {
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double bisect_root(const std::function<double(double)>& f, double a, double b,
                   double x_tol) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("bisect_root: no bracket");
    while (b - a > x_tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("fit_line: size");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

namespace {
// Continued fraction for the incomplete beta (Lentz).
double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
}
}  // namespace

double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence) {
    const double alpha = 1.0 - confidence;
    Interval ci{0.0, 1.0};
    const auto kd = static_cast<double>(k), nd = static_cast<double>(n);
    if (k > 0) {
        ci.lo = bisect_root(
            [&](double p) { return beta_inc(kd, nd - kd + 1.0, p) - alpha / 2.0; },
            0.0, 1.0, 1e-12);
    }
    if (k < n) {
        ci.hi = bisect_root(
            [&](double p) { return beta_inc(kd + 1.0, nd - kd, p) - (1.0 - alpha / 2.0); },
            0.0, 1.0, 1e-12);
    }
    return ci;
}

}  // namespace bbm
