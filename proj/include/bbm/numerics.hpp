#ifndef BBMZ_NUMERICS_HPP
#define BBMZ_NUMERICS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace bbm {

// Moments of the exponential kernel on one step:
//   m_k(c, h) = \int_0^h e^{-c t} t^k dt,  k = 0, 1, 2.
// Stable for |c h| << 1 (series branch) as well as for large |c h|.
struct ExpMoments {
    double m0, m1, m2;
};
ExpMoments exp_moments(double c, double h);

// Integral over [0,h] of e^{-c t} p(t), where p is the quadratic through
// (0,f0), (h,f1), (2h,f2). Used for product-integration of exponential
// kernels against grid samples.
double exp_weighted_quad(double c, double h, double f0, double f1, double f2);

// Weights for int_0^h e^{-c t} p(t) dt with p the quadratic through grid
// samples: forward layout uses samples at t = 0, h, 2h; centered layout
// uses samples at t = 0, +h, -h.
struct ProductQuadWeights {
    double f0, f1, f2;  // forward
    double c0, cp, cm;  // centered
};
ProductQuadWeights product_quad_weights(double c, double h);

// Cumulative integral of y over a uniform grid with step h. out[0] = 0,
// out[j] = \int_0^{x_j} y. Piecewise-quadratic (Simpson-grade) accuracy.
void cumulative_integral(std::span<const double> y, double h,
                         std::vector<double>& out);

// Shape-preserving monotone cubic interpolant (Fritsch-Carlson).
// Knots must be strictly increasing.
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double derivative(double x) const;
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    std::size_t segment(double x) const;
    std::vector<double> x_, y_, d_;  // knots, values, knot slopes
};

// Dormand-Prince 5(4) adaptive step integrator with event detection.
// Events are scalar functions of (x, state); integration stops at the
// first sign change of any event function, localized by bisection on the
// dense state to |dx| < x_tol.
struct OdeResult {
    std::vector<double> xs;
    std::vector<std::vector<double>> ys;  // ys[i] is state at xs[i]
    int event = -1;                       // index of triggered event, -1 if none
    bool step_underflow = false;
};

using OdeRhs = std::function<void(double x, std::span<const double> y,
                                  std::span<double> dydx)>;
using OdeEvent = std::function<double(double x, std::span<const double> y)>;

struct OdeOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double initial_step = 1e-4;
    double max_step = 0.1;
    double min_step = 1e-15;
    double event_x_tol = 1e-10;
    std::size_t max_steps = 2'000'000;
};

OdeResult integrate_ode(const OdeRhs& rhs, double x0, std::vector<double> y0,
                        double x_end, const std::vector<OdeEvent>& events,
                        const OdeOptions& opts);

// Adaptive Simpson quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 50);

// Root of f on [a,b] by bisection; requires a sign change.
double bisect_root(const std::function<double(double)>& f, double a, double b,
                   double x_tol);

// Least-squares slope and intercept of y against x.
struct LineFit {
    double slope, intercept, r2;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a,b) and the exact (Clopper-Pearson)
// binomial confidence interval.
double beta_inc(double a, double b, double x);
struct Interval {
    double lo, hi;
};
Interval clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                         double confidence);

}  // namespace bbm

#endif
