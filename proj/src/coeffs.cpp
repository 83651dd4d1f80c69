#include "bbm/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bbm {

namespace {

// acc += p * (pw convolved with f), truncated at N; lo_* are the indices
// of the first possibly-nonzero coefficients.
void add_convolution(std::vector<double>& acc, const std::vector<double>& pw,
                     std::size_t lo_pw, const std::vector<double>& f,
                     std::size_t lo_f, double p, std::vector<double>& out) {
    const std::size_t n = acc.size();  // N + 1
    out.assign(n, 0.0);
    for (std::size_t i = lo_pw + lo_f; i < n; ++i) {
        double v = 0.0;
        for (std::size_t a = lo_pw; a + lo_f <= i; ++a) v += pw[a] * f[i - a];
        out[i] = v;
        if (p != 0.0) acc[i] += p * v;
    }
}

}  // namespace

CoefficientTable picard_coefficients(const ModelConfig& config,
                                     const WaveProfile* profile, int N,
                                     const std::vector<double>& x_grid,
                                     double tol, int sweeps_limit) {
    if (N < 1) throw DomainError("picard_coefficients: N >= 1 required");
    const OffspringLaw& law = config.law;
    const double beta = config.beta;
    const double mu = config.mu;
    const Constants c = config.consts();
    const Numerics& num = config.numerics;

    const double H = num.grid_h * num.coeffs_grid_factor;
    double x_max = 0.0;
    for (double x : x_grid) {
        if (x < 0.0) throw DomainError("picard_coefficients: x >= 0 required");
        x_max = std::max(x_max, x);
    }
    const double c2 = c.alpha - mu;
    const double ltp = std::max(c.lambda_tilde, 0.0);
    double Y = profile ? std::max(profile->y_max, x_max + 20.0)
                       : x_max + 40.0 / c2;
    std::size_t J = static_cast<std::size_t>(std::ceil(Y / H));
    J = std::max<std::size_t>(J, 64);
    Y = static_cast<double>(J) * H;

    // Offspring truncation: remaining mass below 1e-12 (coefficients of
    // f^k are each <= 1, so the per-coefficient error is <= the mass).
    const std::vector<double>& p = law.probabilities();
    std::size_t K = p.size() - 1;
    {
        double tail = 0.0;
        while (K > 2 && tail + p[K] < 1e-12) tail += p[K--];
    }

    const double qv = law.extinction_q();
    const double gpq = law.gprime_q();
    const std::size_t n = static_cast<std::size_t>(N) + 1;

    // f[j][i], the running iterate; start from the direct-absorption term.
    std::vector<std::vector<double>> f(J + 1, std::vector<double>(n, 0.0));
    std::vector<double> e_lx(J + 1);
    for (std::size_t j = 0; j <= J; ++j) {
        e_lx[j] = std::exp(-c.lambda * H * static_cast<double>(j));
        f[j][1] = e_lx[j];
    }

    const double E1 = std::exp(-c.lambda * H);
    const double E2 = std::exp(-c2 * H);
    const ProductQuadWeights w1 = product_quad_weights(c.lambda, H);
    const ProductQuadWeights w2 = product_quad_weights(c2, H);
    const double ba = beta / c.alpha;

    std::vector<std::vector<double>> gc(J + 1, std::vector<double>(n, 0.0));
    std::vector<double> pw, conv_out(n, 0.0);
    std::vector<double> P(J + 1), S(J + 1);

    CoefficientTable table;
    table.N = N;
    table.K = K;

    int iter = 0;
    double diff = std::numeric_limits<double>::infinity();
    const int max_iter =
        (sweeps_limit >= 0) ? sweeps_limit : num.coeffs_max_iter;
    while (true) {
        if (sweeps_limit >= 0 && iter >= sweeps_limit) break;
        if (sweeps_limit < 0 && diff < tol) break;
        if (iter >= max_iter)
            throw ConvergenceError("picard_coefficients: no convergence");

        // composition coefficients [G(f_j)]_i
        for (std::size_t j = 0; j <= J; ++j) {
            std::vector<double>& acc = gc[j];
            std::fill(acc.begin(), acc.end(), 0.0);
            acc[0] = p[0];
            std::size_t lo_f = 0;
            while (lo_f < n && f[j][lo_f] == 0.0) ++lo_f;
            if (lo_f >= n) continue;
            pw = f[j];
            std::size_t lo_pw = lo_f;
            for (std::size_t k = 2; k <= K; ++k) {
                if (lo_pw + lo_f >= n) break;
                add_convolution(acc, pw, lo_pw, f[j], lo_f,
                                k < p.size() ? p[k] : 0.0, conv_out);
                pw.swap(conv_out);
                lo_pw += lo_f;
            }
        }

        // per-coefficient renewal recurrences
        diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            P[0] = 0.0;
            P[1] = w1.c0 * gc[1][i] + w1.cp * gc[0][i] + w1.cm * gc[2][i];
            for (std::size_t j = 2; j <= J; ++j)
                P[j] = E1 * P[j - 1] + w1.f0 * gc[j][i] +
                       w1.f1 * gc[j - 1][i] + w1.f2 * gc[j - 2][i];
            const double Li = (i == 0) ? qv : 0.0;
            S[J] = Li / c2 + gpq * (f[J][i] - Li) / (c2 + ltp);
            S[J - 1] = E2 * S[J] + w2.c0 * gc[J - 1][i] + w2.cp * gc[J][i] +
                       w2.cm * gc[J - 2][i];
            for (std::size_t j = J - 1; j-- > 0;)
                S[j] = E2 * S[j + 1] + w2.f0 * gc[j][i] +
                       w2.f1 * gc[j + 1][i] + w2.f2 * gc[j + 2][i];
            const double s0 = S[0];
            for (std::size_t j = 0; j <= J; ++j) {
                const double direct = (i == 1) ? e_lx[j] : 0.0;
                const double v = direct + ba * (P[j] + S[j] - e_lx[j] * s0);
                const double inc = v - f[j][i];
                diff = std::max(diff, std::abs(inc));
                table.min_increment = std::min(table.min_increment, inc);
                f[j][i] = v;
            }
        }
        ++iter;
    }
    table.iterations = iter;
    table.increment_norm = diff;

    // extract the requested rows
    for (double x : x_grid) {
        const std::size_t j =
            static_cast<std::size_t>(std::llround(x / H));
        if (j > J) throw DomainError("picard_coefficients: x beyond grid");
        table.x_grid.push_back(H * static_cast<double>(j));
        table.values.push_back(f[j]);
    }

    // certified truncation bound via an interior evaluation point sigma:
    // sum_{i>N} q_i(x) <= f_x(sigma) sigma^{-(N+1)}
    if (profile) {
        const double R = profile->q_x0();
        const double sigma = 1.0 + 0.999 * (R - 1.0);
        table.radius_sigma = sigma;
        for (double x : table.x_grid) {
            const double fb = profile->f_eval(x, sigma);
            table.tail_mass_bound.push_back(
                fb * std::pow(sigma, -(static_cast<double>(N) + 1.0)));
        }
    } else {
        table.radius_sigma = std::numeric_limits<double>::quiet_NaN();
        table.tail_mass_bound.assign(
            table.x_grid.size(), std::numeric_limits<double>::infinity());
    }
    return table;
}

double single_branch_exact(const OffspringLaw& law, double beta, double mu,
                           double x, unsigned k) {
    if (!(x > 0.0)) throw DomainError("single_branch_exact: x > 0 required");
    if (k == 1) throw DomainError("single_branch_exact: k = 1 has no mass");
    const Constants c = constants(law, beta, mu);
    double pk;
    const std::vector<double>& p = law.probabilities();
    if (k < p.size()) {
        pk = p[k];
    } else if (law.family() == LawFamily::GeometricTail) {
        pk = law.tail_scale() * std::pow(law.tail_r(), k);
    } else if (law.family() == LawFamily::PolylogTail) {
        pk = law.tail_scale() * std::pow(law.tail_r(), k) *
             std::pow(static_cast<double>(k), -law.tail_gamma());
    } else {
        pk = 0.0;
    }
    if (k == 0) return pk * (1.0 - std::exp(-c.lambda * x));
    const double kd = static_cast<double>(k);
    return 2.0 * beta * pk *
           (std::exp(-c.lambda * x) - std::exp(-kd * c.lambda * x)) /
           (c.lambda * (kd - 1.0) * (c.alpha - mu + c.lambda * kd));
}

TableEval f_from_table(const CoefficientTable& table, double x, double s) {
    std::size_t j = table.x_grid.size();
    for (std::size_t t = 0; t < table.x_grid.size(); ++t)
        if (std::abs(table.x_grid[t] - x) < 1e-9) {
            j = t;
            break;
        }
    if (j == table.x_grid.size())
        throw DomainError("f_from_table: x is not a table abscissa");
    const std::vector<double>& q = table.values[j];
    double acc = 0.0;
    for (std::size_t i = q.size(); i-- > 0;) acc = acc * s + q[i];
    TableEval ev;
    ev.value = acc;
    ev.remainder_bound =
        table.tail_mass_bound[j] *
        std::pow(std::max(1.0, std::abs(s)), static_cast<double>(table.N));
    return ev;
}

}  // namespace bbm
