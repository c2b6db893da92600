#include "demailly/gmres.hpp"

#include <cmath>

namespace demailly {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

} // namespace

GmresResult gmres(const VecFn& apply_A, const VecFn& apply_precond, const std::vector<double>& b,
                  std::vector<double>& x, const GmresOptions& opt) {
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, 0.0);
    GmresResult result;

    std::vector<double> tmp(n), r(n);
    auto precond_residual = [&](std::vector<double>& out) {
        apply_A(x, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
        apply_precond(tmp, out);
    };

    precond_residual(r);
    double beta0 = std::sqrt(dot(r, r));
    if (beta0 == 0.0) {
        result.converged = true;
        return result;
    }
    const double target = opt.rel_tol * beta0;

    const int m = opt.restart;
    std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
    std::vector<double> h((m + 1) * m, 0.0), cs(m), sn(m), g(m + 1);

    int total = 0;
    while (total < opt.max_iters) {
        precond_residual(r);
        double beta = std::sqrt(dot(r, r));
        if (beta <= target) {
            result.converged = true;
            result.rel_residual = beta / beta0;
            result.iters = total;
            return result;
        }
        for (auto& col : h) col = 0.0;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;

        int k = 0;
        for (; k < m && total < opt.max_iters; ++k, ++total) {
            apply_A(v[k], tmp);
            apply_precond(tmp, v[k + 1]);
            // Modified Gram-Schmidt in fixed order.
            for (int i = 0; i <= k; ++i) {
                double hik = dot(v[i], v[k + 1]);
                h[i * m + k] = hik;
                axpy(-hik, v[i], v[k + 1]);
            }
            double hkk = std::sqrt(dot(v[k + 1], v[k + 1]));
            h[(k + 1) * m + k] = hkk;
            if (hkk > 0.0)
                for (std::size_t i = 0; i < n; ++i) v[k + 1][i] /= hkk;

            // Apply accumulated Givens rotations, then generate a new one.
            for (int i = 0; i < k; ++i) {
                double t0 = cs[i] * h[i * m + k] + sn[i] * h[(i + 1) * m + k];
                double t1 = -sn[i] * h[i * m + k] + cs[i] * h[(i + 1) * m + k];
                h[i * m + k] = t0;
                h[(i + 1) * m + k] = t1;
            }
            double denom = std::hypot(h[k * m + k], h[(k + 1) * m + k]);
            if (denom == 0.0) {
                ++k;
                ++total;
                break;
            }
            cs[k] = h[k * m + k] / denom;
            sn[k] = h[(k + 1) * m + k] / denom;
            h[k * m + k] = denom;
            h[(k + 1) * m + k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (std::abs(g[k + 1]) <= target) {
                ++k;
                ++total;
                break;
            }
        }

        // Back substitution for the Krylov coefficients.
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= h[i * m + j] * y[j];
            y[i] = h[i * m + i] != 0.0 ? s / h[i * m + i] : 0.0;
        }
        for (int i = 0; i < k; ++i) axpy(y[i], v[i], x);
        if (k == 0) break;
    }

    precond_residual(r);
    double beta = std::sqrt(dot(r, r));
    result.converged = beta <= target;
    result.rel_residual = beta / beta0;
    result.iters = total;
    return result;
}

} // namespace demailly
