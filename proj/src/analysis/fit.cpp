#include "analysis/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace photonlab {

namespace {

// Cholesky solve of (A + lambda diag(A)) d = g for small symmetric systems.
bool solve_damped(std::vector<double> a, std::vector<double> g, double lambda, std::size_t k,
                  std::vector<double>& out) {
    for (std::size_t i = 0; i < k; ++i) {
        a[i * k + i] *= (1.0 + lambda);
        if (a[i * k + i] <= 0.0) a[i * k + i] = 1e-300;
    }
    // in-place Cholesky A = L L^T
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * k + j];
            for (std::size_t m = 0; m < j; ++m) s -= a[i * k + m] * a[j * k + m];
            if (i == j) {
                if (s <= 0.0) return false;
                a[i * k + i] = std::sqrt(s);
            } else {
                a[i * k + j] = s / a[j * k + j];
            }
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < k; ++i) {
        double s = g[i];
        for (std::size_t m = 0; m < i; ++m) s -= a[i * k + m] * g[m];
        g[i] = s / a[i * k + i];
    }
    for (std::size_t ii = k; ii-- > 0;) {
        double s = g[ii];
        for (std::size_t m = ii + 1; m < k; ++m) s -= a[m * k + ii] * g[m];
        g[ii] = s / a[ii * k + ii];
    }
    out = std::move(g);
    return true;
}

// inverse via Cholesky of the undamped normal matrix; returns empty on failure
std::vector<double> invert_spd(std::vector<double> a, std::size_t k) {
    std::vector<double> inv(k * k, 0.0);
    std::vector<double> col(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> e(k, 0.0);
        e[c] = 1.0;
        if (!solve_damped(a, e, 0.0, k, col)) return {};
        for (std::size_t r = 0; r < k; ++r) inv[r * k + c] = col[r];
    }
    return inv;
}

double chi2_of(std::span<const double> x, std::span<const double> y, std::span<const double> w,
               std::span<const double> p, const ModelFunc& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - model(x[i], p);
        s += w[i] * r * r;
    }
    return s;
}

}  // namespace

std::vector<double> fit_gradient(const ModelFunc& model, const ModelGrad& grad, double x,
                                 std::span<const double> p) {
    std::vector<double> out(p.size(), 0.0);
    if (grad) {
        grad(x, p, out);
        return out;
    }
    std::vector<double> q(p.begin(), p.end());
    const double f0 = model(x, q);
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(q[j]));
        const double save = q[j];
        q[j] = save + h;
        out[j] = (model(x, q) - f0) / h;
        q[j] = save;
    }
    return out;
}

std::vector<double> poisson_weights(std::span<const double> counts) {
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        w[i] = 1.0 / std::max(counts[i], 1.0);
    }
    return w;
}

FitResult lm_fit(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights, std::span<const double> p_init,
                 std::span<const std::string> param_names, const ModelFunc& model,
                 const ModelGrad& grad, const FitOptions& options) {
    const std::size_t n = x.size();
    const std::size_t k = p_init.size();
    if (y.size() != n || weights.size() != n) {
        throw std::invalid_argument("lm_fit: x, y, weights size mismatch");
    }
    if (param_names.size() != k) throw std::invalid_argument("lm_fit: name/parameter mismatch");
    if (n < k) throw std::invalid_argument("lm_fit: fewer points than parameters");

    std::vector<double> p(p_init.begin(), p_init.end());
    double lambda = options.lambda_init;
    double chi2 = chi2_of(x, y, weights, p, model);
    bool converged = false;

    std::vector<double> jtj(k * k), jtr(k);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> g = fit_gradient(model, grad, x[i], p);
            const double r = y[i] - model(x[i], p);
            const double w = weights[i];
            for (std::size_t a = 0; a < k; ++a) {
                jtr[a] += w * g[a] * r;
                for (std::size_t b = 0; b <= a; ++b) jtj[a * k + b] += w * g[a] * g[b];
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) jtj[a * k + b] = jtj[b * k + a];
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 24; ++attempt) {
            std::vector<double> delta;
            if (!solve_damped(jtj, jtr, lambda, k, delta)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial(p);
            double max_rel = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                trial[a] += delta[a];
                max_rel = std::max(max_rel,
                                   std::abs(delta[a]) / std::max(1e-30, std::abs(trial[a])));
            }
            const double trial_chi2 = chi2_of(x, y, weights, trial, model);
            if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
                p = std::move(trial);
                const bool small_step = max_rel < options.relative_step_tol;
                const bool small_gain = (chi2 - trial_chi2) <= 1e-12 * (chi2 + 1e-300);
                chi2 = trial_chi2;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (small_step || small_gain) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (converged || !stepped) break;
    }

    FitResult out;
    out.n_points = n;
    out.converged = converged;
    out.chi2_reduced = n > k ? chi2 / static_cast<double>(n - k) : chi2;

    // covariance from the undamped normal matrix at the final parameters
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> g = fit_gradient(model, grad, x[i], p);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b <= a; ++b) jtj[a * k + b] += weights[i] * g[a] * g[b];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) jtj[a * k + b] = jtj[b * k + a];
    }
    const std::vector<double> cov = invert_spd(jtj, k);
    for (std::size_t a = 0; a < k; ++a) {
        const double var = cov.empty() ? 0.0 : cov[a * k + a];
        out.set(param_names[a], p[a], var > 0.0 ? std::sqrt(var) : 0.0);
    }
    return out;
}

}  // namespace photonlab
