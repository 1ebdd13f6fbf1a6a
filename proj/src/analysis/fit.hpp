#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace photonlab {

// Model interface for weighted least squares: value at one abscissa, and an
// optional analytic gradient with respect to the parameters. When no gradient
// is supplied a forward-difference one is used.
using ModelFunc = std::function<double(double x, std::span<const double> p)>;
using ModelGrad = std::function<void(double x, std::span<const double> p, std::span<double> out)>;

struct FitOptions {
    int max_iterations = 200;
    double relative_step_tol = 1e-8;
    double lambda_init = 1e-3;
};

// Damped (Levenberg-Marquardt) weighted least squares. weights are 1/sigma^2
// per point. Parameter errors are sqrt(diag((J^T W J)^-1)); chi2_reduced is
// chi2/(n-k). Never throws on non-convergence: the result carries a flag.
FitResult lm_fit(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights, std::span<const double> p_init,
                 std::span<const std::string> param_names, const ModelFunc& model,
                 const ModelGrad& grad = nullptr, const FitOptions& options = {});

// The Jacobian actually used by the fit at point x (analytic when supplied,
// else forward differences); exposed so tests can validate gradients against
// central differences at the optimum.
std::vector<double> fit_gradient(const ModelFunc& model, const ModelGrad& grad, double x,
                                 std::span<const double> p);

// Poisson weights with max(count, 1) variance.
std::vector<double> poisson_weights(std::span<const double> counts);

}  // namespace photonlab
