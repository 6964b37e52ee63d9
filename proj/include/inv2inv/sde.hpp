#pragma once

#include <utility>

#include "inv2inv/tensor.hpp"

namespace inv2inv {

// Variance-preserving forward SDE with a linear noise-rate schedule
// beta(t) = beta_min + (t/T) * (beta_max - beta_min). The closed-form
// perturbation kernel is y_t = alpha(t) y_0 + sigma(t) z with
// alpha(t) = exp(-1/2 * int_0^t beta) and sigma(t) = sqrt(1 - alpha(t)^2),
// so alpha^2 + sigma^2 = 1 at every t.
class SdeSchedule {
public:
    SdeSchedule(double beta_min, double beta_max, double horizon_T);

    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }
    double horizon() const { return horizon_; }

    double beta(double t) const;

    // (alpha(t), sigma(t)); the beta integral is evaluated in closed form.
    std::pair<double, double> alpha_sigma(double t) const;
    double alpha(double t) const { return alpha_sigma(t).first; }
    double sigma(double t) const { return alpha_sigma(t).second; }

    // alpha(t) * y0 + sigma(t) * z, elementwise.
    Tensor perturb(const Tensor& y0, double t, const Tensor& z) const;

    // Forward drift f(y, t) = -1/2 * beta(t) * y.
    Tensor drift(const Tensor& y, double t) const;

    // Diffusion coefficient g(t) = sqrt(beta(t)).
    double diffusion(double t) const;

    // Conditional one-step forward kernel from time s to time t (s < t):
    // y_t = ratio * y_s + sqrt(var) * z with ratio = alpha(t)/alpha(s) and
    // var = sigma(t)^2 - ratio^2 * sigma(s)^2. Used by the per-step repeat
    // re-perturbation in the sampler.
    std::pair<double, double> forward_bridge(double s, double t) const;

private:
    double checked_time(double t) const;

    double beta_min_;
    double beta_max_;
    double horizon_;
};

}  // namespace inv2inv
