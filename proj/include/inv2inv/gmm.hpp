#pragma once

#include <vector>

#include "inv2inv/sde.hpp"
#include "inv2inv/tensor.hpp"

namespace inv2inv {

// Isotropic Gaussian mixture over R^D. Under the VP kernel the time-t
// marginal stays a mixture with means alpha(t) * mu_k and variances
// alpha(t)^2 * v_k + sigma(t)^2, so the exact score is available in closed
// form. Serves as the verification oracle for learned score models and as a
// kernel-density score backend over a set of data points.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights,
                    std::vector<std::vector<double>> means,
                    std::vector<double> variances);

    // Kernel-density mixture: one equally weighted component per data point,
    // all with variance bandwidth^2.
    static GaussianMixture kernel_density(const std::vector<Tensor>& points, double bandwidth);

    std::size_t components() const { return weights_.size(); }
    std::size_t dim() const { return means_[0].size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& means() const { return means_; }
    const std::vector<double>& variances() const { return variances_; }

    // log density of the time-t marginal at y (log-sum-exp stabilized).
    double log_density(const SdeSchedule& sched, const Tensor& y, double t) const;

    // Exact score grad_y log q_t(y) of the time-t marginal. Output has the
    // shape of y.
    Tensor score(const SdeSchedule& sched, const Tensor& y, double t) const;

    // Draw one sample from the time-0 mixture into the given shape.
    Tensor sample(class NoiseStream& component_rng, class NoiseStream& noise_rng,
                  const std::vector<std::size_t>& shape) const;

private:
    std::vector<double> weights_;
    std::vector<std::vector<double>> means_;
    std::vector<double> variances_;
};

}  // namespace inv2inv
