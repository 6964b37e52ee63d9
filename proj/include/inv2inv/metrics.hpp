#pragma once

#include <cstdint>
#include <vector>

#include "inv2inv/gmm.hpp"
#include "inv2inv/tensor.hpp"

namespace inv2inv {

class NoiseStream;

// Root-mean-square pixel distance between two single-channel sketches.
double shape_l2(const Tensor& a, const Tensor& b);

// Peak signal-to-noise ratio in dB for images in [-1, 1] (peak = 2).
// Capped at 100 dB when the MSE falls below 1e-12.
double psnr(const Tensor& a, const Tensor& b);

// Mean over random unit projections of the 1-D Wasserstein-1 distance
// between the projected empirical distributions. Each sample set is a list
// of equally shaped tensors.
double sliced_wasserstein(const std::vector<Tensor>& samples_a,
                          const std::vector<Tensor>& samples_b, std::size_t projections,
                          NoiseStream& rng);

// Exact 1-D Wasserstein-1 between two empirical distributions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

struct GmmRecoveryReport {
    std::vector<double> empirical_weights;      // by nearest true component mean
    std::vector<double> component_mean_errors;  // L2 distance to the true mean
    double max_weight_error = 0.0;
    double max_abs_cov_error = 0.0;  // vs. the mixture's true covariance, elementwise
};

GmmRecoveryReport gmm_recovery_stats(const std::vector<Tensor>& samples,
                                     const GaussianMixture& gm);

struct MetricRow {
    std::size_t id = 0;
    double shape_l2 = 0.0;
    double psnr = 0.0;
};

// Per-sample metric rows plus aggregates. Aggregates are recomputed from the
// rows on demand so they can never drift out of sync.
class MetricReport {
public:
    void add(MetricRow row) { rows_.push_back(row); }
    const std::vector<MetricRow>& rows() const { return rows_; }
    std::size_t count() const { return rows_.size(); }

    double mean_shape_l2() const;
    double mean_psnr() const;
    double stddev_shape_l2() const;
    double stddev_psnr() const;

private:
    std::vector<MetricRow> rows_;
};

// One-sided paired comparison that mean(a) < mean(b): returns the p-value of
// the paired t statistic on differences a - b (small p favors a < b).
double paired_t_pvalue_less(const std::vector<double>& a, const std::vector<double>& b);

// Student-t lower-tail CDF, needed by the paired test.
double student_t_cdf(double t, double dof);

}  // namespace inv2inv
