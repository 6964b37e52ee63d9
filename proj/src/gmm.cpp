#include "inv2inv/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inv2inv/rng.hpp"

namespace inv2inv {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<std::vector<double>> means,
                                 std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
    if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != variances_.size())
        throw DomainError("mixture requires matching nonempty weights/means/variances");
    double sum = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw DomainError("mixture weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
    for (double v : variances_)
        if (!(v > 0.0)) throw DomainError("mixture variances must be positive");
    std::size_t d = means_[0].size();
    for (const auto& m : means_)
        if (m.size() != d) throw ShapeError("mixture means must share one dimension");
}

GaussianMixture GaussianMixture::kernel_density(const std::vector<Tensor>& points,
                                                double bandwidth) {
    if (points.empty()) throw DomainError("kernel density requires at least one point");
    if (!(bandwidth > 0.0)) throw DomainError("kernel density bandwidth must be positive");
    std::vector<double> w(points.size(), 1.0 / static_cast<double>(points.size()));
    std::vector<std::vector<double>> means;
    means.reserve(points.size());
    for (const Tensor& p : points) means.push_back(p.data());
    std::vector<double> v(points.size(), bandwidth * bandwidth);
    return GaussianMixture(std::move(w), std::move(means), std::move(v));
}

double GaussianMixture::log_density(const SdeSchedule& sched, const Tensor& y, double t) const {
    if (y.size() != dim()) throw ShapeError("query dimension does not match mixture");
    auto [a, s] = sched.alpha_sigma(t);
    double d = static_cast<double>(dim());
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(components());
    for (std::size_t k = 0; k < components(); ++k) {
        double var = a * a * variances_[k] + s * s;
        double q = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            double r = y[i] - a * means_[k][i];
            q += r * r;
        }
        logs[k] = std::log(weights_[k]) - 0.5 * d * (kLog2Pi + std::log(var)) - 0.5 * q / var;
        best = std::max(best, logs[k]);
    }
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - best);
    return best + std::log(acc);
}

Tensor GaussianMixture::score(const SdeSchedule& sched, const Tensor& y, double t) const {
    if (y.size() != dim()) throw ShapeError("query dimension does not match mixture");
    if (!y.all_finite()) throw DomainError("score query contains non-finite values");
    auto [a, s] = sched.alpha_sigma(t);
    double d = static_cast<double>(dim());

    // responsibilities via log-sum-exp
    std::vector<double> logs(components());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < components(); ++k) {
        double var = a * a * variances_[k] + s * s;
        double q = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            double r = y[i] - a * means_[k][i];
            q += r * r;
        }
        logs[k] = std::log(weights_[k]) - 0.5 * d * (kLog2Pi + std::log(var)) - 0.5 * q / var;
        best = std::max(best, logs[k]);
    }
    double denom = 0.0;
    for (double l : logs) denom += std::exp(l - best);

    Tensor out(y.shape());
    for (std::size_t k = 0; k < components(); ++k) {
        double var = a * a * variances_[k] + s * s;
        double resp = std::exp(logs[k] - best) / denom;
        if (resp == 0.0) continue;
        for (std::size_t i = 0; i < dim(); ++i)
            out[i] += resp * (a * means_[k][i] - y[i]) / var;
    }
    return out;
}

Tensor GaussianMixture::sample(NoiseStream& component_rng, NoiseStream& noise_rng,
                               const std::vector<std::size_t>& shape) const {
    double u = component_rng.uniform();
    std::size_t k = 0;
    double acc = 0.0;
    for (; k < components(); ++k) {
        acc += weights_[k];
        if (u < acc) break;
    }
    if (k == components()) k = components() - 1;
    Tensor out = noise_rng.gaussian_tensor(shape);
    if (out.size() != dim()) throw ShapeError("sample shape does not match mixture dimension");
    double sd = std::sqrt(variances_[k]);
    for (std::size_t i = 0; i < dim(); ++i) out[i] = means_[k][i] + sd * out[i];
    return out;
}

}  // namespace inv2inv
