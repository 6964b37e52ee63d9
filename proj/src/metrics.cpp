#include "inv2inv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inv2inv/rng.hpp"

namespace inv2inv {

double shape_l2(const Tensor& a, const Tensor& b) {
    if (a.rank() == 3 && a.channels() != 1)
        throw ShapeError("shape_l2 expects single-channel sketches");
    a.check_same(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double r = a[i] - b[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double psnr(const Tensor& a, const Tensor& b) {
    a.check_same(b);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double r = a[i] - b[i];
        mse += r * r;
    }
    mse /= static_cast<double>(a.size());
    if (mse < 1e-12) return 100.0;
    return 10.0 * std::log10(4.0 / mse);  // peak = 2 for the [-1, 1] range
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("wasserstein requires nonempty sets");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
        return acc / static_cast<double>(a.size());
    }
    // Unequal counts: integrate |F_a - F_b| over the merged support.
    std::vector<double> merged;
    merged.reserve(a.size() + b.size());
    merged.insert(merged.end(), a.begin(), a.end());
    merged.insert(merged.end(), b.begin(), b.end());
    std::sort(merged.begin(), merged.end());
    double acc = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t m = 0; m + 1 < merged.size(); ++m) {
        while (ia < a.size() && a[ia] <= merged[m]) ++ia;
        while (ib < b.size() && b[ib] <= merged[m]) ++ib;
        double fa = static_cast<double>(ia) / static_cast<double>(a.size());
        double fb = static_cast<double>(ib) / static_cast<double>(b.size());
        acc += std::abs(fa - fb) * (merged[m + 1] - merged[m]);
    }
    return acc;
}

double sliced_wasserstein(const std::vector<Tensor>& samples_a,
                          const std::vector<Tensor>& samples_b, std::size_t projections,
                          NoiseStream& rng) {
    if (samples_a.empty() || samples_b.empty())
        throw DomainError("sliced wasserstein requires nonempty sample sets");
    std::size_t d = samples_a[0].size();
    if (samples_b[0].size() != d)
        throw ShapeError("sample sets must share a dimensionality");
    if (projections == 0) throw DomainError("at least one projection required");

    double total = 0.0;
    std::vector<double> dir(d);
    for (std::size_t p = 0; p < projections; ++p) {
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dir[i] = rng.gaussian();
            norm += dir[i] * dir[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            dir[0] = 1.0;
            norm = 1.0;
        }
        std::vector<double> pa(samples_a.size()), pb(samples_b.size());
        for (std::size_t i = 0; i < samples_a.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += samples_a[i][j] * dir[j];
            pa[i] = acc / norm;
        }
        for (std::size_t i = 0; i < samples_b.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += samples_b[i][j] * dir[j];
            pb[i] = acc / norm;
        }
        total += wasserstein_1d(std::move(pa), std::move(pb));
    }
    return total / static_cast<double>(projections);
}

GmmRecoveryReport gmm_recovery_stats(const std::vector<Tensor>& samples,
                                     const GaussianMixture& gm) {
    if (samples.empty()) throw DomainError("recovery stats require samples");
    std::size_t d = gm.dim();
    std::size_t kc = gm.components();
    GmmRecoveryReport rep;
    rep.empirical_weights.assign(kc, 0.0);
    rep.component_mean_errors.assign(kc, 0.0);

    std::vector<std::vector<double>> comp_sums(kc, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(kc, 0);
    for (const Tensor& s : samples) {
        if (s.size() != d) throw ShapeError("sample dimension does not match mixture");
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < kc; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double r = s[i] - gm.means()[k][i];
                acc += r * r;
            }
            if (acc < best_d) {
                best_d = acc;
                best = k;
            }
        }
        ++counts[best];
        for (std::size_t i = 0; i < d; ++i) comp_sums[best][i] += s[i];
    }
    double n = static_cast<double>(samples.size());
    for (std::size_t k = 0; k < kc; ++k) {
        rep.empirical_weights[k] = static_cast<double>(counts[k]) / n;
        rep.max_weight_error =
            std::max(rep.max_weight_error, std::abs(rep.empirical_weights[k] - gm.weights()[k]));
        if (counts[k] > 0) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double m = comp_sums[k][i] / static_cast<double>(counts[k]);
                double r = m - gm.means()[k][i];
                acc += r * r;
            }
            rep.component_mean_errors[k] = std::sqrt(acc);
        }
    }

    // Global covariance vs. the mixture's true covariance
    // Sigma = sum_k w_k (v_k I + mu_k mu_k^T) - mu_bar mu_bar^T.
    std::vector<double> mean(d, 0.0);
    for (const Tensor& s : samples)
        for (std::size_t i = 0; i < d; ++i) mean[i] += s[i] / n;
    std::vector<double> cov(d * d, 0.0);
    for (const Tensor& s : samples)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov[i * d + j] += (s[i] - mean[i]) * (s[j] - mean[j]) / n;

    std::vector<double> mu_bar(d, 0.0);
    for (std::size_t k = 0; k < kc; ++k)
        for (std::size_t i = 0; i < d; ++i) mu_bar[i] += gm.weights()[k] * gm.means()[k][i];
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double truth = -mu_bar[i] * mu_bar[j];
            for (std::size_t k = 0; k < kc; ++k) {
                truth += gm.weights()[k] * gm.means()[k][i] * gm.means()[k][j];
                if (i == j) truth += gm.weights()[k] * gm.variances()[k];
            }
            rep.max_abs_cov_error = std::max(rep.max_abs_cov_error, std::abs(cov[i * d + j] - truth));
        }
    return rep;
}

double MetricReport::mean_shape_l2() const {
    double acc = 0.0;
    for (const auto& r : rows_) acc += r.shape_l2;
    return rows_.empty() ? 0.0 : acc / static_cast<double>(rows_.size());
}

double MetricReport::mean_psnr() const {
    double acc = 0.0;
    for (const auto& r : rows_) acc += r.psnr;
    return rows_.empty() ? 0.0 : acc / static_cast<double>(rows_.size());
}

namespace {
double stddev(const std::vector<MetricRow>& rows, double mean, double MetricRow::*field) {
    if (rows.size() < 2) return 0.0;
    double acc = 0.0;
    for (const auto& r : rows) {
        double d = r.*field - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(rows.size() - 1));
}
}  // namespace

double MetricReport::stddev_shape_l2() const {
    return stddev(rows_, mean_shape_l2(), &MetricRow::shape_l2);
}
double MetricReport::stddev_psnr() const { return stddev(rows_, mean_psnr(), &MetricRow::psnr); }

namespace {

// Regularized incomplete beta via the standard continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double dof) {
    if (dof <= 0.0) throw DomainError("degrees of freedom must be positive");
    double x = dof / (dof + t * t);
    double p = 0.5 * incbeta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - p : p;
}

double paired_t_pvalue_less(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw DomainError("paired test requires two equal-length series, n >= 2");
    std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += (a[i] - b[i]);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = (a[i] - b[i]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (var == 0.0) return mean < 0.0 ? 0.0 : 1.0;
    double t = mean / std::sqrt(var / static_cast<double>(n));
    return student_t_cdf(t, static_cast<double>(n - 1));
}

}  // namespace inv2inv
