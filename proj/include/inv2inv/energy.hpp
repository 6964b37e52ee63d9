#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "inv2inv/sde.hpp"
#include "inv2inv/tensor.hpp"

namespace inv2inv {

enum class Similarity { l2, l1 };

struct EnergyWeights {
    double lambda_g = 0.1;
    double lambda_a = 2.0;

    EnergyWeights() = default;
    EnergyWeights(double g, double a) : lambda_g(g), lambda_a(a) {
        if (g < 0.0 || a < 0.0) throw DomainError("energy weights must be nonnegative");
    }
};

// Photo-to-sketch proxy: Sobel edge magnitude on the channel-mean luminance,
// epsilon-smoothed, normalized by its maximum and inverted so strokes are
// dark on white. Replicate boundary handling. The chain rule through the
// magnitude, the max normalization and the Sobel taps is available in closed
// form, which is what makes exact guidance gradients possible.
struct EdgeExtractor {
    double epsilon = 1e-6;

    // (1, H, W) sketch in [0, 1]. A constant image has no strokes and maps
    // to all-ones.
    Tensor sketch(const Tensor& photo) const;

    // Vector-Jacobian product: d<upstream, sketch(photo)> / d photo.
    Tensor sketch_vjp(const Tensor& photo, const Tensor& upstream) const;
};

// Block-mean projection: average-pool by `factor` then broadcast the mean
// back over each block. Orthogonal projection (idempotent, self-adjoint).
struct LowPass {
    std::size_t factor = 8;

    explicit LowPass(std::size_t f) : factor(f) {
        if (f == 0) throw DomainError("low-pass factor must be >= 1");
    }

    Tensor apply(const Tensor& img) const;
};

// Resolution-scaled default: a factor of 64 at height 256, proportionally
// smaller below, never under 2.
std::size_t lowpass_auto_factor(std::size_t height);

// Two-level pyramid of fixed random 3x3 convolution banks (8 channels,
// unit-normal weights drawn once from the seed) each followed by 2x average
// pooling. Purely linear, so every level has a closed-form adjoint.
class FeaturePyramid {
public:
    static constexpr std::size_t kLevels = 2;
    static constexpr std::size_t kBankChannels = 8;

    FeaturePyramid(std::uint64_t seed, std::size_t in_channels);

    std::uint64_t seed() const { return seed_; }
    std::size_t in_channels() const { return in_channels_; }

    // Level l (1-based internally; returned list is [level1, level2]).
    // Requires H and W divisible by 2^kLevels.
    std::vector<Tensor> features(const Tensor& img) const;

    // Adjoint of the map img -> features(img)[level] applied to u.
    Tensor level_adjoint(std::size_t level, const Tensor& u,
                         std::size_t img_h, std::size_t img_w) const;

private:
    Tensor conv_bank(const Tensor& x, const std::vector<double>& bank,
                     std::size_t out_c, std::size_t in_c) const;
    Tensor conv_bank_adjoint(const Tensor& u, const std::vector<double>& bank,
                             std::size_t out_c, std::size_t in_c) const;

    std::uint64_t seed_;
    std::size_t in_channels_;
    std::vector<double> bank1_;  // [8][in][3][3]
    std::vector<double> bank2_;  // [8][8][3][3]
};

// Shape similarity S between the extracted sketch of y and a sketch target:
// squared L2 by default, absolute-difference sum in l1 mode.
double shape_similarity(const EdgeExtractor& ext, const Tensor& y, const Tensor& sketch_target,
                        Similarity sim = Similarity::l2);

// d shape_similarity / d y (subgradient in l1 mode).
Tensor shape_similarity_grad(const EdgeExtractor& ext, const Tensor& y,
                             const Tensor& sketch_target, Similarity sim = Similarity::l2);

// Appearance similarity: block-mean (pixel) term plus pyramid (feature)
// term, both squared L2. Returns (pixel_term, feature_term).
std::pair<double, double> appearance_similarity_parts(const LowPass& lp,
                                                      const FeaturePyramid& fp, const Tensor& y,
                                                      const Tensor& exemplar_t);

double appearance_similarity(const LowPass& lp, const FeaturePyramid& fp, const Tensor& y,
                             const Tensor& exemplar_t);

Tensor appearance_similarity_grad(const LowPass& lp, const FeaturePyramid& fp, const Tensor& y,
                                  const Tensor& exemplar_t);

// Guidance gradients used by the sampler. Both perturb their reference image
// to time t with the provided noise draw (one Monte-Carlo draw of the
// kernel-smoothed energy) and scale by the corresponding weight.
Tensor shape_energy_grad(const EdgeExtractor& ext, const EnergyWeights& w,
                         const SdeSchedule& sched, const Tensor& y, const Tensor& sketch0,
                         double t, const Tensor& noise, Similarity sim = Similarity::l2);

Tensor appearance_energy_grad(const LowPass& lp, const FeaturePyramid& fp,
                              const EnergyWeights& w, const SdeSchedule& sched, const Tensor& y,
                              const Tensor& exemplar0, double t, const Tensor& noise);

// Central-difference gradient oracle. Evaluates f at y +/- step per
// coordinate; when `coords` is nonempty only those flat indices are probed
// (the rest of the output stays zero).
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& y,
                            double step, const std::vector<std::size_t>& coords = {});

}  // namespace inv2inv
