#include "inv2inv/energy.hpp"

#include <algorithm>
#include <cmath>

#include "inv2inv/rng.hpp"

namespace inv2inv {

namespace {

// Sobel taps, correlation convention: out[i][j] = sum K[di+1][dj+1] * L[i+di][j+dj].
constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline std::size_t clamp_idx(long i, std::size_t n) {
    if (i < 0) return 0;
    if (i >= static_cast<long>(n)) return n - 1;
    return static_cast<std::size_t>(i);
}

Tensor sobel_replicate(const Tensor& lum, const double (&k)[3][3]) {
    std::size_t h = lum.height(), w = lum.width();
    Tensor out = Tensor::image(1, h, w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    acc += k[di + 1][dj + 1] *
                           lum.at(0, clamp_idx(static_cast<long>(i) + di, h),
                                  clamp_idx(static_cast<long>(j) + dj, w));
            out.at(0, i, j) = acc;
        }
    return out;
}

// Exact adjoint of sobel_replicate: scatter each output tap back onto the
// (clamped) source pixel it read.
Tensor sobel_replicate_adjoint(const Tensor& u, const double (&k)[3][3]) {
    std::size_t h = u.height(), w = u.width();
    Tensor out = Tensor::image(1, h, w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            double g = u.at(0, i, j);
            if (g == 0.0) continue;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    out.at(0, clamp_idx(static_cast<long>(i) + di, h),
                           clamp_idx(static_cast<long>(j) + dj, w)) += k[di + 1][dj + 1] * g;
        }
    return out;
}

struct EdgeForward {
    Tensor gx, gy, magnitude;
    double max_mag = 0.0;
    std::size_t argmax = 0;
    bool at_floor = false;
};

EdgeForward edge_forward(const EdgeExtractor& ext, const Tensor& photo) {
    if (photo.height() < 3 || photo.width() < 3)
        throw ShapeError("edge extraction requires height and width >= 3");
    Tensor lum = channel_mean(photo);
    EdgeForward f;
    f.gx = sobel_replicate(lum, kSobelX);
    f.gy = sobel_replicate(lum, kSobelY);
    f.magnitude = Tensor::image(1, photo.height(), photo.width());
    for (std::size_t i = 0; i < f.magnitude.size(); ++i) {
        double m = std::sqrt(f.gx[i] * f.gx[i] + f.gy[i] * f.gy[i] + ext.epsilon);
        f.magnitude[i] = m;
        if (m > f.max_mag) {
            f.max_mag = m;
            f.argmax = i;
        }
    }
    // Constant image: every magnitude sits on the sqrt(epsilon) floor.
    f.at_floor = f.max_mag * f.max_mag <= ext.epsilon * (1.0 + 1e-9);
    return f;
}

}  // namespace

Tensor EdgeExtractor::sketch(const Tensor& photo) const {
    EdgeForward f = edge_forward(*this, photo);
    Tensor out = Tensor::image(1, photo.height(), photo.width(), 1.0);
    if (f.at_floor) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - f.magnitude[i] / f.max_mag;
    return out;
}

Tensor EdgeExtractor::sketch_vjp(const Tensor& photo, const Tensor& upstream) const {
    EdgeForward f = edge_forward(*this, photo);
    Tensor zero(photo.shape());
    if (f.at_floor) return zero;  // flat branch

    std::size_t n = f.magnitude.size();
    // sketch = 1 - m / M with M = m[argmax]:
    //   d sketch_i / d m_j = -delta_ij / M + (m_i / M^2) delta_{j,argmax}
    Tensor gmag = Tensor::image(1, photo.height(), photo.width());
    double inv_max = 1.0 / f.max_mag;
    double dot_um = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gmag[i] = -upstream[i] * inv_max;
        dot_um += upstream[i] * f.magnitude[i];
    }
    gmag[f.argmax] += dot_um * inv_max * inv_max;

    // m = sqrt(gx^2 + gy^2 + eps)
    Tensor ggx = Tensor::image(1, photo.height(), photo.width());
    Tensor ggy = Tensor::image(1, photo.height(), photo.width());
    for (std::size_t i = 0; i < n; ++i) {
        double inv_m = 1.0 / f.magnitude[i];
        ggx[i] = gmag[i] * f.gx[i] * inv_m;
        ggy[i] = gmag[i] * f.gy[i] * inv_m;
    }

    Tensor glum = sobel_replicate_adjoint(ggx, kSobelX);
    glum += sobel_replicate_adjoint(ggy, kSobelY);

    // luminance = channel mean
    Tensor out(photo.shape());
    double invc = 1.0 / static_cast<double>(photo.channels());
    for (std::size_t c = 0; c < photo.channels(); ++c)
        for (std::size_t i = 0; i < n; ++i)
            out[c * n + i] = glum[i] * invc;
    return out;
}

Tensor LowPass::apply(const Tensor& img) const {
    std::size_t c = img.channels(), h = img.height(), w = img.width();
    if (h % factor != 0 || w % factor != 0)
        throw ShapeError("image dims must be divisible by the low-pass factor");
    Tensor out(img.shape());
    double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t by = 0; by < h; by += factor)
            for (std::size_t bx = 0; bx < w; bx += factor) {
                double mean = 0.0;
                for (std::size_t i = 0; i < factor; ++i)
                    for (std::size_t j = 0; j < factor; ++j) mean += img.at(k, by + i, bx + j);
                mean *= inv;
                for (std::size_t i = 0; i < factor; ++i)
                    for (std::size_t j = 0; j < factor; ++j) out.at(k, by + i, bx + j) = mean;
            }
    return out;
}

std::size_t lowpass_auto_factor(std::size_t height) {
    long f = std::lround(64.0 * static_cast<double>(height) / 256.0);
    return static_cast<std::size_t>(std::max(2L, f));
}

FeaturePyramid::FeaturePyramid(std::uint64_t seed, std::size_t in_channels)
    : seed_(seed), in_channels_(in_channels) {
    if (in_channels == 0) throw ShapeError("pyramid requires at least one input channel");
    NoiseStream init(seed, rng_domain::aux, 0);
    // Unit-normal draws scaled by 1/sqrt(fan_in), so each level keeps unit
    // output variance and the energy weight means the same thing at every
    // resolution and channel count.
    double s1 = 1.0 / std::sqrt(9.0 * static_cast<double>(in_channels));
    bank1_.resize(kBankChannels * in_channels * 9);
    for (double& v : bank1_) v = s1 * init.gaussian();
    double s2 = 1.0 / std::sqrt(9.0 * static_cast<double>(kBankChannels));
    bank2_.resize(kBankChannels * kBankChannels * 9);
    for (double& v : bank2_) v = s2 * init.gaussian();
}

Tensor FeaturePyramid::conv_bank(const Tensor& x, const std::vector<double>& bank,
                                 std::size_t out_c, std::size_t in_c) const {
    std::size_t h = x.height(), w = x.width();
    Tensor out = Tensor::image(out_c, h, w);
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t c = 0; c < in_c; ++c) {
            const double* k = bank.data() + (o * in_c + c) * 9;
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    double acc = 0.0;
                    for (int di = -1; di <= 1; ++di) {
                        long ii = static_cast<long>(i) + di;
                        if (ii < 0 || ii >= static_cast<long>(h)) continue;
                        for (int dj = -1; dj <= 1; ++dj) {
                            long jj = static_cast<long>(j) + dj;
                            if (jj < 0 || jj >= static_cast<long>(w)) continue;
                            acc += k[(di + 1) * 3 + (dj + 1)] *
                                   x.at(c, static_cast<std::size_t>(ii),
                                        static_cast<std::size_t>(jj));
                        }
                    }
                    out.at(o, i, j) += acc;
                }
        }
    return out;
}

Tensor FeaturePyramid::conv_bank_adjoint(const Tensor& u, const std::vector<double>& bank,
                                         std::size_t out_c, std::size_t in_c) const {
    std::size_t h = u.height(), w = u.width();
    Tensor out = Tensor::image(in_c, h, w);
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t c = 0; c < in_c; ++c) {
            const double* k = bank.data() + (o * in_c + c) * 9;
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    double g = u.at(o, i, j);
                    if (g == 0.0) continue;
                    for (int di = -1; di <= 1; ++di) {
                        long ii = static_cast<long>(i) + di;
                        if (ii < 0 || ii >= static_cast<long>(h)) continue;
                        for (int dj = -1; dj <= 1; ++dj) {
                            long jj = static_cast<long>(j) + dj;
                            if (jj < 0 || jj >= static_cast<long>(w)) continue;
                            out.at(c, static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)) +=
                                k[(di + 1) * 3 + (dj + 1)] * g;
                        }
                    }
                }
        }
    return out;
}

namespace {

Tensor avg_pool2(const Tensor& x) {
    std::size_t c = x.channels(), h = x.height(), w = x.width();
    Tensor out = Tensor::image(c, h / 2, w / 2);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t i = 0; i < h / 2; ++i)
            for (std::size_t j = 0; j < w / 2; ++j)
                out.at(k, i, j) = 0.25 * (x.at(k, 2 * i, 2 * j) + x.at(k, 2 * i, 2 * j + 1) +
                                          x.at(k, 2 * i + 1, 2 * j) + x.at(k, 2 * i + 1, 2 * j + 1));
    return out;
}

Tensor avg_pool2_adjoint(const Tensor& u) {
    std::size_t c = u.channels(), h = u.height(), w = u.width();
    Tensor out = Tensor::image(c, h * 2, w * 2);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                double g = 0.25 * u.at(k, i, j);
                out.at(k, 2 * i, 2 * j) = g;
                out.at(k, 2 * i, 2 * j + 1) = g;
                out.at(k, 2 * i + 1, 2 * j) = g;
                out.at(k, 2 * i + 1, 2 * j + 1) = g;
            }
    return out;
}

}  // namespace

std::vector<Tensor> FeaturePyramid::features(const Tensor& img) const {
    if (img.channels() != in_channels_)
        throw ShapeError("image channels do not match pyramid configuration");
    std::size_t div = 1u << kLevels;
    if (img.height() % div != 0 || img.width() % div != 0)
        throw ShapeError("image dims must be divisible by 2^levels");
    std::vector<Tensor> out;
    Tensor l1 = avg_pool2(conv_bank(img, bank1_, kBankChannels, in_channels_));
    Tensor l2 = avg_pool2(conv_bank(l1, bank2_, kBankChannels, kBankChannels));
    out.push_back(std::move(l1));
    out.push_back(std::move(l2));
    return out;
}

Tensor FeaturePyramid::level_adjoint(std::size_t level, const Tensor& u, std::size_t img_h,
                                     std::size_t img_w) const {
    if (level == 0 || level > kLevels) throw DomainError("pyramid level must be 1 or 2");
    Tensor g = u;
    if (level == 2) {
        g = avg_pool2_adjoint(g);
        g = conv_bank_adjoint(g, bank2_, kBankChannels, kBankChannels);
    }
    g = avg_pool2_adjoint(g);
    g = conv_bank_adjoint(g, bank1_, kBankChannels, in_channels_);
    if (g.height() != img_h || g.width() != img_w)
        throw ShapeError("adjoint output does not match requested image dims");
    return g;
}

double shape_similarity(const EdgeExtractor& ext, const Tensor& y, const Tensor& sketch_target,
                        Similarity sim) {
    Tensor s = ext.sketch(y);
    s.check_same(sketch_target);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double r = s[i] - sketch_target[i];
        acc += sim == Similarity::l2 ? r * r : std::abs(r);
    }
    return acc;
}

Tensor shape_similarity_grad(const EdgeExtractor& ext, const Tensor& y,
                             const Tensor& sketch_target, Similarity sim) {
    Tensor s = ext.sketch(y);
    s.check_same(sketch_target);
    Tensor upstream(s.shape());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double r = s[i] - sketch_target[i];
        upstream[i] = sim == Similarity::l2 ? 2.0 * r : (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
    }
    return ext.sketch_vjp(y, upstream);
}

std::pair<double, double> appearance_similarity_parts(const LowPass& lp, const FeaturePyramid& fp,
                                                      const Tensor& y, const Tensor& exemplar_t) {
    y.check_same(exemplar_t);
    Tensor diff = y - exemplar_t;
    double pixel = squared_norm(lp.apply(diff));
    double feat = 0.0;
    for (const Tensor& f : fp.features(diff)) feat += squared_norm(f);
    return {pixel, feat};
}

double appearance_similarity(const LowPass& lp, const FeaturePyramid& fp, const Tensor& y,
                             const Tensor& exemplar_t) {
    auto [pixel, feat] = appearance_similarity_parts(lp, fp, y, exemplar_t);
    return pixel + feat;
}

Tensor appearance_similarity_grad(const LowPass& lp, const FeaturePyramid& fp, const Tensor& y,
                                  const Tensor& exemplar_t) {
    y.check_same(exemplar_t);
    Tensor diff = y - exemplar_t;
    // 2 Omega(diff) by self-adjoint idempotence, plus 2 Psi_l^T Psi_l(diff).
    Tensor grad = lp.apply(diff);
    grad *= 2.0;
    std::vector<Tensor> feats = fp.features(diff);
    for (std::size_t l = 0; l < feats.size(); ++l) {
        feats[l] *= 2.0;
        grad += fp.level_adjoint(l + 1, feats[l], y.height(), y.width());
    }
    return grad;
}

Tensor shape_energy_grad(const EdgeExtractor& ext, const EnergyWeights& w,
                         const SdeSchedule& sched, const Tensor& y, const Tensor& sketch0,
                         double t, const Tensor& noise, Similarity sim) {
    if (w.lambda_g == 0.0) return Tensor(y.shape());
    Tensor sketch_t = sched.perturb(sketch0, t, noise);
    Tensor g = shape_similarity_grad(ext, y, sketch_t, sim);
    g *= w.lambda_g;
    return g;
}

Tensor appearance_energy_grad(const LowPass& lp, const FeaturePyramid& fp, const EnergyWeights& w,
                              const SdeSchedule& sched, const Tensor& y, const Tensor& exemplar0,
                              double t, const Tensor& noise) {
    if (w.lambda_a == 0.0) return Tensor(y.shape());
    Tensor ex_t = sched.perturb(exemplar0, t, noise);
    Tensor g = appearance_similarity_grad(lp, fp, y, ex_t);
    g *= w.lambda_a;
    return g;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& y,
                            double step, const std::vector<std::size_t>& coords) {
    if (!(step > 0.0)) throw DomainError("finite difference step must be positive");
    Tensor grad(y.shape());
    Tensor probe = y;
    auto central = [&](std::size_t i) {
        double saved = probe[i];
        probe[i] = saved + step;
        double fp = f(probe);
        probe[i] = saved - step;
        double fm = f(probe);
        probe[i] = saved;
        return (fp - fm) / (2.0 * step);
    };
    if (coords.empty()) {
        for (std::size_t i = 0; i < y.size(); ++i) grad[i] = central(i);
    } else {
        for (std::size_t i : coords) grad[i] = central(i);
    }
    return grad;
}

}  // namespace inv2inv
