#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "inv2inv/sde.hpp"
#include "inv2inv/tensor.hpp"

namespace inv2inv {

// Architecture descriptor for the trainable score model: an MLP over the
// flattened image concatenated with a sinusoidal time-feature vector, two
// tanh hidden layers, linear output of the input size. The raw network
// predicts the perturbation noise; the score is -output / sigma(t), which
// keeps training targets O(1) instead of O(1/sigma).
struct NetSpec {
    std::vector<std::size_t> input_shape;  // e.g. {3, 16, 16} or {2}
    std::size_t hidden_width = 256;
    std::size_t time_features = 32;  // 16 sin/cos pairs, geometric frequencies 1..1000

    std::size_t input_dim() const {
        std::size_t n = 1;
        for (std::size_t d : input_shape) n *= d;
        return n;
    }
};

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset;
    std::size_t count;
};

class ScoreNet {
public:
    ScoreNet(NetSpec spec, SdeSchedule sched, std::uint64_t init_seed);

    const NetSpec& spec() const { return spec_; }
    const SdeSchedule& schedule() const { return sched_; }
    std::uint64_t init_seed() const { return init_seed_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }

    // Raw noise prediction epsilon_hat(y, t).
    Tensor predict_noise(const Tensor& y, double t) const;

    // Score estimate -epsilon_hat / sigma(t). Domain error at sigma(t) == 0.
    Tensor score(const Tensor& y, double t) const;

private:
    friend std::pair<double, std::vector<double>> detail_batch_loss_grad(
        const ScoreNet&, const SdeSchedule&, const std::vector<Tensor>&,
        const std::vector<double>&, const std::vector<Tensor>&, bool);

    void forward(const std::vector<double>& input, std::vector<double>& h1,
                 std::vector<double>& h2, std::vector<double>& out) const;
    std::vector<double> assemble_input(const Tensor& y, double t) const;

    NetSpec spec_;
    SdeSchedule sched_;
    std::uint64_t init_seed_;
    std::vector<double> params_;
    std::vector<ParamBlock> blocks_;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t iterations = 20000;
    double t_min_frac = 0.01;  // times drawn uniformly on [t_min_frac * T, T]
    std::uint64_t seed = 0;
    std::size_t log_interval = 100;
};

// Mean over the batch of || net.score(alpha y0 + sigma z, t) + z / sigma ||^2.
// Throws DomainError when any t has sigma(t) == 0.
double dsm_loss(const ScoreNet& net, const SdeSchedule& sched,
                const std::vector<Tensor>& batch, const std::vector<double>& t_draws,
                const std::vector<Tensor>& z_draws);

// Loss plus its gradient with respect to every parameter (same order as
// net.params()). Exposed for finite-difference verification.
std::pair<double, std::vector<double>> dsm_loss_grad(const ScoreNet& net,
                                                     const SdeSchedule& sched,
                                                     const std::vector<Tensor>& batch,
                                                     const std::vector<double>& t_draws,
                                                     const std::vector<Tensor>& z_draws);

// sigma^2-weighted form of the same objective: mean over the batch of
// || epsilon_hat - z ||^2. Shares its per-time minimizer with dsm_loss but
// keeps gradients O(1) instead of O(1/sigma^2), so SGD steps are uniformly
// sized across times. This is what training descends.
std::pair<double, std::vector<double>> noise_mse_grad(const ScoreNet& net,
                                                      const SdeSchedule& sched,
                                                      const std::vector<Tensor>& batch,
                                                      const std::vector<double>& t_draws,
                                                      const std::vector<Tensor>& z_draws);

// Plain SGD on the sigma^2-weighted denoising objective. Deterministic given
// cfg.seed: batch indices, time draws and noises come from fixed streams and
// the reduction order never changes. Throws TrainingError naming the
// iteration if the loss stops being finite. When loss_log is given, appends
// one (iteration, training-loss) row per completed log_interval chunk.
ScoreNet train_dsm(ScoreNet net, const SdeSchedule& sched, const std::vector<Tensor>& dataset,
                   const TrainConfig& cfg,
                   std::vector<std::pair<std::size_t, double>>* loss_log = nullptr);

}  // namespace inv2inv
