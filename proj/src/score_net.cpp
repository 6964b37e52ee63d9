#include "inv2inv/score_net.hpp"

#include <cmath>

#include "inv2inv/rng.hpp"

namespace inv2inv {

namespace {

// Stream ids within the training domain.
constexpr std::uint32_t kParamInit = 0;
constexpr std::uint32_t kBatchPick = 1;
constexpr std::uint32_t kTimeDraw = 2;
constexpr std::uint32_t kNoiseDraw = 3;

void time_features(double t, double horizon, std::size_t n, double* out) {
    // 16 geometric frequencies on the normalized time, spanning 1..1000.
    std::size_t pairs = n / 2;
    double tn = t / horizon;
    for (std::size_t j = 0; j < pairs; ++j) {
        double w = std::pow(1000.0, static_cast<double>(j) / static_cast<double>(pairs - 1));
        out[2 * j] = std::sin(w * tn);
        out[2 * j + 1] = std::cos(w * tn);
    }
}

}  // namespace

ScoreNet::ScoreNet(NetSpec spec, SdeSchedule sched, std::uint64_t init_seed)
    : spec_(std::move(spec)), sched_(std::move(sched)), init_seed_(init_seed) {
    if (spec_.input_shape.empty()) throw ShapeError("net input shape must be nonempty");
    if (spec_.time_features < 2 || spec_.time_features % 2 != 0)
        throw DomainError("time feature width must be a positive even number");
    std::size_t d = spec_.input_dim();
    std::size_t h = spec_.hidden_width;
    std::size_t in = d + spec_.time_features;

    auto push = [&](const std::string& name, std::vector<std::size_t> shape) {
        std::size_t count = 1;
        for (std::size_t s : shape) count *= s;
        blocks_.push_back({name, std::move(shape), params_.size(), count});
        params_.resize(params_.size() + count, 0.0);
    };
    push("w1", {h, in});
    push("b1", {h});
    push("w2", {h, h});
    push("b2", {h});
    push("w3", {d, h});
    push("b3", {d});

    NoiseStream init(init_seed_, rng_domain::training, kParamInit);
    auto fill = [&](const ParamBlock& b, double scale) {
        for (std::size_t i = 0; i < b.count; ++i) params_[b.offset + i] = scale * init.gaussian();
    };
    fill(blocks_[0], 1.0 / std::sqrt(static_cast<double>(in)));
    fill(blocks_[2], 1.0 / std::sqrt(static_cast<double>(h)));
    fill(blocks_[4], 1.0 / std::sqrt(static_cast<double>(h)));
    // biases stay zero
}

std::vector<double> ScoreNet::assemble_input(const Tensor& y, double t) const {
    if (y.size() != spec_.input_dim()) throw ShapeError("input does not match net architecture");
    std::vector<double> x(spec_.input_dim() + spec_.time_features);
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i];
    time_features(t, sched_.horizon(), spec_.time_features, x.data() + y.size());
    return x;
}

void ScoreNet::forward(const std::vector<double>& input, std::vector<double>& h1,
                       std::vector<double>& h2, std::vector<double>& out) const {
    std::size_t d = spec_.input_dim();
    std::size_t h = spec_.hidden_width;
    std::size_t in = d + spec_.time_features;
    const double* w1 = params_.data() + blocks_[0].offset;
    const double* b1 = params_.data() + blocks_[1].offset;
    const double* w2 = params_.data() + blocks_[2].offset;
    const double* b2 = params_.data() + blocks_[3].offset;
    const double* w3 = params_.data() + blocks_[4].offset;
    const double* b3 = params_.data() + blocks_[5].offset;

    h1.assign(h, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        const double* row = w1 + r * in;
        double acc = b1[r];
        for (std::size_t c = 0; c < in; ++c) acc += row[c] * input[c];
        h1[r] = std::tanh(acc);
    }
    h2.assign(h, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        const double* row = w2 + r * h;
        double acc = b2[r];
        for (std::size_t c = 0; c < h; ++c) acc += row[c] * h1[c];
        h2[r] = std::tanh(acc);
    }
    out.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        const double* row = w3 + r * h;
        double acc = b3[r];
        for (std::size_t c = 0; c < h; ++c) acc += row[c] * h2[c];
        out[r] = acc;
    }
}

Tensor ScoreNet::predict_noise(const Tensor& y, double t) const {
    std::vector<double> x = assemble_input(y, t);
    std::vector<double> h1, h2, out;
    forward(x, h1, h2, out);
    Tensor e(y.shape());
    for (std::size_t i = 0; i < out.size(); ++i) e[i] = out[i];
    return e;
}

Tensor ScoreNet::score(const Tensor& y, double t) const {
    double sigma = sched_.sigma(t);
    if (sigma == 0.0) throw DomainError("score undefined at sigma(t) == 0");
    Tensor e = predict_noise(y, t);
    e *= -1.0 / sigma;
    return e;
}

double dsm_loss(const ScoreNet& net, const SdeSchedule& sched, const std::vector<Tensor>& batch,
                const std::vector<double>& t_draws, const std::vector<Tensor>& z_draws) {
    if (batch.empty()) throw DomainError("dsm loss requires a nonempty batch");
    if (batch.size() != t_draws.size() || batch.size() != z_draws.size())
        throw ShapeError("batch, time draws and noise draws must align");
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double sigma = sched.sigma(t_draws[i]);
        if (sigma == 0.0) throw DomainError("dsm loss undefined at sigma(t) == 0");
        Tensor y = sched.perturb(batch[i], t_draws[i], z_draws[i]);
        Tensor s = net.score(y, t_draws[i]);
        double acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            double r = s[j] + z_draws[i][j] / sigma;
            acc += r * r;
        }
        total += acc;
    }
    return total / static_cast<double>(batch.size());
}

// Shared backward pass. weighted == true gives the score-space loss
// mean ||(e - z)/sigma||^2 (dsm_loss); false gives mean ||e - z||^2.
std::pair<double, std::vector<double>> detail_batch_loss_grad(
    const ScoreNet& net, const SdeSchedule& sched, const std::vector<Tensor>& batch,
    const std::vector<double>& t_draws, const std::vector<Tensor>& z_draws, bool weighted);

std::pair<double, std::vector<double>> dsm_loss_grad(const ScoreNet& net,
                                                     const SdeSchedule& sched,
                                                     const std::vector<Tensor>& batch,
                                                     const std::vector<double>& t_draws,
                                                     const std::vector<Tensor>& z_draws) {
    return detail_batch_loss_grad(net, sched, batch, t_draws, z_draws, true);
}

std::pair<double, std::vector<double>> noise_mse_grad(const ScoreNet& net,
                                                      const SdeSchedule& sched,
                                                      const std::vector<Tensor>& batch,
                                                      const std::vector<double>& t_draws,
                                                      const std::vector<Tensor>& z_draws) {
    return detail_batch_loss_grad(net, sched, batch, t_draws, z_draws, false);
}

std::pair<double, std::vector<double>> detail_batch_loss_grad(
    const ScoreNet& net, const SdeSchedule& sched, const std::vector<Tensor>& batch,
    const std::vector<double>& t_draws, const std::vector<Tensor>& z_draws, bool weighted) {
    if (batch.empty()) throw DomainError("dsm loss requires a nonempty batch");
    if (batch.size() != t_draws.size() || batch.size() != z_draws.size())
        throw ShapeError("batch, time draws and noise draws must align");

    std::size_t d = net.spec_.input_dim();
    std::size_t h = net.spec_.hidden_width;
    std::size_t in = d + net.spec_.time_features;
    const auto& blocks = net.blocks_;
    const double* w2 = net.params_.data() + blocks[2].offset;
    const double* w3 = net.params_.data() + blocks[4].offset;

    std::vector<double> grad(net.params_.size(), 0.0);
    double* gw1 = grad.data() + blocks[0].offset;
    double* gb1 = grad.data() + blocks[1].offset;
    double* gw2 = grad.data() + blocks[2].offset;
    double* gb2 = grad.data() + blocks[3].offset;
    double* gw3 = grad.data() + blocks[4].offset;
    double* gb3 = grad.data() + blocks[5].offset;

    std::vector<double> h1, h2, out, gout(d), gh2(h), gh1(h), a2(h), a1(h);
    double invB = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;

    for (std::size_t n = 0; n < batch.size(); ++n) {
        double sigma = sched.sigma(t_draws[n]);
        if (sigma == 0.0) throw DomainError("dsm loss undefined at sigma(t) == 0");
        Tensor y = sched.perturb(batch[n], t_draws[n], z_draws[n]);
        std::vector<double> x = net.assemble_input(y, t_draws[n]);
        net.forward(x, h1, h2, out);

        // loss_n = || out - z ||^2, divided by sigma^2 in the weighted form
        double inv_var = weighted ? 1.0 / (sigma * sigma) : 1.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double r = out[j] - z_draws[n][j];
            acc += r * r;
            gout[j] = 2.0 * r * inv_var * invB;
        }
        total += acc * inv_var;

        // output layer
        for (std::size_t r = 0; r < d; ++r) {
            double g = gout[r];
            gb3[r] += g;
            double* row = gw3 + r * h;
            for (std::size_t c = 0; c < h; ++c) row[c] += g * h2[c];
        }
        std::fill(gh2.begin(), gh2.end(), 0.0);
        for (std::size_t r = 0; r < d; ++r) {
            double g = gout[r];
            const double* row = w3 + r * h;
            for (std::size_t c = 0; c < h; ++c) gh2[c] += row[c] * g;
        }

        // second hidden layer
        for (std::size_t r = 0; r < h; ++r) a2[r] = gh2[r] * (1.0 - h2[r] * h2[r]);
        for (std::size_t r = 0; r < h; ++r) {
            double g = a2[r];
            gb2[r] += g;
            double* row = gw2 + r * h;
            for (std::size_t c = 0; c < h; ++c) row[c] += g * h1[c];
        }
        std::fill(gh1.begin(), gh1.end(), 0.0);
        for (std::size_t r = 0; r < h; ++r) {
            double g = a2[r];
            const double* row = w2 + r * h;
            for (std::size_t c = 0; c < h; ++c) gh1[c] += row[c] * g;
        }

        // first hidden layer
        for (std::size_t r = 0; r < h; ++r) a1[r] = gh1[r] * (1.0 - h1[r] * h1[r]);
        for (std::size_t r = 0; r < h; ++r) {
            double g = a1[r];
            gb1[r] += g;
            double* row = gw1 + r * in;
            for (std::size_t c = 0; c < in; ++c) row[c] += g * x[c];
        }
    }
    return {total * invB, std::move(grad)};
}

ScoreNet train_dsm(ScoreNet net, const SdeSchedule& sched, const std::vector<Tensor>& dataset,
                   const TrainConfig& cfg,
                   std::vector<std::pair<std::size_t, double>>* loss_log) {
    if (dataset.empty()) throw DomainError("training requires a nonempty dataset");
    if (!(cfg.t_min_frac > 0.0)) throw DomainError("t_min must be positive");
    NoiseStream pick(cfg.seed, rng_domain::training, kBatchPick);
    NoiseStream times(cfg.seed, rng_domain::training, kTimeDraw);
    NoiseStream noise(cfg.seed, rng_domain::training, kNoiseDraw);

    double t_lo = cfg.t_min_frac * sched.horizon();
    double t_hi = sched.horizon();

    std::vector<Tensor> batch(cfg.batch_size, Tensor(dataset[0].shape()));
    std::vector<double> ts(cfg.batch_size);
    std::vector<Tensor> zs;
    zs.reserve(cfg.batch_size);

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        zs.clear();
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            batch[b] = dataset[pick.uniform_index(dataset.size())];
            ts[b] = t_lo + (t_hi - t_lo) * times.uniform();
            zs.push_back(noise.gaussian_like(batch[b]));
        }
        auto [loss, grad] = noise_mse_grad(net, sched, batch, ts, zs);
        if (!std::isfinite(loss))
            throw TrainingError("training loss diverged at iteration " + std::to_string(iter),
                                iter);
        auto& p = net.params();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * grad[i];
        if (loss_log && cfg.log_interval > 0 && (iter + 1) % cfg.log_interval == 0)
            loss_log->emplace_back(iter + 1, loss);
    }
    return net;
}

}  // namespace inv2inv
