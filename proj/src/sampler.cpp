#include "inv2inv/sampler.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "inv2inv/rng.hpp"

namespace inv2inv {

namespace {

namespace ss = sampling_stream;

struct StepGuidance {
    Tensor grad;
    std::optional<double> shape_sim;
    std::optional<double> appearance_sim;
};

using GuidanceFn = std::function<StepGuidance(const Tensor& y, double s)>;

struct PassPlan {
    double start_time;  // M
    int steps;          // N
    int repeats;        // K
    int stage_id;
    std::uint64_t seed;
};

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Tensor reverse_pass(const SdeSchedule& sched, const ScoreModel& score, const Tensor& start,
                    const PassPlan& plan, const GuidanceFn& guidance,
                    std::vector<TraceRow>* trace) {
    NoiseStream init(plan.seed, rng_domain::sampling,
                     ss::id(plan.stage_id, ss::start_point));
    NoiseStream traj(plan.seed, rng_domain::sampling,
                     ss::id(plan.stage_id, ss::trajectory));
    NoiseStream renoise(plan.seed, rng_domain::sampling,
                        ss::id(plan.stage_id, ss::repeat_renoise));

    double h = plan.start_time / static_cast<double>(plan.steps);
    Tensor y = sched.perturb(start, plan.start_time, init.gaussian_like(start));
    Tensor zero_guidance(start.shape());
    Tensor zero_z(start.shape());

    for (int i = plan.steps; i >= 1; --i) {
        double s = static_cast<double>(i) * h;
        for (int r = 1; r <= plan.repeats; ++r) {
            StepGuidance g;
            if (guidance)
                g = guidance(y, s);
            const Tensor& gtensor = guidance ? g.grad : zero_guidance;
            if (trace && r == 1)
                trace->push_back({plan.stage_id, i, s, g.shape_sim, g.appearance_sim});

            bool last_update = (i == 1 && r == plan.repeats);
            Tensor z = last_update ? zero_z : traj.gaussian_like(y);
            y = reverse_step(sched, score, y, s, h, gtensor, z);
            if (!y.all_finite())
                throw SamplingError("non-finite sample value", plan.stage_id, i);

            if (r < plan.repeats) {
                // back up from s - h to s through the forward bridge
                auto [ratio, var] = sched.forward_bridge(s - h, s);
                y *= ratio;
                y.axpy(std::sqrt(var), renoise.gaussian_like(y));
            }
        }
    }
    return y;
}

Tensor sketch_as_photo(const Tensor& sketch, std::size_t channels) {
    if (sketch.channels() == channels) return sketch;
    if (sketch.channels() != 1)
        throw ShapeError("sketch must be single-channel or already photo-shaped");
    return broadcast_channels(sketch, channels);
}

}  // namespace

void SamplerConfig::validate() const {
    if (!(m_frac > 0.0 && m_frac <= 1.0)) throw ConfigError("m_frac must be in (0, 1]");
    if (n_steps < 1) throw ConfigError("step count must be >= 1");
    if (k_repeats < 1) throw ConfigError("repeat count must be >= 1");
    if (!(mixup_ratio >= 0.0 && mixup_ratio <= 1.0))
        throw ConfigError("mixup ratio must be in [0, 1]");
    for (const StageOverride* o : {&stage1, &stage2}) {
        if (o->m_frac && !(*o->m_frac > 0.0 && *o->m_frac <= 1.0))
            throw ConfigError("stage m_frac override must be in (0, 1]");
        if (o->steps && *o->steps < 1) throw ConfigError("stage steps override must be >= 1");
    }
}

std::pair<double, int> SamplerConfig::stage_plan(int stage, double horizon) const {
    const StageOverride& o = stage == 0 ? stage1 : stage2;
    double mf = o.m_frac.value_or(m_frac);
    int n = o.steps.value_or(n_steps);
    return {mf * horizon, n};
}

Tensor reverse_step(const SdeSchedule& sched, const ScoreModel& score, const Tensor& y, double s,
                    double h, const Tensor& guidance, const Tensor& z) {
    if (s - h < -1e-9 * sched.horizon())
        throw DomainError("reverse step would pass below t = 0");
    y.check_same(guidance);
    y.check_same(z);
    double g = sched.diffusion(s);
    double g2 = g * g;
    double gsqh = g * std::sqrt(h);
    double half_beta = 0.5 * sched.beta(s);
    Tensor sc = score.score(y, s);
    Tensor out(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double d = half_beta * y[i] + g2 * sc[i] - guidance[i];  // -f + g^2 score - guidance
        out[i] = y[i] + d * h + gsqh * z[i];
    }
    return out;
}

Tensor unguided_partial_inversion(const SdeSchedule& sched, const ScoreModel& score,
                                  const Tensor& input, int stage_id, bool clamp_final,
                                  const SamplerConfig& cfg) {
    cfg.validate();
    auto [m, n] = cfg.stage_plan(stage_id, sched.horizon());
    PassPlan plan{m, n, cfg.k_repeats, stage_id, cfg.seed};
    Tensor y = reverse_pass(sched, score, input, plan, nullptr, nullptr);
    if (clamp_final) y.clamp_(-1.0, 1.0);
    return y;
}

Tensor shape_enhancing_inversion(const SdeSchedule& sched, const Tensor& sketch,
                                 const ScoreModel& score, const EnergySuite& suite,
                                 const SamplerConfig& cfg, std::vector<TraceRow>* trace) {
    cfg.validate();
    Tensor start = sketch_as_photo(sketch, suite.pyramid.in_channels());
    auto [m, n] = cfg.stage_plan(0, sched.horizon());
    PassPlan plan{m, n, cfg.k_repeats, 0, cfg.seed};

    NoiseStream sketch_noise(cfg.seed, rng_domain::sampling, ss::id(0, ss::sketch_perturb));
    bool want_energy = cfg.weights.lambda_g > 0.0 || trace != nullptr;

    GuidanceFn fn = [&](const Tensor& y, double s) {
        StepGuidance out{Tensor(y.shape()), {}, {}};
        if (!want_energy) return out;
        Tensor sk_t = sched.perturb(sketch, s, sketch_noise.gaussian_like(sketch));
        if (trace) out.shape_sim = shape_similarity(suite.edge, y, sk_t, cfg.similarity);
        if (cfg.weights.lambda_g > 0.0) {
            Tensor g = shape_similarity_grad(suite.edge, y, sk_t, cfg.similarity);
            g *= cfg.weights.lambda_g;
            out.grad = std::move(g);
        }
        return out;
    };
    return reverse_pass(sched, score, start, plan, fn, trace);
}

Tensor full_control_inversion(const SdeSchedule& sched, const Tensor& input_image,
                              const Tensor& sketch, const Tensor& exemplar,
                              const ScoreModel& score, const EnergySuite& suite,
                              const SamplerConfig& cfg, std::vector<TraceRow>* trace) {
    cfg.validate();
    input_image.check_same(exemplar);
    auto [m, n] = cfg.stage_plan(1, sched.horizon());
    PassPlan plan{m, n, cfg.k_repeats, 1, cfg.seed};

    NoiseStream sketch_noise(cfg.seed, rng_domain::sampling, ss::id(1, ss::sketch_perturb));
    NoiseStream exemplar_noise(cfg.seed, rng_domain::sampling, ss::id(1, ss::exemplar_perturb));
    double appearance_scale = cfg.sign == SignConvention::minimize_both ? 1.0 : -1.0;

    GuidanceFn fn = [&](const Tensor& y, double s) {
        StepGuidance out{Tensor(y.shape()), {}, {}};
        if (cfg.weights.lambda_g > 0.0 || trace) {
            Tensor sk_t = sched.perturb(sketch, s, sketch_noise.gaussian_like(sketch));
            if (trace) out.shape_sim = shape_similarity(suite.edge, y, sk_t, cfg.similarity);
            if (cfg.weights.lambda_g > 0.0) {
                Tensor g = shape_similarity_grad(suite.edge, y, sk_t, cfg.similarity);
                out.grad.axpy(cfg.weights.lambda_g, g);
            }
        }
        if (cfg.weights.lambda_a > 0.0 || trace) {
            Tensor ex_t = sched.perturb(exemplar, s, exemplar_noise.gaussian_like(exemplar));
            if (trace) out.appearance_sim = appearance_similarity(suite.lowpass, suite.pyramid, y, ex_t);
            if (cfg.weights.lambda_a > 0.0) {
                Tensor g = appearance_similarity_grad(suite.lowpass, suite.pyramid, y, ex_t);
                out.grad.axpy(appearance_scale * cfg.weights.lambda_a, g);
            }
        }
        return out;
    };
    Tensor y = reverse_pass(sched, score, input_image, plan, fn, trace);
    y.clamp_(-1.0, 1.0);
    return y;
}

RunRecord inversion_by_inversion(const SdeSchedule& sched, const Tensor& sketch,
                                 const Tensor& exemplar, const ScoreModel& score,
                                 const EnergySuite& suite, const SamplerConfig& cfg,
                                 bool record_trace) {
    RunRecord rec;
    std::vector<TraceRow>* sink = record_trace ? &rec.trace : nullptr;
    double t0 = now_ms();
    rec.stage1_output = shape_enhancing_inversion(sched, sketch, score, suite, cfg, sink);
    double t1 = now_ms();
    rec.final_output =
        full_control_inversion(sched, rec.stage1_output, sketch, exemplar, score, suite, cfg, sink);
    rec.stage1_ms = t1 - t0;
    rec.stage2_ms = now_ms() - t1;
    return rec;
}

RunRecord run_variant(const SdeSchedule& sched, const Tensor& sketch, const Tensor& exemplar,
                      const ScoreModel& score, const EnergySuite& suite, const SamplerConfig& cfg,
                      bool record_trace) {
    cfg.validate();
    switch (cfg.mode) {
        case StageMode::two_stage:
            return inversion_by_inversion(sched, sketch, exemplar, score, suite, cfg,
                                          record_trace);
        case StageMode::variant1_direct_full_control: {
            RunRecord rec;
            std::vector<TraceRow>* sink = record_trace ? &rec.trace : nullptr;
            Tensor start = sketch_as_photo(sketch, suite.pyramid.in_channels());
            double t0 = now_ms();
            rec.final_output =
                full_control_inversion(sched, start, sketch, exemplar, score, suite, cfg, sink);
            rec.stage2_ms = now_ms() - t0;
            return rec;
        }
        case StageMode::variant2_mixup: {
            RunRecord rec;
            std::vector<TraceRow>* sink = record_trace ? &rec.trace : nullptr;
            Tensor skb = sketch_as_photo(sketch, suite.pyramid.in_channels());
            skb.check_same(exemplar);
            Tensor mix(skb.shape());
            for (std::size_t i = 0; i < mix.size(); ++i)
                mix[i] = cfg.mixup_ratio * skb[i] + (1.0 - cfg.mixup_ratio) * exemplar[i];
            double t0 = now_ms();
            rec.final_output =
                full_control_inversion(sched, mix, sketch, exemplar, score, suite, cfg, sink);
            rec.stage2_ms = now_ms() - t0;
            return rec;
        }
        case StageMode::unguided_sdedit: {
            RunRecord rec;
            Tensor start = sketch_as_photo(sketch, suite.pyramid.in_channels());
            double t0 = now_ms();
            rec.final_output = unguided_partial_inversion(sched, score, start, 0, true, cfg);
            rec.stage1_ms = now_ms() - t0;
            return rec;
        }
    }
    throw ConfigError("unknown sampler mode");
}

}  // namespace inv2inv
