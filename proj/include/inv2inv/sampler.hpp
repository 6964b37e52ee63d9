#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "inv2inv/energy.hpp"
#include "inv2inv/score_model.hpp"

namespace inv2inv {

enum class StageMode { two_stage, variant1_direct_full_control, variant2_mixup, unguided_sdedit };

// How the two energy gradients combine in the stage-2 drift. The default
// subtracts both (both energies are descended); the literal convention flips
// the appearance term's sign and exists so that reading can be exercised.
enum class SignConvention { minimize_both, literal_mixed };

struct StageOverride {
    std::optional<double> m_frac;
    std::optional<int> steps;
};

struct SamplerConfig {
    double m_frac = 0.4;  // start time M as a fraction of the horizon T
    int n_steps = 200;
    int k_repeats = 1;
    EnergyWeights weights;
    std::uint64_t seed = 0;
    StageMode mode = StageMode::two_stage;
    double mixup_ratio = 0.7;  // variant2: mix = r * sketch + (1 - r) * exemplar
    Similarity similarity = Similarity::l2;
    SignConvention sign = SignConvention::minimize_both;
    StageOverride stage1;
    StageOverride stage2;

    void validate() const;
    // Effective (M, N) for a stage after overrides, with M in absolute time.
    std::pair<double, int> stage_plan(int stage, double horizon) const;
};

// Extractors shared by both stages. Immutable after construction; the
// pyramid's channel count fixes the photo-domain channel count for the run.
struct EnergySuite {
    EdgeExtractor edge;
    LowPass lowpass;
    FeaturePyramid pyramid;

    EnergySuite(EdgeExtractor e, LowPass l, FeaturePyramid p)
        : edge(e), lowpass(l), pyramid(std::move(p)) {}
};

struct TraceRow {
    int stage;
    int step;  // loop index i, counting down N..1
    double time;
    std::optional<double> shape_sim;
    std::optional<double> appearance_sim;
};

struct RunRecord {
    Tensor stage1_output;  // empty for single-stage modes
    Tensor final_output;   // clamped to [-1, 1]
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    std::vector<TraceRow> trace;
};

// One Euler-Maruyama step of the guided reverse SDE from time s to s - h:
//   y_next = y + [-f(y, s) + g(s)^2 score(y, s) - guidance] h + g(s) sqrt(h) z
// `guidance` is the weighted energy gradient to subtract from the drift;
// pass a zero tensor for unguided stepping (the arithmetic is bit-identical).
Tensor reverse_step(const SdeSchedule& sched, const ScoreModel& score, const Tensor& y, double s,
                    double h, const Tensor& guidance, const Tensor& z);

// Unguided partial inversion: perturb the input to time M, then run N plain
// reverse steps. stage_id selects the noise streams so that composed passes
// line up bit-exactly with the guided pipeline at zero weights.
Tensor unguided_partial_inversion(const SdeSchedule& sched, const ScoreModel& score,
                                  const Tensor& input, int stage_id, bool clamp_final,
                                  const SamplerConfig& cfg);

// Stage 1: noise the sketch to M and denoise with shape guidance only.
// Returns the uncolored photo at t = 0, unclamped (stage 2 re-noises it).
Tensor shape_enhancing_inversion(const SdeSchedule& sched, const Tensor& sketch,
                                 const ScoreModel& score, const EnergySuite& suite,
                                 const SamplerConfig& cfg,
                                 std::vector<TraceRow>* trace = nullptr);

// Stage 2: noise the input image to M and denoise with shape plus appearance
// guidance, drawing a fresh perturbed exemplar every step. Returns the final
// sample clamped to [-1, 1].
Tensor full_control_inversion(const SdeSchedule& sched, const Tensor& input_image,
                              const Tensor& sketch, const Tensor& exemplar,
                              const ScoreModel& score, const EnergySuite& suite,
                              const SamplerConfig& cfg, std::vector<TraceRow>* trace = nullptr);

// The full two-stage pipeline.
RunRecord inversion_by_inversion(const SdeSchedule& sched, const Tensor& sketch,
                                 const Tensor& exemplar, const ScoreModel& score,
                                 const EnergySuite& suite, const SamplerConfig& cfg,
                                 bool record_trace = false);

// Dispatches on cfg.mode: the two-stage pipeline, the single-stage variants,
// or the unguided baseline.
RunRecord run_variant(const SdeSchedule& sched, const Tensor& sketch, const Tensor& exemplar,
                      const ScoreModel& score, const EnergySuite& suite, const SamplerConfig& cfg,
                      bool record_trace = false);

}  // namespace inv2inv
