#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>

#include "inv2inv/config.hpp"
#include "inv2inv/dataset.hpp"
#include "inv2inv/manifest.hpp"
#include "inv2inv/metrics.hpp"
#include "inv2inv/sampler.hpp"

namespace inv2inv {

// Score-net checkpoints: checkpoint.txt (architecture, schedule, seed) plus
// one IVIT tensor per parameter block.
void save_checkpoint(const ScoreNet& net, const std::filesystem::path& dir);
ScoreNet load_checkpoint(const std::filesystem::path& dir);

// Loads .ivit tensors or .pgm/.ppm images by extension.
Tensor load_input_image(const std::filesystem::path& path);

// Builds the configured backend: a kernel-density mixture over the dataset's
// photos, or a trained checkpoint. image_shape is the trajectory shape and
// must agree with the backend.
std::unique_ptr<ScoreModel> build_score_model(const Config& cfg, const SdeSchedule& sched,
                                              const std::vector<std::size_t>& image_shape);

EnergySuite build_energy_suite(const Config& cfg, std::size_t channels, std::size_t height);

std::size_t worker_count();  // INV2INV_THREADS override, else hardware concurrency

struct SampleArgs {
    std::optional<std::filesystem::path> config_path;
    std::filesystem::path sketch;
    std::filesystem::path exemplar;  // optional in sdedit mode
    std::filesystem::path out_dir;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    bool save_stage1 = false;
    bool trace_energy = false;
};

// Runs one sampling job and writes final.ivit/final.ppm (plus stage1.* and
// trace.csv when requested) and manifest.txt into out_dir.
RunManifest cmd_sample(const SampleArgs& args, std::ostream& log);

struct TrainArgs {
    std::filesystem::path dataset_dir;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> config_path;
    TrainConfig train;
};

// Trains a score net on the dataset's photos; writes the checkpoint and
// loss.csv (one row per log interval).
void cmd_train_score(const TrainArgs& args, std::ostream& log);

struct AblateArgs {
    std::optional<std::filesystem::path> config_path;
    std::filesystem::path dataset_dir;
    std::filesystem::path out_dir;
    std::vector<double> lambda_g_grid = {0.0, 0.05, 0.1, 0.5};
    std::vector<double> lambda_a_grid;        // empty -> config value
    std::vector<std::string> modes = {"two_stage"};
    std::size_t seeds = 8;
};

// Runs the grid across a worker pool; writes runs.csv (one row per run, with
// an error column for per-run failures) and aggregate.csv.
void cmd_ablate(const AblateArgs& args, std::ostream& log);

// Prints one line per check; returns true when every check passed.
bool cmd_gradcheck(std::uint64_t seed, std::size_t probes, std::ostream& out);

struct MetricsArgs {
    std::optional<std::filesystem::path> photo;
    std::optional<std::filesystem::path> sketch;
    std::optional<std::filesystem::path> exemplar;
    std::optional<std::filesystem::path> list;  // CSV rows: photo,sketch,exemplar
    std::optional<std::filesystem::path> out_dir;
};

void cmd_metrics(const MetricsArgs& args, std::ostream& out);

void write_metric_report(const MetricReport& report, const std::filesystem::path& dir);

}  // namespace inv2inv
