#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "inv2inv/sampler.hpp"
#include "inv2inv/sde.hpp"

namespace inv2inv {

// Full run configuration, parsed from a line-based `key = value` file.
// Blank lines and `#` comments are ignored; unknown keys are errors; missing
// keys take the documented defaults below.
struct Config {
    double schedule_beta_min = 0.1;
    double schedule_beta_max = 20.0;
    double schedule_T = 1.0;

    double sampler_m_frac = 0.4;
    int sampler_steps = 200;
    int sampler_k = 1;
    std::string sampler_mode = "two_stage";  // two_stage | variant1 | variant2 | sdedit
    double sampler_mixup_ratio = 0.7;
    std::optional<double> stage1_m_frac;
    std::optional<int> stage1_steps;
    std::optional<double> stage2_m_frac;
    std::optional<int> stage2_steps;

    double lambda_g = 0.1;
    double lambda_a = 2.0;
    std::string similarity = "l2";                  // l2 | l1
    std::string sign_convention = "minimize_both";  // minimize_both | literal

    std::uint64_t lowpass_factor = 0;  // 0 = scale with image height
    std::uint64_t pyramid_seed = 0;

    std::string score_backend = "gmm";  // gmm | net
    double gmm_bandwidth = 0.1;

    std::string path_dataset;
    std::string path_checkpoint;
    std::string path_sketch;
    std::string path_exemplar;
    std::string path_out;

    std::uint64_t seed = 0;

    static Config parse_string(const std::string& text);
    static Config parse_file(const std::filesystem::path& path);

    // Canonical serialization: fixed key order, every defaulted key present,
    // optional stage overrides only when set. parse(serialize(c)) == c.
    std::string serialize() const;

    void validate() const;
    std::uint64_t hash() const;

    SdeSchedule schedule() const;
    SamplerConfig sampler_config() const;

    bool operator==(const Config&) const = default;
};

StageMode parse_mode(const std::string& s);
std::string mode_name(StageMode m);

}  // namespace inv2inv
