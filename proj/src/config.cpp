#include "inv2inv/config.hpp"

#include <fstream>
#include <sstream>

#include "inv2inv/csv.hpp"
#include "inv2inv/io.hpp"

namespace inv2inv {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_num(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        std::int64_t i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return i;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        std::uint64_t i = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return i;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) +
                         ": expected an unsigned integer, got '" + v + "'");
    }
}

}  // namespace

StageMode parse_mode(const std::string& s) {
    if (s == "two_stage") return StageMode::two_stage;
    if (s == "variant1") return StageMode::variant1_direct_full_control;
    if (s == "variant2") return StageMode::variant2_mixup;
    if (s == "sdedit") return StageMode::unguided_sdedit;
    throw ConfigError("unknown sampler mode '" + s + "'");
}

std::string mode_name(StageMode m) {
    switch (m) {
        case StageMode::two_stage: return "two_stage";
        case StageMode::variant1_direct_full_control: return "variant1";
        case StageMode::variant2_mixup: return "variant2";
        case StageMode::unguided_sdedit: return "sdedit";
    }
    return "two_stage";
}

Config Config::parse_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(line) + ": empty key");

        if (key == "schedule.beta_min") c.schedule_beta_min = parse_num(val, line);
        else if (key == "schedule.beta_max") c.schedule_beta_max = parse_num(val, line);
        else if (key == "schedule.T") c.schedule_T = parse_num(val, line);
        else if (key == "sampler.m_frac") c.sampler_m_frac = parse_num(val, line);
        else if (key == "sampler.steps") c.sampler_steps = static_cast<int>(parse_int(val, line));
        else if (key == "sampler.k") c.sampler_k = static_cast<int>(parse_int(val, line));
        else if (key == "sampler.mode") c.sampler_mode = val;
        else if (key == "sampler.mixup_ratio") c.sampler_mixup_ratio = parse_num(val, line);
        else if (key == "sampler.stage1_m_frac") c.stage1_m_frac = parse_num(val, line);
        else if (key == "sampler.stage1_steps") c.stage1_steps = static_cast<int>(parse_int(val, line));
        else if (key == "sampler.stage2_m_frac") c.stage2_m_frac = parse_num(val, line);
        else if (key == "sampler.stage2_steps") c.stage2_steps = static_cast<int>(parse_int(val, line));
        else if (key == "energy.lambda_g") c.lambda_g = parse_num(val, line);
        else if (key == "energy.lambda_a") c.lambda_a = parse_num(val, line);
        else if (key == "energy.similarity") c.similarity = val;
        else if (key == "energy.sign_convention") c.sign_convention = val;
        else if (key == "lowpass.factor") c.lowpass_factor = parse_u64(val, line);
        else if (key == "pyramid.seed") c.pyramid_seed = parse_u64(val, line);
        else if (key == "score.backend") c.score_backend = val;
        else if (key == "score.gmm_bandwidth") c.gmm_bandwidth = parse_num(val, line);
        else if (key == "paths.dataset") c.path_dataset = val;
        else if (key == "paths.checkpoint") c.path_checkpoint = val;
        else if (key == "paths.sketch") c.path_sketch = val;
        else if (key == "paths.exemplar") c.path_exemplar = val;
        else if (key == "paths.out") c.path_out = val;
        else if (key == "seed") c.seed = parse_u64(val, line);
        else
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::string Config::serialize() const {
    std::ostringstream o;
    o << "schedule.beta_min = " << format_double(schedule_beta_min) << "\n";
    o << "schedule.beta_max = " << format_double(schedule_beta_max) << "\n";
    o << "schedule.T = " << format_double(schedule_T) << "\n";
    o << "sampler.m_frac = " << format_double(sampler_m_frac) << "\n";
    o << "sampler.steps = " << sampler_steps << "\n";
    o << "sampler.k = " << sampler_k << "\n";
    o << "sampler.mode = " << sampler_mode << "\n";
    o << "sampler.mixup_ratio = " << format_double(sampler_mixup_ratio) << "\n";
    if (stage1_m_frac) o << "sampler.stage1_m_frac = " << format_double(*stage1_m_frac) << "\n";
    if (stage1_steps) o << "sampler.stage1_steps = " << *stage1_steps << "\n";
    if (stage2_m_frac) o << "sampler.stage2_m_frac = " << format_double(*stage2_m_frac) << "\n";
    if (stage2_steps) o << "sampler.stage2_steps = " << *stage2_steps << "\n";
    o << "energy.lambda_g = " << format_double(lambda_g) << "\n";
    o << "energy.lambda_a = " << format_double(lambda_a) << "\n";
    o << "energy.similarity = " << similarity << "\n";
    o << "energy.sign_convention = " << sign_convention << "\n";
    o << "lowpass.factor = " << lowpass_factor << "\n";
    o << "pyramid.seed = " << pyramid_seed << "\n";
    o << "score.backend = " << score_backend << "\n";
    o << "score.gmm_bandwidth = " << format_double(gmm_bandwidth) << "\n";
    o << "paths.dataset = " << path_dataset << "\n";
    o << "paths.checkpoint = " << path_checkpoint << "\n";
    o << "paths.sketch = " << path_sketch << "\n";
    o << "paths.exemplar = " << path_exemplar << "\n";
    o << "paths.out = " << path_out << "\n";
    o << "seed = " << seed << "\n";
    return o.str();
}

void Config::validate() const {
    if (!(schedule_beta_min > 0.0) || !(schedule_beta_min < schedule_beta_max))
        throw ConfigError("schedule requires 0 < beta_min < beta_max");
    if (!(schedule_T > 0.0)) throw ConfigError("schedule.T must be positive");
    if (!(sampler_m_frac > 0.0 && sampler_m_frac <= 1.0))
        throw ConfigError("sampler.m_frac must be in (0, 1]");
    if (sampler_steps < 1) throw ConfigError("sampler.steps must be >= 1");
    if (sampler_k < 1) throw ConfigError("sampler.k must be >= 1");
    parse_mode(sampler_mode);
    if (!(sampler_mixup_ratio >= 0.0 && sampler_mixup_ratio <= 1.0))
        throw ConfigError("sampler.mixup_ratio must be in [0, 1]");
    if (lambda_g < 0.0) throw ConfigError("energy.lambda_g must be nonnegative");
    if (lambda_a < 0.0) throw ConfigError("energy.lambda_a must be nonnegative");
    if (similarity != "l2" && similarity != "l1")
        throw ConfigError("energy.similarity must be l2 or l1");
    if (sign_convention != "minimize_both" && sign_convention != "literal")
        throw ConfigError("energy.sign_convention must be minimize_both or literal");
    if (score_backend != "gmm" && score_backend != "net")
        throw ConfigError("score.backend must be gmm or net");
    if (!(gmm_bandwidth > 0.0)) throw ConfigError("score.gmm_bandwidth must be positive");
    if (stage1_m_frac && !(*stage1_m_frac > 0.0 && *stage1_m_frac <= 1.0))
        throw ConfigError("sampler.stage1_m_frac must be in (0, 1]");
    if (stage2_m_frac && !(*stage2_m_frac > 0.0 && *stage2_m_frac <= 1.0))
        throw ConfigError("sampler.stage2_m_frac must be in (0, 1]");
    if (stage1_steps && *stage1_steps < 1) throw ConfigError("sampler.stage1_steps must be >= 1");
    if (stage2_steps && *stage2_steps < 1) throw ConfigError("sampler.stage2_steps must be >= 1");
}

std::uint64_t Config::hash() const { return fnv1a64(serialize()); }

SdeSchedule Config::schedule() const {
    return SdeSchedule(schedule_beta_min, schedule_beta_max, schedule_T);
}

SamplerConfig Config::sampler_config() const {
    SamplerConfig s;
    s.m_frac = sampler_m_frac;
    s.n_steps = sampler_steps;
    s.k_repeats = sampler_k;
    s.weights = EnergyWeights(lambda_g, lambda_a);
    s.seed = seed;
    s.mode = parse_mode(sampler_mode);
    s.mixup_ratio = sampler_mixup_ratio;
    s.similarity = similarity == "l1" ? Similarity::l1 : Similarity::l2;
    s.sign = sign_convention == "literal" ? SignConvention::literal_mixed
                                          : SignConvention::minimize_both;
    s.stage1.m_frac = stage1_m_frac;
    s.stage1.steps = stage1_steps;
    s.stage2.m_frac = stage2_m_frac;
    s.stage2.steps = stage2_steps;
    return s;
}

}  // namespace inv2inv
