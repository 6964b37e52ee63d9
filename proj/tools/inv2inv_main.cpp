#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "inv2inv/commands.hpp"

namespace {

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string tok = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
        out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<std::string> parse_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        out.push_back(csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                 : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage energy-guided reverse-SDE sketch-to-photo sampler"};
    app.require_subcommand(1);

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "Generate a procedural toy dataset");
    inv2inv::ToyDatasetSpec spec;
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", spec.count, "Number of triples");
    gen->add_option("--size", spec.size, "Square image size");
    gen->add_option("--jitter", spec.jitter, "Freehand sketch warp amplitude (pixels)");
    gen->add_option("--seed", spec.seed, "Generator seed");

    // train-score
    auto* train = app.add_subcommand("train-score", "Train the score network on dataset photos");
    inv2inv::TrainArgs targs;
    std::string train_dataset, train_out, train_config;
    train->add_option("--dataset", train_dataset, "Dataset directory")->required();
    train->add_option("--out", train_out, "Checkpoint directory")->required();
    train->add_option("--config", train_config, "Config file (schedule constants)");
    train->add_option("--iters", targs.train.iterations, "SGD iterations");
    train->add_option("--batch", targs.train.batch_size, "Batch size");
    train->add_option("--lr", targs.train.learning_rate, "Learning rate");
    train->add_option("--seed", targs.train.seed, "Training seed");
    train->add_option("--log-interval", targs.train.log_interval, "Loss log interval");

    // sample
    auto* sample = app.add_subcommand("sample", "Run the sampler on a sketch and an exemplar");
    inv2inv::SampleArgs sargs;
    std::string s_config, s_sketch, s_exemplar, s_out, s_mode;
    std::uint64_t s_seed = 0;
    sample->add_option("--config", s_config, "Config file");
    sample->add_option("--sketch", s_sketch, "Sketch image (.ivit/.pgm)");
    sample->add_option("--exemplar", s_exemplar, "Exemplar image (.ivit/.ppm)");
    sample->add_option("--out", s_out, "Output directory");
    sample->add_option("--mode", s_mode, "two_stage|variant1|variant2|sdedit");
    auto* seed_opt = sample->add_option("--seed", s_seed, "Run seed (overrides config)");
    sample->add_flag("--save-stage1", sargs.save_stage1, "Also write the stage-1 output");
    sample->add_flag("--trace-energy", sargs.trace_energy, "Write per-step energy trace CSV");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run the ablation grid and write CSV tables");
    inv2inv::AblateArgs aargs;
    std::string a_config, a_dataset, a_out, a_lg, a_la, a_modes;
    ablate->add_option("--config", a_config, "Config file");
    ablate->add_option("--dataset", a_dataset, "Dataset directory")->required();
    ablate->add_option("--out", a_out, "Output directory")->required();
    ablate->add_option("--lambda-g", a_lg, "Comma-separated shape-weight grid");
    ablate->add_option("--lambda-a", a_la, "Comma-separated appearance-weight grid");
    ablate->add_option("--modes", a_modes, "Comma-separated mode list");
    ablate->add_option("--seeds", aargs.seeds, "Seeds per grid point");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Verify gradients and adjoints");
    std::uint64_t g_seed = 0;
    std::size_t g_probes = 100;
    gradcheck->add_option("--seed", g_seed, "Probe seed");
    gradcheck->add_option("--probes", g_probes, "Probes per check");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Evaluate generated photos");
    std::string m_photo, m_sketch, m_exemplar, m_list, m_out;
    metrics->add_option("--photo", m_photo, "Generated photo");
    metrics->add_option("--sketch", m_sketch, "Reference sketch");
    metrics->add_option("--exemplar", m_exemplar, "Reference exemplar");
    metrics->add_option("--list", m_list, "CSV of photo,sketch,exemplar rows");
    metrics->add_option("--out", m_out, "Report directory (list mode)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            inv2inv::generate_toy_dataset(spec, gen_out);
            std::cout << "wrote " << spec.count << " triples to " << gen_out << "\n";
        } else if (train->parsed()) {
            targs.dataset_dir = train_dataset;
            targs.out_dir = train_out;
            if (!train_config.empty()) targs.config_path = train_config;
            inv2inv::cmd_train_score(targs, std::cout);
        } else if (sample->parsed()) {
            if (!s_config.empty()) sargs.config_path = s_config;
            sargs.sketch = s_sketch;
            sargs.exemplar = s_exemplar;
            sargs.out_dir = s_out;
            if (!s_mode.empty()) sargs.mode = s_mode;
            if (seed_opt->count() > 0) sargs.seed = s_seed;
            inv2inv::cmd_sample(sargs, std::cerr);
        } else if (ablate->parsed()) {
            if (!a_config.empty()) aargs.config_path = a_config;
            aargs.dataset_dir = a_dataset;
            aargs.out_dir = a_out;
            if (!a_lg.empty()) aargs.lambda_g_grid = parse_grid(a_lg);
            if (!a_la.empty()) aargs.lambda_a_grid = parse_grid(a_la);
            if (!a_modes.empty()) aargs.modes = parse_list(a_modes);
            inv2inv::cmd_ablate(aargs, std::cout);
        } else if (gradcheck->parsed()) {
            if (!inv2inv::cmd_gradcheck(g_seed, g_probes, std::cout)) return 1;
        } else if (metrics->parsed()) {
            inv2inv::MetricsArgs margs;
            if (!m_photo.empty()) margs.photo = m_photo;
            if (!m_sketch.empty()) margs.sketch = m_sketch;
            if (!m_exemplar.empty()) margs.exemplar = m_exemplar;
            if (!m_list.empty()) margs.list = m_list;
            if (!m_out.empty()) margs.out_dir = m_out;
            inv2inv::cmd_metrics(margs, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
