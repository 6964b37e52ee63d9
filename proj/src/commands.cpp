#include "inv2inv/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "inv2inv/csv.hpp"
#include "inv2inv/gradcheck.hpp"
#include "inv2inv/io.hpp"

namespace inv2inv {

namespace fs = std::filesystem;

void save_checkpoint(const ScoreNet& net, const fs::path& dir) {
    fs::create_directories(dir);
    std::ostringstream o;
    o << "net.version = " << kToolVersion << "\n";
    o << "net.input_shape =";
    for (std::size_t d : net.spec().input_shape) o << " " << d;
    o << "\n";
    o << "net.hidden = " << net.spec().hidden_width << "\n";
    o << "net.time_features = " << net.spec().time_features << "\n";
    o << "net.init_seed = " << net.init_seed() << "\n";
    o << "schedule.beta_min = " << format_double(net.schedule().beta_min()) << "\n";
    o << "schedule.beta_max = " << format_double(net.schedule().beta_max()) << "\n";
    o << "schedule.T = " << format_double(net.schedule().horizon()) << "\n";
    std::ofstream meta(dir / "checkpoint.txt", std::ios::trunc);
    if (!meta) throw IoError("cannot write checkpoint metadata in " + dir.string());
    meta << o.str();

    for (const ParamBlock& b : net.blocks()) {
        Tensor t(b.shape);
        for (std::size_t i = 0; i < b.count; ++i) t[i] = net.params()[b.offset + i];
        write_tensor(dir / (b.name + ".ivit"), t);
    }
}

ScoreNet load_checkpoint(const fs::path& dir) {
    std::ifstream meta(dir / "checkpoint.txt");
    if (!meta) throw IoError("cannot open checkpoint metadata in " + dir.string());
    NetSpec spec;
    double beta_min = 0.0, beta_max = 0.0, horizon = 0.0;
    std::uint64_t init_seed = 0;
    std::string line;
    while (std::getline(meta, line)) {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!val.empty() && val.front() == ' ') val.erase(val.begin());
        if (key == "net.input_shape") {
            std::istringstream vs(val);
            std::size_t d;
            spec.input_shape.clear();
            while (vs >> d) spec.input_shape.push_back(d);
        } else if (key == "net.hidden") {
            spec.hidden_width = std::stoul(val);
        } else if (key == "net.time_features") {
            spec.time_features = std::stoul(val);
        } else if (key == "net.init_seed") {
            init_seed = std::stoull(val);
        } else if (key == "schedule.beta_min") {
            beta_min = std::stod(val);
        } else if (key == "schedule.beta_max") {
            beta_max = std::stod(val);
        } else if (key == "schedule.T") {
            horizon = std::stod(val);
        }
    }
    if (spec.input_shape.empty()) throw ParseError("checkpoint lacks an input shape");
    ScoreNet net(spec, SdeSchedule(beta_min, beta_max, horizon), init_seed);
    for (const ParamBlock& b : net.blocks()) {
        Tensor t = read_tensor(dir / (b.name + ".ivit"));
        if (t.shape() != b.shape)
            throw ParseError("checkpoint block " + b.name + " has the wrong shape");
        for (std::size_t i = 0; i < b.count; ++i) net.params()[b.offset + i] = t[i];
    }
    return net;
}

Tensor load_input_image(const fs::path& path) {
    std::string ext = path.extension().string();
    if (ext == ".ivit") return read_tensor(path);
    if (ext == ".pgm" || ext == ".ppm") return read_image(path);
    throw IoError("unsupported input extension '" + ext + "' (use .ivit, .pgm or .ppm)");
}

std::unique_ptr<ScoreModel> build_score_model(const Config& cfg, const SdeSchedule& sched,
                                              const std::vector<std::size_t>& image_shape) {
    if (cfg.score_backend == "gmm") {
        if (cfg.path_dataset.empty())
            throw ConfigError("score.backend = gmm requires paths.dataset");
        std::vector<Tensor> photos = load_dataset_photos(cfg.path_dataset);
        for (const Tensor& p : photos)
            if (p.shape() != image_shape)
                throw ShapeError("dataset photos do not match the input image shape");
        return std::make_unique<GmmScoreModel>(
            GaussianMixture::kernel_density(photos, cfg.gmm_bandwidth), sched);
    }
    if (cfg.path_checkpoint.empty())
        throw ConfigError("score.backend = net requires paths.checkpoint");
    ScoreNet net = load_checkpoint(cfg.path_checkpoint);
    if (net.spec().input_shape != image_shape)
        throw ShapeError("checkpoint input shape does not match the input image shape");
    return std::make_unique<NetScoreModel>(std::move(net));
}

EnergySuite build_energy_suite(const Config& cfg, std::size_t channels, std::size_t height) {
    std::size_t factor = cfg.lowpass_factor != 0 ? cfg.lowpass_factor
                                                 : lowpass_auto_factor(height);
    return EnergySuite(EdgeExtractor{}, LowPass(factor), FeaturePyramid(cfg.pyramid_seed, channels));
}

std::size_t worker_count() {
    if (const char* env = std::getenv("INV2INV_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end && *end == '\0' && n >= 1) return static_cast<std::size_t>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write trace " + path.string());
    csv_write_row(out, {"stage", "step", "time", "shape_similarity", "appearance_similarity"});
    for (const TraceRow& r : trace) {
        csv_write_row(out, {std::to_string(r.stage), std::to_string(r.step),
                            format_double(r.time),
                            r.shape_sim ? format_double(*r.shape_sim) : "",
                            r.appearance_sim ? format_double(*r.appearance_sim) : ""});
    }
}

}  // namespace

RunManifest cmd_sample(const SampleArgs& args, std::ostream& log) {
    Config cfg = args.config_path ? Config::parse_file(*args.config_path) : Config{};
    if (args.mode) cfg.sampler_mode = *args.mode;
    if (args.seed) cfg.seed = *args.seed;
    if (!args.sketch.empty()) cfg.path_sketch = args.sketch.string();
    if (!args.exemplar.empty()) cfg.path_exemplar = args.exemplar.string();
    if (!args.out_dir.empty()) cfg.path_out = args.out_dir.string();
    cfg.validate();
    StageMode mode = parse_mode(cfg.sampler_mode);

    if (cfg.path_sketch.empty()) throw ConfigError("sample requires a sketch input");
    if (cfg.path_out.empty()) throw ConfigError("sample requires an output directory");
    if (!fs::exists(cfg.path_sketch)) throw IoError("sketch not found: " + cfg.path_sketch);

    Tensor sketch = load_input_image(cfg.path_sketch);
    if (sketch.rank() != 3 || sketch.channels() != 1)
        throw ShapeError("sketch must be a single-channel image");

    bool sdedit = mode == StageMode::unguided_sdedit;
    Tensor exemplar;
    if (sdedit) {
        if (!cfg.path_exemplar.empty())
            log << "warning: sdedit mode ignores the exemplar input\n";
    } else {
        if (cfg.path_exemplar.empty()) throw ConfigError("this mode requires an exemplar input");
        if (!fs::exists(cfg.path_exemplar))
            throw IoError("exemplar not found: " + cfg.path_exemplar);
        exemplar = load_input_image(cfg.path_exemplar);
        if (exemplar.rank() != 3) throw ShapeError("exemplar must be an image tensor");
        if (exemplar.height() != sketch.height() || exemplar.width() != sketch.width())
            throw ShapeError("exemplar and sketch dimensions must agree");
    }
    std::size_t channels = sdedit ? 3 : exemplar.channels();

    SdeSchedule sched = cfg.schedule();
    EnergySuite suite = build_energy_suite(cfg, channels, sketch.height());
    std::vector<std::size_t> image_shape = {channels, sketch.height(), sketch.width()};
    std::unique_ptr<ScoreModel> score = build_score_model(cfg, sched, image_shape);

    SamplerConfig scfg = cfg.sampler_config();
    Tensor exemplar_arg = sdedit ? Tensor::image(channels, sketch.height(), sketch.width())
                                 : exemplar;
    RunRecord rec =
        run_variant(sched, sketch, exemplar_arg, *score, suite, scfg, args.trace_energy);

    fs::create_directories(cfg.path_out);
    fs::path out(cfg.path_out);
    RunManifest manifest;
    manifest.config = cfg;
    manifest.input_paths.emplace_back("sketch", cfg.path_sketch);
    manifest.input_digests.emplace_back("sketch", file_digest(cfg.path_sketch));
    if (!sdedit) {
        manifest.input_paths.emplace_back("exemplar", cfg.path_exemplar);
        manifest.input_digests.emplace_back("exemplar", file_digest(cfg.path_exemplar));
    }

    write_tensor(out / "final.ivit", rec.final_output);
    write_image(out / "final.ppm", rec.final_output);
    manifest.outputs.push_back("final.ivit");
    manifest.outputs.push_back("final.ppm");
    if (args.save_stage1 && !rec.stage1_output.empty()) {
        Tensor stage1 = rec.stage1_output;
        write_tensor(out / "stage1.ivit", stage1);
        stage1.clamp_(-1.0, 1.0);
        write_image(out / "stage1.ppm", stage1);
        manifest.outputs.push_back("stage1.ivit");
        manifest.outputs.push_back("stage1.ppm");
    }
    if (args.trace_energy) {
        write_trace_csv(out / "trace.csv", rec.trace);
        manifest.outputs.push_back("trace.csv");
    }
    manifest.stage1_ms = rec.stage1_ms;
    manifest.stage2_ms = rec.stage2_ms;
    manifest.write(out / "manifest.txt");
    log << "wrote " << (out / "final.ppm").string() << "\n";
    return manifest;
}

void cmd_train_score(const TrainArgs& args, std::ostream& log) {
    Config cfg = args.config_path ? Config::parse_file(*args.config_path) : Config{};
    std::vector<Tensor> photos = load_dataset_photos(args.dataset_dir);
    if (photos.empty()) throw DomainError("dataset has no photos");
    SdeSchedule sched = cfg.schedule();

    NetSpec spec;
    spec.input_shape = photos[0].shape();
    ScoreNet net(spec, sched, args.train.seed);

    std::vector<std::pair<std::size_t, double>> loss_log;
    net = train_dsm(std::move(net), sched, photos, args.train, &loss_log);

    save_checkpoint(net, args.out_dir);
    std::ofstream losses(args.out_dir / "loss.csv", std::ios::trunc);
    if (!losses) throw IoError("cannot write loss.csv");
    csv_write_row(losses, {"iteration", "loss"});
    for (const auto& [iter, loss] : loss_log)
        csv_write_row(losses, {std::to_string(iter), format_double(loss)});
    log << "trained " << args.train.iterations << " iterations; checkpoint in "
        << args.out_dir.string() << "\n";
}

void cmd_ablate(const AblateArgs& args, std::ostream& log) {
    Config cfg = args.config_path ? Config::parse_file(*args.config_path) : Config{};
    if (cfg.path_dataset.empty()) cfg.path_dataset = args.dataset_dir.string();
    cfg.validate();

    auto entries = read_dataset_index(args.dataset_dir);
    if (entries.empty()) throw DomainError("dataset is empty");
    std::vector<Tensor> sketches, exemplars;
    for (const auto& e : entries) {
        sketches.push_back(read_tensor(args.dataset_dir / e.sketch));
        exemplars.push_back(read_tensor(args.dataset_dir / e.exemplar));
    }

    std::vector<double> lambda_as = args.lambda_a_grid;
    if (lambda_as.empty()) lambda_as = {cfg.lambda_a};

    SdeSchedule sched = cfg.schedule();
    std::size_t channels = exemplars[0].channels();
    std::size_t height = exemplars[0].height();
    EnergySuite suite = build_energy_suite(cfg, channels, height);
    std::vector<std::size_t> image_shape = {channels, height, exemplars[0].width()};
    std::unique_ptr<ScoreModel> score = build_score_model(cfg, sched, image_shape);

    struct Task {
        std::string mode;
        double lambda_g, lambda_a;
        std::size_t seed_index;
    };
    std::vector<Task> tasks;
    for (const std::string& mode : args.modes)
        for (double lg : args.lambda_g_grid)
            for (double la : lambda_as)
                for (std::size_t j = 0; j < args.seeds; ++j) tasks.push_back({mode, lg, la, j});

    struct Row {
        Task task;
        std::size_t triple = 0;
        double shape = 0.0, psnr_v = 0.0, wall_ms = 0.0;
        std::string error;
    };
    std::vector<Row> rows(tasks.size());

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            Row& row = rows[i];
            row.task = t;
            row.triple = t.seed_index % entries.size();
            try {
                Config run_cfg = cfg;
                run_cfg.sampler_mode = t.mode;
                run_cfg.lambda_g = t.lambda_g;
                run_cfg.lambda_a = t.lambda_a;
                run_cfg.seed = cfg.seed + t.seed_index;
                SamplerConfig scfg = run_cfg.sampler_config();
                auto t0 = std::chrono::steady_clock::now();
                RunRecord rec = run_variant(sched, sketches[row.triple], exemplars[row.triple],
                                            *score, suite, scfg, false);
                row.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
                Tensor out_sketch = suite.edge.sketch(rec.final_output);
                row.shape = shape_l2(out_sketch, sketches[row.triple]);
                row.psnr_v = psnr(rec.final_output, exemplars[row.triple]);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    std::size_t workers = std::min(worker_count(), tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    fs::create_directories(args.out_dir);
    std::ofstream runs(args.out_dir / "runs.csv", std::ios::trunc);
    if (!runs) throw IoError("cannot write runs.csv");
    csv_write_row(runs, {"run", "mode", "lambda_g", "lambda_a", "seed", "triple", "shape_l2",
                         "psnr", "wall_ms", "error"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        csv_write_row(runs,
                      {std::to_string(i), r.task.mode, format_double(r.task.lambda_g),
                       format_double(r.task.lambda_a), std::to_string(cfg.seed + r.task.seed_index),
                       std::to_string(r.triple),
                       r.error.empty() ? format_double(r.shape) : "",
                       r.error.empty() ? format_double(r.psnr_v) : "",
                       format_double(r.wall_ms), r.error});
    }

    std::ofstream agg(args.out_dir / "aggregate.csv", std::ios::trunc);
    if (!agg) throw IoError("cannot write aggregate.csv");
    csv_write_row(agg, {"mode", "lambda_g", "lambda_a", "count", "mean_shape_l2",
                        "stddev_shape_l2", "mean_psnr", "stddev_psnr"});
    for (const std::string& mode : args.modes)
        for (double lg : args.lambda_g_grid)
            for (double la : lambda_as) {
                MetricReport rep;
                for (const Row& r : rows)
                    if (r.error.empty() && r.task.mode == mode && r.task.lambda_g == lg &&
                        r.task.lambda_a == la)
                        rep.add({0, r.shape, r.psnr_v});
                csv_write_row(agg, {mode, format_double(lg), format_double(la),
                                    std::to_string(rep.count()), format_double(rep.mean_shape_l2()),
                                    format_double(rep.stddev_shape_l2()),
                                    format_double(rep.mean_psnr()),
                                    format_double(rep.stddev_psnr())});
            }
    std::size_t failures = 0;
    for (const Row& r : rows)
        if (!r.error.empty()) ++failures;
    log << "ablation: " << rows.size() << " runs, " << failures << " failed; tables in "
        << args.out_dir.string() << "\n";
}

bool cmd_gradcheck(std::uint64_t seed, std::size_t probes, std::ostream& out) {
    std::vector<CheckResult> results = run_gradient_checks(seed, probes);
    bool all = true;
    for (const CheckResult& r : results) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  probes=" << r.probes
            << "  max_rel_err=" << format_double(r.max_rel_err) << "  tol="
            << format_double(r.tolerance) << "\n";
        all = all && r.pass;
    }
    return all;
}

void write_metric_report(const MetricReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream rows(dir / "rows.csv", std::ios::trunc);
    if (!rows) throw IoError("cannot write rows.csv");
    csv_write_row(rows, {"id", "shape_l2", "psnr"});
    for (const MetricRow& r : report.rows())
        csv_write_row(rows, {std::to_string(r.id), format_double(r.shape_l2),
                             format_double(r.psnr)});
    std::ofstream agg(dir / "aggregate.csv", std::ios::trunc);
    if (!agg) throw IoError("cannot write aggregate.csv");
    csv_write_row(agg, {"metric", "mean", "stddev", "count"});
    csv_write_row(agg, {"shape_l2", format_double(report.mean_shape_l2()),
                        format_double(report.stddev_shape_l2()), std::to_string(report.count())});
    csv_write_row(agg, {"psnr", format_double(report.mean_psnr()),
                        format_double(report.stddev_psnr()), std::to_string(report.count())});
}

void cmd_metrics(const MetricsArgs& args, std::ostream& out) {
    EdgeExtractor edge;
    if (args.list) {
        std::ifstream in(*args.list);
        if (!in) throw IoError("cannot open list " + args.list->string());
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto rows = csv_parse(text);
        MetricReport report;
        std::size_t id = 0;
        for (const auto& row : rows) {
            if (row.size() != 3) throw ParseError("metrics list rows must be photo,sketch,exemplar");
            Tensor photo = load_input_image(row[0]);
            Tensor sketch = load_input_image(row[1]);
            Tensor exemplar = load_input_image(row[2]);
            report.add({id++, shape_l2(edge.sketch(photo), sketch), psnr(photo, exemplar)});
        }
        if (!args.out_dir) throw ConfigError("metrics --list requires --out");
        write_metric_report(report, *args.out_dir);
        out << "wrote metric report for " << report.count() << " rows to "
            << args.out_dir->string() << "\n";
        return;
    }
    if (!args.photo || !args.sketch || !args.exemplar)
        throw ConfigError("metrics requires --photo, --sketch and --exemplar (or --list)");
    Tensor photo = load_input_image(*args.photo);
    Tensor sketch = load_input_image(*args.sketch);
    Tensor exemplar = load_input_image(*args.exemplar);
    out << "shape_l2 = " << format_double(shape_l2(edge.sketch(photo), sketch)) << "\n";
    out << "psnr = " << format_double(psnr(photo, exemplar)) << "\n";
}

}  // namespace inv2inv
