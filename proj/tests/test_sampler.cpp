#include <doctest.h>

#include <cmath>

#include "inv2inv/dataset.hpp"
#include "inv2inv/metrics.hpp"
#include "inv2inv/rng.hpp"
#include "inv2inv/sampler.hpp"

using namespace inv2inv;

namespace {

SdeSchedule default_sched() { return SdeSchedule(0.1, 20.0, 1.0); }

GmmScoreModel unit_gaussian_model(std::size_t d, const SdeSchedule& sched) {
    return GmmScoreModel(GaussianMixture({1.0}, {std::vector<double>(d, 0.0)}, {1.0}), sched);
}

// small image-domain fixture shared by the guidance tests
struct ImageFixture {
    SdeSchedule sched = default_sched();
    ToyDatasetSpec spec;
    EnergySuite suite;
    GmmScoreModel score;

    static GmmScoreModel make_score(const ToyDatasetSpec& spec, const SdeSchedule& sched) {
        std::vector<Tensor> photos;
        for (std::size_t i = 0; i < 24; ++i) photos.push_back(generate_photo(spec, i));
        return GmmScoreModel(GaussianMixture::kernel_density(photos, 0.25), sched);
    }

    ImageFixture()
        : spec{16, 3, 24, 0.0, 99},
          suite(EdgeExtractor{}, LowPass(4), FeaturePyramid(7, 3)),
          score(make_score(spec, sched)) {}
};

SamplerConfig quick_cfg(std::uint64_t seed, double lg, double la) {
    SamplerConfig cfg;
    cfg.m_frac = 0.4;
    cfg.n_steps = 30;
    cfg.k_repeats = 1;
    cfg.weights = EnergyWeights(lg, la);
    cfg.seed = seed;
    return cfg;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("reverse step reproduces the hand-computed 1-D value") {
    auto sched = default_sched();
    auto model = unit_gaussian_model(1, sched);
    // beta(s) = 1 at s = 0.9 / 19.9; score of the unit Gaussian is -y
    double s = 0.9 / 19.9;
    Tensor y = Tensor::vec(1);
    y[0] = 2.0;
    Tensor zero = Tensor::vec(1);
    Tensor next = reverse_step(sched, model, y, s, 0.01, zero, zero);
    // y + [0.5 * 1 * 2 + 1 * (-2)] * 0.01 = 2 - 0.01
    CHECK(next[0] == doctest::Approx(1.99).epsilon(1e-12));
}

TEST_CASE("reverse step refuses to cross t = 0 and checks shapes") {
    auto sched = default_sched();
    auto model = unit_gaussian_model(2, sched);
    Tensor y = Tensor::vec(2);
    Tensor zero = Tensor::vec(2);
    CHECK_THROWS_AS(reverse_step(sched, model, y, 0.005, 0.01, zero, zero), DomainError);
    Tensor wrong = Tensor::vec(3);
    CHECK_THROWS_AS(reverse_step(sched, model, y, 0.5, 0.01, wrong, zero), ShapeError);
}

TEST_CASE("unguided pass is reproducible and matches a hand-rolled loop") {
    auto sched = default_sched();
    auto model = unit_gaussian_model(2, sched);
    SamplerConfig cfg = quick_cfg(123, 0.0, 0.0);
    cfg.m_frac = 0.5;
    cfg.n_steps = 20;
    Tensor input = Tensor::vec(2);
    input[0] = 0.7;
    input[1] = -0.2;

    Tensor a = unguided_partial_inversion(sched, model, input, 0, false, cfg);
    Tensor b = unguided_partial_inversion(sched, model, input, 0, false, cfg);
    CHECK(bit_equal(a, b));

    // Reimplement the documented protocol: init draw from stream
    // (stage, start_point), one z per step from (stage, trajectory),
    // z = 0 on the final update.
    namespace ss = sampling_stream;
    NoiseStream init(cfg.seed, rng_domain::sampling, ss::id(0, ss::start_point));
    NoiseStream traj(cfg.seed, rng_domain::sampling, ss::id(0, ss::trajectory));
    double m = cfg.m_frac * sched.horizon();
    double h = m / cfg.n_steps;
    Tensor y = sched.perturb(input, m, init.gaussian_like(input));
    Tensor zero(y.shape());
    for (int i = cfg.n_steps; i >= 1; --i) {
        double s = i * h;
        Tensor z = i > 1 ? traj.gaussian_like(y) : zero;
        y = reverse_step(sched, model, y, s, h, zero, z);
    }
    CHECK(bit_equal(a, y));
}

TEST_CASE("single-Gaussian recovery from pure noise") {
    auto sched = default_sched();
    auto model = unit_gaussian_model(2, sched);
    SamplerConfig cfg = quick_cfg(0, 0.0, 0.0);
    cfg.m_frac = 1.0;
    cfg.n_steps = 100;
    Tensor origin = Tensor::vec(2);

    const int n = 2000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        cfg.seed = 1000 + i;
        Tensor s = unguided_partial_inversion(sched, model, origin, 0, false, cfg);
        sx += s[0];
        sy += s[1];
        sxx += s[0] * s[0];
        syy += s[1] * s[1];
        sxy += s[0] * s[1];
    }
    double mx = sx / n, my = sy / n;
    CHECK(std::abs(mx) < 0.07);
    CHECK(std::abs(my) < 0.07);
    CHECK(sxx / n - mx * mx == doctest::Approx(1.0).epsilon(0.08));
    CHECK(syy / n - my * my == doctest::Approx(1.0).epsilon(0.08));
    CHECK(std::abs(sxy / n - mx * my) < 0.08);
}

TEST_CASE("halving the step size improves distribution recovery monotonically") {
    // Single-component target with shared per-sample seeds and shared
    // projection directions: mode-assignment coin flips would otherwise put
    // a noise floor above the fine-step discretization bias.
    auto sched = default_sched();
    GaussianMixture gm({1.0}, {{-1.6, 0.8}}, {0.3});
    GmmScoreModel model(gm, sched);

    NoiseStream comp(77, rng_domain::aux, 50);
    NoiseStream noise(77, rng_domain::aux, 51);
    const int nref = 40000, n = 6000;
    std::vector<Tensor> ref;
    for (int i = 0; i < nref; ++i) ref.push_back(gm.sample(comp, noise, {2}));

    Tensor origin = Tensor::vec(2);
    std::vector<double> errs;
    for (int steps : {25, 50, 100, 200}) {
        SamplerConfig cfg = quick_cfg(0, 0.0, 0.0);
        cfg.m_frac = 1.0;
        cfg.n_steps = steps;
        std::vector<Tensor> got;
        for (int i = 0; i < n; ++i) {
            cfg.seed = 5000 + i;
            got.push_back(unguided_partial_inversion(sched, model, origin, 0, false, cfg));
        }
        NoiseStream proj(78, rng_domain::aux, 52);
        errs.push_back(sliced_wasserstein(got, ref, 64, proj));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] <= errs[i - 1] * 1.10);
}

TEST_CASE("stage outputs are deterministic and reductions are bit-exact") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 3);

    SUBCASE("shape-enhancing inversion at zero weight equals the unguided pass") {
        SamplerConfig cfg = quick_cfg(42, 0.0, 0.0);
        Tensor guided = shape_enhancing_inversion(fx.sched, triple.sketch, fx.score, fx.suite, cfg);
        Tensor start = broadcast_channels(triple.sketch, 3);
        Tensor plain = unguided_partial_inversion(fx.sched, fx.score, start, 0, false, cfg);
        CHECK(bit_equal(guided, plain));
    }

    SUBCASE("full-control inversion at zero weights equals the clamped unguided pass") {
        SamplerConfig cfg = quick_cfg(43, 0.0, 0.0);
        Tensor input = broadcast_channels(triple.sketch, 3);
        Tensor guided = full_control_inversion(fx.sched, input, triple.sketch, triple.exemplar,
                                               fx.score, fx.suite, cfg);
        Tensor plain = unguided_partial_inversion(fx.sched, fx.score, input, 1, true, cfg);
        CHECK(bit_equal(guided, plain));
    }

    SUBCASE("two-stage pipeline at zero weights is double unguided partial inversion") {
        SamplerConfig cfg = quick_cfg(44, 0.0, 0.0);
        RunRecord rec =
            inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
        Tensor start = broadcast_channels(triple.sketch, 3);
        Tensor pass1 = unguided_partial_inversion(fx.sched, fx.score, start, 0, false, cfg);
        Tensor pass2 = unguided_partial_inversion(fx.sched, fx.score, pass1, 1, true, cfg);
        CHECK(bit_equal(rec.stage1_output, pass1));
        CHECK(bit_equal(rec.final_output, pass2));
    }

    SUBCASE("stage-1 record matches a standalone stage-1 call") {
        SamplerConfig cfg = quick_cfg(45, 0.1, 2.0);
        RunRecord rec =
            inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
        Tensor stage1 = shape_enhancing_inversion(fx.sched, triple.sketch, fx.score, fx.suite, cfg);
        CHECK(bit_equal(rec.stage1_output, stage1));

        RunRecord again =
            inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
        CHECK(bit_equal(rec.final_output, again.final_output));
    }

    SUBCASE("disabling one weight leaves the other guidance term intact") {
        // lambda_a = 0 with lambda_g fixed must equal a run whose appearance
        // stream was never consumed; sketch guidance is unaffected.
        SamplerConfig both = quick_cfg(46, 0.1, 0.0);
        Tensor input = broadcast_channels(triple.sketch, 3);
        Tensor a = full_control_inversion(fx.sched, input, triple.sketch, triple.exemplar,
                                          fx.score, fx.suite, both);
        // same run with a different exemplar: with lambda_a = 0 the exemplar
        // must not matter at all
        Tensor b = full_control_inversion(fx.sched, input, triple.sketch,
                                          generate_triple(fx.spec, 7).exemplar, fx.score,
                                          fx.suite, both);
        CHECK(bit_equal(a, b));
    }
}

TEST_CASE("variant2 at mixup 1 is exactly variant1") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 5);
    SamplerConfig cfg = quick_cfg(47, 0.1, 2.0);
    cfg.mode = StageMode::variant2_mixup;
    cfg.mixup_ratio = 1.0;
    RunRecord v2 = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    cfg.mode = StageMode::variant1_direct_full_control;
    RunRecord v1 = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(bit_equal(v2.final_output, v1.final_output));
}

TEST_CASE("sdedit mode ignores the exemplar") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 6);
    SamplerConfig cfg = quick_cfg(48, 0.1, 2.0);
    cfg.mode = StageMode::unguided_sdedit;
    RunRecord a = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    RunRecord b = run_variant(fx.sched, triple.sketch, generate_triple(fx.spec, 9).exemplar,
                              fx.score, fx.suite, cfg);
    CHECK(bit_equal(a.final_output, b.final_output));
    for (std::size_t i = 0; i < a.final_output.size(); ++i) {
        CHECK(a.final_output[i] >= -1.0);
        CHECK(a.final_output[i] <= 1.0);
    }
}

TEST_CASE("k repeats change the trajectory but stay deterministic") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 8);
    SamplerConfig cfg = quick_cfg(49, 0.1, 2.0);
    cfg.k_repeats = 2;
    RunRecord a = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    RunRecord b = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(bit_equal(a.final_output, b.final_output));
    cfg.k_repeats = 1;
    RunRecord c = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(!bit_equal(a.final_output, c.final_output));
}

TEST_CASE("per-stage overrides and validation") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 2);
    SamplerConfig cfg = quick_cfg(50, 0.0, 0.0);
    cfg.stage2.steps = 12;
    cfg.stage2.m_frac = 0.25;
    RunRecord rec =
        inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(rec.final_output.all_finite());

    SamplerConfig bad = cfg;
    bad.n_steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.m_frac = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.mixup_ratio = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.stage1.steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("energy trace rows cover both stages") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 4);
    SamplerConfig cfg = quick_cfg(51, 0.1, 2.0);
    cfg.n_steps = 10;
    RunRecord rec = inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score,
                                           fx.suite, cfg, true);
    REQUIRE(rec.trace.size() == 20);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(rec.trace[i].stage == 0);
        CHECK(rec.trace[i].shape_sim.has_value());
        CHECK(!rec.trace[i].appearance_sim.has_value());
    }
    for (std::size_t i = 10; i < 20; ++i) {
        CHECK(rec.trace[i].stage == 1);
        CHECK(rec.trace[i].shape_sim.has_value());
        CHECK(rec.trace[i].appearance_sim.has_value());
    }
    // tracing must not change the trajectory (streams are independent)
    RunRecord quiet =
        inversion_by_inversion(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(bit_equal(rec.final_output, quiet.final_output));
}

TEST_CASE("literal sign convention flips only the appearance contribution") {
    ImageFixture fx;
    ToyTriple triple = generate_triple(fx.spec, 10);
    SamplerConfig cfg = quick_cfg(52, 0.0, 2.0);
    cfg.mode = StageMode::variant1_direct_full_control;
    RunRecord plus = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    cfg.sign = SignConvention::literal_mixed;
    RunRecord minus = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg);
    CHECK(!bit_equal(plus.final_output, minus.final_output));

    // with lambda_a = 0 the convention is irrelevant
    SamplerConfig cfg0 = quick_cfg(52, 0.1, 0.0);
    cfg0.mode = StageMode::variant1_direct_full_control;
    RunRecord a = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg0);
    cfg0.sign = SignConvention::literal_mixed;
    RunRecord b = run_variant(fx.sched, triple.sketch, triple.exemplar, fx.score, fx.suite, cfg0);
    CHECK(bit_equal(a.final_output, b.final_output));
}

TEST_CASE("shape guidance pulls the output sketch toward the target") {
    // Small paired check (the full statistical version lives in the
    // acceptance suite): shape error with guidance should beat the unguided
    // run on most paired seeds.
    ImageFixture fx;
    int wins = 0;
    const int n = 12;
    for (int j = 0; j < n; ++j) {
        ToyTriple triple = generate_triple(fx.spec, static_cast<std::size_t>(j));
        SamplerConfig cfg = quick_cfg(600 + j, 0.0, 0.0);
        cfg.n_steps = 60;
        Tensor un = shape_enhancing_inversion(fx.sched, triple.sketch, fx.score, fx.suite, cfg);
        cfg.weights = EnergyWeights(0.1, 0.0);
        Tensor gu = shape_enhancing_inversion(fx.sched, triple.sketch, fx.score, fx.suite, cfg);
        double e_un = shape_l2(fx.suite.edge.sketch(un), triple.sketch);
        double e_gu = shape_l2(fx.suite.edge.sketch(gu), triple.sketch);
        if (e_gu < e_un) ++wins;
    }
    CHECK(wins >= 9);
}
