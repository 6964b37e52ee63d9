#include "inv2inv/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "inv2inv/gmm.hpp"
#include "inv2inv/rng.hpp"
#include "inv2inv/score_net.hpp"

namespace inv2inv {

namespace {

// Gaussian pixels: the edge-magnitude field then has a generically unique
// maximum, so probing never straddles the normalization's argmax kink
// (periodic patterns would tie the maximum exactly).
Tensor smooth_image(std::size_t c, std::size_t h, std::size_t w, NoiseStream& rng) {
    Tensor img = rng.gaussian_tensor({c, h, w});
    img *= 0.5;
    return img;
}

std::vector<std::size_t> pick_coords(std::size_t total, std::size_t n, NoiseStream& rng) {
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < n; ++i) coords.push_back(rng.uniform_index(total));
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    return coords;
}

CheckResult compare_gradients(const std::string& name, const Tensor& analytic, const Tensor& fd,
                              const std::vector<std::size_t>& coords, double tolerance,
                              CheckResult prior) {
    double scale = 0.0;
    for (std::size_t i : coords)
        scale = std::max({scale, std::abs(analytic[i]), std::abs(fd[i])});
    CheckResult r = prior;
    r.name = name;
    r.tolerance = tolerance;
    for (std::size_t i : coords) {
        r.max_rel_err = std::max(r.max_rel_err, rel_disagreement(analytic[i], fd[i], scale));
        ++r.probes;
    }
    r.pass = r.max_rel_err <= tolerance;
    return r;
}

}  // namespace

double rel_disagreement(double a, double b, double scale) {
    double denom = std::max({std::abs(a), std::abs(b), 1e-6 * scale, 1e-300});
    return std::abs(a - b) / denom;
}

CheckResult adjoint_identity_check(const std::string& name,
                                   const std::function<Tensor(const Tensor&)>& forward,
                                   const std::function<Tensor(const Tensor&)>& adjoint,
                                   const std::vector<std::size_t>& in_shape,
                                   const std::vector<std::size_t>& out_shape, std::size_t probes,
                                   double tolerance, std::uint64_t seed) {
    NoiseStream rng(seed, rng_domain::aux, 1);
    CheckResult r{name, 0, 0.0, tolerance, false};
    for (std::size_t p = 0; p < probes; ++p) {
        Tensor x = rng.gaussian_tensor(in_shape);
        Tensor u = rng.gaussian_tensor(out_shape);
        double lhs = dot(forward(x), u);
        double rhs = dot(x, adjoint(u));
        double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        r.max_rel_err = std::max(r.max_rel_err, std::abs(lhs - rhs) / denom);
        ++r.probes;
    }
    r.pass = r.max_rel_err <= tolerance;
    return r;
}

std::vector<CheckResult> run_gradient_checks(std::uint64_t seed, std::size_t probes) {
    std::vector<CheckResult> results;
    NoiseStream rng(seed, rng_domain::aux, 2);

    const std::size_t c = 3, h = 16, w = 16;
    SdeSchedule sched(0.1, 20.0, 1.0);
    EdgeExtractor edge;
    LowPass lp(4);
    FeaturePyramid fp(seed, c);
    EnergyWeights weights(0.1, 2.0);

    // --- shape-energy gradient vs central differences (sqrt nonlinearity) ---
    {
        CheckResult acc{};
        std::size_t rounds = std::max<std::size_t>(1, probes / 20);
        for (std::size_t round = 0; round < rounds; ++round) {
            Tensor y = smooth_image(c, h, w, rng);
            Tensor sketch0 = edge.sketch(smooth_image(c, h, w, rng));
            Tensor noise = rng.gaussian_like(sketch0);
            double t = 0.1 + 0.8 * rng.uniform();
            Tensor analytic =
                shape_energy_grad(edge, weights, sched, y, sketch0, t, noise, Similarity::l2);
            auto f = [&](const Tensor& q) {
                Tensor sk_t = sched.perturb(sketch0, t, noise);
                return weights.lambda_g * shape_similarity(edge, q, sk_t, Similarity::l2);
            };
            auto coords = pick_coords(y.size(), 20, rng);
            Tensor fd = finite_diff_gradient(f, y, 1e-6, coords);
            acc = compare_gradients("shape_energy_grad_vs_fd", analytic, fd, coords, 1e-4, acc);
        }
        results.push_back(acc);
    }

    // --- L1 shape similarity subgradient, probed away from ties ---
    {
        CheckResult acc{};
        std::size_t rounds = std::max<std::size_t>(1, probes / 20);
        for (std::size_t round = 0; round < rounds; ++round) {
            // redraw until every |sketch(y) - target| clears the tie guard;
            // the absolute-value kink is non-differentiable on ties
            Tensor y, target;
            bool tied = true;
            for (int attempt = 0; attempt < 50 && tied; ++attempt) {
                y = smooth_image(c, h, w, rng);
                target = edge.sketch(smooth_image(c, h, w, rng));
                Tensor sk = edge.sketch(y);
                tied = false;
                for (std::size_t i = 0; i < sk.size(); ++i)
                    if (std::abs(sk[i] - target[i]) < 1e-4) tied = true;
            }
            if (tied) continue;
            Tensor analytic = shape_similarity_grad(edge, y, target, Similarity::l1);
            auto f = [&](const Tensor& q) { return shape_similarity(edge, q, target, Similarity::l1); };
            auto coords = pick_coords(y.size(), 20, rng);
            Tensor fd = finite_diff_gradient(f, y, 1e-7, coords);
            acc = compare_gradients("shape_l1_subgradient_vs_fd", analytic, fd, coords, 1e-4, acc);
        }
        if (acc.probes == 0) {
            acc.name = "shape_l1_subgradient_vs_fd";
            acc.pass = false;
        }
        results.push_back(acc);
    }

    // --- appearance-energy gradient vs central differences (fully linear) ---
    {
        CheckResult acc{};
        std::size_t rounds = std::max<std::size_t>(1, probes / 20);
        for (std::size_t round = 0; round < rounds; ++round) {
            Tensor y = smooth_image(c, h, w, rng);
            Tensor exemplar = smooth_image(c, h, w, rng);
            Tensor noise = rng.gaussian_like(exemplar);
            double t = 0.1 + 0.8 * rng.uniform();
            Tensor analytic = appearance_energy_grad(lp, fp, weights, sched, y, exemplar, t, noise);
            auto f = [&](const Tensor& q) {
                Tensor ex_t = sched.perturb(exemplar, t, noise);
                return weights.lambda_a * appearance_similarity(lp, fp, q, ex_t);
            };
            auto coords = pick_coords(y.size(), 20, rng);
            Tensor fd = finite_diff_gradient(f, y, 1e-5, coords);
            acc = compare_gradients("appearance_energy_grad_vs_fd", analytic, fd, coords, 1e-6, acc);
        }
        results.push_back(acc);
    }

    // --- block-mean projection: idempotence and self-adjointness ---
    {
        CheckResult r{"lowpass_idempotence", 0, 0.0, 1e-12, false};
        for (std::size_t p = 0; p < probes; ++p) {
            Tensor y = rng.gaussian_tensor({c, h, w});
            Tensor once = lp.apply(y);
            Tensor twice = lp.apply(once);
            double err = std::sqrt(squared_norm(twice - once)) /
                         std::max(1e-300, std::sqrt(squared_norm(y)));
            r.max_rel_err = std::max(r.max_rel_err, err);
            ++r.probes;
        }
        r.pass = r.max_rel_err <= r.tolerance;
        results.push_back(r);
    }
    results.push_back(adjoint_identity_check(
        "lowpass_self_adjoint", [&](const Tensor& x) { return lp.apply(x); },
        [&](const Tensor& x) { return lp.apply(x); }, {c, h, w}, {c, h, w}, probes, 1e-10, seed));

    // --- pyramid adjoint identities per level ---
    for (std::size_t level = 1; level <= FeaturePyramid::kLevels; ++level) {
        std::size_t fh = h >> level, fw = w >> level;
        results.push_back(adjoint_identity_check(
            "pyramid_level" + std::to_string(level) + "_adjoint",
            [&, level](const Tensor& x) { return fp.features(x)[level - 1]; },
            [&, level](const Tensor& u) { return fp.level_adjoint(level, u, h, w); }, {c, h, w},
            {FeaturePyramid::kBankChannels, fh, fw}, probes, 1e-10, seed + level));
    }

    // --- mixture score vs finite difference of the closed-form log density ---
    {
        GaussianMixture gm({0.3, 0.45, 0.25}, {{1.2, -0.4}, {-0.8, 0.9}, {0.1, 1.6}},
                           {0.3, 0.5, 0.2});
        CheckResult acc{};
        for (std::size_t p = 0; p < probes; ++p) {
            Tensor y = rng.gaussian_tensor({2});
            double t = 0.05 + 0.9 * rng.uniform();
            Tensor analytic = gm.score(sched, y, t);
            auto f = [&](const Tensor& q) { return gm.log_density(sched, q, t); };
            Tensor fd = finite_diff_gradient(f, y, 1e-6);
            acc = compare_gradients("gmm_score_vs_fd", analytic, fd, {0, 1}, 1e-6, acc);
        }
        results.push_back(acc);
    }

    // --- training-loss parameter gradient on a random slice ---
    {
        NetSpec spec;
        spec.input_shape = {2};
        spec.hidden_width = 16;  // small net keeps the FD loop cheap
        ScoreNet net(spec, sched, seed);
        std::vector<Tensor> batch;
        std::vector<double> ts;
        std::vector<Tensor> zs;
        for (int i = 0; i < 4; ++i) {
            batch.push_back(rng.gaussian_tensor({2}));
            ts.push_back(0.2 + 0.6 * rng.uniform());
            zs.push_back(rng.gaussian_tensor({2}));
        }
        auto [loss, grad] = dsm_loss_grad(net, sched, batch, ts, zs);
        (void)loss;
        CheckResult r{"dsm_param_grad_vs_fd", 0, 0.0, 1e-4, false};
        auto coords = pick_coords(net.params().size(), 10, rng);
        double scale = 0.0;
        for (std::size_t i : coords) scale = std::max(scale, std::abs(grad[i]));
        for (std::size_t i : coords) {
            double saved = net.params()[i];
            double step = 1e-6;
            net.params()[i] = saved + step;
            double fp = dsm_loss(net, sched, batch, ts, zs);
            net.params()[i] = saved - step;
            double fm = dsm_loss(net, sched, batch, ts, zs);
            net.params()[i] = saved;
            double fd = (fp - fm) / (2.0 * step);
            r.max_rel_err = std::max(r.max_rel_err, rel_disagreement(grad[i], fd, scale));
            ++r.probes;
        }
        r.pass = r.max_rel_err <= r.tolerance;
        results.push_back(r);
    }

    return results;
}

}  // namespace inv2inv
