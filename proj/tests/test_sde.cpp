#include <doctest.h>

#include <cmath>

#include "inv2inv/rng.hpp"
#include "inv2inv/sde.hpp"

using namespace inv2inv;

namespace {
SdeSchedule default_sched() { return SdeSchedule(0.1, 20.0, 1.0); }
}  // namespace

TEST_CASE("construction rejects bad schedules") {
    CHECK_THROWS_AS(SdeSchedule(0.0, 20.0, 1.0), DomainError);
    CHECK_THROWS_AS(SdeSchedule(2.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(SdeSchedule(0.1, 20.0, 0.0), DomainError);
}

TEST_CASE("beta endpoints and midpoint of the linear schedule") {
    auto s = default_sched();
    CHECK(s.beta(0.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.beta(1.0) == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(s.beta(0.5) == doctest::Approx(10.05).epsilon(1e-15));
    CHECK_THROWS_AS(s.beta(-0.1), DomainError);
    CHECK_THROWS_AS(s.beta(1.1), DomainError);
}

TEST_CASE("alpha and sigma endpoints") {
    auto s = default_sched();
    auto [a0, s0] = s.alpha_sigma(0.0);
    CHECK(a0 == 1.0);
    CHECK(s0 == 0.0);

    // closed form: int_0^1 beta = (0.1 + 20) / 2 = 10.05
    auto [a1, s1] = s.alpha_sigma(1.0);
    CHECK(a1 == doctest::Approx(std::exp(-5.025)).epsilon(1e-14));
    CHECK(a1 > 6.5e-3);
    CHECK(a1 < 6.6e-3);
    CHECK(s1 == doctest::Approx(std::sqrt(1.0 - a1 * a1)).epsilon(1e-14));
}

TEST_CASE("variance-preserving identity on a dense grid") {
    auto s = default_sched();
    for (int i = 0; i <= 1000; ++i) {
        double t = static_cast<double>(i) / 1000.0;
        auto [a, sg] = s.alpha_sigma(t);
        CHECK(std::abs(a * a + sg * sg - 1.0) <= 1e-12);
    }
}

TEST_CASE("perturb endpoints and affinity") {
    auto s = default_sched();
    Tensor y0 = Tensor::image(1, 2, 2);
    y0[0] = 0.5;
    y0[1] = -0.25;
    y0[2] = 1.0;
    y0[3] = -1.0;
    Tensor z = Tensor::image(1, 2, 2);

    // t = 0 returns y0 regardless of z
    Tensor zt = z;
    zt[0] = 3.0;
    Tensor p0 = s.perturb(y0, 0.0, zt);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p0[i] == y0[i]);

    // zero noise returns alpha * y0
    Tensor p = s.perturb(y0, 0.4, z);
    double a = s.alpha(0.4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(a * y0[i]).epsilon(1e-15));

    // affine in y0 at zero noise
    Tensor y2 = y0;
    y2 *= 3.0;
    Tensor p2 = s.perturb(y2, 0.4, z);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p2[i] == doctest::Approx(3.0 * p[i]).epsilon(1e-14));

    Tensor bad = Tensor::image(1, 2, 3);
    CHECK_THROWS_AS(s.perturb(y0, 0.4, bad), ShapeError);
}

TEST_CASE("perturbation Monte-Carlo statistics match the kernel") {
    auto s = default_sched();
    Tensor y0 = Tensor::image(2, 2, 2);
    for (std::size_t i = 0; i < y0.size(); ++i) y0[i] = 0.2 * static_cast<double>(i) - 0.5;

    const int n = 10000;
    double t = 0.4;
    auto [a, sg] = s.alpha_sigma(t);
    NoiseStream rng(2024, rng_domain::aux, 10);
    std::vector<double> mean(y0.size(), 0.0), var(y0.size(), 0.0);
    for (int k = 0; k < n; ++k) {
        Tensor p = s.perturb(y0, t, rng.gaussian_like(y0));
        for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
    }
    for (auto& m : mean) m /= n;
    NoiseStream rng2(2024, rng_domain::aux, 10);
    for (int k = 0; k < n; ++k) {
        Tensor p = s.perturb(y0, t, rng2.gaussian_like(y0));
        for (std::size_t i = 0; i < p.size(); ++i) {
            double d = p[i] - mean[i];
            var[i] += d * d;
        }
    }
    double se = sg / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < y0.size(); ++i) {
        CHECK(std::abs(mean[i] - a * y0[i]) <= 3.0 * se);
        CHECK(var[i] / (n - 1) == doctest::Approx(sg * sg).epsilon(0.05));
    }
}

TEST_CASE("drift is odd, linear and matches its definition") {
    auto s = default_sched();
    Tensor zero = Tensor::vec(3);
    Tensor d0 = s.drift(zero, 0.3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d0[i] == 0.0);

    // beta(t) = 1 at t = (1 - 0.1) / 19.9
    double t1 = (1.0 - 0.1) / 19.9;
    Tensor y = Tensor::vec(1);
    y[0] = 2.0;
    CHECK(s.drift(y, t1)[0] == doctest::Approx(-1.0).epsilon(1e-12));

    Tensor ny = y;
    ny *= -1.0;
    CHECK(s.drift(ny, 0.7)[0] == doctest::Approx(-s.drift(y, 0.7)[0]).epsilon(1e-15));
}

TEST_CASE("diffusion is sqrt(beta) and monotone for the linear schedule") {
    auto s = default_sched();
    CHECK(s.diffusion(0.0) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-15));
    CHECK(s.diffusion(0.0) == doctest::Approx(0.31623).epsilon(1e-4));
    // beta = 4 at t = 3.9 / 19.9
    CHECK(s.diffusion(3.9 / 19.9) == doctest::Approx(2.0).epsilon(1e-12));
    double prev = s.diffusion(0.0);
    for (int i = 1; i <= 20; ++i) {
        double cur = s.diffusion(i / 20.0);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("kernel matches the discretized forward SDE marginals (1-D)") {
    // Propagate mean and variance exactly through the Euler discretization
    // y += -1/2 beta y h + sqrt(beta h) z and compare to alpha/sigma.
    auto s = default_sched();
    const int steps = 1000;
    double t_end = 0.8;
    double h = t_end / steps;
    double m = 1.0;  // start at y0 = 1, var 0
    double v = 0.0;
    for (int i = 0; i < steps; ++i) {
        double t = i * h;
        double b = s.beta(t);
        double factor = 1.0 - 0.5 * b * h;
        m *= factor;
        v = v * factor * factor + b * h;
    }
    auto [a, sg] = s.alpha_sigma(t_end);
    CHECK(m == doctest::Approx(a).epsilon(0.02));
    CHECK(v == doctest::Approx(sg * sg).epsilon(0.02));
}

TEST_CASE("forward bridge composes to the marginal kernel") {
    auto s = default_sched();
    // alpha(t) = ratio * alpha(s) and var = sigma(t)^2 - ratio^2 sigma(s)^2 >= 0
    auto [ratio, var] = s.forward_bridge(0.3, 0.5);
    CHECK(ratio == doctest::Approx(s.alpha(0.5) / s.alpha(0.3)).epsilon(1e-14));
    double expect_var = s.sigma(0.5) * s.sigma(0.5) - ratio * ratio * s.sigma(0.3) * s.sigma(0.3);
    CHECK(var == doctest::Approx(expect_var).epsilon(1e-12));
    CHECK(var >= 0.0);
    CHECK_THROWS_AS(s.forward_bridge(0.5, 0.3), DomainError);
}
