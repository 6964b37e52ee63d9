#include "inv2inv/sde.hpp"

#include <cmath>

namespace inv2inv {

namespace {
// Step times accumulate one or two ulps of error when computed as i * h, so
// the domain check tolerates a hair of slack and clamps back onto [0, T].
constexpr double kTimeSlack = 1e-9;
}  // namespace

SdeSchedule::SdeSchedule(double beta_min, double beta_max, double horizon_T)
    : beta_min_(beta_min), beta_max_(beta_max), horizon_(horizon_T) {
    if (!(beta_min > 0.0) || !(beta_min < beta_max))
        throw DomainError("schedule requires 0 < beta_min < beta_max");
    if (!(horizon_T > 0.0)) throw DomainError("schedule requires horizon T > 0");
}

double SdeSchedule::checked_time(double t) const {
    double slack = kTimeSlack * horizon_;
    if (t < -slack || t > horizon_ + slack)
        throw DomainError("time outside [0, T]");
    return t < 0.0 ? 0.0 : (t > horizon_ ? horizon_ : t);
}

double SdeSchedule::beta(double t) const {
    t = checked_time(t);
    return beta_min_ + (t / horizon_) * (beta_max_ - beta_min_);
}

std::pair<double, double> SdeSchedule::alpha_sigma(double t) const {
    t = checked_time(t);
    // int_0^t beta = beta_min * t + (beta_max - beta_min) * t^2 / (2T)
    double integral = beta_min_ * t + (beta_max_ - beta_min_) * t * t / (2.0 * horizon_);
    double a = std::exp(-0.5 * integral);
    double s = std::sqrt(std::max(0.0, 1.0 - a * a));
    return {a, s};
}

Tensor SdeSchedule::perturb(const Tensor& y0, double t, const Tensor& z) const {
    y0.check_same(z);
    auto [a, s] = alpha_sigma(t);
    Tensor out = y0;
    out *= a;
    out.axpy(s, z);
    return out;
}

Tensor SdeSchedule::drift(const Tensor& y, double t) const {
    Tensor out = y;
    out *= -0.5 * beta(t);
    return out;
}

double SdeSchedule::diffusion(double t) const { return std::sqrt(beta(t)); }

std::pair<double, double> SdeSchedule::forward_bridge(double s, double t) const {
    if (s > t) throw DomainError("forward bridge requires s <= t");
    auto [as, ss] = alpha_sigma(s);
    auto [at, st] = alpha_sigma(t);
    double ratio = at / as;
    double var = st * st - ratio * ratio * ss * ss;
    return {ratio, std::max(0.0, var)};
}

}  // namespace inv2inv
