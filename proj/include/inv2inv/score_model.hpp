#pragma once

#include <memory>

#include "inv2inv/gmm.hpp"
#include "inv2inv/score_net.hpp"

namespace inv2inv {

// Interchangeable score backends for the sampler: the exact mixture oracle
// and the trained network. Implementations are read-only after construction
// and safe to share across concurrent trajectories.
struct ScoreModel {
    virtual ~ScoreModel() = default;
    virtual Tensor score(const Tensor& y, double t) const = 0;
};

class GmmScoreModel final : public ScoreModel {
public:
    GmmScoreModel(GaussianMixture gm, SdeSchedule sched)
        : gm_(std::move(gm)), sched_(std::move(sched)) {}

    Tensor score(const Tensor& y, double t) const override { return gm_.score(sched_, y, t); }

    const GaussianMixture& mixture() const { return gm_; }

private:
    GaussianMixture gm_;
    SdeSchedule sched_;
};

class NetScoreModel final : public ScoreModel {
public:
    explicit NetScoreModel(ScoreNet net) : net_(std::move(net)) {}

    Tensor score(const Tensor& y, double t) const override { return net_.score(y, t); }

    const ScoreNet& net() const { return net_; }

private:
    ScoreNet net_;
};

}  // namespace inv2inv
