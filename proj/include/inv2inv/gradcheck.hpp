#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inv2inv/energy.hpp"

namespace inv2inv {

struct CheckResult {
    std::string name;
    std::size_t probes = 0;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Relative disagreement with a floor so near-zero coordinates compare
// absolutely against the overall gradient scale.
double rel_disagreement(double a, double b, double scale);

// Adjoint identity <A x, u> == <x, A^T u> on random probes; `forward` and
// `adjoint` may be the same operator (self-adjoint case). Takes the operator
// as a callable so broken implementations can be injected in tests.
CheckResult adjoint_identity_check(const std::string& name,
                                   const std::function<Tensor(const Tensor&)>& forward,
                                   const std::function<Tensor(const Tensor&)>& adjoint,
                                   const std::vector<std::size_t>& in_shape,
                                   const std::vector<std::size_t>& out_shape, std::size_t probes,
                                   double tolerance, std::uint64_t seed);

// The complete verification suite: energy gradients against central
// differences, projection idempotence and self-adjointness, pyramid adjoint
// identities, mixture score against the log-density finite difference, and
// the training-loss parameter gradient.
std::vector<CheckResult> run_gradient_checks(std::uint64_t seed, std::size_t probes);

}  // namespace inv2inv
