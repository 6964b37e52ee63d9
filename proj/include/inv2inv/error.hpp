#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inv2inv {

// Base for all library errors so callers can catch one type at the CLI boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape disagreement (dims, divisibility, channel count).
struct ShapeError : Error {
    using Error::Error;
};

// Argument outside its mathematical domain (t outside [0, T], sigma == 0, ...).
struct DomainError : Error {
    using Error::Error;
};

// Malformed file content (tensor files, images, configs, manifests).
struct ParseError : Error {
    using Error::Error;
};

// Config value fails validation (negative weight, zero steps, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Training diverged; carries the iteration at which NaN appeared.
struct TrainingError : Error {
    TrainingError(const std::string& msg, std::size_t iter)
        : Error(msg), iteration(iter) {}
    std::size_t iteration;
};

// Sampling trajectory produced a non-finite value; carries stage and step.
struct SamplingError : Error {
    SamplingError(const std::string& msg, int stage_, int step_)
        : Error(msg), stage(stage_), step(step_) {}
    int stage;
    int step;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace inv2inv
