#pragma once

#include <array>
#include <cstdint>

#include "inv2inv/tensor.hpp"

namespace inv2inv {

// Philox4x32-10 counter-based generator. Chosen so that seeded runs reproduce
// bit-for-bit across platforms and languages: the mapping from (seed, domain,
// stream, block) to output words is fixed and endianness-free.
//
// Counter layout per 128-bit block:
//   ctr[0] = low 32 bits of the block index
//   ctr[1] = high 32 bits of the block index
//   ctr[2] = stream id   (purpose within a domain, e.g. trajectory noise)
//   ctr[3] = domain id   (sampling / training / dataset generation)
// Key = 64-bit seed split into (low, high) words.
//
// Doubles: each block yields two u64 words a = (o0<<32)|o1, b = (o2<<32)|o3.
// uniform(a) = (a >> 11) * 2^-53 in [0,1).
// Gaussians via Box-Muller on u1 = ((a>>11)+1) * 2^-53 in (0,1] and
// u2 = (b>>11) * 2^-53: z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = ... sin(...).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// One independent draw stream. Copyable; copies continue from the same block
// position. All consumption is explicit so tests can count draws.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint32_t domain, std::uint32_t stream_id)
        : seed_(seed), domain_(domain), stream_(stream_id) {}

    // Two uniforms in [0,1) per block.
    double uniform();

    // Uniform integer in [0, n); n >= 1. Modulo reduction on a 64-bit word.
    std::uint64_t uniform_index(std::uint64_t n);

    double gaussian();

    // Fills a tensor of the given shape with independent gaussians. Consumes
    // ceil(size/2) blocks; an odd trailing gaussian discards its pair.
    Tensor gaussian_tensor(const std::vector<std::size_t>& shape);
    Tensor gaussian_like(const Tensor& t) { return gaussian_tensor(t.shape()); }

    std::uint64_t blocks_consumed() const { return block_; }

private:
    std::array<std::uint32_t, 4> next_block();

    std::uint64_t seed_;
    std::uint32_t domain_;
    std::uint32_t stream_;
    std::uint64_t block_ = 0;
    // pending scalar state
    bool has_uniform_ = false;
    double pending_uniform_ = 0.0;
    bool has_gaussian_ = false;
    double pending_gaussian_ = 0.0;
};

// Domains keep unrelated consumers off each other's streams, so e.g. a config
// change in training never shifts sampling noise.
namespace rng_domain {
inline constexpr std::uint32_t sampling = 0;
inline constexpr std::uint32_t training = 1;
inline constexpr std::uint32_t dataset = 2;
inline constexpr std::uint32_t aux = 3;
}  // namespace rng_domain

// Stream ids within the sampling domain. Stage k occupies ids
// [k*stride, (k+1)*stride). Keeping every purpose on its own stream makes
// ablations bit-comparable: a disabled energy term consumes nothing.
namespace sampling_stream {
inline constexpr std::uint32_t stride = 8;
inline constexpr std::uint32_t start_point = 0;
inline constexpr std::uint32_t trajectory = 1;
inline constexpr std::uint32_t sketch_perturb = 2;
inline constexpr std::uint32_t exemplar_perturb = 3;
inline constexpr std::uint32_t repeat_renoise = 4;

inline std::uint32_t id(std::uint32_t stage, std::uint32_t purpose) {
    return stage * stride + purpose;
}
}  // namespace sampling_stream

}  // namespace inv2inv
