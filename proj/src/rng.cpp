#include "inv2inv/rng.hpp"

#include <cmath>

namespace inv2inv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<std::uint32_t, 4> NoiseStream::next_block() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        stream_,
        domain_,
    };
    std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32),
    };
    ++block_;
    return philox4x32(ctr, key);
}

double NoiseStream::uniform() {
    if (has_uniform_) {
        has_uniform_ = false;
        return pending_uniform_;
    }
    auto o = next_block();
    std::uint64_t a = (static_cast<std::uint64_t>(o[0]) << 32) | o[1];
    std::uint64_t b = (static_cast<std::uint64_t>(o[2]) << 32) | o[3];
    pending_uniform_ = static_cast<double>(b >> 11) * kInv53;
    has_uniform_ = true;
    return static_cast<double>(a >> 11) * kInv53;
}

std::uint64_t NoiseStream::uniform_index(std::uint64_t n) {
    auto o = next_block();
    std::uint64_t a = (static_cast<std::uint64_t>(o[0]) << 32) | o[1];
    return a % n;
}

double NoiseStream::gaussian() {
    if (has_gaussian_) {
        has_gaussian_ = false;
        return pending_gaussian_;
    }
    auto o = next_block();
    std::uint64_t a = (static_cast<std::uint64_t>(o[0]) << 32) | o[1];
    std::uint64_t b = (static_cast<std::uint64_t>(o[2]) << 32) | o[3];
    double u1 = (static_cast<double>(a >> 11) + 1.0) * kInv53;  // (0,1]
    double u2 = static_cast<double>(b >> 11) * kInv53;          // [0,1)
    double r = std::sqrt(-2.0 * std::log(u1));
    pending_gaussian_ = r * std::sin(kTwoPi * u2);
    has_gaussian_ = true;
    return r * std::cos(kTwoPi * u2);
}

Tensor NoiseStream::gaussian_tensor(const std::vector<std::size_t>& shape) {
    Tensor t(shape);
    // Tensor fills never reuse a leftover scalar: each tensor starts on a
    // fresh block so draw counts are a pure function of the tensor size.
    has_gaussian_ = false;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = gaussian();
    has_gaussian_ = false;
    return t;
}

}  // namespace inv2inv
