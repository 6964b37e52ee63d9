#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "inv2inv/error.hpp"

namespace inv2inv {

// Dense row-major tensor of 64-bit reals. Rank >= 1. Images use (channels,
// height, width); flat vectors use rank 1. Values are unconstrained here:
// range checks and clamping happen at pipeline boundaries, not mid-trajectory.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)) {
        if (shape_.empty()) throw ShapeError("tensor rank must be >= 1");
        std::size_t n = 1;
        for (std::size_t d : shape_) {
            if (d == 0) throw ShapeError("tensor dimension must be nonzero");
            n *= d;
        }
        data_.assign(n, fill);
    }

    static Tensor image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0) {
        return Tensor({c, h, w}, fill);
    }

    static Tensor vec(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t channels() const { return dim3(0); }
    std::size_t height() const { return dim3(1); }
    std::size_t width() const { return dim3(2); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * height() + y) * width() + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * height() + y) * width() + x];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    // this += s * o
    Tensor& axpy(double s, const Tensor& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    Tensor& clamp_(double lo, double hi) {
        for (double& v : data_) v = v < lo ? lo : (v > hi ? hi : v);
        return *this;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void check_same(const Tensor& o) const {
        if (!same_shape(o)) throw ShapeError("tensor shape mismatch");
    }

private:
    std::size_t dim3(std::size_t i) const {
        if (shape_.size() != 3) throw ShapeError("tensor is not an image (rank != 3)");
        return shape_[i];
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
inline Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
inline Tensor operator*(double s, Tensor a) { return a *= s; }

inline double dot(const Tensor& a, const Tensor& b) {
    a.check_same(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Tensor& a) { return dot(a, a); }

// Mean over channels; result is (1, H, W). Used as the luminance proxy in
// front of the edge extractor.
Tensor channel_mean(const Tensor& img);

// Replicate a single-channel image across c channels.
Tensor broadcast_channels(const Tensor& img, std::size_t c);

}  // namespace inv2inv
