#include "inv2inv/tensor.hpp"

namespace inv2inv {

Tensor channel_mean(const Tensor& img) {
    std::size_t c = img.channels(), h = img.height(), w = img.width();
    Tensor out = Tensor::image(1, h, w);
    double inv = 1.0 / static_cast<double>(c);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(0, y, x) += img.at(k, y, x) * inv;
    return out;
}

Tensor broadcast_channels(const Tensor& img, std::size_t c) {
    if (img.channels() != 1) throw ShapeError("broadcast_channels expects a single-channel image");
    Tensor out = Tensor::image(c, img.height(), img.width());
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < img.height(); ++y)
            for (std::size_t x = 0; x < img.width(); ++x) out.at(k, y, x) = img.at(0, y, x);
    return out;
}

}  // namespace inv2inv
