#include "inv2inv/dataset.hpp"

#include <cmath>
#include <fstream>

#include "inv2inv/csv.hpp"
#include "inv2inv/energy.hpp"
#include "inv2inv/io.hpp"
#include "inv2inv/rng.hpp"

namespace inv2inv {

namespace {

constexpr double kPi = 3.14159265358979323846;

// fills are saturated, backgrounds muted; the two palettes never overlap
const double kFills[8][3] = {
    {0.9, -0.7, -0.7},  {-0.7, 0.9, -0.7}, {-0.7, -0.7, 0.9}, {0.9, 0.9, -0.7},
    {0.9, -0.7, 0.9},   {-0.7, 0.9, 0.9},  {0.8, 0.3, -0.3},  {-0.3, 0.3, 0.8},
};
const double kBackgrounds[4][3] = {
    {0.75, 0.75, 0.7},
    {-0.75, -0.7, -0.75},
    {0.15, 0.05, -0.1},
    {-0.15, 0.1, 0.2},
};

struct Shape {
    int kind;  // 0 ellipse, 1 triangle, 2 rectangle, 3 blob
    double cx, cy;
    double a, b;      // radii / half extents
    double rot;
    double tri_r[3];  // per-vertex radius factors
    double blob_amp[3], blob_phase[3];
};

Shape draw_shape(NoiseStream& rng) {
    Shape s;
    s.kind = static_cast<int>(rng.uniform_index(4));
    s.cx = 0.5 + 0.3 * (rng.uniform() - 0.5);
    s.cy = 0.5 + 0.3 * (rng.uniform() - 0.5);
    s.a = 0.18 + 0.17 * rng.uniform();
    s.b = 0.18 + 0.17 * rng.uniform();
    s.rot = 2.0 * kPi * rng.uniform();
    for (int i = 0; i < 3; ++i) {
        s.tri_r[i] = 0.8 + 0.4 * rng.uniform();
        s.blob_amp[i] = 0.12 * rng.uniform();
        s.blob_phase[i] = 2.0 * kPi * rng.uniform();
    }
    return s;
}

bool inside(const Shape& s, double u, double v) {
    double dx = u - s.cx, dy = v - s.cy;
    double x = dx * std::cos(s.rot) + dy * std::sin(s.rot);
    double y = -dx * std::sin(s.rot) + dy * std::cos(s.rot);
    switch (s.kind) {
        case 0:  // ellipse
            return (x * x) / (s.a * s.a) + (y * y) / (s.b * s.b) <= 1.0;
        case 1: {  // triangle
            double px[3], py[3];
            for (int i = 0; i < 3; ++i) {
                double ang = 2.0 * kPi * i / 3.0;
                px[i] = s.a * s.tri_r[i] * std::cos(ang);
                py[i] = s.a * s.tri_r[i] * std::sin(ang);
            }
            auto cross = [&](int i, int j) {
                return (px[j] - px[i]) * (y - py[i]) - (py[j] - py[i]) * (x - px[i]);
            };
            double c0 = cross(0, 1), c1 = cross(1, 2), c2 = cross(2, 0);
            return (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
        }
        case 2:  // rectangle
            return std::abs(x) <= s.a && std::abs(y) <= s.b;
        default: {  // blob
            double r = std::sqrt(x * x + y * y);
            double ang = std::atan2(y, x);
            double radius = s.a;
            for (int j = 0; j < 3; ++j)
                radius *= 1.0 + s.blob_amp[j] * std::cos((j + 2) * ang + s.blob_phase[j]);
            return r <= radius;
        }
    }
}

// Stream ids within the dataset domain; one group of four per triple.
constexpr std::uint32_t kPhotoParams = 0;
constexpr std::uint32_t kExemplarParams = 1;
constexpr std::uint32_t kJitterParams = 2;

Tensor render_photo(const ToyDatasetSpec& spec, NoiseStream& rng) {
    std::size_t n = spec.size;
    Shape shape = draw_shape(rng);
    const double* fill = kFills[rng.uniform_index(8)];
    const double* bg = kBackgrounds[rng.uniform_index(4)];

    Tensor img = Tensor::image(spec.channels, n, n);
    constexpr int kSub = 3;  // 3x3 coverage supersampling for soft edges
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            double cov = 0.0;
            for (int sy = 0; sy < kSub; ++sy)
                for (int sx = 0; sx < kSub; ++sx) {
                    double u = (static_cast<double>(x) + (sx + 0.5) / kSub) / n;
                    double v = (static_cast<double>(y) + (sy + 0.5) / kSub) / n;
                    if (inside(shape, u, v)) cov += 1.0;
                }
            cov /= kSub * kSub;
            double shade =
                0.12 * (static_cast<double>(x) / n + static_cast<double>(y) / n - 1.0);
            for (std::size_t c = 0; c < spec.channels; ++c) {
                double base = c < 3 ? bg[c] + cov * (fill[c] - bg[c]) : 0.0;
                img.at(c, y, x) = base + shade;
            }
        }
    img.clamp_(-1.0, 1.0);
    return img;
}

// Smooth seeded displacement field, bilinear resampling with clamped reads.
Tensor warp_sketch(const Tensor& sketch, double amplitude, NoiseStream& rng) {
    std::size_t h = sketch.height(), w = sketch.width();
    double fx1 = 1.0 + rng.uniform_index(3), fy1 = 1.0 + rng.uniform_index(3);
    double p1 = 2.0 * kPi * rng.uniform(), p2 = 2.0 * kPi * rng.uniform();
    double p3 = 2.0 * kPi * rng.uniform(), p4 = 2.0 * kPi * rng.uniform();

    Tensor out = Tensor::image(1, h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
            double dx = amplitude * std::sin(2.0 * kPi * fy1 * v + p1) *
                        std::cos(2.0 * kPi * u + p2);
            double dy = amplitude * std::sin(2.0 * kPi * fx1 * u + p3) *
                        std::cos(2.0 * kPi * v + p4);
            double sx = static_cast<double>(x) - dx;
            double sy = static_cast<double>(y) - dy;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(w - 1));
            sy = std::min(std::max(sy, 0.0), static_cast<double>(h - 1));
            std::size_t x0 = static_cast<std::size_t>(sx);
            std::size_t y0 = static_cast<std::size_t>(sy);
            std::size_t x1 = std::min(x0 + 1, w - 1);
            std::size_t y1 = std::min(y0 + 1, h - 1);
            double tx = sx - static_cast<double>(x0), ty = sy - static_cast<double>(y0);
            out.at(0, y, x) = (1 - ty) * ((1 - tx) * sketch.at(0, y0, x0) + tx * sketch.at(0, y0, x1)) +
                              ty * ((1 - tx) * sketch.at(0, y1, x0) + tx * sketch.at(0, y1, x1));
        }
    return out;
}

std::uint32_t triple_stream(std::size_t index, std::uint32_t purpose) {
    return static_cast<std::uint32_t>(index) * 4u + purpose;
}

}  // namespace

Tensor generate_photo(const ToyDatasetSpec& spec, std::size_t index) {
    NoiseStream rng(spec.seed, rng_domain::dataset, triple_stream(index, kPhotoParams));
    return render_photo(spec, rng);
}

ToyTriple generate_triple(const ToyDatasetSpec& spec, std::size_t index) {
    ToyTriple t;
    t.photo = generate_photo(spec, index);
    EdgeExtractor edge;
    t.sketch = edge.sketch(t.photo);
    if (spec.jitter > 0.0) {
        NoiseStream jrng(spec.seed, rng_domain::dataset, triple_stream(index, kJitterParams));
        t.sketch = warp_sketch(t.sketch, spec.jitter, jrng);
    }
    NoiseStream erng(spec.seed, rng_domain::dataset, triple_stream(index, kExemplarParams));
    t.exemplar = render_photo(spec, erng);
    return t;
}

void generate_toy_dataset(const ToyDatasetSpec& spec, const std::filesystem::path& out_dir) {
    if (spec.count < 1) throw DomainError("dataset count must be >= 1");
    std::filesystem::create_directories(out_dir);
    std::ofstream index(out_dir / "index.csv", std::ios::trunc);
    if (!index) throw IoError("cannot write dataset index in " + out_dir.string());
    csv_write_row(index, {"id", "photo", "sketch", "exemplar"});
    char name[64];
    for (std::size_t i = 0; i < spec.count; ++i) {
        ToyTriple t = generate_triple(spec, i);
        std::snprintf(name, sizeof(name), "photo_%04zu", i);
        std::string photo = name;
        std::snprintf(name, sizeof(name), "sketch_%04zu", i);
        std::string sketch = name;
        std::snprintf(name, sizeof(name), "exemplar_%04zu", i);
        std::string exemplar = name;
        write_tensor(out_dir / (photo + ".ivit"), t.photo);
        write_tensor(out_dir / (sketch + ".ivit"), t.sketch);
        write_tensor(out_dir / (exemplar + ".ivit"), t.exemplar);
        write_image(out_dir / (photo + ".ppm"), t.photo);
        write_image(out_dir / (sketch + ".pgm"), t.sketch);
        write_image(out_dir / (exemplar + ".ppm"), t.exemplar);
        csv_write_row(index, {std::to_string(i), photo + ".ivit", sketch + ".ivit",
                              exemplar + ".ivit"});
    }
    if (!index) throw IoError("short write to dataset index");
}

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.csv");
    if (!in) throw IoError("cannot open dataset index in " + dir.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv_parse(text);
    if (rows.empty()) throw ParseError("empty dataset index");
    std::vector<DatasetEntry> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw ParseError("malformed dataset index row");
        out.push_back({std::stoul(rows[i][0]), rows[i][1], rows[i][2], rows[i][3]});
    }
    return out;
}

std::vector<Tensor> load_dataset_photos(const std::filesystem::path& dir) {
    std::vector<Tensor> photos;
    for (const DatasetEntry& e : read_dataset_index(dir))
        photos.push_back(read_tensor(dir / e.photo));
    return photos;
}

}  // namespace inv2inv
