#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inv2inv/tensor.hpp"

namespace inv2inv {

// Procedural photo/sketch/exemplar triples: one filled shape (ellipse,
// triangle, rectangle or blob) with a palette color over a background, with
// mild shading; the sketch is the edge extraction of the photo, optionally
// warped by a smooth seeded displacement field ("freehand" mode); the
// exemplar is an independently drawn photo.
struct ToyDatasetSpec {
    std::size_t size = 32;  // square images
    std::size_t channels = 3;
    std::size_t count = 16;
    double jitter = 0.0;  // freehand warp amplitude, in pixels
    std::uint64_t seed = 0;
};

struct ToyTriple {
    Tensor photo;
    Tensor sketch;
    Tensor exemplar;
};

// Pure function of (spec, index): the same pair always produces identical
// tensors, independent of any other triple having been generated.
ToyTriple generate_triple(const ToyDatasetSpec& spec, std::size_t index);

Tensor generate_photo(const ToyDatasetSpec& spec, std::size_t index);

struct DatasetEntry {
    std::size_t id;
    std::string photo;
    std::string sketch;
    std::string exemplar;
};

// Writes tensors, image previews and index.csv into out_dir.
void generate_toy_dataset(const ToyDatasetSpec& spec, const std::filesystem::path& out_dir);

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir);

// All photos of a generated dataset, in index order.
std::vector<Tensor> load_dataset_photos(const std::filesystem::path& dir);

}  // namespace inv2inv
