#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codistill/losses.hpp"
#include "codistill/tensor.hpp"

namespace codistill {

// Immutable feature/label pair. Features are [N, ...]; labels are 0-based.
struct Dataset {
    Tensor features;
    LabelBatch labels;
    std::string name;
    std::size_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    // Per-sample shape (batch dim stripped).
    Shape sample_shape() const;
};

// A stratified train/test partition of a source dataset. Index vectors refer
// to rows of the source; they are disjoint and together cover it.
struct Split {
    Dataset train;
    Dataset test;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Isotropic Gaussian clusters, one per class, centered at separation * u_c
// where the unit directions u_c are spread evenly on a circle in the first
// two feature dimensions. separation therefore controls task difficulty
// directly: 0 is pure chance, ~10 is trivially separable.
Dataset gen_gaussian_blobs(std::size_t classes,
                           std::size_t per_class,
                           std::size_t dim,
                           double separation,
                           std::uint64_t seed);

// Single-channel [N, 1, side, side] images: each class gets a distinct
// spatial frequency pattern, symmetric under horizontal flip, plus Gaussian
// pixel noise. side >= 8.
Dataset gen_synthetic_images(std::size_t classes,
                             std::size_t per_class,
                             std::size_t side,
                             std::uint64_t seed);

// CSV ingestion: header row required, label column selected by name, numeric
// features, integer labels. The class count is inferred as max label + 1;
// classes absent from the file are permitted and reported via `warnings`.
Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column,
                 std::vector<std::string>* warnings = nullptr);

void save_csv(const Dataset& ds, const std::filesystem::path& path,
              const std::string& label_column = "label");

// Stratified 80:20 split, deterministic in the seed. Needs N >= 5. Every
// class with at least one sample keeps at least one sample in train.
Split split_80_20(const Dataset& ds, std::uint64_t seed);

}  // namespace codistill
