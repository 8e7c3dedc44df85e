// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace pathforget {

enum class Source { Mnist, FashionMnist };
enum class Split { Train, Test };

std::string_view to_string(Source source);
Source parse_source(std::string_view text);
std::string_view to_string(Split split);

/// Grayscale images with intensities 0..255 and labels 0..9.
struct Dataset {
    Source source = Source::Mnist;
    Split split = Split::Train;
    std::size_t rows = 28;
    std::size_t cols = 28;
    std::vector<std::uint8_t> pixels; // image-major, row-major within an image
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t pixels_per_image() const noexcept { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return std::span(pixels).subspan(i * pixels_per_image(), pixels_per_image());
    }

    /// Throws ConsistencyError/ValidationError when counts or labels are off.
    void validate() const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses in-memory IDX image and label files.
Dataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

std::vector<std::uint8_t> encode_idx_images(const Dataset& ds);
std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds);

/// out[p] = in[permutation[p]] for every pixel position p.
using PixelPermutation = std::vector<std::uint32_t>;

PixelPermutation identity_permutation(std::size_t pixel_count);
/// Seeded Fisher-Yates over pixel positions.
PixelPermutation random_permutation(std::size_t pixel_count, std::uint64_t seed);

Dataset permute_pixels(const Dataset& ds, const PixelPermutation& permutation);
Dataset permute_pixels(const Dataset& ds, std::uint64_t permutation_seed);

/// x -> 255 - x.
Dataset invert_intensities(const Dataset& ds);

using ClassGroup = std::vector<int>;

/// One dataset per group holding exactly that group's examples, in source order.
/// Groups must be pairwise disjoint.
std::vector<Dataset> split_by_classes(const Dataset& ds, const std::vector<ClassGroup>& groups);

/// (0,1) (2,3) (4,5) (6,7) (8,9).
std::vector<ClassGroup> standard_class_pairs();

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);
/// The first `n` examples (or all, if fewer).
Dataset head(const Dataset& ds, std::size_t n);

/// Pixels scaled by 1/255 into a [B x 28 x 28 x 1] tensor.
Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices);
Batch make_batch(const Dataset& ds);

/// FNV-1a over dimensions, labels and pixels.
std::uint64_t fingerprint(const Dataset& ds);

} // namespace pathforget
