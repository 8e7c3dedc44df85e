// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/data.hpp"

#include "pathforget/error.hpp"
#include "pathforget/rng.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

namespace pathforget {

std::string_view to_string(Source source) { return source == Source::Mnist ? "mnist" : "fashion_mnist"; }

Source parse_source(std::string_view text) {
    if (text == "mnist") {
        return Source::Mnist;
    }
    if (text == "fashion_mnist" || text == "fashion-mnist") {
        return Source::FashionMnist;
    }
    throw ValidationError("unknown dataset source '" + std::string(text) + "' (expected mnist or fashion_mnist)");
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

void Dataset::validate() const {
    if (pixels.size() != labels.size() * pixels_per_image()) {
        throw ConsistencyError("dataset holds " + std::to_string(pixels.size()) + " pixels for " +
                               std::to_string(labels.size()) + " labels of " + std::to_string(rows) + "x" +
                               std::to_string(cols));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 9) {
            throw ValidationError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                  " outside 0..9");
        }
    }
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
    if (bytes.size() < offset + 4) {
        throw FormatError(std::string(what) + ": truncated header", bytes.size());
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file", path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("failed reading file", path);
    }
    return bytes;
}

} // namespace

Dataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
    const std::uint32_t image_magic = read_be32(image_bytes, 0, "image file");
    if (image_magic != kIdxImageMagic) {
        throw FormatError("image file: bad magic number " + std::to_string(image_magic), 0);
    }
    const std::uint32_t label_magic = read_be32(label_bytes, 0, "label file");
    if (label_magic != kIdxLabelMagic) {
        throw FormatError("label file: bad magic number " + std::to_string(label_magic), 0);
    }

    Dataset ds;
    const std::size_t count = read_be32(image_bytes, 4, "image file");
    ds.rows = read_be32(image_bytes, 8, "image file");
    ds.cols = read_be32(image_bytes, 12, "image file");
    const std::size_t label_count = read_be32(label_bytes, 4, "label file");
    if (ds.rows == 0 || ds.cols == 0) {
        throw FormatError("image file: zero image extent", 8);
    }

    const std::size_t image_payload = count * ds.rows * ds.cols;
    if (image_bytes.size() < 16 + image_payload) {
        throw FormatError("image file: truncated, expected " + std::to_string(16 + image_payload) + " bytes",
                          image_bytes.size());
    }
    if (image_bytes.size() > 16 + image_payload) {
        throw FormatError("image file: trailing bytes after payload", 16 + image_payload);
    }
    if (label_bytes.size() < 8 + label_count) {
        throw FormatError("label file: truncated, expected " + std::to_string(8 + label_count) + " bytes",
                          label_bytes.size());
    }
    if (label_bytes.size() > 8 + label_count) {
        throw FormatError("label file: trailing bytes after payload", 8 + label_count);
    }
    if (count != label_count) {
        throw ConsistencyError("image file holds " + std::to_string(count) + " images but label file holds " +
                               std::to_string(label_count) + " labels");
    }

    ds.pixels.assign(image_bytes.begin() + 16, image_bytes.end());
    ds.labels.assign(label_bytes.begin() + 8, label_bytes.end());
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] > 9) {
            throw FormatError("label file: label " + std::to_string(ds.labels[i]) + " outside 0..9", 8 + i);
        }
    }
    return ds;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const std::vector<std::uint8_t> images = read_file(images_path);
    const std::vector<std::uint8_t> labels = read_file(labels_path);
    try {
        return parse_idx(images, labels);
    } catch (const FormatError& e) {
        throw FormatError(std::string(e.what()) + " in " + images_path.string() + " / " + labels_path.string(),
                          e.offset());
    }
}

std::vector<std::uint8_t> encode_idx_images(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + ds.pixels.size());
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(ds.size()));
    write_be32(out, static_cast<std::uint32_t>(ds.rows));
    write_be32(out, static_cast<std::uint32_t>(ds.cols));
    out.insert(out.end(), ds.pixels.begin(), ds.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + ds.labels.size());
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(ds.size()));
    out.insert(out.end(), ds.labels.begin(), ds.labels.end());
    return out;
}

PixelPermutation identity_permutation(std::size_t pixel_count) {
    PixelPermutation perm(pixel_count);
    std::iota(perm.begin(), perm.end(), std::uint32_t{0});
    return perm;
}

PixelPermutation random_permutation(std::size_t pixel_count, std::uint64_t seed) {
    PixelPermutation perm = identity_permutation(pixel_count);
    Rng rng(seed);
    rng.shuffle(std::span(perm));
    return perm;
}

Dataset permute_pixels(const Dataset& ds, const PixelPermutation& permutation) {
    const std::size_t n = ds.pixels_per_image();
    if (permutation.size() != n) {
        throw DimensionError("permutation covers " + std::to_string(permutation.size()) + " pixels, images have " +
                             std::to_string(n));
    }
    std::vector<bool> seen(n, false);
    for (std::uint32_t p : permutation) {
        if (p >= n || seen[p]) {
            throw ValidationError("pixel permutation is not a bijection");
        }
        seen[p] = true;
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::uint8_t* src = ds.pixels.data() + i * n;
        std::uint8_t* dst = out.pixels.data() + i * n;
        for (std::size_t p = 0; p < n; ++p) {
            dst[p] = src[permutation[p]];
        }
    }
    return out;
}

Dataset permute_pixels(const Dataset& ds, std::uint64_t permutation_seed) {
    return permute_pixels(ds, random_permutation(ds.pixels_per_image(), permutation_seed));
}

Dataset invert_intensities(const Dataset& ds) {
    Dataset out = ds;
    for (std::uint8_t& px : out.pixels) {
        px = static_cast<std::uint8_t>(255 - px);
    }
    return out;
}

std::vector<Dataset> split_by_classes(const Dataset& ds, const std::vector<ClassGroup>& groups) {
    std::array<int, 10> owner{};
    owner.fill(-1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int label : groups[g]) {
            if (label < 0 || label > 9) {
                throw ValidationError("class " + std::to_string(label) + " outside 0..9");
            }
            if (owner[static_cast<std::size_t>(label)] != -1) {
                throw ValidationError("class " + std::to_string(label) + " appears in more than one group");
            }
            owner[static_cast<std::size_t>(label)] = static_cast<int>(g);
        }
    }

    std::vector<std::vector<std::size_t>> members(groups.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int g = owner[ds.labels[i]];
        if (g >= 0) {
            members[static_cast<std::size_t>(g)].push_back(i);
        }
    }
    std::vector<Dataset> out;
    out.reserve(groups.size());
    for (const auto& indices : members) {
        out.push_back(subset(ds, indices));
    }
    return out;
}

std::vector<ClassGroup> standard_class_pairs() { return {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}; }

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.source = ds.source;
    out.split = ds.split;
    out.rows = ds.rows;
    out.cols = ds.cols;
    const std::size_t n = ds.pixels_per_image();
    out.pixels.reserve(indices.size() * n);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.size()) {
            throw ValidationError("example index " + std::to_string(i) + " out of range for " +
                                  std::to_string(ds.size()) + " examples");
        }
        const auto img = ds.image(i);
        out.pixels.insert(out.pixels.end(), img.begin(), img.end());
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

Dataset head(const Dataset& ds, std::size_t n) {
    std::vector<std::size_t> indices(std::min(n, ds.size()));
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    return subset(ds, indices);
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw ValidationError("cannot build an empty batch");
    }
    const std::size_t n = ds.pixels_per_image();
    std::vector<double> values;
    values.reserve(indices.size() * n);
    std::vector<int> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.size()) {
            throw ValidationError("example index " + std::to_string(i) + " out of range for " +
                                  std::to_string(ds.size()) + " examples");
        }
        for (std::uint8_t px : ds.image(i)) {
            values.push_back(static_cast<double>(px) / 255.0);
        }
        labels.push_back(ds.labels[i]);
    }
    return Batch{Tensor({indices.size(), ds.rows, ds.cols, 1}, std::move(values)), std::move(labels)};
}

Batch make_batch(const Dataset& ds) {
    std::vector<std::size_t> indices(ds.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    return make_batch(ds, indices);
}

std::uint64_t fingerprint(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint8_t byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (std::size_t v : {ds.size(), ds.rows, ds.cols}) {
        for (int shift = 0; shift < 64; shift += 8) {
            mix(static_cast<std::uint8_t>(v >> shift));
        }
    }
    for (std::uint8_t label : ds.labels) {
        mix(label);
    }
    for (std::uint8_t px : ds.pixels) {
        mix(px);
    }
    return h;
}

} // namespace pathforget
