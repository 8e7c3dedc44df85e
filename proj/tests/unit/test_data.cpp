// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/data.hpp"
#include "pathforget/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <fstream>

using namespace pathforget;
using pathforget::testing::tiny_dataset;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     const std::vector<std::uint8_t>& pixels) {
    std::vector<std::uint8_t> out;
    put_be32(out, 0x803);
    put_be32(out, count);
    put_be32(out, rows);
    put_be32(out, cols);
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    put_be32(out, 0x801);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

std::array<std::size_t, 256> histogram(std::span<const std::uint8_t> image) {
    std::array<std::size_t, 256> h{};
    for (auto p : image) {
        ++h[p];
    }
    return h;
}

} // namespace

TEST_SUITE("data") {
    TEST_CASE("IDX fixture parses to the written pixels and labels") {
        const std::vector<std::uint8_t> pixels{0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255};
        const std::vector<std::uint8_t> labels{7, 3};
        const Dataset ds = parse_idx(idx_images(2, 2, 3, pixels), idx_labels(labels));
        CHECK(ds.size() == 2);
        CHECK(ds.rows == 2);
        CHECK(ds.cols == 3);
        CHECK(ds.pixels == pixels);
        CHECK(ds.labels == labels);
        CHECK(ds.image(1)[0] == 250);

        CHECK(encode_idx_images(ds) == idx_images(2, 2, 3, pixels));
        CHECK(encode_idx_labels(ds) == idx_labels(labels));
    }

    TEST_CASE("IDX files round-trip through disk") {
        pathforget::testing::TempDir dir;
        const Dataset ds = tiny_dataset(5, 1);
        const auto write = [](const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
            std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                     static_cast<std::streamsize>(bytes.size()));
        };
        write(dir.path() / "img", encode_idx_images(ds));
        write(dir.path() / "lbl", encode_idx_labels(ds));
        const Dataset back = load_idx(dir.path() / "img", dir.path() / "lbl");
        CHECK(back.pixels == ds.pixels);
        CHECK(back.labels == ds.labels);
        CHECK_THROWS_AS(load_idx(dir.path() / "missing", dir.path() / "lbl"), IoError);
    }

    TEST_CASE("malformed IDX input is a format error") {
        const std::vector<std::uint8_t> pixels(8, 0);
        auto images = idx_images(2, 2, 2, pixels);
        auto labels = idx_labels({1, 2});

        auto bad_magic = images;
        bad_magic[3] = 0x02;
        CHECK_THROWS_AS(parse_idx(bad_magic, labels), FormatError);
        auto bad_label_magic = labels;
        bad_label_magic[3] = 0x03;
        CHECK_THROWS_AS(parse_idx(images, bad_label_magic), FormatError);

        auto truncated = images;
        truncated.pop_back();
        try {
            parse_idx(truncated, labels);
            FAIL("truncated image file accepted");
        } catch (const FormatError& e) {
            CHECK(e.offset() > 0);
        }
        CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>(7, 0), labels), FormatError);

        auto bad_label = idx_labels({1, 12});
        CHECK_THROWS_AS(parse_idx(images, bad_label), FormatError);
        auto trailing = labels;
        trailing.push_back(0);
        CHECK_THROWS_AS(parse_idx(images, trailing), FormatError);
        CHECK_THROWS_AS(parse_idx(idx_images(3, 2, 2, std::vector<std::uint8_t>(12, 0)), labels), ConsistencyError);
    }

    TEST_CASE("identity permutation leaves images unchanged") {
        const Dataset ds = tiny_dataset(4, 2);
        const Dataset same = permute_pixels(ds, identity_permutation(784));
        CHECK(same.pixels == ds.pixels);
        CHECK(same.labels == ds.labels);
    }

    TEST_CASE("random permutation is a seeded bijection that preserves histograms") {
        const Dataset ds = tiny_dataset(6, 3);
        const PixelPermutation p = random_permutation(784, 11);
        CHECK(p == random_permutation(784, 11));
        CHECK_FALSE(p == random_permutation(784, 12));
        PixelPermutation sorted = p;
        std::ranges::sort(sorted);
        CHECK(sorted == identity_permutation(784));

        const Dataset out = permute_pixels(ds, 11);
        CHECK(out.pixels == permute_pixels(ds, p).pixels);
        CHECK(out.labels == ds.labels);
        CHECK_FALSE(out.pixels == ds.pixels);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(histogram(out.image(i)) == histogram(ds.image(i)));
            for (std::size_t q = 0; q < 784; ++q) {
                REQUIRE(out.image(i)[q] == ds.image(i)[p[q]]);
            }
        }
    }

    TEST_CASE("bad permutations are rejected") {
        const Dataset ds = tiny_dataset(1, 4);
        CHECK_THROWS_AS(permute_pixels(ds, identity_permutation(100)), DimensionError);
        PixelPermutation dup = identity_permutation(784);
        dup[1] = 0;
        CHECK_THROWS_AS(permute_pixels(ds, dup), ValidationError);
    }

    TEST_CASE("inversion maps endpoints and is an involution") {
        Dataset ds = tiny_dataset(3, 5);
        ds.pixels[0] = 0;
        ds.pixels[1] = 255;
        ds.pixels[2] = 128;
        const Dataset inv = invert_intensities(ds);
        CHECK(inv.pixels[0] == 255);
        CHECK(inv.pixels[1] == 0);
        CHECK(inv.pixels[2] == 127);
        CHECK(inv.labels == ds.labels);
        CHECK(invert_intensities(inv).pixels == ds.pixels);
    }

    TEST_CASE("class split keeps exactly each group's examples in source order") {
        const Dataset ds = tiny_dataset(50, 6);
        const auto parts = split_by_classes(ds, standard_class_pairs());
        REQUIRE(parts.size() == 5);
        std::size_t total = 0;
        for (std::size_t g = 0; g < 5; ++g) {
            CHECK(parts[g].size() == 10);
            total += parts[g].size();
            for (std::size_t i = 0; i < parts[g].size(); ++i) {
                CHECK(parts[g].labels[i] / 2 == g);
            }
        }
        CHECK(total == ds.size());
        CHECK(parts[0].labels[0] == 0);
        CHECK(parts[0].labels[1] == 1);
        CHECK(std::ranges::equal(parts[0].image(1), ds.image(1)));

        CHECK_THROWS_AS(split_by_classes(ds, {{0, 1}, {1, 2}}), ValidationError);
        CHECK_THROWS_AS(split_by_classes(ds, {{10}}), ValidationError);
        const auto empty = split_by_classes(ds, {{}});
        REQUIRE(empty.size() == 1);
        CHECK(empty[0].size() == 0);
    }

    TEST_CASE("subsets, head and batches") {
        const Dataset ds = tiny_dataset(8, 7);
        const std::vector<std::size_t> idx{5, 2};
        const Dataset sub = subset(ds, idx);
        CHECK(sub.labels == std::vector<std::uint8_t>{5, 2});
        CHECK(head(ds, 3).size() == 3);
        CHECK(head(ds, 100).size() == 8);
        CHECK_THROWS_AS(subset(ds, std::vector<std::size_t>{8}), ValidationError);

        const Batch b = make_batch(ds, idx);
        CHECK(b.images.shape() == Shape{2, 28, 28, 1});
        CHECK(b.labels == std::vector<int>{5, 2});
        CHECK(b.images[0] == doctest::Approx(ds.image(5)[0] / 255.0).epsilon(1e-15));
        CHECK(b.images[784 + 17] == doctest::Approx(ds.image(2)[17] / 255.0).epsilon(1e-15));
        CHECK_THROWS_AS(make_batch(ds, std::vector<std::size_t>{}), ValidationError);
    }

    TEST_CASE("fingerprint depends on pixels and labels") {
        const Dataset ds = tiny_dataset(4, 8);
        Dataset other = ds;
        CHECK(fingerprint(ds) == fingerprint(other));
        other.pixels[100] ^= 1;
        CHECK(fingerprint(ds) != fingerprint(other));
        other = ds;
        other.labels[0] = 9;
        CHECK(fingerprint(ds) != fingerprint(other));
    }

    TEST_CASE("source names") {
        CHECK(parse_source("mnist") == Source::Mnist);
        CHECK(parse_source("fashion_mnist") == Source::FashionMnist);
        CHECK(to_string(Source::FashionMnist) == "fashion_mnist");
        CHECK_THROWS_AS(parse_source("cifar"), ValidationError);
    }
}
