// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/data.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pathforget {

/// One IDX file of a dataset and its decompressed length.
struct RemoteFile {
    std::string name;
    std::uint64_t length;
};

/// The four files making up MNIST-style datasets (identical names and sizes for both sources).
std::vector<RemoteFile> dataset_files(Source source);

/// Built-in download location; override with the mirror argument.
std::string default_mirror(Source source);

/// Default cache root: $PATHFORGET_DATA_DIR, else $XDG_CACHE_HOME/pathforget, else ~/.cache/pathforget.
std::filesystem::path default_cache_dir();

struct DatasetFiles {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::size_t downloaded = 0; // files fetched over the network by this call
};

/// <cache>/<source>/<file> paths; nothing is checked.
DatasetFiles cached_files(Source source, const std::filesystem::path& cache_dir);

/// Ensures all four files are cached and have their declared lengths.
///
/// Missing files are downloaded from `<mirror_url>/<file>.gz` (http, https or
/// file URLs), gunzipped, length-checked and atomically moved into the cache.
/// An empty mirror means offline: the cache must already be complete.
DatasetFiles fetch_dataset(Source source, const std::string& mirror_url, const std::filesystem::path& cache_dir);

/// Loads one split from a populated cache.
Dataset load_cached(Source source, Split split, const std::filesystem::path& cache_dir);

std::vector<std::uint8_t> download(const std::string& url);
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> compressed);

} // namespace pathforget
