// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pathforget {

/// Binary parameter snapshot: the 8-byte magic "PFSNAP01", a little-endian u32
/// format version, a u64 manifest length, a JSON manifest of blocks
/// (name, kind, shape, head) and head count, then every value as a
/// little-endian IEEE-754 double in block order.
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string encode_snapshot(const Model& model);

/// Throws FormatError on malformed bytes and ConsistencyError when the manifest
/// does not describe the standard layout for its head count.
Model decode_snapshot(std::string_view bytes);

void save_snapshot(const Model& model, const std::filesystem::path& path);
Model load_snapshot(const std::filesystem::path& path);

} // namespace pathforget
