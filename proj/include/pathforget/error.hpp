// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace pathforget {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its documented domain.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Two pieces of state that must agree do not (shapes, fingerprints, counts).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// An API was called in the wrong order or with foreign objects.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed binary input. Carries the byte offset where parsing stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// A remote file could not be obtained.
class FetchError : public Error {
public:
    using Error::Error;
};

/// A cached or downloaded file does not have its declared length.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& what, const std::filesystem::path& path)
        : Error(what + ": " + path.string()), path_(path) {}

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace pathforget
