// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/snapshot.hpp"

#include "pathforget/error.hpp"
#include "pathforget/report.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace pathforget {
namespace {

constexpr std::string_view kMagic = "PFSNAP01";

static_assert(std::endian::native == std::endian::little, "snapshot encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("truncated snapshot: ") + what, pos_);
        }
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    template <typename T>
    T get(const char* what) {
        T value;
        std::memcpy(&value, take(sizeof(T), what).data(), sizeof(T));
        return value;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

nlohmann::ordered_json manifest(const Model& model) {
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const auto& info : model.blocks()) {
        nlohmann::ordered_json b;
        b["name"] = info.name;
        b["kind"] = std::string(to_string(info.kind));
        b["shape"] = info.shape;
        b["head"] = info.head_id ? nlohmann::ordered_json(*info.head_id) : nlohmann::ordered_json(nullptr);
        blocks.push_back(std::move(b));
    }
    nlohmann::ordered_json m;
    m["head_count"] = model.config().head_count;
    m["blocks"] = std::move(blocks);
    return m;
}

} // namespace

std::string encode_snapshot(const Model& model) {
    const std::string text = manifest(model).dump();
    std::string out(kMagic);
    put<std::uint32_t>(out, kSnapshotVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + model.parameter_count() * sizeof(double));
    for (const auto& t : model.parameters()) {
        out.append(reinterpret_cast<const char*>(t.raw()), t.size() * sizeof(double));
    }
    return out;
}

Model decode_snapshot(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(kMagic.size(), "magic") != kMagic) {
        throw FormatError("not a parameter snapshot", 0);
    }
    const auto version_at = in.offset();
    const auto version = in.get<std::uint32_t>("version");
    if (version != kSnapshotVersion) {
        throw FormatError("unsupported snapshot version " + std::to_string(version), version_at);
    }
    const auto length = in.get<std::uint64_t>("manifest length");
    const auto manifest_at = in.offset();
    if (length > in.remaining()) {
        throw FormatError("truncated snapshot: manifest", manifest_at);
    }
    const auto text = in.take(static_cast<std::size_t>(length), "manifest");

    nlohmann::json m;
    try {
        m = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed snapshot manifest: ") + e.what(), manifest_at + e.byte);
    }

    std::size_t head_count = 0;
    std::vector<BlockInfo> declared;
    try {
        head_count = m.at("head_count").get<std::size_t>();
        for (const auto& b : m.at("blocks")) {
            BlockInfo info{b.at("name").get<std::string>(), parse_param_kind(b.at("kind").get<std::string>()),
                           b.at("shape").get<Shape>(), std::nullopt};
            if (!b.at("head").is_null()) {
                info.head_id = b.at("head").get<std::size_t>();
            }
            declared.push_back(std::move(info));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid snapshot manifest: ") + e.what(), manifest_at);
    }
    if (head_count == 0) {
        throw ConsistencyError("snapshot declares zero heads");
    }

    const auto config = ModelConfig::standard(head_count);
    if (declared != block_layout(config)) {
        throw ConsistencyError("snapshot blocks do not match the standard layout for " + std::to_string(head_count) +
                               " head(s)");
    }

    std::vector<Tensor> values;
    values.reserve(declared.size());
    for (const auto& info : declared) {
        const auto raw = in.take(info.size() * sizeof(double), "parameter values");
        std::vector<double> data(info.size());
        std::memcpy(data.data(), raw.data(), raw.size());
        values.emplace_back(info.shape, std::move(data));
    }
    if (in.remaining() != 0) {
        throw FormatError("trailing bytes after snapshot values", in.offset());
    }

    auto model = Model::build(config, 0);
    model.set_parameters(values);
    return model;
}

void save_snapshot(const Model& model, const std::filesystem::path& path) { write_text(path, encode_snapshot(model)); }

Model load_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_text(path)); }

} // namespace pathforget
