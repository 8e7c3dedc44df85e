// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/fetch.hpp"

#include "pathforget/error.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>

namespace pathforget {
namespace fs = std::filesystem;

std::vector<RemoteFile> dataset_files(Source) {
    return {
        {"train-images-idx3-ubyte", 47'040'016},
        {"train-labels-idx1-ubyte", 60'008},
        {"t10k-images-idx3-ubyte", 7'840'016},
        {"t10k-labels-idx1-ubyte", 10'008},
    };
}

std::string default_mirror(Source source) {
    if (source == Source::Mnist) {
        return "https://ossci-datasets.s3.amazonaws.com/mnist/";
    }
    return "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/";
}

fs::path default_cache_dir() {
    if (const char* dir = std::getenv("PATHFORGET_DATA_DIR"); dir != nullptr && *dir != '\0') {
        return dir;
    }
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0') {
        return fs::path(xdg) / "pathforget";
    }
    if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
        return fs::path(home) / ".cache" / "pathforget";
    }
    return fs::current_path() / ".pathforget-cache";
}

DatasetFiles cached_files(Source source, const fs::path& cache_dir) {
    const fs::path dir = cache_dir / std::string(to_string(source));
    const auto files = dataset_files(source);
    return DatasetFiles{dir / files[0].name, dir / files[1].name, dir / files[2].name, dir / files[3].name, 0};
}

namespace {

std::size_t write_body(char* data, std::size_t size, std::size_t count, void* user) {
    auto* body = static_cast<std::vector<std::uint8_t>*>(user);
    body->insert(body->end(), data, data + size * count);
    return size * count;
}

void init_curl_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::string join_url(const std::string& base, const std::string& file) {
    if (!base.empty() && base.back() == '/') {
        return base + file;
    }
    return base + "/" + file;
}

} // namespace

std::vector<std::uint8_t> download(const std::string& url) {
    init_curl_once();
    std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
    if (!curl) {
        throw FetchError("could not initialize libcurl for " + url);
    }
    std::vector<std::uint8_t> body;
    char error[CURL_ERROR_SIZE] = {0};
    curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT, 30L);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &write_body);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &body);
    curl_easy_setopt(curl.get(), CURLOPT_ERRORBUFFER, error);
    const CURLcode rc = curl_easy_perform(curl.get());
    if (rc != CURLE_OK) {
        throw FetchError("download of " + url + " failed: " + (error[0] != '\0' ? error : curl_easy_strerror(rc)));
    }
    return body;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> compressed) {
    z_stream stream{};
    // 16 + MAX_WBITS selects the gzip wrapper.
    if (inflateInit2(&stream, 16 + MAX_WBITS) != Z_OK) {
        throw FormatError("gzip: cannot initialize decoder", 0);
    }
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 20);
    stream.next_in = const_cast<Bytef*>(compressed.data());
    stream.avail_in = static_cast<uInt>(compressed.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        stream.next_out = chunk.data();
        stream.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&stream, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            const auto offset = stream.total_in;
            inflateEnd(&stream);
            throw FormatError("gzip: corrupt or truncated stream", offset);
        }
        out.insert(out.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(chunk.size() - stream.avail_out));
        if (rc == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
            const auto offset = stream.total_in;
            inflateEnd(&stream);
            throw FormatError("gzip: truncated stream", offset);
        }
    }
    inflateEnd(&stream);
    return out;
}

DatasetFiles fetch_dataset(Source source, const std::string& mirror_url, const fs::path& cache_dir) {
    DatasetFiles paths = cached_files(source, cache_dir);
    const fs::path dir = paths.train_images.parent_path();
    for (const RemoteFile& file : dataset_files(source)) {
        const fs::path target = dir / file.name;
        if (fs::exists(target)) {
            const auto length = fs::file_size(target);
            if (length != file.length) {
                throw IntegrityError("cached " + target.string() + " has " + std::to_string(length) +
                                     " bytes, expected " + std::to_string(file.length));
            }
            continue;
        }
        if (mirror_url.empty()) {
            throw FetchError("missing " + target.string() + " and no mirror given (offline)");
        }

        std::vector<std::uint8_t> payload;
        try {
            payload = gunzip(download(join_url(mirror_url, file.name + ".gz")));
        } catch (const FetchError& e) {
            throw FetchError("cannot fetch " + file.name + " into " + target.string() + ": " + e.what());
        } catch (const FormatError& e) {
            throw IntegrityError("downloaded " + file.name + ".gz is not valid gzip: " + e.what());
        }
        if (payload.size() != file.length) {
            throw IntegrityError("downloaded " + file.name + " has " + std::to_string(payload.size()) +
                                 " bytes, expected " + std::to_string(file.length));
        }

        fs::create_directories(dir);
        const fs::path partial = target.string() + ".partial";
        {
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw IoError("cannot write", partial);
            }
            out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
            if (!out) {
                throw IoError("failed writing", partial);
            }
        }
        fs::rename(partial, target);
        ++paths.downloaded;
    }
    return paths;
}

Dataset load_cached(Source source, Split split, const fs::path& cache_dir) {
    const DatasetFiles files = cached_files(source, cache_dir);
    const fs::path& images = split == Split::Train ? files.train_images : files.test_images;
    const fs::path& labels = split == Split::Train ? files.train_labels : files.test_labels;
    for (const fs::path& p : {images, labels}) {
        if (!fs::exists(p)) {
            throw FetchError("dataset file " + p.string() + " is missing; run `pathforget fetch --source " +
                             std::string(to_string(source)) + "` first");
        }
    }
    Dataset ds = load_idx(images, labels);
    ds.source = source;
    ds.split = split;
    return ds;
}

} // namespace pathforget
