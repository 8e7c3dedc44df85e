// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/error.hpp"
#include "pathforget/fetch.hpp"

#include "support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <zlib.h>

#include <fstream>
#include <thread>

using namespace pathforget;
namespace fs = std::filesystem;

namespace {

void write_gzip(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    gzFile f = gzopen(path.c_str(), "wb1");
    REQUIRE(f != nullptr);
    REQUIRE(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) == static_cast<int>(bytes.size()));
    REQUIRE(gzclose(f) == Z_OK);
}

void write_raw(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Dataset blank(std::size_t count) {
    Dataset ds;
    ds.pixels.assign(count * 784, 0);
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = static_cast<std::uint8_t>(i % 10);
        ds.pixels[i * 784] = static_cast<std::uint8_t>(i % 251);
    }
    return ds;
}

/// Gzipped IDX files with MNIST's file names and sizes.
void build_mirror(const fs::path& dir) {
    fs::create_directories(dir);
    const Dataset train = blank(60000);
    const Dataset test = blank(10000);
    write_gzip(dir / "train-images-idx3-ubyte.gz", encode_idx_images(train));
    write_gzip(dir / "train-labels-idx1-ubyte.gz", encode_idx_labels(train));
    write_gzip(dir / "t10k-images-idx3-ubyte.gz", encode_idx_images(test));
    write_gzip(dir / "t10k-labels-idx1-ubyte.gz", encode_idx_labels(test));
}

class LocalServer {
public:
    explicit LocalServer(const fs::path& root) {
        server_.set_mount_point("/", root.string());
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_SUITE("fetch") {
    TEST_CASE("declared file inventory") {
        const auto files = dataset_files(Source::Mnist);
        REQUIRE(files.size() == 4);
        // 16-byte header + 60000 * 28 * 28 pixels; 8-byte header + one byte per label.
        CHECK(files[0].length == 16 + 60000ull * 784);
        CHECK(files[1].length == 8 + 60000ull);
        CHECK(files[2].length == 16 + 10000ull * 784);
        CHECK(files[3].length == 8 + 10000ull);
        CHECK(dataset_files(Source::FashionMnist)[0].length == files[0].length);
        const auto cached = cached_files(Source::FashionMnist, "/cache");
        CHECK(cached.train_labels == fs::path("/cache/fashion_mnist/train-labels-idx1-ubyte"));
    }

    TEST_CASE("gunzip round-trips and rejects garbage") {
        pathforget::testing::TempDir dir;
        const std::vector<std::uint8_t> payload{1, 2, 3, 250, 0, 0, 7};
        write_gzip(dir.path() / "x.gz", payload);
        std::ifstream in(dir.path() / "x.gz", std::ios::binary);
        const std::vector<std::uint8_t> gz((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(gunzip(gz) == payload);
        CHECK_THROWS_AS(gunzip(std::vector<std::uint8_t>{1, 2, 3, 4}), FormatError);
        CHECK_THROWS_AS(gunzip(std::span(gz).first(gz.size() - 6)), FormatError);
    }

    TEST_CASE("mirror fetch over http and file URLs, then warm and offline cache hits") {
        pathforget::testing::TempDir dir;
        build_mirror(dir.path() / "mirror");

        LocalServer server(dir.path() / "mirror");
        const DatasetFiles first = fetch_dataset(Source::Mnist, server.url(), dir.path() / "cache");
        CHECK(first.downloaded == 4);
        CHECK(fs::file_size(first.train_images) == 47'040'016);

        const DatasetFiles warm = fetch_dataset(Source::Mnist, server.url(), dir.path() / "cache");
        CHECK(warm.downloaded == 0);
        const DatasetFiles offline = fetch_dataset(Source::Mnist, "", dir.path() / "cache");
        CHECK(offline.downloaded == 0);

        const Dataset test = load_cached(Source::Mnist, Split::Test, dir.path() / "cache");
        CHECK(test.size() == 10000);
        CHECK(test.split == Split::Test);
        CHECK(test.labels[13] == 3);
        CHECK(test.image(13)[0] == 13);

        const DatasetFiles via_file =
            fetch_dataset(Source::Mnist, "file://" + (dir.path() / "mirror").string(), dir.path() / "cache2");
        CHECK(via_file.downloaded == 4);
    }

    TEST_CASE("offline with an empty cache is a fetch error") {
        pathforget::testing::TempDir dir;
        CHECK_THROWS_AS(fetch_dataset(Source::Mnist, "", dir.path()), FetchError);
        CHECK_THROWS_AS(load_cached(Source::Mnist, Split::Train, dir.path()), FetchError);
    }

    TEST_CASE("a truncated cached file is an integrity error") {
        pathforget::testing::TempDir dir;
        const auto files = cached_files(Source::Mnist, dir.path());
        fs::create_directories(files.train_images.parent_path());
        write_raw(files.train_images, std::vector<std::uint8_t>(100, 0));
        CHECK_THROWS_AS(fetch_dataset(Source::Mnist, "", dir.path()), IntegrityError);
    }

    TEST_CASE("corrupt or missing mirror files") {
        pathforget::testing::TempDir dir;
        fs::create_directories(dir.path() / "mirror");
        write_raw(dir.path() / "mirror" / "train-images-idx3-ubyte.gz", {0x1f, 0x8b, 0x08, 0x00, 0x13});
        LocalServer server(dir.path() / "mirror");
        CHECK_THROWS_AS(fetch_dataset(Source::Mnist, server.url(), dir.path() / "cache"), IntegrityError);

        write_gzip(dir.path() / "mirror" / "train-images-idx3-ubyte.gz", std::vector<std::uint8_t>(10, 0));
        CHECK_THROWS_AS(fetch_dataset(Source::Mnist, server.url(), dir.path() / "cache"), IntegrityError);
        CHECK_FALSE(fs::exists(dir.path() / "cache" / "mnist" / "train-images-idx3-ubyte"));

        CHECK_THROWS_AS(download(server.url() + "absent.gz"), FetchError);
        CHECK_THROWS_AS(download("file://" + (dir.path() / "absent.gz").string()), FetchError);
    }
}
