#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "vrpseg/image.hpp"
#include "vrpseg/rng.hpp"

using namespace vrpseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vrpseg_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("image png round-trip is exact at 8-bit quantization") {
    TempDir tmp;
    Image img(6, 5);
    Rng rng(1);
    for (double& v : img.data) v = rng.uniform_int(0, 255) / 255.0;
    write_image_png(tmp.file("a.png"), img);
    const Image back = read_image_png(tmp.file("a.png"));
    REQUIRE(back.height == 6);
    REQUIRE(back.width == 5);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("image write clamps out-of-range values") {
    TempDir tmp;
    Image img(1, 2);
    img.at(0, 0, 0) = -0.5;
    img.at(1, 0, 1) = 1.5;
    write_image_png(tmp.file("c.png"), img);
    const Image back = read_image_png(tmp.file("c.png"));
    CHECK(back.at(0, 0, 0) == 0.0);
    CHECK(back.at(1, 0, 1) == 1.0);
}

TEST_CASE("mask png round-trip preserves class ids") {
    TempDir tmp;
    ClassMask mask(4, 7);
    Rng rng(2);
    for (auto& v : mask.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 9));
    write_mask_png(tmp.file("m.png"), mask);
    const ClassMask back = read_mask_png(tmp.file("m.png"));
    REQUIRE(back.height == 4);
    REQUIRE(back.width == 7);
    CHECK(back.data == mask.data);
}

TEST_CASE("missing and corrupt files raise typed errors") {
    TempDir tmp;
    CHECK_THROWS_AS(read_image_png(tmp.file("absent.png")), Error);
    std::FILE* f = std::fopen(tmp.file("bad.png").c_str(), "wb");
    std::fputs("not a png at all", f);
    std::fclose(f);
    CHECK_THROWS_AS(read_image_png(tmp.file("bad.png")), Error);
    CHECK_THROWS_AS(read_mask_png(tmp.file("bad.png")), Error);
}

TEST_CASE("binary_from_class selects exactly one id") {
    ClassMask mask(2, 3);
    mask.at(0, 0) = 3;
    mask.at(0, 1) = 5;
    mask.at(1, 2) = 3;
    const BinaryMask b = binary_from_class(mask, 3);
    CHECK(b.foreground_count() == 2);
    CHECK(b.at(0, 0) == 1);
    CHECK(b.at(0, 1) == 0);
    CHECK(b.at(1, 2) == 1);
}
