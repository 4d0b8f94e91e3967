#include "vrpseg/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace vrpseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes any 8-bit PNG into tightly packed rows of `want_channels` bytes
// per pixel (1 = gray, 3 = RGB). libpng error handling is setjmp-based, so
// everything that needs cleanup lives outside the jump scope.
std::vector<std::uint8_t> read_png(const std::string& path, int want_channels, int& height,
                                   int& width) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(ErrorCode::MissingFile, "cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::CorruptManifest, "libpng init failed for " + path);
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::CorruptManifest, "not a valid PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want_channels == 3 && (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA))
        png_set_gray_to_rgb(png);
    if (want_channels == 1 &&
        (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
         color == PNG_COLOR_TYPE_PALETTE))
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    if (static_cast<int>(png_get_channels(png, info)) != want_channels) {
        longjmp(png_jmpbuf(png), 1);
    }

    pixels.resize(static_cast<std::size_t>(height) * width * want_channels);
    rows.resize(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r)
        rows[static_cast<std::size_t>(r)] =
            pixels.data() + static_cast<std::size_t>(r) * width * want_channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void write_png(const std::string& path, int height, int width, int channels,
               const std::uint8_t* pixels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::MissingFile, "cannot create " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::CorruptManifest, "libpng init failed for " + path);
    }

    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::CorruptManifest, "PNG write failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
        rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(
            pixels + static_cast<std::size_t>(r) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

BinaryMask binary_from_class(const ClassMask& cls, int class_id) {
    BinaryMask out(cls.height, cls.width);
    for (std::size_t i = 0; i < cls.data.size(); ++i)
        out.data[i] = cls.data[i] == class_id ? 1 : 0;
    return out;
}

Image read_image_png(const std::string& path) {
    int h = 0, w = 0;
    const auto bytes = read_png(path, 3, h, w);
    Image img(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t base = (static_cast<std::size_t>(r) * w + c) * 3;
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, r, c) = bytes[base + static_cast<std::size_t>(ch)] / 255.0;
        }
    }
    return img;
}

void write_image_png(const std::string& path, const Image& img) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.height) * img.width * 3);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const std::size_t base = (static_cast<std::size_t>(r) * img.width + c) * 3;
            for (int ch = 0; ch < 3; ++ch)
                bytes[base + static_cast<std::size_t>(ch)] = to_byte(img.at(ch, r, c));
        }
    }
    write_png(path, img.height, img.width, 3, bytes.data());
}

ClassMask read_mask_png(const std::string& path) {
    int h = 0, w = 0;
    const auto bytes = read_png(path, 1, h, w);
    ClassMask mask(h, w);
    mask.data = bytes;
    return mask;
}

void write_mask_png(const std::string& path, const ClassMask& mask) {
    write_png(path, mask.height, mask.width, 1, mask.data.data());
}

}  // namespace vrpseg
