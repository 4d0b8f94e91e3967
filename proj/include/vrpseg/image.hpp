#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrpseg/error.hpp"
#include "vrpseg/mask_ops.hpp"

namespace vrpseg {

/// 3 x H x W planar RGB, values in [0, 1], channel-major like FeatureMap.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0.0) {}

    double& at(int c, int r, int col) {
        return data[(static_cast<std::size_t>(c) * height + r) * width + col];
    }
    double at(int c, int r, int col) const {
        return data[(static_cast<std::size_t>(c) * height + r) * width + col];
    }
};

/// H x W class-id raster (0 = background), the on-disk mask format.
struct ClassMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    ClassMask() = default;
    ClassMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

/// mask[r][c] = (cls.at(r,c) == class_id).
BinaryMask binary_from_class(const ClassMask& cls, int class_id);

/// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on write; palette
/// and gray PNGs expand to RGB on read.
Image read_image_png(const std::string& path);
void write_image_png(const std::string& path, const Image& img);

/// 8-bit single-channel PNG holding class ids (or 0/255 annotation rasters).
ClassMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const ClassMask& mask);

}  // namespace vrpseg
