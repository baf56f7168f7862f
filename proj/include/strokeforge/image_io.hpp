#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "strokeforge/raster.hpp"

namespace strokeforge {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// PNG (any bit depth, converted to 8-bit) or binary PPM (P6), detected from
/// the leading bytes. Samples become k / 255.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image(const std::filesystem::path& path);

/// 8-bit PNG with round(v * 255); channel count is preserved.
std::vector<std::uint8_t> encode_png(const RasterImage& image);
void write_png(const std::filesystem::path& path, const RasterImage& image);

std::vector<std::uint8_t> encode_ppm(const RasterImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace strokeforge
