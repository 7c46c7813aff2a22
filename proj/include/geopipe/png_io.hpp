#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geopipe/image.hpp"

namespace geopipe {

/// Deterministic PNG output (no timestamps), so identical rasters produce
/// byte-identical files.
void write_png_rgb8(const std::filesystem::path& path, const ImageRgb8& img);
void write_png_gray8(const std::filesystem::path& path, const ImageGray8& img);

/// Coverage mask as a 1-bit grayscale PNG (nonzero -> 1).
void write_png_mask1(const std::filesystem::path& path, const Mask& mask);

ImageRgb8 read_png_rgb8(const std::filesystem::path& path);
Mask read_png_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png_rgb8(const ImageRgb8& img);
ImageRgb8 decode_png_rgb8(const std::uint8_t* data, std::size_t size);

/// CRC-32 of a file's bytes, hex-encoded. Used for cache sidecar checksums.
std::string file_crc32_hex(const std::filesystem::path& path);

}  // namespace geopipe
