#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pointsup {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major, 8-bit
};

/// Write an 8-bit grayscale PNG. Throws pointsup::Error on I/O failure.
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels);

/// Read any PNG, converting to 8-bit grayscale.
GrayImage read_png_gray(const std::filesystem::path& path);

}  // namespace pointsup
