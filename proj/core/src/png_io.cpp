#include "pointsup/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "pointsup/geometry.hpp"

namespace pointsup {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != std::size_t(width) * std::size_t(height)) {
    throw Error("write_png_gray: bad dimensions");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + std::size_t(r) * width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return out;
}

}  // namespace pointsup
