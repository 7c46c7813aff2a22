#include "geopipe/png_io.hpp"

#include <png.h>
#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "geopipe/errors.hpp"

namespace geopipe {

namespace {

struct PngWriteCtx {
  std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<PngWriteCtx*>(png_get_io_ptr(png));
  ctx->out->insert(ctx->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

std::vector<std::uint8_t> encode_png(const std::uint8_t* pixels, int width,
                                     int height, int color_type, int bit_depth,
                                     int row_stride) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png encode failed");
  }
  PngWriteCtx ctx{&out};
  png_set_write_fn(png, &ctx, write_cb, flush_cb);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * row_stride);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for reading: " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct PngReadCtx {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_cb(png_structp png, png_bytep dst, png_size_t len) {
  auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
  if (ctx->pos + len > ctx->size) png_error(png, "truncated PNG");
  std::memcpy(dst, ctx->data + ctx->pos, len);
  ctx->pos += len;
}

// Decodes to 8-bit, `channels` = 3 (RGB) or 1 (gray).
template <typename Out>
Out decode_png(const std::uint8_t* data, std::size_t size, int channels) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png decode failed");
  }
  PngReadCtx ctx{data, size, 0};
  png_set_read_fn(png, &ctx, read_cb);
  png_read_info(png, info);

  png_set_expand(png);  // palette -> rgb, 1/2/4-bit gray -> 8-bit, tRNS -> alpha
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (channels == 3 &&
      (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)) {
    png_set_gray_to_rgb(png);
  }
  if (channels == 1 &&
      (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
       color == PNG_COLOR_TYPE_PALETTE)) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  Out img(w, h, channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = img.row(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

std::vector<std::uint8_t> encode_png_rgb8(const ImageRgb8& img) {
  return encode_png(img.data(), img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8,
                    img.width() * 3);
}

ImageRgb8 decode_png_rgb8(const std::uint8_t* data, std::size_t size) {
  return decode_png<ImageRgb8>(data, size, 3);
}

void write_png_rgb8(const std::filesystem::path& path, const ImageRgb8& img) {
  write_file(path, encode_png_rgb8(img));
}

void write_png_gray8(const std::filesystem::path& path, const ImageGray8& img) {
  write_file(path, encode_png(img.data(), img.width(), img.height(),
                              PNG_COLOR_TYPE_GRAY, 8, img.width()));
}

void write_png_mask1(const std::filesystem::path& path, const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  const int stride = (w + 7) / 8;
  std::vector<std::uint8_t> packed(static_cast<std::size_t>(stride) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) != 0) {
        packed[static_cast<std::size_t>(y) * stride + x / 8] |=
            static_cast<std::uint8_t>(0x80u >> (x % 8));
      }
    }
  }
  write_file(path,
             encode_png(packed.data(), w, h, PNG_COLOR_TYPE_GRAY, 1, stride));
}

ImageRgb8 read_png_rgb8(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_png<ImageRgb8>(bytes.data(), bytes.size(), 3);
}

Mask read_png_mask(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Mask m = decode_png<Mask>(bytes.data(), bytes.size(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = m.data()[i] != 0 ? kMaskOn : 0;
  }
  return m;
}

std::string file_crc32_hex(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto crc = crc32_z(0, bytes.data(), bytes.size());
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace geopipe
