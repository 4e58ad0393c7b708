// Copyright 2026 The escooter-occlusion Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "escooter/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "escooter/error.hpp"

namespace escooter {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes any PNG into 8-bit samples with the requested channel count
// (1 = gray, 4 = RGBA).
std::vector<std::uint8_t> decode(const std::filesystem::path& path, int channels,
                                 int* width, int* height) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    throw Error(ErrorCode::kImageUnreadable, "cannot open " + path.string());
  }
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kImageUnreadable, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kImageUnreadable, "libpng init failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kImageUnreadable, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (channels == 4) {
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    }
  } else {
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color & PNG_COLOR_MASK_COLOR || color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
  }
  png_read_update_info(png, info);

  *width = static_cast<int>(png_get_image_width(png, info));
  *height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(*width) * static_cast<std::size_t>(channels)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kImageUnreadable, "unsupported PNG layout: " + path.string());
  }
  pixels.resize(rowbytes * static_cast<std::size_t>(*height));
  rows.resize(static_cast<std::size_t>(*height));
  for (int y = 0; y < *height; ++y) rows[y] = pixels.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

void encode(const std::filesystem::path& path, const std::uint8_t* data, int width,
            int height, int channels) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG encode failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + rowbytes * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbaImage read_png_rgba(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  const auto bytes = decode(path, 4, &w, &h);
  RgbaImage out(w, h);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = Rgba{bytes[4 * i], bytes[4 * i + 1], bytes[4 * i + 2], bytes[4 * i + 3]};
  }
  return out;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  auto bytes = decode(path, 1, &w, &h);
  GrayImage out(w, h);
  out.data() = std::move(bytes);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbaImage& image) {
  if (image.empty()) throw Error(ErrorCode::kIo, "refusing to write empty image");
  static_assert(sizeof(Rgba) == 4);
  encode(path, reinterpret_cast<const std::uint8_t*>(image.data().data()), image.width(),
         image.height(), 4);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.empty()) throw Error(ErrorCode::kIo, "refusing to write empty image");
  encode(path, image.data().data(), image.width(), image.height(), 1);
}

RgbaImage resample_nearest(const RgbaImage& src, double scale) {
  const int w = std::max(1, static_cast<int>(std::lround(src.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(src.height() * scale)));
  RgbaImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) / scale));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) / scale));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

}  // namespace escooter
