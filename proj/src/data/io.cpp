#include "data/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "core/error.hpp"

namespace tscnet::data {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp message) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = message;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

Image8 read_png(const std::string& path, int channels) {
  if (channels != 1 && channels != 3) throw ContractError("read_png supports 1 or 3 channels");
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open '" + path + "'");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw DataError("'" + path + "' is not a PNG file");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("out of memory reading '" + path + "'");
  }
  Image8 img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("malformed PNG '" + path + "': " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  const bool gray_src = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (channels == 3 && gray_src) png_set_gray_to_rgb(png);
  if (channels == 1 && !gray_src) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = channels;
  if (static_cast<int>(png_get_rowbytes(png, info)) != img.width * channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unsupported PNG layout in '" + path + "'");
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * channels);
  rows.resize(static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) rows[static_cast<std::size_t>(r)] = img.pixels.data() + static_cast<std::size_t>(r) * img.width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw ContractError("write_png supports 1 or 3 channels");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw ContractError("write_png: pixel buffer does not match the image size");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write '" + path + "'");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("out of memory writing '" + path + "'");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing '" + path + "': " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.height; ++r) {
    rows[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(r) * image.width * image.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw DataError("failed writing '" + path + "'");
}

std::uint8_t quantize(double v) {
  const double clamped = std::fmin(std::fmax(v, 0.0), 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

Sample load_sample(const std::string& image_path, const std::string& mask_path) {
  const Image8 rgb = read_png(image_path, 3);
  const Image8 gray = read_png(mask_path, 1);
  if (rgb.width != gray.width || rgb.height != gray.height) {
    throw DataError("image '" + image_path + "' is " + std::to_string(rgb.width) + "x" + std::to_string(rgb.height) +
                    " but mask '" + mask_path + "' is " + std::to_string(gray.width) + "x" +
                    std::to_string(gray.height));
  }
  Sample s;
  s.id = fs::path(image_path).stem().string();
  s.height = rgb.height;
  s.width = rgb.width;
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  s.image.resize(3 * plane);
  s.mask.resize(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) s.image[c * plane + i] = static_cast<float>(rgb.pixels[3 * i + c] / 255.0);
    s.mask[i] = gray.pixels[i] >= 128 ? 1 : 0;
  }
  return s;
}

void save_sample(const Sample& s, const std::string& image_path, const std::string& mask_path) {
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  Image8 rgb{s.height, s.width, 3, std::vector<std::uint8_t>(3 * plane)};
  Image8 gray{s.height, s.width, 1, std::vector<std::uint8_t>(plane)};
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) rgb.pixels[3 * i + c] = quantize(s.image[c * plane + i]);
    gray.pixels[i] = s.mask[i] ? 255 : 0;
  }
  write_png(image_path, rgb);
  write_png(mask_path, gray);
}

void save_map(const std::string& path, const std::vector<double>& values, int height, int width) {
  Image8 gray{height, width, 1, std::vector<std::uint8_t>(values.size())};
  for (std::size_t i = 0; i < values.size(); ++i) gray.pixels[i] = quantize(values[i]);
  write_png(path, gray);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&base](const std::string& p) {
    const fs::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).lexically_normal().string();
  };
  std::vector<ManifestEntry> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError("manifest '" + path + "' line " + std::to_string(number) + ": expected image<TAB>mask");
    }
    out.push_back({resolve(line.substr(0, tab)), resolve(line.substr(tab + 1))});
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest '" + path + "'");
  for (const auto& e : entries) out << e.image << '\t' << e.mask << '\n';
  if (!out) throw DataError("failed writing manifest '" + path + "'");
}

}  // namespace tscnet::data
