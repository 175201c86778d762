#include "uve/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

namespace uve {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() { png_destroy_write_struct(&png, &info); }
};

}  // namespace

Image Image::filled(int h, int w, float r, float g, float b) {
  Image img;
  img.h = h;
  img.w = w;
  img.rgb.resize(static_cast<size_t>(h) * w * 3);
  for (size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  return img;
}

uint8_t quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

Image quantize_roundtrip(const Image& img) {
  Image out = img;
  for (auto& v : out.rgb) v = static_cast<float>(quantize8(v)) / 255.0f;
  return out;
}

Image read_image_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  check(f != nullptr, "cannot open image: " + path);
  PngReadCtx ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(ctx.png != nullptr, "png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  check(ctx.info != nullptr, "png info init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail("png read failed: " + path);
  png_init_io(ctx.png, f.get());
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color_type = png_get_color_type(ctx.png, ctx.info);

  if (bit_depth == 16) png_set_strip_16(ctx.png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  std::vector<uint8_t> raw(static_cast<size_t>(h) * w * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Image img;
  img.h = static_cast<int>(h);
  img.w = static_cast<int>(w);
  img.rgb.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i)
    img.rgb[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

void write_image_png(const std::string& path, const Image& img) {
  check(img.h > 0 && img.w > 0 &&
            img.rgb.size() == static_cast<size_t>(img.h) * img.w * 3,
        "write_image_png: malformed image");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  check(f != nullptr, "cannot open for writing: " + path);
  PngWriteCtx ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(ctx.png != nullptr, "png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  check(ctx.info != nullptr, "png info init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail("png write failed: " + path);
  png_init_io(ctx.png, f.get());
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.w),
               static_cast<png_uint_32>(img.h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  std::vector<uint8_t> raw(img.rgb.size());
  for (size_t i = 0; i < img.rgb.size(); ++i) raw[i] = quantize8(img.rgb[i]);
  std::vector<png_bytep> rows(static_cast<size_t>(img.h));
  for (int y = 0; y < img.h; ++y)
    rows[static_cast<size_t>(y)] = raw.data() + static_cast<size_t>(y) * img.w * 3;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

std::vector<uint16_t> read_gray16_png(const std::string& path, int& h, int& w) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  check(f != nullptr, "cannot open image: " + path);
  PngReadCtx ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(ctx.png != nullptr, "png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  check(ctx.info != nullptr, "png info init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail("png read failed: " + path);
  png_init_io(ctx.png, f.get());
  png_read_info(ctx.png, ctx.info);

  check(png_get_color_type(ctx.png, ctx.info) == PNG_COLOR_TYPE_GRAY &&
            png_get_bit_depth(ctx.png, ctx.info) == 16,
        "expected 16-bit grayscale: " + path);
  w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  png_read_update_info(ctx.png, ctx.info);

  std::vector<uint8_t> raw(static_cast<size_t>(h) * w * 2);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = raw.data() + static_cast<size_t>(y) * w * 2;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  std::vector<uint16_t> out(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < out.size(); ++i)  // PNG stores big-endian
    out[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return out;
}

void write_gray16_png(const std::string& path, int h, int w,
                      const std::vector<uint16_t>& data) {
  check(data.size() == static_cast<size_t>(h) * w, "write_gray16_png: bad size");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  check(f != nullptr, "cannot open for writing: " + path);
  PngWriteCtx ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(ctx.png != nullptr, "png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  check(ctx.info != nullptr, "png info init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail("png write failed: " + path);
  png_init_io(ctx.png, f.get());
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  std::vector<uint8_t> raw(data.size() * 2);
  for (size_t i = 0; i < data.size(); ++i) {
    raw[2 * i] = static_cast<uint8_t>(data[i] >> 8);
    raw[2 * i + 1] = static_cast<uint8_t>(data[i] & 0xff);
  }
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = raw.data() + static_cast<size_t>(y) * w * 2;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.png", index);
  return buf;
}

std::vector<std::string> list_frames(const std::string& dir) {
  namespace fs = std::filesystem;
  check(fs::is_directory(dir), "not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("frame_") && name.ends_with(".png"))
      names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

Video read_video(const std::string& dir) {
  Video frames;
  for (const auto& path : list_frames(dir)) frames.push_back(read_image_png(path));
  check(!frames.empty(), "no frames found in " + dir);
  return frames;
}

void write_video(const std::string& dir, const Video& frames) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < frames.size(); ++i)
    write_image_png(dir + "/" + frame_filename(static_cast<int>(i)), frames[i]);
}

template <typename T>
Tensor<T> tensor_from_images(const std::vector<Image>& frames) {
  check(!frames.empty(), "tensor_from_images: no frames");
  const int h = frames[0].h, w = frames[0].w;
  std::vector<T> data;
  data.reserve(frames.size() * 3u * h * w);
  for (const auto& img : frames) {
    check(img.h == h && img.w == w, "tensor_from_images: mismatched sizes");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          data.push_back(static_cast<T>(img.at(y, x, c)));
  }
  return Tensor<T>::from_values(
      {static_cast<int64_t>(frames.size()), 3, h, w}, std::move(data));
}

template <typename T>
Image image_from_tensor(const Tensor<T>& t, int64_t n) {
  const Shape s = t.shape();
  check(s.c == 3 && n >= 0 && n < s.n, "image_from_tensor: bad tensor/sample");
  Image img;
  img.h = static_cast<int>(s.h);
  img.w = static_cast<int>(s.w);
  img.rgb.resize(static_cast<size_t>(s.h) * s.w * 3);
  for (int c = 0; c < 3; ++c)
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t x = 0; x < s.w; ++x)
        img.at(static_cast<int>(y), static_cast<int>(x), c) =
            static_cast<float>(t.at(n, c, y, x));
  return img;
}

template Tensor<float> tensor_from_images<float>(const std::vector<Image>&);
template Tensor<double> tensor_from_images<double>(const std::vector<Image>&);
template Image image_from_tensor<float>(const Tensor<float>&, int64_t);
template Image image_from_tensor<double>(const Tensor<double>&, int64_t);

}  // namespace uve
