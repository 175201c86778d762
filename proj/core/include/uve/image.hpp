#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uve/tensor.hpp"

namespace uve {

// Interleaved RGB frame with values in [0, 1].
struct Image {
  int h = 0, w = 0;
  std::vector<float> rgb;  // h*w*3, row-major, RGB interleaved

  static Image filled(int h, int w, float r, float g, float b);
  float& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  float at(int y, int x, int c) const { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  bool same_size(const Image& other) const { return h == other.h && w == other.w; }
};

using Video = std::vector<Image>;

// 8-bit quantization used everywhere a frame crosses the PNG boundary.
uint8_t quantize8(float v);
Image quantize_roundtrip(const Image& img);

Image read_image_png(const std::string& path);
void write_image_png(const std::string& path, const Image& img);

// 16-bit grayscale, used for depth stored in millimeters.
std::vector<uint16_t> read_gray16_png(const std::string& path, int& h, int& w);
void write_gray16_png(const std::string& path, int h, int w,
                      const std::vector<uint16_t>& data);

// Frame files are named frame_000000.png, frame_000001.png, ...
std::string frame_filename(int index);
std::vector<std::string> list_frames(const std::string& dir);
Video read_video(const std::string& dir);
void write_video(const std::string& dir, const Video& frames);

// Planar (N,3,H,W) tensor <-> interleaved images.
template <typename T>
Tensor<T> tensor_from_images(const std::vector<Image>& frames);
template <typename T>
Image image_from_tensor(const Tensor<T>& t, int64_t n = 0);

extern template Tensor<float> tensor_from_images<float>(const std::vector<Image>&);
extern template Tensor<double> tensor_from_images<double>(const std::vector<Image>&);
extern template Image image_from_tensor<float>(const Tensor<float>&, int64_t);
extern template Image image_from_tensor<double>(const Tensor<double>&, int64_t);

}  // namespace uve
