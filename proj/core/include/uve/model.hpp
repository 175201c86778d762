#pragma once

// The enhancement network: a shared ConvNeXt-style encoder over every frame
// of a temporal window, per-scale alignment-and-aggregation modules built on
// grouped spatial shifts, a lightweight multi-scale decoder, and a global
// per-channel restoration gate.
//
// Batched tensors are laid out sample-major: a batch of B windows of T
// frames is a single (B*T, 3, H, W) tensor with frame i of window b at
// index b*T + i. Row-major NCHW makes (B*T, C, H, W) and (B, T*C, H, W)
// the same element sequence, so regrouping frames into channel blocks is a
// pure relabeling.

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uve/ops.hpp"
#include "uve/tensor.hpp"

namespace uve {

enum class Aggregation { kDepthwiseOnly, kPointwiseOnly, kDsc, kDscCa };

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

struct ModelConfig {
  int t = 5;                               // window size, odd
  std::array<int, 4> dims{96, 192, 384, 768};
  std::array<int, 4> depths{3, 3, 9, 3};
  int shift_len = 3;
  std::array<bool, 4> faam_scales{true, true, true, true};
  Aggregation aggregation = Aggregation::kDscCa;
  int decoder_dim = 96;
  int grm_dim = 64;
  int stem_stride = 4;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json_text(const std::string& text);

  // Desk-scale preset used throughout the test suite.
  static ModelConfig tiny();
  // Full-size configuration; documented but not trained here.
  static ModelConfig paper();
};

// Shift directions for the eight channel slices, row-major over
// (dx, dy) in {-1,0,1}^2 without (0,0).
inline constexpr std::array<std::array<int, 2>, 8> kShiftPatterns{{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

struct ParamSpec {
  std::string name;
  Shape shape;
};

// The full parameter manifest as a pure function of the configuration.
std::vector<ParamSpec> param_manifest(const ModelConfig& cfg);

// One "name n c h w" line per parameter, for golden tests.
std::string manifest_text(const ModelConfig& cfg);

template <typename T>
class UVENetParams {
 public:
  void push(std::string name, Tensor<T> t);
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const {
    return entries_;
  }
  std::vector<Tensor<T>>& tensors() { return tensors_; }
  int64_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
  std::vector<Tensor<T>> tensors_;
  std::unordered_map<std::string, size_t> index_;
};

// Deterministic initialization: conv weights from a fan-in-scaled truncated
// normal, norm gains 1, shifts and biases 0.
template <typename T>
UVENetParams<T> init_params(const ModelConfig& cfg, uint64_t seed);

template <typename T>
using FeaturePyramid = std::array<Tensor<T>, 4>;

// Encodes a stack of frames (S, 3, H, W) into four maps at strides
// 4/8/16/32 with channel counts dims[0..3]. H and W must be multiples of 32.
template <typename T>
FeaturePyramid<T> encode_frames(const Tensor<T>& frames,
                                const UVENetParams<T>& params,
                                const ModelConfig& cfg);

// Splits channels into eight slices and shifts slice m by
// (l*dx_m, l*dy_m) with zero fill, re-concatenating in order.
template <typename T>
Tensor<T> grouped_shift(const Tensor<T>& feature, int l,
                        const std::array<std::array<int, 2>, 8>& patterns =
                            kShiftPatterns);

// Alignment + aggregation over a window: per-frame grouped shift, channel
// concat, then the configured aggregation. `stacked` is (B, T*C, h, w).
template <typename T>
Tensor<T> faam(const Tensor<T>& stacked, int scale,
               const UVENetParams<T>& params, const ModelConfig& cfg);

// Convenience overload over T per-frame maps.
template <typename T>
Tensor<T> faam(const std::vector<Tensor<T>>& frame_maps, int scale,
               const UVENetParams<T>& params, const ModelConfig& cfg);

// Aggregation for scales without alignment: plain concat + 1x1 projection.
template <typename T>
Tensor<T> faam_bypass(const Tensor<T>& stacked, int scale,
                      const UVENetParams<T>& params, const ModelConfig& cfg);

template <typename T>
Tensor<T> faam_bypass(const std::vector<Tensor<T>>& frame_maps, int scale,
                      const UVENetParams<T>& params, const ModelConfig& cfg);

// Fuses the four aggregated maps into the preliminary image (B, 3, H, W).
template <typename T>
Tensor<T> decode(const FeaturePyramid<T>& h, const UVENetParams<T>& params,
                 const ModelConfig& cfg);

// Global restoration: predicts one gain per RGB channel from the
// preliminary image and the raw frames, applies it, clamps to [0, 1].
template <typename T>
Tensor<T> grm(const Tensor<T>& preliminary, const Tensor<T>& frames,
              int64_t batch, const UVENetParams<T>& params,
              const ModelConfig& cfg);

// End-to-end forward over a batch of windows. `frames` is (B*T, 3, H, W);
// inputs not divisible by 32 are mirror-padded and the output cropped back.
template <typename T>
Tensor<T> forward(const Tensor<T>& frames, int64_t batch,
                  const UVENetParams<T>& params, const ModelConfig& cfg);

// Stacks window frames, each (1, 3, H, W), into the (T, 3, H, W) batch-of-one
// layout forward() expects.
template <typename T>
Tensor<T> stack_frames(const std::vector<Tensor<T>>& frames);

void save_model(const std::string& path, const UVENetParams<float>& params,
                const ModelConfig& cfg);
std::pair<UVENetParams<float>, ModelConfig> load_model(const std::string& path);

#define UVE_DECL_MODEL(T)                                                      \
  extern template class UVENetParams<T>;                                       \
  extern template UVENetParams<T> init_params<T>(const ModelConfig&, uint64_t);\
  extern template FeaturePyramid<T> encode_frames<T>(                          \
      const Tensor<T>&, const UVENetParams<T>&, const ModelConfig&);           \
  extern template Tensor<T> grouped_shift<T>(                                  \
      const Tensor<T>&, int, const std::array<std::array<int, 2>, 8>&);        \
  extern template Tensor<T> faam<T>(const Tensor<T>&, int,                     \
                                    const UVENetParams<T>&, const ModelConfig&);\
  extern template Tensor<T> faam<T>(const std::vector<Tensor<T>>&, int,        \
                                    const UVENetParams<T>&, const ModelConfig&);\
  extern template Tensor<T> faam_bypass<T>(                                    \
      const Tensor<T>&, int, const UVENetParams<T>&, const ModelConfig&);      \
  extern template Tensor<T> faam_bypass<T>(                                    \
      const std::vector<Tensor<T>>&, int, const UVENetParams<T>&,              \
      const ModelConfig&);                                                     \
  extern template Tensor<T> decode<T>(const FeaturePyramid<T>&,                \
                                      const UVENetParams<T>&,                  \
                                      const ModelConfig&);                     \
  extern template Tensor<T> grm<T>(const Tensor<T>&, const Tensor<T>&,         \
                                   int64_t, const UVENetParams<T>&,            \
                                   const ModelConfig&);                        \
  extern template Tensor<T> forward<T>(const Tensor<T>&, int64_t,              \
                                       const UVENetParams<T>&,                 \
                                       const ModelConfig&);                    \
  extern template Tensor<T> stack_frames<T>(const std::vector<Tensor<T>>&);

UVE_DECL_MODEL(float)
UVE_DECL_MODEL(double)
#undef UVE_DECL_MODEL

}  // namespace uve
