#pragma once

// Paired-video construction. A clean clip plus a per-clip-constant set of
// water parameters yields a temporally consistent degraded clip through the
// exponential attenuation model
//   I_c(x) = J_c(x) * exp(-beta_c * d(x)) + B_c * (1 - exp(-beta_c * d(x))).
// Holding (beta, B) fixed across all frames of a clip is what keeps the
// synthetic video free of styling flicker.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uve/image.hpp"
#include "uve/rng.hpp"

namespace uve {

struct WaterParams {
  std::array<float, 3> beta{};        // attenuation per RGB channel, 1/m
  std::array<float, 3> background{};  // background light per channel, [0,1]
  std::string preset;
};

struct DepthMap {
  int h = 0, w = 0;
  std::vector<float> meters;
  std::vector<uint8_t> valid;  // nonzero = measured

  float& at(int y, int x) { return meters[static_cast<size_t>(y) * w + x]; }
  float at(int y, int x) const { return meters[static_cast<size_t>(y) * w + x]; }
  bool is_valid(int y, int x) const { return valid[static_cast<size_t>(y) * w + x] != 0; }
};

struct CleanClip {
  std::string id;
  std::vector<Image> frames;
  std::vector<DepthMap> depths;  // one per frame
};

// Fills invalid depths with cross-bilateral (spatial x guide-color) weighted
// averages of measured pixels, coarse to fine: pass k of `scales` uses
// radius*2^k and sigma_s*2^k, and finer passes overwrite wherever they have
// support. Measured pixels are never modified.
DepthMap fill_depth(const DepthMap& depth, const Image& guide, int radius = 5,
                    float sigma_s = 2.5f, float sigma_r = 0.1f, int scales = 3);

// Symmetric crop; an odd margin drops the extra row/column at bottom/right.
Image center_crop(const Image& frame, int target_h, int target_w);
DepthMap center_crop(const DepthMap& depth, int target_h, int target_w);

Image degrade_frame(const Image& clean, const DepthMap& depth,
                    const WaterParams& water);

// Applies degrade_frame to every frame with one shared WaterParams.
std::vector<Image> synth_clip(const CleanClip& clean, const WaterParams& water);

struct WaterPreset {
  const char* name;
  std::array<float, 3> beta_lo, beta_hi;
  std::array<float, 3> bg_lo, bg_hi;
};

// Plausibility ranges, not measured values: open blue water attenuates red
// fastest, coastal green water sits between, turbid water is unordered.
inline constexpr std::array<WaterPreset, 3> kWaterPresets{{
    {"blue_ocean",
     {0.35f, 0.05f, 0.03f}, {0.55f, 0.12f, 0.08f},
     {0.02f, 0.15f, 0.30f}, {0.10f, 0.30f, 0.50f}},
    {"green_coastal",
     {0.30f, 0.08f, 0.12f}, {0.45f, 0.15f, 0.25f},
     {0.05f, 0.30f, 0.15f}, {0.15f, 0.50f, 0.30f}},
    {"turbid",
     {0.25f, 0.25f, 0.25f}, {0.60f, 0.60f, 0.60f},
     {0.20f, 0.20f, 0.20f}, {0.45f, 0.45f, 0.45f}},
}};

WaterParams sample_water(Rng& rng,
                         std::span<const WaterPreset> pool = kWaterPresets);
WaterParams sample_water(uint64_t seed);

// Deterministic textured clip (checker + smooth gradient) translating by
// (motion_x, motion_y) pixels per frame over a smoothly varying depth field
// within [0.5, 10] meters.
CleanClip gen_procedural_clip(uint64_t seed, int n_frames, int h, int w,
                              int motion_x, int motion_y);

struct DatasetEntry {
  std::string id;
  int style = 1;  // 1..styles_per_clip
  std::string split;  // "train" or "test"
  std::string clean_dir, depth_dir, underwater_dir;
  int frames = 0, height = 0, width = 0;
  WaterParams water;
};

struct DatasetManifest {
  uint64_t seed = 0;
  int styles_per_clip = 3;
  std::vector<DatasetEntry> entries;
};

// Writes clean/depth/underwater frame directories plus manifest.json under
// out_dir. The split is assigned per clean clip before styling, so no clip
// contributes to both splits. Degradation reads back the quantized frames,
// which makes every underwater byte reproducible from the stored artifacts.
DatasetManifest build_dataset(const std::vector<CleanClip>& clips,
                              int styles_per_clip, double train_fraction,
                              uint64_t seed, const std::string& out_dir);

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

}  // namespace uve
