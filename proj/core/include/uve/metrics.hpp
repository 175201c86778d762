#pragma once

// Frame- and video-level quality metrics. Full-reference: PSNR, SSIM.
// No-reference underwater indices: UIQM (colorfulness + sharpness +
// contrast) and UCIQE (chroma spread + luminance contrast + saturation).
// Video-level: MSE between temporal mean-absolute-brightness-difference
// maps (flicker) and the histogram Jensen-Shannon color distribution
// consistency index (CDC). All functions are pure and deterministic.

#include <optional>
#include <string>
#include <vector>

#include "uve/image.hpp"

namespace uve {

// Luma used by SSIM, MABD and the block-contrast metrics.
double luma(float r, float g, float b);

// 10*log10(1/MSE) over all RGB elements, capped at 100 dB (exact at MSE=0).
double psnr(const Image& pred, const Image& ref);

// Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, data range 1, symmetric-reflection padding, mean over centers.
double ssim(const Image& pred, const Image& ref);

double uicm(const Image& frame);
double uism(const Image& frame);
double uiconm(const Image& frame);
double uiqm(const Image& frame);

struct LabImage {
  int h = 0, w = 0;
  std::vector<double> lab;  // interleaved L,a,b; L in [0,100]
  double at(int y, int x, int c) const {
    return lab[(static_cast<size_t>(y) * w + x) * 3 + c];
  }
};

// sRGB -> linear -> XYZ (D65) -> CIELab. The white point is taken as the
// matrix image of RGB white so that (1,1,1) maps to exactly L=100, a=b=0.
LabImage rgb_to_lab(const Image& frame);

double uciqe(const Image& frame);

// Per-pixel temporal mean absolute brightness difference, length H*W.
std::vector<double> mabd_map(const Video& video);

// 1e4 * mean_x (MABD_enh(x) - MABD_gt(x))^2.
double mse_mabd(const Video& enhanced, const Video& reference);

// Mean Jensen-Shannon divergence (natural log) between per-channel 256-bin
// histograms of frames tau apart, for tau in {1,2,4} (strides shorter than
// the video), averaged over pairs, channels, then strides.
double cdc(const Video& video);

struct FrameMetrics {
  std::optional<double> psnr;
  std::optional<double> ssim;
  double uiqm = 0;
  double uciqe = 0;
};

struct VideoMetrics {
  std::vector<FrameMetrics> frames;
  std::optional<double> mean_psnr;
  std::optional<double> mean_ssim;
  double mean_uiqm = 0;
  double mean_uciqe = 0;
  std::optional<double> mse_mabd;  // needs a reference video
  std::optional<double> cdc;       // needs >= 2 frames
};

// Computes every applicable metric; reference metrics are omitted when
// `reference` is null.
VideoMetrics evaluate_video(const Video& enhanced, const Video* reference);

std::string metrics_to_json(const VideoMetrics& m);
// One header plus one row; reference columns appear only when present.
std::string metrics_to_csv(const VideoMetrics& m, const std::string& name);

}  // namespace uve
