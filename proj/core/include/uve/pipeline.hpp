#pragma once

// End-to-end orchestration: window sampling with paired augmentation,
// the training loop (L1 + Adam + cosine schedule), sliding-window
// inference over frame directories, and metric report writing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uve/metrics.hpp"
#include "uve/model.hpp"
#include "uve/rng.hpp"
#include "uve/synth.hpp"

namespace uve {

inline constexpr const char* kVersion = "uve 0.1.0";

struct AugmentConfig {
  bool hflip = true;
  bool rot90 = true;
};

struct TrainConfig {
  ModelConfig model;
  double lr0 = 4e-4;
  double eta_min = 0.0;
  int64_t total_iters = 2000;
  int batch_size = 4;
  int crop_size = 64;
  AugmentConfig augment;
  uint64_t seed = 1;
  std::string manifest_path;
  std::string checkpoint_out;  // empty = do not write
  std::string report_out;      // empty = do not write
  int64_t checkpoint_every = 0;  // 0 = only at the end
  int64_t log_every = 50;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json_text(const std::string& text);
  static TrainConfig tiny();
  static TrainConfig paper();
};

Image hflip_image(const Image& img);
Image rot90_image(const Image& img, int quarter_turns);

struct WindowSample {
  std::vector<Image> frames;  // T degraded frames, temporally ordered
  Image gt;                   // clean center frame, identically transformed
};

// Draws one training sample: a uniform window start, one crop position and
// one augmentation shared by all T frames and the ground truth. Draw order
// (start, crop y, crop x, flip, rotation) is fixed for reproducibility.
WindowSample sample_window(const Video& degraded, const Video& clean,
                           int t_window, int crop_size,
                           const AugmentConfig& augment, Rng& rng);

struct RunReport {
  std::string config_json;
  std::vector<std::pair<int64_t, double>> losses;  // (iteration, batch L1)
  double first_loss = 0.0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::string heldout_id;
  std::optional<VideoMetrics> heldout_metrics;
  std::string version = kVersion;

  std::string to_json() const;
};

RunReport train(const TrainConfig& config);

// Sliding-window inference over a frame directory; windows at clip
// boundaries replicate the edge frames. Output frame count always equals
// input frame count. Parallel mode distributes frames across workers and is
// byte-identical to the serial mode.
void enhance_video(const std::string& checkpoint_path,
                   const std::string& input_dir, const std::string& output_dir,
                   bool parallel = false);

// In-memory variant used by training reports and tests.
Video enhance_frames(const Video& frames, const UVENetParams<float>& params,
                     const ModelConfig& cfg, bool parallel = false);

// Evaluates an enhanced directory (optionally against a reference) and
// writes JSON/CSV reports; empty output paths skip the writes.
VideoMetrics evaluate_dirs(const std::string& enhanced_dir,
                           const std::string& reference_dir,
                           const std::string& out_json,
                           const std::string& out_csv);

struct SynthConfig {
  std::string out_dir;
  int procedural = 2;   // number of generated clean clips
  int frames = 16;
  int height = 64, width = 64;
  int motion = 1;       // pixels/frame along +x
  int styles = 3;
  double train_fraction = 220.0 / 280.0;
  uint64_t seed = 1;

  std::string to_json() const;
  static SynthConfig from_json_text(const std::string& text);
};

DatasetManifest run_synth(const SynthConfig& config);

}  // namespace uve
