#include "uve/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "uve/optim.hpp"
#include "uve/parallel.hpp"

namespace uve {

void TrainConfig::validate() const {
  model.validate();
  check(batch_size >= 1, "train: batch_size must be >= 1");
  check(crop_size >= 32 && crop_size % 32 == 0,
        "train: crop_size must be a positive multiple of 32");
  check(total_iters >= 0, "train: total_iters must be >= 0");
  check(lr0 > 0 && eta_min >= 0, "train: bad learning rates");
  check(log_every >= 1, "train: log_every must be >= 1");
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(model.to_json());
  j["lr0"] = lr0;
  j["eta_min"] = eta_min;
  j["total_iters"] = total_iters;
  j["batch_size"] = batch_size;
  j["crop_size"] = crop_size;
  j["augment"] = {{"hflip", augment.hflip}, {"rot90", augment.rot90}};
  j["seed"] = seed;
  j["manifest"] = manifest_path;
  j["checkpoint_out"] = checkpoint_out;
  j["report_out"] = report_out;
  j["checkpoint_every"] = checkpoint_every;
  j["log_every"] = log_every;
  return j.dump();
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig c;
  if (j.contains("model")) c.model = ModelConfig::from_json_text(j.at("model").dump());
  c.lr0 = j.value("lr0", c.lr0);
  c.eta_min = j.value("eta_min", c.eta_min);
  c.total_iters = j.value("total_iters", c.total_iters);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.crop_size = j.value("crop_size", c.crop_size);
  if (j.contains("augment")) {
    c.augment.hflip = j.at("augment").value("hflip", c.augment.hflip);
    c.augment.rot90 = j.at("augment").value("rot90", c.augment.rot90);
  }
  c.seed = j.value("seed", c.seed);
  c.manifest_path = j.value("manifest", c.manifest_path);
  c.checkpoint_out = j.value("checkpoint_out", c.checkpoint_out);
  c.report_out = j.value("report_out", c.report_out);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.log_every = j.value("log_every", c.log_every);
  return c;
}

TrainConfig TrainConfig::tiny() {
  TrainConfig c;
  c.model = ModelConfig::tiny();
  return c;
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.model = ModelConfig::paper();
  c.total_iters = 80000;
  c.batch_size = 16;
  c.crop_size = 256;
  return c;
}

Image hflip_image(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
  return out;
}

Image rot90_image(const Image& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  Image out;
  out.h = (k % 2 == 0) ? img.h : img.w;
  out.w = (k % 2 == 0) ? img.w : img.h;
  out.rgb.resize(img.rgb.size());
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      int sy = 0, sx = 0;
      switch (k) {  // counter-clockwise quarter turns
        case 1: sy = x; sx = img.w - 1 - y; break;
        case 2: sy = img.h - 1 - y; sx = img.w - 1 - x; break;
        case 3: sy = img.h - 1 - x; sx = y; break;
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  return out;
}

namespace {

Image crop_image(const Image& img, int top, int left, int size) {
  Image out;
  out.h = size;
  out.w = size;
  out.rgb.resize(static_cast<size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = img.at(top + y, left + x, c);
  return out;
}

}  // namespace

WindowSample sample_window(const Video& degraded, const Video& clean,
                           int t_window, int crop_size,
                           const AugmentConfig& augment, Rng& rng) {
  check(t_window >= 1 && t_window % 2 == 1, "sample_window: window must be odd");
  check(degraded.size() == clean.size() && !degraded.empty(),
        "sample_window: clip pair length mismatch");
  const int n = static_cast<int>(degraded.size());
  check(n >= t_window, "sample_window: clip shorter than the window");
  const int h = degraded[0].h, w = degraded[0].w;
  check(crop_size <= h && crop_size <= w,
        "sample_window: crop larger than frames");

  const int start = static_cast<int>(rng.uniform_int(0, n - t_window));
  const int top = static_cast<int>(rng.uniform_int(0, h - crop_size));
  const int left = static_cast<int>(rng.uniform_int(0, w - crop_size));
  const bool flip = augment.hflip ? rng.coin() : false;
  const int turns = augment.rot90 ? static_cast<int>(rng.uniform_int(0, 3)) : 0;

  auto transform = [&](const Image& img) {
    Image out = crop_image(img, top, left, crop_size);
    if (flip) out = hflip_image(out);
    if (turns) out = rot90_image(out, turns);
    return out;
  };

  WindowSample sample;
  for (int i = 0; i < t_window; ++i)
    sample.frames.push_back(transform(degraded[static_cast<size_t>(start + i)]));
  sample.gt = transform(clean[static_cast<size_t>(start + t_window / 2)]);
  return sample;
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_json);
  nlohmann::json losses_json = nlohmann::json::array();
  for (const auto& [it, loss] : losses)
    losses_json.push_back({{"iter", it}, {"loss", loss}});
  j["losses"] = std::move(losses_json);
  j["first_loss"] = first_loss;
  j["final_loss"] = final_loss;
  j["wall_seconds"] = wall_seconds;
  if (heldout_metrics) {
    j["heldout"] = {{"id", heldout_id},
                    {"metrics", nlohmann::json::parse(
                                    metrics_to_json(*heldout_metrics))}};
  }
  j["version"] = version;
  return j.dump(2) + "\n";
}

namespace {

struct LoadedPair {
  DatasetEntry entry;
  Video degraded;
  Video clean;
};

std::vector<LoadedPair> load_pairs(const DatasetManifest& manifest,
                                   const std::string& root,
                                   const std::string& split) {
  std::vector<LoadedPair> pairs;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    LoadedPair p;
    p.entry = e;
    p.degraded = read_video(root + "/" + e.underwater_dir);
    p.clean = read_video(root + "/" + e.clean_dir);
    check(p.degraded.size() == p.clean.size(),
          "train: degraded/clean length mismatch for " + e.id);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace

RunReport train(const TrainConfig& config) {
  config.validate();
  check(!config.manifest_path.empty(), "train: manifest path required");
  const DatasetManifest manifest = read_manifest(config.manifest_path);
  const std::string root =
      std::filesystem::path(config.manifest_path).parent_path().string();
  std::vector<LoadedPair> pairs = load_pairs(manifest, root, "train");
  check(!pairs.empty(), "train: manifest has no train entries");

  const auto t_begin = std::chrono::steady_clock::now();
  UVENetParams<float> params = init_params<float>(config.model, config.seed);
  AdamState<float> adam;
  CosineSchedule sched{config.lr0, config.eta_min,
                       std::max<int64_t>(config.total_iters, 1)};
  Rng rng(Rng::mix(config.seed, 0x747261696eULL));

  RunReport report;
  report.config_json = config.to_json();

  const int t_window = config.model.t;
  for (int64_t iter = 0; iter < config.total_iters; ++iter) {
    const double lr = cosine_lr(sched, iter);

    std::vector<Image> batch_frames;
    std::vector<Image> batch_gt;
    for (int b = 0; b < config.batch_size; ++b) {
      const auto& pair = pairs[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(pairs.size()) - 1))];
      WindowSample s = sample_window(pair.degraded, pair.clean, t_window,
                                     config.crop_size, config.augment, rng);
      for (auto& f : s.frames) batch_frames.push_back(std::move(f));
      batch_gt.push_back(std::move(s.gt));
    }
    Tensor<float> frames = tensor_from_images<float>(batch_frames);
    Tensor<float> gt = tensor_from_images<float>(batch_gt);

    Tape<float> tape;
    double loss_value = 0;
    {
      Tape<float>::Scope scope(tape);
      Tensor<float> out = forward(frames, config.batch_size, params, config.model);
      Tensor<float> loss = l1_loss(out, gt);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value))
        throw std::runtime_error(
            "train: non-finite loss at iteration " + std::to_string(iter) +
            " (lr=" + std::to_string(lr) + "); aborting");
      tape.backward(loss);
    }
    adam.lr = static_cast<float>(lr);
    adam_step<float>(params.tensors(), adam);
    for (auto& p : params.tensors()) p.zero_grad();

    if (iter == 0) report.first_loss = loss_value;
    report.final_loss = loss_value;
    if (iter % config.log_every == 0 || iter + 1 == config.total_iters)
      report.losses.emplace_back(iter, loss_value);
    if (config.checkpoint_every > 0 && !config.checkpoint_out.empty() &&
        (iter + 1) % config.checkpoint_every == 0)
      save_model(config.checkpoint_out, params, config.model);
  }

  if (!config.checkpoint_out.empty()) {
    std::filesystem::path out(config.checkpoint_out);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_model(config.checkpoint_out, params, config.model);
  }

  // Post-training snapshot on the first held-out pair, when one exists.
  std::vector<LoadedPair> heldout = load_pairs(manifest, root, "test");
  if (!heldout.empty()) {
    const LoadedPair& p = heldout.front();
    Video enhanced = enhance_frames(p.degraded, params, config.model);
    report.heldout_id = p.entry.id + "_s" + std::to_string(p.entry.style);
    report.heldout_metrics = evaluate_video(enhanced, &p.clean);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  if (!config.report_out.empty()) {
    std::filesystem::path out(config.report_out);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream f(config.report_out, std::ios::trunc);
    check(static_cast<bool>(f), "train: cannot write report " + config.report_out);
    f << report.to_json();
  }
  return report;
}

Video enhance_frames(const Video& frames, const UVENetParams<float>& params,
                     const ModelConfig& cfg, bool parallel) {
  check(!frames.empty(), "enhance: no frames");
  const int n = static_cast<int>(frames.size());
  const int k = cfg.t / 2;
  Video out(frames.size());

  auto run = [&](int64_t lo, int64_t hi) {
    for (int64_t t = lo; t < hi; ++t) {
      std::vector<Image> window;
      window.reserve(static_cast<size_t>(cfg.t));
      for (int i = -k; i <= k; ++i) {
        const int idx = std::clamp(static_cast<int>(t) + i, 0, n - 1);
        window.push_back(frames[static_cast<size_t>(idx)]);
      }
      Tensor<float> stacked = tensor_from_images<float>(window);
      Tensor<float> y = forward(stacked, 1, params, cfg);
      out[static_cast<size_t>(t)] = image_from_tensor(y, 0);
    }
  };
  if (parallel) {
    parallel_for(n, run);
  } else {
    run(0, n);
  }
  return out;
}

void enhance_video(const std::string& checkpoint_path,
                   const std::string& input_dir, const std::string& output_dir,
                   bool parallel) {
  auto [params, cfg] = load_model(checkpoint_path);
  const Video frames = read_video(input_dir);
  const Video enhanced = enhance_frames(frames, params, cfg, parallel);
  write_video(output_dir, enhanced);
}

VideoMetrics evaluate_dirs(const std::string& enhanced_dir,
                           const std::string& reference_dir,
                           const std::string& out_json,
                           const std::string& out_csv) {
  const Video enhanced = read_video(enhanced_dir);
  Video reference;
  if (!reference_dir.empty()) reference = read_video(reference_dir);
  const VideoMetrics m =
      evaluate_video(enhanced, reference_dir.empty() ? nullptr : &reference);
  if (!out_json.empty()) {
    std::ofstream f(out_json, std::ios::trunc);
    check(static_cast<bool>(f), "evaluate: cannot write " + out_json);
    f << metrics_to_json(m);
  }
  if (!out_csv.empty()) {
    std::ofstream f(out_csv, std::ios::trunc);
    check(static_cast<bool>(f), "evaluate: cannot write " + out_csv);
    f << metrics_to_csv(
        m, std::filesystem::path(enhanced_dir).filename().string());
  }
  return m;
}

std::string SynthConfig::to_json() const {
  nlohmann::json j;
  j["out_dir"] = out_dir;
  j["procedural"] = procedural;
  j["frames"] = frames;
  j["height"] = height;
  j["width"] = width;
  j["motion"] = motion;
  j["styles"] = styles;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  return j.dump();
}

SynthConfig SynthConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SynthConfig c;
  c.out_dir = j.value("out_dir", c.out_dir);
  c.procedural = j.value("procedural", c.procedural);
  c.frames = j.value("frames", c.frames);
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.motion = j.value("motion", c.motion);
  c.styles = j.value("styles", c.styles);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.seed = j.value("seed", c.seed);
  return c;
}

DatasetManifest run_synth(const SynthConfig& config) {
  check(!config.out_dir.empty(), "synth: out_dir required");
  check(config.procedural >= 1, "synth: need at least one clip");
  std::vector<CleanClip> clips;
  clips.reserve(static_cast<size_t>(config.procedural));
  for (int i = 0; i < config.procedural; ++i) {
    CleanClip clip = gen_procedural_clip(Rng::mix(config.seed, static_cast<uint64_t>(i)),
                                         config.frames, config.height,
                                         config.width, config.motion, 0);
    clip.id = "clip" + std::to_string(i);
    clips.push_back(std::move(clip));
  }
  return build_dataset(clips, config.styles, config.train_fraction, config.seed,
                       config.out_dir);
}

}  // namespace uve
