#include "uve/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace uve {

DepthMap fill_depth(const DepthMap& depth, const Image& guide, int radius,
                    float sigma_s, float sigma_r, int scales) {
  check(depth.h == guide.h && depth.w == guide.w,
        "fill_depth: guide size mismatch");
  check(radius >= 1 && scales >= 1 && sigma_s > 0 && sigma_r > 0,
        "fill_depth: bad filter parameters");
  const size_t total = static_cast<size_t>(depth.h) * depth.w;
  check(depth.meters.size() == total && depth.valid.size() == total,
        "fill_depth: malformed depth map");
  bool any_valid = false;
  for (uint8_t v : depth.valid) any_valid = any_valid || v != 0;
  check(any_valid, "fill_depth: no valid depth to propagate from");

  DepthMap out = depth;
  // Coarse passes fill large holes; finer passes overwrite wherever the
  // smaller kernel still reaches measured data.
  for (int pass = scales - 1; pass >= 0; --pass) {
    const int r = radius << pass;
    const float ss = sigma_s * static_cast<float>(1 << pass);
    const float inv2ss = 1.0f / (2.0f * ss * ss);
    const float inv2sr = 1.0f / (2.0f * sigma_r * sigma_r);
    for (int y = 0; y < depth.h; ++y) {
      for (int x = 0; x < depth.w; ++x) {
        if (depth.is_valid(y, x)) continue;
        double wsum = 0, vsum = 0;
        const float gr = guide.at(y, x, 0), gg = guide.at(y, x, 1),
                    gb = guide.at(y, x, 2);
        const int y0 = std::max(0, y - r), y1 = std::min(depth.h - 1, y + r);
        const int x0 = std::max(0, x - r), x1 = std::min(depth.w - 1, x + r);
        for (int ny = y0; ny <= y1; ++ny) {
          for (int nx = x0; nx <= x1; ++nx) {
            if (!depth.is_valid(ny, nx)) continue;
            const float ds = static_cast<float>((ny - y) * (ny - y) +
                                                (nx - x) * (nx - x));
            const float dr = (guide.at(ny, nx, 0) - gr) * (guide.at(ny, nx, 0) - gr) +
                             (guide.at(ny, nx, 1) - gg) * (guide.at(ny, nx, 1) - gg) +
                             (guide.at(ny, nx, 2) - gb) * (guide.at(ny, nx, 2) - gb);
            const double wgt = std::exp(-(ds * inv2ss + dr * inv2sr));
            wsum += wgt;
            vsum += wgt * depth.at(ny, nx);
          }
        }
        if (wsum > 0) {
          out.at(y, x) = static_cast<float>(vsum / wsum);
          out.valid[static_cast<size_t>(y) * depth.w + x] = 1;
        }
      }
    }
  }
  // Pathological holes beyond every kernel fall back to the valid mean.
  double mean_acc = 0;
  int64_t mean_n = 0;
  for (size_t i = 0; i < total; ++i)
    if (depth.valid[i]) {
      mean_acc += depth.meters[i];
      ++mean_n;
    }
  const float fallback = static_cast<float>(mean_acc / static_cast<double>(mean_n));
  for (size_t i = 0; i < total; ++i)
    if (!out.valid[i]) {
      out.meters[i] = fallback;
      out.valid[i] = 1;
    }
  return out;
}

Image center_crop(const Image& frame, int target_h, int target_w) {
  check(target_h >= 1 && target_w >= 1 && target_h <= frame.h &&
            target_w <= frame.w,
        "center_crop: target larger than source");
  const int top = (frame.h - target_h) / 2;
  const int left = (frame.w - target_w) / 2;
  Image out;
  out.h = target_h;
  out.w = target_w;
  out.rgb.resize(static_cast<size_t>(target_h) * target_w * 3);
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = frame.at(top + y, left + x, c);
  return out;
}

DepthMap center_crop(const DepthMap& depth, int target_h, int target_w) {
  check(target_h >= 1 && target_w >= 1 && target_h <= depth.h &&
            target_w <= depth.w,
        "center_crop: target larger than source");
  const int top = (depth.h - target_h) / 2;
  const int left = (depth.w - target_w) / 2;
  DepthMap out;
  out.h = target_h;
  out.w = target_w;
  out.meters.resize(static_cast<size_t>(target_h) * target_w);
  out.valid.resize(out.meters.size());
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x) {
      out.at(y, x) = depth.at(top + y, left + x);
      out.valid[static_cast<size_t>(y) * target_w + x] =
          depth.valid[static_cast<size_t>(top + y) * depth.w + (left + x)];
    }
  return out;
}

Image degrade_frame(const Image& clean, const DepthMap& depth,
                    const WaterParams& water) {
  check(clean.h == depth.h && clean.w == depth.w,
        "degrade_frame: depth size mismatch");
  for (int c = 0; c < 3; ++c) {
    check(water.beta[static_cast<size_t>(c)] >= 0,
          "degrade_frame: negative attenuation");
    check(water.background[static_cast<size_t>(c)] >= 0 &&
              water.background[static_cast<size_t>(c)] <= 1,
          "degrade_frame: background light outside [0,1]");
  }
  Image out = clean;
  for (int y = 0; y < clean.h; ++y)
    for (int x = 0; x < clean.w; ++x) {
      const float d = depth.at(y, x);
      for (int c = 0; c < 3; ++c) {
        const float t = std::exp(-water.beta[static_cast<size_t>(c)] * d);
        out.at(y, x, c) = clean.at(y, x, c) * t +
                          water.background[static_cast<size_t>(c)] * (1.0f - t);
      }
    }
  return out;
}

std::vector<Image> synth_clip(const CleanClip& clean, const WaterParams& water) {
  check(clean.frames.size() == clean.depths.size(),
        "synth_clip: frames and depths differ in length");
  std::vector<Image> out;
  out.reserve(clean.frames.size());
  for (size_t i = 0; i < clean.frames.size(); ++i)
    out.push_back(degrade_frame(clean.frames[i], clean.depths[i], water));
  return out;
}

WaterParams sample_water(Rng& rng, std::span<const WaterPreset> pool) {
  check(!pool.empty(), "sample_water: empty preset pool");
  const WaterPreset& p = pool[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
  WaterParams w;
  w.preset = p.name;
  for (size_t c = 0; c < 3; ++c) {
    w.beta[c] = static_cast<float>(rng.uniform(p.beta_lo[c], p.beta_hi[c]));
    w.background[c] = static_cast<float>(rng.uniform(p.bg_lo[c], p.bg_hi[c]));
  }
  return w;
}

WaterParams sample_water(uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x77617465ULL));
  return sample_water(rng);
}

CleanClip gen_procedural_clip(uint64_t seed, int n_frames, int h, int w,
                              int motion_x, int motion_y) {
  check(n_frames >= 1 && h >= 1 && w >= 1, "gen_procedural_clip: bad size");
  Rng rng(Rng::mix(seed, 0x636c6970ULL));
  const int cell = static_cast<int>(rng.uniform_int(6, 12));
  std::array<float, 3> col_a, col_b, col_c;
  for (size_t c = 0; c < 3; ++c) {
    col_a[c] = static_cast<float>(rng.uniform(0.15, 0.85));
    col_b[c] = static_cast<float>(rng.uniform(0.15, 0.85));
    col_c[c] = static_cast<float>(rng.uniform(0.15, 0.85));
  }
  const double gx = rng.uniform(0.008, 0.03), gy = rng.uniform(0.008, 0.03);
  const double gphase = rng.uniform(0.0, 6.28);
  const double dx = rng.uniform(0.004, 0.02), dy = rng.uniform(0.004, 0.02);
  const double dphase = rng.uniform(0.0, 6.28);
  const double d0 = rng.uniform(3.0, 6.0);
  const double damp = rng.uniform(1.0, 2.4);

  auto texel = [&](int64_t X, int64_t Y, int c) {
    const int64_t cx = X >= 0 ? X / cell : -((-X + cell - 1) / cell);
    const int64_t cy = Y >= 0 ? Y / cell : -((-Y + cell - 1) / cell);
    const bool par = ((cx + cy) & 1) == 0;
    const float base = par ? col_a[static_cast<size_t>(c)]
                           : col_b[static_cast<size_t>(c)];
    const double s =
        0.5 + 0.5 * std::sin(6.283185307179586 * (gx * static_cast<double>(X) +
                                                  gy * static_cast<double>(Y)) +
                             gphase);
    return 0.7f * base + 0.3f * static_cast<float>(s) * col_c[static_cast<size_t>(c)];
  };
  auto depth_at = [&](int64_t X, int64_t Y) {
    return static_cast<float>(
        d0 + damp * std::sin(6.283185307179586 *
                                 (dx * static_cast<double>(X) +
                                  dy * static_cast<double>(Y)) +
                             dphase));
  };

  CleanClip clip;
  clip.id = "clip" + std::to_string(seed);
  for (int t = 0; t < n_frames; ++t) {
    Image img;
    img.h = h;
    img.w = w;
    img.rgb.resize(static_cast<size_t>(h) * w * 3);
    DepthMap dm;
    dm.h = h;
    dm.w = w;
    dm.meters.resize(static_cast<size_t>(h) * w);
    dm.valid.assign(dm.meters.size(), 1);
    const int64_t ox = static_cast<int64_t>(t) * motion_x;
    const int64_t oy = static_cast<int64_t>(t) * motion_y;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = texel(x + ox, y + oy, c);
        dm.at(y, x) = depth_at(x + ox, y + oy);
      }
    clip.frames.push_back(std::move(img));
    clip.depths.push_back(std::move(dm));
  }
  return clip;
}

namespace {

nlohmann::json water_to_json(const WaterParams& w) {
  return nlohmann::json{
      {"preset", w.preset},
      {"beta", {w.beta[0], w.beta[1], w.beta[2]}},
      {"background", {w.background[0], w.background[1], w.background[2]}}};
}

WaterParams water_from_json(const nlohmann::json& j) {
  WaterParams w;
  w.preset = j.value("preset", std::string{});
  for (size_t c = 0; c < 3; ++c) {
    w.beta[c] = j.at("beta").at(c).get<float>();
    w.background[c] = j.at("background").at(c).get<float>();
  }
  return w;
}

DepthMap quantize_depth_roundtrip(const DepthMap& d) {
  DepthMap out = d;
  for (auto& m : out.meters) {
    const float mm = std::clamp(std::round(m * 1000.0f), 0.0f, 65535.0f);
    m = mm / 1000.0f;
  }
  return out;
}

std::vector<uint16_t> depth_to_mm(const DepthMap& d) {
  std::vector<uint16_t> mm(d.meters.size());
  for (size_t i = 0; i < mm.size(); ++i)
    mm[i] = static_cast<uint16_t>(
        std::clamp(std::round(d.meters[i] * 1000.0f), 0.0f, 65535.0f));
  return mm;
}

}  // namespace

DatasetManifest build_dataset(const std::vector<CleanClip>& clips,
                              int styles_per_clip, double train_fraction,
                              uint64_t seed, const std::string& out_dir) {
  check(!clips.empty(), "build_dataset: no clips");
  check(styles_per_clip >= 1, "build_dataset: styles_per_clip must be >= 1");
  check(train_fraction >= 0 && train_fraction <= 1,
        "build_dataset: train_fraction outside [0,1]");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // Split assignment happens per clean clip, before styling, so the two
  // splits can never share content.
  const size_t n = clips.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng split_rng(Rng::mix(seed, 0x73706c69ULL));
  for (size_t i = n; i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<size_t>(split_rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
  const size_t train_count = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::string> split(n);
  for (size_t i = 0; i < n; ++i)
    split[order[i]] = i < train_count ? "train" : "test";

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.styles_per_clip = styles_per_clip;
  for (size_t ci = 0; ci < n; ++ci) {
    const CleanClip& clip = clips[ci];
    check(!clip.frames.empty() && clip.frames.size() == clip.depths.size(),
          "build_dataset: malformed clip " + clip.id);
    const std::string clean_dir = out_dir + "/clean/" + clip.id;
    const std::string depth_dir = out_dir + "/depth/" + clip.id;
    fs::create_directories(clean_dir);
    fs::create_directories(depth_dir);

    // Quantize through the storage formats first so that re-degrading the
    // stored artifacts reproduces the stored underwater frames byte for byte.
    std::vector<Image> stored_frames;
    std::vector<DepthMap> stored_depths;
    for (size_t fi = 0; fi < clip.frames.size(); ++fi) {
      check(clip.depths[fi].h == clip.frames[fi].h &&
                clip.depths[fi].w == clip.frames[fi].w,
            "build_dataset: depth/frame size mismatch in " + clip.id);
      stored_frames.push_back(quantize_roundtrip(clip.frames[fi]));
      stored_depths.push_back(quantize_depth_roundtrip(clip.depths[fi]));
      write_image_png(clean_dir + "/" + frame_filename(static_cast<int>(fi)),
                      clip.frames[fi]);
      write_gray16_png(depth_dir + "/" + frame_filename(static_cast<int>(fi)),
                       clip.depths[fi].h, clip.depths[fi].w,
                       depth_to_mm(clip.depths[fi]));
    }

    for (int style = 1; style <= styles_per_clip; ++style) {
      Rng wrng(Rng::mix(Rng::mix(seed, ci + 1), static_cast<uint64_t>(style)));
      const WaterParams water = sample_water(wrng);
      const std::string uw_dir =
          out_dir + "/underwater/" + clip.id + "_s" + std::to_string(style);
      fs::create_directories(uw_dir);
      for (size_t fi = 0; fi < stored_frames.size(); ++fi) {
        const Image degraded =
            degrade_frame(stored_frames[fi], stored_depths[fi], water);
        write_image_png(uw_dir + "/" + frame_filename(static_cast<int>(fi)),
                        degraded);
      }
      DatasetEntry entry;
      entry.id = clip.id;
      entry.style = style;
      entry.split = split[ci];
      entry.clean_dir = "clean/" + clip.id;
      entry.depth_dir = "depth/" + clip.id;
      entry.underwater_dir = "underwater/" + clip.id + "_s" + std::to_string(style);
      entry.frames = static_cast<int>(clip.frames.size());
      entry.height = clip.frames[0].h;
      entry.width = clip.frames[0].w;
      entry.water = water;
      manifest.entries.push_back(std::move(entry));
    }
  }
  write_manifest(out_dir + "/manifest.json", manifest);
  return manifest;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  nlohmann::json j;
  j["version"] = 1;
  j["seed"] = manifest.seed;
  j["styles_per_clip"] = manifest.styles_per_clip;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back(nlohmann::json{{"id", e.id},
                                     {"style", e.style},
                                     {"split", e.split},
                                     {"clean_dir", e.clean_dir},
                                     {"depth_dir", e.depth_dir},
                                     {"underwater_dir", e.underwater_dir},
                                     {"frames", e.frames},
                                     {"height", e.height},
                                     {"width", e.width},
                                     {"water", water_to_json(e.water)}});
  }
  j["entries"] = std::move(entries);
  std::ofstream f(path, std::ios::trunc);
  check(static_cast<bool>(f), "cannot write manifest: " + path);
  f << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  check(static_cast<bool>(f), "cannot read manifest: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  DatasetManifest m;
  m.seed = j.value("seed", uint64_t{0});
  m.styles_per_clip = j.value("styles_per_clip", 3);
  for (const auto& je : j.at("entries")) {
    DatasetEntry e;
    e.id = je.at("id").get<std::string>();
    e.style = je.at("style").get<int>();
    e.split = je.at("split").get<std::string>();
    e.clean_dir = je.at("clean_dir").get<std::string>();
    e.depth_dir = je.value("depth_dir", std::string{});
    e.underwater_dir = je.at("underwater_dir").get<std::string>();
    e.frames = je.at("frames").get<int>();
    e.height = je.at("height").get<int>();
    e.width = je.at("width").get<int>();
    e.water = water_from_json(je.at("water"));
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace uve
