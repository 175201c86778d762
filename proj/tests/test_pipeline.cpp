#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support/test_util.hpp"
#include "uve/gradcheck.hpp"
#include "uve/ops.hpp"
#include "uve/pipeline.hpp"

using namespace uve;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

ModelConfig micro_model(int t) {
  ModelConfig m;
  m.t = t;
  m.dims = {8, 16, 32, 64};
  m.depths = {1, 1, 1, 1};
  m.decoder_dim = 8;
  m.grm_dim = 16;
  m.aggregation = Aggregation::kDsc;
  return m;
}

// A tiny on-disk dataset shared by the pipeline tests.
struct ScratchDataset {
  std::string dir;
  DatasetManifest manifest;

  explicit ScratchDataset(const std::string& name, int clips = 2,
                          int frames = 8, int size = 64) {
    dir = name;
    fs::remove_all(dir);
    std::vector<CleanClip> cs;
    for (int i = 0; i < clips; ++i) {
      CleanClip c = gen_procedural_clip(Rng::mix(1000, static_cast<uint64_t>(i)),
                                        frames, size, size, 1, 0);
      c.id = "clip" + std::to_string(i);
      cs.push_back(std::move(c));
    }
    manifest = build_dataset(cs, 1, 0.5, 5, dir);
  }
  ~ScratchDataset() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("sample_window: forced start, determinism, and augment pairing") {
  Rng gen(1);
  Video degraded, clean;
  for (int t = 0; t < 5; ++t) {
    CleanClip c = gen_procedural_clip(static_cast<uint64_t>(t), 1, 48, 48, 0, 0);
    degraded.push_back(c.frames[0]);
    CleanClip g = gen_procedural_clip(static_cast<uint64_t>(t) + 50, 1, 48, 48, 0, 0);
    clean.push_back(g.frames[0]);
  }

  // Window size equals clip length: the start index is forced to 0.
  AugmentConfig no_aug{false, false};
  Rng r1(9);
  WindowSample s = sample_window(degraded, clean, 5, 32, no_aug, r1);
  CHECK(s.frames.size() == 5);
  CHECK(s.gt.h == 32);

  // Fixed seed draws the identical window.
  Rng r2(9);
  WindowSample s2 = sample_window(degraded, clean, 5, 32, no_aug, r2);
  for (int i = 0; i < 5; ++i) CHECK(s.frames[static_cast<size_t>(i)].rgb ==
                                    s2.frames[static_cast<size_t>(i)].rgb);
  CHECK(s.gt.rgb == s2.gt.rgb);

  // Plant a marker and verify frames and ground truth transform together.
  Video marked_deg = degraded, marked_clean = clean;
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 3; ++c) {
      marked_deg[static_cast<size_t>(t)].at(7, 11, c) = 1.0f;
      marked_clean[static_cast<size_t>(t)].at(7, 11, c) = 1.0f;
    }
  AugmentConfig full{true, true};
  auto marker_pos = [](const Image& img) {
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        if (img.at(y, x, 0) == 1.0f && img.at(y, x, 1) == 1.0f &&
            img.at(y, x, 2) == 1.0f)
          return std::pair<int, int>{y, x};
    return std::pair<int, int>{-1, -1};
  };
  int windows_with_marker = 0;
  for (uint64_t seed = 0; seed < 24; ++seed) {
    Rng ra(seed);
    WindowSample a = sample_window(marked_deg, marked_clean, 3, 32, full, ra);
    const auto gt_pos = marker_pos(a.gt);
    if (gt_pos.first < 0) continue;  // marker fell outside this crop
    ++windows_with_marker;
    // The marker lands at the same place in every frame and the gt.
    for (const auto& f : a.frames) CHECK((marker_pos(f) == gt_pos));
  }
  CHECK(windows_with_marker > 0);

  CHECK_THROWS_AS(sample_window(degraded, clean, 7, 32, no_aug, r1),
                  std::invalid_argument);  // clip shorter than window
  CHECK_THROWS_AS(sample_window(degraded, clean, 3, 64, no_aug, r1),
                  std::invalid_argument);  // crop larger than frames
}

TEST_CASE("train config JSON echo round-trips") {
  TrainConfig c = TrainConfig::tiny();
  c.total_iters = 123;
  c.batch_size = 2;
  c.crop_size = 32;
  c.augment.rot90 = false;
  c.seed = 99;
  c.manifest_path = "some/manifest.json";
  TrainConfig back = TrainConfig::from_json_text(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.total_iters == 123);
  CHECK(back.augment.rot90 == false);
  CHECK(back.seed == 99);

  CHECK(TrainConfig::tiny().lr0 == doctest::Approx(4e-4));
  CHECK(TrainConfig::paper().total_iters == 80000);
  CHECK(TrainConfig::paper().batch_size == 16);
  CHECK(TrainConfig::paper().crop_size == 256);
}

TEST_CASE("train: zero iterations reproduces init_params in the checkpoint") {
  ScratchDataset data("pipe_zero_iters");
  TrainConfig cfg;
  cfg.model = micro_model(3);
  cfg.total_iters = 0;
  cfg.batch_size = 1;
  cfg.crop_size = 32;
  cfg.seed = 21;
  cfg.manifest_path = data.dir + "/manifest.json";
  cfg.checkpoint_out = data.dir + "/zero.uvew";
  train(cfg);

  auto [params, loaded_cfg] = load_model(cfg.checkpoint_out);
  UVENetParams<float> fresh = init_params<float>(cfg.model, cfg.seed);
  REQUIRE(params.entries().size() == fresh.entries().size());
  for (size_t i = 0; i < params.entries().size(); ++i) {
    auto a = params.entries()[i].second.values();
    auto b = fresh.entries()[i].second.values();
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("train: smoke run logs losses and is seed-deterministic") {
  ScratchDataset data("pipe_train_smoke");
  TrainConfig cfg;
  cfg.model = micro_model(3);
  cfg.total_iters = 4;
  cfg.batch_size = 2;
  cfg.crop_size = 32;
  cfg.seed = 33;
  cfg.log_every = 1;
  cfg.manifest_path = data.dir + "/manifest.json";
  cfg.checkpoint_out = data.dir + "/run_a.uvew";
  cfg.report_out = data.dir + "/report_a.json";
  RunReport a = train(cfg);
  CHECK(a.losses.size() == 4);
  CHECK(std::isfinite(a.final_loss));
  CHECK(fs::exists(cfg.checkpoint_out));
  CHECK(fs::exists(cfg.report_out));
  CHECK(a.heldout_metrics.has_value());  // the scratch set has a test split

  cfg.checkpoint_out = data.dir + "/run_b.uvew";
  cfg.report_out.clear();
  RunReport b = train(cfg);
  CHECK(a.final_loss == b.final_loss);
  CHECK(slurp(data.dir + "/run_a.uvew") == slurp(data.dir + "/run_b.uvew"));

  // The report's config echo parses back to the identical training setup.
  TrainConfig echo = TrainConfig::from_json_text(a.config_json);
  CHECK(echo.to_json() == a.config_json);
  CHECK(echo.total_iters == 4);
  CHECK(echo.seed == 33);
}

TEST_CASE("train: empty manifest split is an error") {
  std::vector<CleanClip> cs;
  CleanClip c = gen_procedural_clip(77, 4, 64, 64, 0, 0);
  c.id = "only";
  cs = {std::move(c)};
  fs::remove_all("pipe_train_empty2");
  build_dataset(cs, 1, 0.0, 5, "pipe_train_empty2");
  TrainConfig cfg;
  cfg.model = micro_model(3);
  cfg.total_iters = 1;
  cfg.crop_size = 32;
  cfg.manifest_path = "pipe_train_empty2/manifest.json";
  CHECK_THROWS_AS(train(cfg), std::invalid_argument);
  fs::remove_all("pipe_train_empty2");
}

TEST_CASE("enhance: boundary replication, counts, parallel equivalence") {
  ScratchDataset data("pipe_enhance");
  // Train nothing; a freshly initialized model is fine for inference checks.
  const ModelConfig cfg = micro_model(5);
  UVENetParams<float> params = init_params<float>(cfg, 3);
  const std::string ckpt = data.dir + "/model.uvew";
  save_model(ckpt, params, cfg);

  // Single-frame clip with T=5: the window is five copies of that frame.
  const std::string single_dir = data.dir + "/single";
  CleanClip c1 = gen_procedural_clip(500, 1, 64, 64, 0, 0);
  write_video(single_dir, c1.frames);
  enhance_video(ckpt, single_dir, data.dir + "/single_out");
  CHECK(list_frames(data.dir + "/single_out").size() == 1);

  // A static clip enhances to bit-identical frames.
  const std::string static_dir = data.dir + "/static";
  Video stat(4, c1.frames[0]);
  write_video(static_dir, stat);
  enhance_video(ckpt, static_dir, data.dir + "/static_out");
  Video out = read_video(data.dir + "/static_out");
  REQUIRE(out.size() == 4);
  for (size_t t = 1; t < 4; ++t) CHECK(out[t].rgb == out[0].rgb);

  // Serial and parallel modes produce identical bytes.
  const std::string moving_dir = data.dir + "/moving";
  CleanClip c2 = gen_procedural_clip(501, 6, 64, 64, 2, 1);
  write_video(moving_dir, c2.frames);
  enhance_video(ckpt, moving_dir, data.dir + "/serial_out", false);
  enhance_video(ckpt, moving_dir, data.dir + "/parallel_out", true);
  const auto serial = list_frames(data.dir + "/serial_out");
  const auto parallel = list_frames(data.dir + "/parallel_out");
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i)
    CHECK(slurp(serial[i]) == slurp(parallel[i]));

  // Output count equals input count across window sizes.
  for (int t : {1, 3, 7}) {
    const ModelConfig cfg_t = micro_model(t);
    UVENetParams<float> p_t = init_params<float>(cfg_t, 4);
    Video enhanced = enhance_frames(c2.frames, p_t, cfg_t);
    CHECK(enhanced.size() == c2.frames.size());
  }
}

TEST_CASE("evaluate_dirs: self-comparison caps, CSV/JSON agreement") {
  ScratchDataset data("pipe_eval");
  const std::string frames_dir = data.dir + "/frames";
  CleanClip clip = gen_procedural_clip(900, 5, 48, 48, 1, 0);
  write_video(frames_dir, clip.frames);

  const std::string js = data.dir + "/m.json", cs = data.dir + "/m.csv";
  VideoMetrics self = evaluate_dirs(frames_dir, frames_dir, js, cs);
  CHECK(*self.mean_psnr == 100.0);
  CHECK(*self.mean_ssim == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(*self.mse_mabd == 0.0);

  // CSV values parse back to exactly the JSON values.
  const std::string csv = slurp(cs);
  const auto header_end = csv.find('\n');
  const std::string header = csv.substr(0, header_end);
  std::string row = csv.substr(header_end + 1);
  if (!row.empty() && row.back() == '\n') row.pop_back();
  std::vector<std::string> cols, vals;
  {
    std::stringstream hs(header), rs(row);
    std::string tok;
    while (std::getline(hs, tok, ',')) cols.push_back(tok);
    while (std::getline(rs, tok, ',')) vals.push_back(tok);
  }
  REQUIRE(cols.size() == vals.size());
  auto col_value = [&](const std::string& name) -> double {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return std::stod(vals[i]);
    REQUIRE(false);
    return 0;
  };
  CHECK(col_value("psnr") == *self.mean_psnr);
  CHECK(col_value("ssim") == *self.mean_ssim);
  CHECK(col_value("uiqm") == self.mean_uiqm);
  CHECK(col_value("uciqe") == self.mean_uciqe);
  CHECK(col_value("mse_mabd") == *self.mse_mabd);
  CHECK(col_value("cdc") == *self.cdc);

  // Without a reference the CSV header drops the full-reference columns.
  VideoMetrics no_ref = evaluate_dirs(frames_dir, "", js, cs);
  const std::string csv2 = slurp(cs);
  CHECK(csv2.find("psnr") == std::string::npos);
  CHECK(csv2.find("mse_mabd") == std::string::npos);
  CHECK_FALSE(no_ref.mean_psnr.has_value());
}

TEST_CASE("gradcheck flags a corrupted backward and names the op") {
  // A graph whose recorded backward is deliberately wrong by a factor 1.5.
  Rng rng(10);
  Tensor<double> x = testutil::random_tensor<double>({1, 2, 3, 3}, rng);

  auto corrupted = [&]() {
    Tensor<double> y = scale(x, 2.0);
    if (Tape<double>::current() && x.needs_grad()) {
      // Extra bogus node: injects 1.0 into every x gradient entry.
      Tape<double>::current()->record({y}, [x]() {
        auto g = x.grad();
        for (auto& v : g) v += 1.0;
      });
    }
    return sum(y);
  };
  const double err = gradcheck_max_rel_error({x}, corrupted, 0, 11);
  GradCheckResult fake{"conv2d", err, 1e-4, err < 1e-4};
  std::vector<GradCheckResult> results{fake};
  CHECK_FALSE(all_passed(results));
  std::ostringstream os;
  print_gradcheck_report(results, os);
  CHECK(os.str().find("conv2d") != std::string::npos);
  CHECK(os.str().find("FAIL") != std::string::npos);

  // The same report is deterministic per seed.
  const auto r1 = run_gradcheck_suite(5);
  const auto r2 = run_gradcheck_suite(5);
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].op == r2[i].op);
    CHECK(r1[i].max_rel_err == r2[i].max_rel_err);
  }
}
