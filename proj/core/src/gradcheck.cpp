#include "uve/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "uve/model.hpp"
#include "uve/ops.hpp"
#include "uve/rng.hpp"

namespace uve {

namespace {

using DTensor = Tensor<double>;

DTensor random_tensor(const Shape& s, Rng& rng, double lo = -1.0,
                      double hi = 1.0) {
  std::vector<double> vals(static_cast<size_t>(s.numel()));
  for (auto& v : vals) v = rng.uniform(lo, hi);
  return DTensor::from_values(s, std::move(vals));
}

}  // namespace

double gradcheck_max_rel_error(
    std::vector<DTensor> leaves,
    const std::function<DTensor()>& build_loss, int samples_per_leaf,
    uint64_t seed) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }

  // Analytic gradients from one taped pass.
  std::vector<std::vector<double>> analytic(leaves.size());
  {
    Tape<double> tape;
    Tape<double>::Scope scope(tape);
    DTensor loss = build_loss();
    tape.backward(loss);
    for (size_t i = 0; i < leaves.size(); ++i) {
      auto g = leaves[i].grad();
      analytic[i].assign(g.begin(), g.end());
    }
  }

  // Probe either every coordinate or a random sample per leaf.
  Rng rng(Rng::mix(seed, 0x6764636bULL));
  std::vector<std::vector<int64_t>> probes(leaves.size());
  for (size_t i = 0; i < leaves.size(); ++i) {
    const int64_t n = leaves[i].numel();
    if (samples_per_leaf <= 0 || samples_per_leaf >= n) {
      probes[i].resize(static_cast<size_t>(n));
      for (int64_t j = 0; j < n; ++j) probes[i][static_cast<size_t>(j)] = j;
    } else {
      for (int s = 0; s < samples_per_leaf; ++s)
        probes[i].push_back(rng.uniform_int(0, n - 1));
    }
  }

  double gmax = 0;
  for (const auto& g : analytic)
    for (double v : g) gmax = std::max(gmax, std::abs(v));

  double worst = 0;
  for (size_t i = 0; i < leaves.size(); ++i) {
    auto vals = leaves[i].raw_values();
    for (int64_t j : probes[i]) {
      const double x0 = vals[static_cast<size_t>(j)];
      const double h = 1e-5 * std::max(1.0, std::abs(x0));
      vals[static_cast<size_t>(j)] = x0 + h;
      const double lp = build_loss().item();
      vals[static_cast<size_t>(j)] = x0 - h;
      const double lm = build_loss().item();
      vals[static_cast<size_t>(j)] = x0;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[i][static_cast<size_t>(j)];
      const double denom = std::max({std::abs(an), std::abs(fd),
                                     1e-3 * gmax, 1e-8});
      worst = std::max(worst, std::abs(an - fd) / denom);
    }
  }
  return worst;
}

namespace {

// Random linear readout keeps every output coordinate in play.
DTensor readout(const DTensor& y, const DTensor& probe) {
  return sum(mul(y, probe));
}

std::vector<GradCheckResult> op_cases(uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(Rng::mix(seed, 0x6f706373ULL));

  auto run = [&](const std::string& name, double tol,
                 std::vector<DTensor> leaves,
                 std::function<DTensor()> build, int samples = 0) {
    GradCheckResult r;
    r.op = name;
    r.tolerance = tol;
    r.max_rel_err =
        gradcheck_max_rel_error(std::move(leaves), build, samples,
                                Rng::mix(seed, std::hash<std::string>{}(name)));
    r.pass = r.max_rel_err < tol;
    results.push_back(r);
  };

  {
    DTensor x = random_tensor({2, 4, 5, 6}, rng);
    DTensor w = random_tensor({6, 2, 3, 3}, rng);
    DTensor b = random_tensor({1, 6, 1, 1}, rng);
    DTensor probe = random_tensor({2, 6, 5, 6}, rng);
    run("conv2d", 1e-4, {x, w, b}, [=] {
      return readout(conv2d(x, w, b, {.stride = 1, .padding = 1, .groups = 2}),
                     probe);
    });
  }
  {
    DTensor x = random_tensor({1, 3, 7, 7}, rng);
    DTensor w = random_tensor({4, 3, 3, 3}, rng);
    DTensor b = random_tensor({1, 4, 1, 1}, rng);
    DTensor probe = random_tensor({1, 4, 3, 3}, rng);
    run("conv2d_strided", 1e-4, {x, w, b}, [=] {
      return readout(conv2d(x, w, b, {.stride = 2}), probe);
    });
  }
  {
    DTensor x = random_tensor({1, 4, 5, 5}, rng);
    DTensor dw = random_tensor({4, 1, 3, 3}, rng);
    DTensor db = random_tensor({1, 4, 1, 1}, rng);
    DTensor pw = random_tensor({6, 4, 1, 1}, rng);
    DTensor pb = random_tensor({1, 6, 1, 1}, rng);
    DTensor probe = random_tensor({1, 6, 5, 5}, rng);
    run("depthwise_separable", 1e-4, {x, dw, db, pw, pb}, [=] {
      return readout(depthwise_separable(x, dw, db, pw, pb), probe);
    });
  }
  {
    DTensor x = random_tensor({2, 3, 4, 5}, rng);
    DTensor gamma = random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5);
    DTensor beta = random_tensor({1, 3, 1, 1}, rng);
    DTensor probe = random_tensor({2, 3, 4, 5}, rng);
    run("instance_norm", 1e-4, {x, gamma, beta}, [=] {
      return readout(instance_norm(x, gamma, beta), probe);
    });
  }
  {
    DTensor x = random_tensor({1, 2, 3, 4}, rng, -3.0, 3.0);
    DTensor probe = random_tensor({1, 2, 3, 4}, rng);
    run("gelu", 1e-6, {x}, [=] { return readout(gelu(x), probe); });
    run("sigmoid", 1e-6, {x}, [=] { return readout(sigmoid(x), probe); });
  }
  {
    DTensor x = random_tensor({1, 2, 3, 4}, rng);
    DTensor probe2 = random_tensor({1, 2, 6, 8}, rng);
    DTensor probe3 = random_tensor({1, 2, 9, 12}, rng);
    run("bilinear_upsample_x2", 1e-4, {x},
        [=] { return readout(bilinear_upsample(x, 2), probe2); });
    run("bilinear_upsample_x3", 1e-4, {x},
        [=] { return readout(bilinear_upsample(x, 3), probe3); });
  }
  {
    DTensor x = random_tensor({1, 8, 3, 3}, rng);
    DTensor probe = random_tensor({1, 2, 6, 6}, rng);
    run("pixel_shuffle", 1e-4, {x},
        [=] { return readout(pixel_shuffle(x, 2), probe); });
  }
  {
    DTensor x = random_tensor({1, 2, 5, 5}, rng);
    DTensor probe = random_tensor({1, 2, 5, 5}, rng);
    run("spatial_shift", 1e-4, {x},
        [=] { return readout(spatial_shift(x, 2, -1), probe); });
  }
  {
    DTensor x = random_tensor({2, 3, 4, 4}, rng);
    DTensor probe = random_tensor({2, 3, 1, 1}, rng);
    run("global_avg_pool", 1e-4, {x},
        [=] { return readout(global_avg_pool(x), probe); });
  }
  {
    DTensor x = random_tensor({1, 2, 6, 6}, rng);
    DTensor probe = random_tensor({1, 2, 3, 3}, rng);
    run("max_pool2d", 1e-4, {x},
        [=] { return readout(max_pool2d(x), probe); });
  }
  {
    DTensor a = random_tensor({1, 2, 3, 3}, rng);
    DTensor b = random_tensor({1, 3, 3, 3}, rng);
    DTensor probe = random_tensor({1, 5, 3, 3}, rng);
    run("concat_channels", 1e-4, {a, b}, [=] {
      return readout(concat_channels<double>({a, b}), probe);
    });
  }
  {
    DTensor x = random_tensor({1, 6, 3, 3}, rng);
    DTensor p0 = random_tensor({1, 2, 3, 3}, rng);
    DTensor p2 = random_tensor({1, 2, 3, 3}, rng);
    run("split_channels", 1e-4, {x}, [=] {
      auto parts = split_channels(x, 3);
      return add(readout(parts[0], p0), readout(parts[2], p2));
    });
  }
  {
    DTensor pred = random_tensor({1, 3, 4, 4}, rng);
    DTensor target = random_tensor({1, 3, 4, 4}, rng);
    run("l1_loss", 1e-4, {pred, target},
        [=] { return l1_loss(pred, target); });
  }
  {
    DTensor a = random_tensor({1, 2, 3, 3}, rng);
    DTensor b = random_tensor({1, 2, 3, 3}, rng);
    DTensor probe = random_tensor({1, 2, 3, 3}, rng);
    run("add", 1e-4, {a, b}, [=] { return readout(add(a, b), probe); });
    run("mul", 1e-4, {a, b}, [=] { return readout(mul(a, b), probe); });
    run("scale", 1e-4, {a},
        [=] { return readout(scale(a, -1.7), probe); });
  }
  {
    DTensor x = random_tensor({2, 3, 4, 4}, rng);
    DTensor g = random_tensor({2, 3, 1, 1}, rng);
    DTensor probe = random_tensor({2, 3, 4, 4}, rng);
    run("mul_gate", 1e-4, {x, g},
        [=] { return readout(mul_gate(x, g), probe); });
  }
  {
    DTensor x = random_tensor({1, 2, 4, 4}, rng, -0.5, 1.5);
    DTensor probe = random_tensor({1, 2, 4, 4}, rng);
    run("clamp01", 1e-4, {x}, [=] { return readout(clamp01(x), probe); });
  }
  {
    DTensor x = random_tensor({1, 2, 4, 5}, rng);
    DTensor probe_pad = random_tensor({1, 2, 9, 10}, rng);
    DTensor probe_crop = random_tensor({1, 2, 2, 3}, rng);
    run("reflect_pad", 1e-4, {x},
        [=] { return readout(reflect_pad(x, 2, 3, 1, 4), probe_pad); });
    run("crop", 1e-4, {x},
        [=] { return readout(crop(x, 1, 1, 2, 3), probe_crop); });
  }
  {
    DTensor x = random_tensor({2, 6, 3, 3}, rng);
    DTensor probe = random_tensor({4, 3, 3, 3}, rng);
    run("reshape_channels", 1e-4, {x},
        [=] { return readout(reshape_channels(x, 4, 3), probe); });
  }
  {
    DTensor x = random_tensor({1, 16, 6, 6}, rng);
    DTensor probe = random_tensor({1, 16, 6, 6}, rng);
    run("grouped_shift", 1e-4, {x},
        [=] { return readout(grouped_shift(x, 2), probe); });
  }
  return results;
}

GradCheckResult end_to_end_case(uint64_t seed) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.t = 3;
  cfg.depths = {1, 1, 1, 1};
  cfg.grm_dim = 16;
  cfg.validate();

  UVENetParams<double> params = init_params<double>(cfg, seed);
  Rng rng(Rng::mix(seed, 0x65326533ULL));
  std::vector<double> fvals(static_cast<size_t>(cfg.t) * 3 * 16 * 16);
  for (auto& v : fvals) v = rng.uniform(0.05, 0.95);
  DTensor frames = DTensor::from_values({cfg.t, 3, 16, 16}, std::move(fvals));
  std::vector<double> tvals(3 * 16 * 16);
  for (auto& v : tvals) v = rng.uniform(0.05, 0.95);
  DTensor target = DTensor::from_values({1, 3, 16, 16}, std::move(tvals));

  std::vector<DTensor> leaves;
  for (auto& [name, t] : params.entries()) leaves.push_back(t);

  GradCheckResult r;
  r.op = "end_to_end_micro";
  r.tolerance = 1e-3;
  r.max_rel_err = gradcheck_max_rel_error(
      leaves,
      [&] { return l1_loss(forward(frames, 1, params, cfg), target); },
      2, Rng::mix(seed, 0x6d696372ULL));
  r.pass = r.max_rel_err < r.tolerance;
  return r;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed) {
  std::vector<GradCheckResult> results = op_cases(seed);
  results.push_back(end_to_end_case(seed));
  return results;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

void print_gradcheck_report(const std::vector<GradCheckResult>& results,
                            std::ostream& os) {
  for (const auto& r : results) {
    os << "gradcheck " << r.op << ": max_rel_err=" << r.max_rel_err
       << " tol=" << r.tolerance << (r.pass ? "  [ok]" : "  [FAIL]") << "\n";
  }
}

}  // namespace uve
