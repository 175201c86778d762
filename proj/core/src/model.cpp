#include "uve/model.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "uve/checkpoint.hpp"
#include "uve/rng.hpp"

namespace uve {

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kDepthwiseOnly: return "depthwise_only";
    case Aggregation::kPointwiseOnly: return "pointwise_only";
    case Aggregation::kDsc: return "dsc";
    case Aggregation::kDscCa: return "dsc_ca";
  }
  fail("unknown aggregation");
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "depthwise_only") return Aggregation::kDepthwiseOnly;
  if (s == "pointwise_only") return Aggregation::kPointwiseOnly;
  if (s == "dsc") return Aggregation::kDsc;
  if (s == "dsc_ca") return Aggregation::kDscCa;
  fail("unknown aggregation name: " + s);
}

void ModelConfig::validate() const {
  check(t >= 1 && t % 2 == 1, "model: window size t must be odd and >= 1");
  check(stem_stride == 4, "model: stem stride is fixed at 4");
  check(shift_len >= 0, "model: shift_len must be >= 0");
  check(decoder_dim >= 1 && grm_dim >= 1, "model: dims must be positive");
  for (int s = 0; s < 4; ++s) {
    check(dims[s] >= 8 && dims[s] % 8 == 0,
          "model: dims[" + std::to_string(s) + "] must be a positive multiple of 8");
    check(depths[s] >= 1, "model: depths must be >= 1");
    if (aggregation == Aggregation::kDscCa)
      check(dims[s] % 16 == 0,
            "model: dsc_ca needs dims divisible by 16 (attention bottleneck)");
  }
  for (int s = 0; s < 3; ++s)
    check(dims[s + 1] == 2 * dims[s], "model: channels must double per scale");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["t"] = t;
  j["dims"] = dims;
  j["depths"] = depths;
  j["shift_len"] = shift_len;
  std::vector<int> scales;
  for (int s = 0; s < 4; ++s)
    if (faam_scales[s]) scales.push_back(s);
  j["faam_scales"] = scales;
  j["aggregation"] = to_string(aggregation);
  j["decoder_dim"] = decoder_dim;
  j["grm_dim"] = grm_dim;
  j["stem_stride"] = stem_stride;
  return j.dump();
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  c.t = j.value("t", c.t);
  if (j.contains("dims")) j.at("dims").get_to(c.dims);
  if (j.contains("depths")) j.at("depths").get_to(c.depths);
  c.shift_len = j.value("shift_len", c.shift_len);
  if (j.contains("faam_scales")) {
    c.faam_scales = {false, false, false, false};
    for (int s : j.at("faam_scales").get<std::vector<int>>()) {
      check(s >= 0 && s <= 3, "model config: faam scale out of range");
      c.faam_scales[static_cast<size_t>(s)] = true;
    }
  }
  if (j.contains("aggregation"))
    c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
  c.decoder_dim = j.value("decoder_dim", c.decoder_dim);
  c.grm_dim = j.value("grm_dim", c.grm_dim);
  c.stem_stride = j.value("stem_stride", c.stem_stride);
  c.validate();
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.dims = {16, 32, 64, 128};
  c.depths = {1, 1, 2, 1};
  c.decoder_dim = 16;
  c.grm_dim = 32;
  return c;
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

namespace {

std::string scale_name(const char* prefix, int s, const char* rest) {
  std::ostringstream os;
  os << prefix << s << "." << rest;
  return os.str();
}

}  // namespace

std::vector<ParamSpec> param_manifest(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  auto conv = [&](const std::string& base, int64_t cout, int64_t cin, int64_t k,
                  bool bias = true) {
    specs.push_back({base + ".weight", {cout, cin, k, k}});
    if (bias) specs.push_back({base + ".bias", {1, cout, 1, 1}});
  };
  auto norm = [&](const std::string& base, int64_t c) {
    specs.push_back({base + ".gamma", {1, c, 1, 1}});
    specs.push_back({base + ".beta", {1, c, 1, 1}});
  };

  conv("encoder.stem.conv", cfg.dims[0], 3, 4);
  norm("encoder.stem.norm", cfg.dims[0]);
  for (int s = 0; s < 4; ++s) {
    const int64_t c = cfg.dims[static_cast<size_t>(s)];
    if (s > 0) {
      const std::string down = scale_name("encoder.down", s, "");
      norm(down + "norm", cfg.dims[static_cast<size_t>(s - 1)]);
      conv(down + "conv", c, cfg.dims[static_cast<size_t>(s - 1)], 2);
    }
    for (int b = 0; b < cfg.depths[static_cast<size_t>(s)]; ++b) {
      std::ostringstream base;
      base << "encoder.stage" << s << ".block" << b;
      specs.push_back({base.str() + ".dwconv.weight", {c, 1, 7, 7}});
      specs.push_back({base.str() + ".dwconv.bias", {1, c, 1, 1}});
      norm(base.str() + ".norm", c);
      conv(base.str() + ".pwconv1", 4 * c, c, 1);
      conv(base.str() + ".pwconv2", c, 4 * c, 1);
    }
  }

  for (int s = 0; s < 4; ++s) {
    const int64_t c = cfg.dims[static_cast<size_t>(s)];
    const int64_t tc = static_cast<int64_t>(cfg.t) * c;
    const std::string base = "faam" + std::to_string(s);
    if (!cfg.faam_scales[static_cast<size_t>(s)]) {
      conv(base + ".proj", c, tc, 1);
      continue;
    }
    switch (cfg.aggregation) {
      case Aggregation::kDepthwiseOnly:
        specs.push_back({base + ".dw.weight", {tc, 1, 3, 3}});
        specs.push_back({base + ".dw.bias", {1, tc, 1, 1}});
        specs.push_back({base + ".mix.weight", {tc, 1, 1, 1}});
        break;
      case Aggregation::kPointwiseOnly:
        conv(base + ".pw", c, tc, 1);
        break;
      case Aggregation::kDsc:
      case Aggregation::kDscCa:
        specs.push_back({base + ".dw.weight", {tc, 1, 3, 3}});
        specs.push_back({base + ".dw.bias", {1, tc, 1, 1}});
        conv(base + ".pw", c, tc, 1);
        if (cfg.aggregation == Aggregation::kDscCa) {
          conv(base + ".ca.fc1", c / 16, c, 1);
          conv(base + ".ca.fc2", c, c / 16, 1);
        }
        break;
    }
  }

  for (int s = 0; s < 4; ++s)
    conv("decoder.lateral" + std::to_string(s), cfg.decoder_dim,
         cfg.dims[static_cast<size_t>(s)], 1);
  conv("decoder.fuse1", cfg.decoder_dim, 4 * cfg.decoder_dim, 3);
  conv("decoder.fuse2", cfg.decoder_dim, cfg.decoder_dim, 3);
  conv("decoder.expand", 3 * 16, cfg.decoder_dim, 3);

  conv("grm.conv1", cfg.grm_dim, 3 * cfg.t + 3, 3);
  conv("grm.conv2", cfg.grm_dim, cfg.grm_dim, 3);
  conv("grm.conv3", cfg.grm_dim, cfg.grm_dim, 3);
  conv("grm.conv4", 3, cfg.grm_dim, 3);
  return specs;
}

std::string manifest_text(const ModelConfig& cfg) {
  std::ostringstream os;
  for (const auto& spec : param_manifest(cfg))
    os << spec.name << " " << spec.shape.n << " " << spec.shape.c << " "
       << spec.shape.h << " " << spec.shape.w << "\n";
  return os.str();
}

template <typename T>
void UVENetParams<T>::push(std::string name, Tensor<T> t) {
  check(index_.find(name) == index_.end(), "duplicate parameter: " + name);
  index_[name] = entries_.size();
  entries_.emplace_back(std::move(name), t);
  tensors_.push_back(t);
}

template <typename T>
const Tensor<T>& UVENetParams<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  check(it != index_.end(), "unknown parameter: " + name);
  return entries_[it->second].second;
}

template <typename T>
Tensor<T>& UVENetParams<T>::at(const std::string& name) {
  auto it = index_.find(name);
  check(it != index_.end(), "unknown parameter: " + name);
  return entries_[it->second].second;
}

template <typename T>
int64_t UVENetParams<T>::scalar_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

template <typename T>
UVENetParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  UVENetParams<T> params;
  Rng rng(Rng::mix(seed, 0x75766557ULL));
  for (const auto& spec : param_manifest(cfg)) {
    Tensor<T> t;
    if (spec.name.ends_with(".gamma")) {
      t = Tensor<T>::full(spec.shape, T(1));
    } else if (spec.name.ends_with(".beta") || spec.name.ends_with(".bias")) {
      t = Tensor<T>::zeros(spec.shape);
    } else {
      const double fan_in = static_cast<double>(spec.shape.c * spec.shape.h *
                                                spec.shape.w);
      const double std_dev = std::sqrt(2.0 / fan_in);
      std::vector<T> vals(static_cast<size_t>(spec.shape.numel()));
      for (auto& v : vals)
        v = static_cast<T>(std_dev * rng.trunc_normal(-2.0, 2.0));
      t = Tensor<T>::from_values(spec.shape, std::move(vals));
    }
    t.set_requires_grad(true);
    params.push(spec.name, std::move(t));
  }
  return params;
}

// ---------------------------------------------------------------------------
// forward pieces

template <typename T>
FeaturePyramid<T> encode_frames(const Tensor<T>& frames,
                                const UVENetParams<T>& params,
                                const ModelConfig& cfg) {
  check(frames.shape().c == 3, "encode_frames: expected RGB input");
  check(frames.shape().h % 32 == 0 && frames.shape().w % 32 == 0,
        "encode_frames: spatial dims must be multiples of 32 (pad first)");
  const auto& p = params;
  Tensor<T> x = conv2d(frames, p.at("encoder.stem.conv.weight"),
                       p.at("encoder.stem.conv.bias"), {.stride = 4});
  x = instance_norm(x, p.at("encoder.stem.norm.gamma"),
                    p.at("encoder.stem.norm.beta"));
  FeaturePyramid<T> pyramid;
  for (int s = 0; s < 4; ++s) {
    if (s > 0) {
      const std::string down = "encoder.down" + std::to_string(s) + ".";
      x = instance_norm(x, p.at(down + "norm.gamma"), p.at(down + "norm.beta"));
      x = conv2d(x, p.at(down + "conv.weight"), p.at(down + "conv.bias"),
                 {.stride = 2});
    }
    const int c = cfg.dims[static_cast<size_t>(s)];
    for (int b = 0; b < cfg.depths[static_cast<size_t>(s)]; ++b) {
      std::ostringstream os;
      os << "encoder.stage" << s << ".block" << b << ".";
      const std::string base = os.str();
      Tensor<T> residual = x;
      Tensor<T> u = conv2d(x, p.at(base + "dwconv.weight"),
                           p.at(base + "dwconv.bias"),
                           {.padding = 3, .groups = c});
      u = instance_norm(u, p.at(base + "norm.gamma"), p.at(base + "norm.beta"));
      u = conv2d(u, p.at(base + "pwconv1.weight"), p.at(base + "pwconv1.bias"));
      u = gelu(u);
      u = conv2d(u, p.at(base + "pwconv2.weight"), p.at(base + "pwconv2.bias"));
      x = add(u, residual);
    }
    pyramid[static_cast<size_t>(s)] = x;
  }
  return pyramid;
}

template <typename T>
Tensor<T> grouped_shift(const Tensor<T>& feature, int l,
                        const std::array<std::array<int, 2>, 8>& patterns) {
  check(feature.shape().c % 8 == 0,
        "grouped_shift: channels must be divisible into 8 slices");
  check(l >= 0, "grouped_shift: negative base length");
  std::vector<Tensor<T>> slices = split_channels(feature, 8);
  for (size_t m = 0; m < 8; ++m)
    slices[m] = spatial_shift(slices[m], l * patterns[m][0], l * patterns[m][1]);
  return concat_channels(slices);
}

namespace {

// Applies the grouped shift to each frame block of a (B, T*C, h, w) stack.
template <typename T>
Tensor<T> shift_frame_blocks(const Tensor<T>& stacked, int t_frames, int l) {
  std::vector<Tensor<T>> slices = split_channels(stacked, t_frames * 8);
  for (size_t j = 0; j < slices.size(); ++j) {
    const auto& pat = kShiftPatterns[j % 8];
    slices[j] = spatial_shift(slices[j], l * pat[0], l * pat[1]);
  }
  return concat_channels(slices);
}

}  // namespace

template <typename T>
Tensor<T> faam(const Tensor<T>& stacked, int scale,
               const UVENetParams<T>& params, const ModelConfig& cfg) {
  check(scale >= 0 && scale < 4, "faam: scale out of range");
  check(cfg.faam_scales[static_cast<size_t>(scale)],
        "faam: scale is configured as bypass");
  const int c = cfg.dims[static_cast<size_t>(scale)];
  const int tc = cfg.t * c;
  check(stacked.shape().c == tc, "faam: expected " + std::to_string(tc) +
                                     " stacked channels, got " +
                                     to_string(stacked.shape()));
  const std::string base = "faam" + std::to_string(scale);
  Tensor<T> x = shift_frame_blocks(stacked, cfg.t, cfg.shift_len);
  switch (cfg.aggregation) {
    case Aggregation::kPointwiseOnly:
      return conv2d(x, params.at(base + ".pw.weight"),
                    params.at(base + ".pw.bias"));
    case Aggregation::kDepthwiseOnly: {
      Tensor<T> u = conv2d(x, params.at(base + ".dw.weight"),
                           params.at(base + ".dw.bias"),
                           {.padding = 1, .groups = tc});
      u = conv2d(u, params.at(base + ".mix.weight"), {}, {.groups = tc});
      std::vector<Tensor<T>> per_frame = split_channels(u, cfg.t);
      Tensor<T> out = per_frame[0];
      for (size_t i = 1; i < per_frame.size(); ++i) out = add(out, per_frame[i]);
      return out;
    }
    case Aggregation::kDsc:
    case Aggregation::kDscCa: {
      Tensor<T> u = conv2d(x, params.at(base + ".dw.weight"),
                           params.at(base + ".dw.bias"),
                           {.padding = 1, .groups = tc});
      u = conv2d(u, params.at(base + ".pw.weight"), params.at(base + ".pw.bias"));
      if (cfg.aggregation == Aggregation::kDsc) return u;
      Tensor<T> a = global_avg_pool(u);
      a = conv2d(a, params.at(base + ".ca.fc1.weight"),
                 params.at(base + ".ca.fc1.bias"));
      a = gelu(a);
      a = conv2d(a, params.at(base + ".ca.fc2.weight"),
                 params.at(base + ".ca.fc2.bias"));
      return mul_gate(u, sigmoid(a));
    }
  }
  fail("faam: unreachable");
}

template <typename T>
Tensor<T> faam(const std::vector<Tensor<T>>& frame_maps, int scale,
               const UVENetParams<T>& params, const ModelConfig& cfg) {
  check(static_cast<int>(frame_maps.size()) == cfg.t,
        "faam: expected one map per window frame");
  return faam(concat_channels(frame_maps), scale, params, cfg);
}

template <typename T>
Tensor<T> faam_bypass(const Tensor<T>& stacked, int scale,
                      const UVENetParams<T>& params, const ModelConfig& cfg) {
  check(scale >= 0 && scale < 4, "faam_bypass: scale out of range");
  const std::string base = "faam" + std::to_string(scale);
  return conv2d(stacked, params.at(base + ".proj.weight"),
                params.at(base + ".proj.bias"));
}

template <typename T>
Tensor<T> faam_bypass(const std::vector<Tensor<T>>& frame_maps, int scale,
                      const UVENetParams<T>& params, const ModelConfig& cfg) {
  check(static_cast<int>(frame_maps.size()) == cfg.t,
        "faam_bypass: expected one map per window frame");
  return faam_bypass(concat_channels(frame_maps), scale, params, cfg);
}

template <typename T>
Tensor<T> decode(const FeaturePyramid<T>& h, const UVENetParams<T>& params,
                 const ModelConfig& cfg) {
  std::vector<Tensor<T>> up(4);
  for (int s = 0; s < 4; ++s) {
    const std::string base = "decoder.lateral" + std::to_string(s);
    Tensor<T> lat = conv2d(h[static_cast<size_t>(s)],
                           params.at(base + ".weight"), params.at(base + ".bias"));
    up[static_cast<size_t>(s)] = s == 0 ? lat : bilinear_upsample(lat, 1 << s);
  }
  Tensor<T> x = concat_channels(up);
  x = gelu(conv2d(x, params.at("decoder.fuse1.weight"),
                  params.at("decoder.fuse1.bias"), {.padding = 1}));
  x = gelu(conv2d(x, params.at("decoder.fuse2.weight"),
                  params.at("decoder.fuse2.bias"), {.padding = 1}));
  x = conv2d(x, params.at("decoder.expand.weight"),
             params.at("decoder.expand.bias"), {.padding = 1});
  return pixel_shuffle(x, 4);
}

template <typename T>
Tensor<T> grm(const Tensor<T>& preliminary, const Tensor<T>& frames,
              int64_t batch, const UVENetParams<T>& params,
              const ModelConfig& cfg) {
  check(frames.shape().n == batch * cfg.t && frames.shape().c == 3,
        "grm: frames must be (B*T,3,H,W)");
  Tensor<T> fr = reshape_channels(frames, batch, 3 * cfg.t);
  Tensor<T> x = concat_channels<T>({preliminary, fr});
  x = gelu(conv2d(x, params.at("grm.conv1.weight"), params.at("grm.conv1.bias"),
                  {.padding = 1}));
  x = max_pool2d(x);
  x = gelu(conv2d(x, params.at("grm.conv2.weight"), params.at("grm.conv2.bias"),
                  {.padding = 1}));
  x = max_pool2d(x);
  x = gelu(conv2d(x, params.at("grm.conv3.weight"), params.at("grm.conv3.bias"),
                  {.padding = 1}));
  x = conv2d(x, params.at("grm.conv4.weight"), params.at("grm.conv4.bias"),
             {.padding = 1});
  Tensor<T> gate = scale(sigmoid(global_avg_pool(x)), T(2));
  return clamp01(mul_gate(preliminary, gate));
}

template <typename T>
Tensor<T> forward(const Tensor<T>& frames, int64_t batch,
                  const UVENetParams<T>& params, const ModelConfig& cfg) {
  cfg.validate();
  const Shape s = frames.shape();
  check(s.n == batch * cfg.t,
        "forward: expected " + std::to_string(batch * cfg.t) +
            " stacked frames, got " + std::to_string(s.n));
  check(s.c == 3, "forward: frames must be RGB");
  const int64_t pad_h = (32 - s.h % 32) % 32;
  const int64_t pad_w = (32 - s.w % 32) % 32;
  Tensor<T> x = frames;
  if (pad_h || pad_w)
    x = reflect_pad(frames, static_cast<int>(pad_h / 2),
                    static_cast<int>(pad_h - pad_h / 2),
                    static_cast<int>(pad_w / 2),
                    static_cast<int>(pad_w - pad_w / 2));

  FeaturePyramid<T> pyramid = encode_frames(x, params, cfg);
  FeaturePyramid<T> agg;
  for (int s2 = 0; s2 < 4; ++s2) {
    Tensor<T> stacked =
        reshape_channels(pyramid[static_cast<size_t>(s2)], batch,
                         static_cast<int64_t>(cfg.t) *
                             cfg.dims[static_cast<size_t>(s2)]);
    agg[static_cast<size_t>(s2)] =
        cfg.faam_scales[static_cast<size_t>(s2)]
            ? faam(stacked, s2, params, cfg)
            : faam_bypass(stacked, s2, params, cfg);
  }
  Tensor<T> preliminary = decode(agg, params, cfg);
  Tensor<T> out = grm(preliminary, x, batch, params, cfg);
  if (pad_h || pad_w)
    out = crop(out, static_cast<int>(pad_h / 2), static_cast<int>(pad_w / 2),
               static_cast<int>(s.h), static_cast<int>(s.w));
  return out;
}

template <typename T>
Tensor<T> stack_frames(const std::vector<Tensor<T>>& frames) {
  check(!frames.empty(), "stack_frames: empty window");
  const Shape s = frames[0].shape();
  check(s.n == 1, "stack_frames: expected single-sample frames");
  std::vector<T> data;
  data.reserve(static_cast<size_t>(s.numel()) * frames.size());
  for (const auto& f : frames) {
    check(f.shape() == s, "stack_frames: mismatched frame shapes");
    data.insert(data.end(), f.values().begin(), f.values().end());
  }
  return Tensor<T>::from_values(
      {static_cast<int64_t>(frames.size()), s.c, s.h, s.w}, std::move(data));
}

// ---------------------------------------------------------------------------
// checkpoint binding

void save_model(const std::string& path, const UVENetParams<float>& params,
                const ModelConfig& cfg) {
  Checkpoint ckpt;
  ckpt.meta = cfg.to_json();
  for (const auto& [name, t] : params.entries()) {
    CheckpointTensor ct;
    ct.name = name;
    const Shape s = t.shape();
    ct.dims = {static_cast<uint32_t>(s.n), static_cast<uint32_t>(s.c),
               static_cast<uint32_t>(s.h), static_cast<uint32_t>(s.w)};
    ct.data.assign(t.values().begin(), t.values().end());
    ckpt.tensors.push_back(std::move(ct));
  }
  save_checkpoint(path, ckpt);
}

std::pair<UVENetParams<float>, ModelConfig> load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.meta.empty())
    throw CheckpointError("checkpoint carries no model config: " + path);
  ModelConfig cfg = ModelConfig::from_json_text(ckpt.meta);
  const auto specs = param_manifest(cfg);
  if (specs.size() != ckpt.tensors.size())
    throw CheckpointError("checkpoint tensor count does not match config");
  UVENetParams<float> params;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    auto& ct = ckpt.tensors[i];
    if (ct.name != spec.name)
      throw CheckpointError("checkpoint tensor order mismatch: expected " +
                            spec.name + ", found " + ct.name);
    if (ct.dims.size() != 4 ||
        Shape{ct.dims[0], ct.dims[1], ct.dims[2], ct.dims[3]} != spec.shape)
      throw CheckpointError("checkpoint shape mismatch for " + spec.name);
    Tensor<float> t =
        Tensor<float>::from_values(spec.shape, std::move(ct.data));
    t.set_requires_grad(true);
    params.push(spec.name, std::move(t));
  }
  return {std::move(params), cfg};
}

#define UVE_INST_MODEL(T)                                                       \
  template class UVENetParams<T>;                                               \
  template UVENetParams<T> init_params<T>(const ModelConfig&, uint64_t);        \
  template FeaturePyramid<T> encode_frames<T>(                                  \
      const Tensor<T>&, const UVENetParams<T>&, const ModelConfig&);            \
  template Tensor<T> grouped_shift<T>(                                          \
      const Tensor<T>&, int, const std::array<std::array<int, 2>, 8>&);         \
  template Tensor<T> faam<T>(const Tensor<T>&, int, const UVENetParams<T>&,     \
                             const ModelConfig&);                               \
  template Tensor<T> faam<T>(const std::vector<Tensor<T>>&, int,                \
                             const UVENetParams<T>&, const ModelConfig&);       \
  template Tensor<T> faam_bypass<T>(const Tensor<T>&, int,                      \
                                    const UVENetParams<T>&, const ModelConfig&);\
  template Tensor<T> faam_bypass<T>(const std::vector<Tensor<T>>&, int,         \
                                    const UVENetParams<T>&, const ModelConfig&);\
  template Tensor<T> decode<T>(const FeaturePyramid<T>&, const UVENetParams<T>&,\
                               const ModelConfig&);                             \
  template Tensor<T> grm<T>(const Tensor<T>&, const Tensor<T>&, int64_t,        \
                            const UVENetParams<T>&, const ModelConfig&);        \
  template Tensor<T> forward<T>(const Tensor<T>&, int64_t,                      \
                                const UVENetParams<T>&, const ModelConfig&);    \
  template Tensor<T> stack_frames<T>(const std::vector<Tensor<T>>&);

UVE_INST_MODEL(float)
UVE_INST_MODEL(double)
#undef UVE_INST_MODEL

}  // namespace uve
