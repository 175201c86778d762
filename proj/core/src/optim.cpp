#include "uve/optim.hpp"

#include <cmath>

namespace uve {

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(static_cast<size_t>(params[i].numel()), T(0));
      state.v[i].assign(static_cast<size_t>(params[i].numel()), T(0));
    }
  }
  check(state.m.size() == params.size(), "adam_step: parameter list changed");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T bc1 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta1), t));
  const T bc2 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta2), t));

  for (size_t i = 0; i < params.size(); ++i) {
    auto vals = params[i].raw_values();
    const bool has = params[i].has_grad();
    const std::span<const T> g =
        has ? std::span<const T>(params[i].grad()) : std::span<const T>();
    auto& m = state.m[i];
    auto& v = state.v[i];
    check(m.size() == vals.size(), "adam_step: moment shape mismatch");
    for (size_t j = 0; j < vals.size(); ++j) {
      const T gj = has ? g[j] : T(0);
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (T(1) - state.beta2) * gj * gj;
      const T mhat = m[j] / bc1;
      const T vhat = v[j] / bc2;
      vals[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double cosine_lr(const CosineSchedule& sched, int64_t t) {
  check(sched.t_max >= 1, "cosine_lr: t_max must be >= 1");
  const double tt = static_cast<double>(std::clamp<int64_t>(t, 0, sched.t_max));
  const double cosv =
      std::cos(3.14159265358979323846 * tt / static_cast<double>(sched.t_max));
  return sched.eta_min + (sched.lr0 - sched.eta_min) * 0.5 * (1.0 + cosv);
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&);
template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace uve
