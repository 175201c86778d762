#pragma once

// Double-precision central finite-difference verification of every
// differentiable op plus an end-to-end micro network. Used by the
// `gradcheck` CLI command and by the acceptance suite.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "uve/tensor.hpp"

namespace uve {

struct GradCheckResult {
  std::string op;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Builds the loss twice per probed coordinate and compares the tape gradient
// against (L(x+h) - L(x-h)) / 2h. `build_loss` must construct a fresh graph
// from the leaves on every call; it runs under an active tape only for the
// analytic pass. samples_per_leaf == 0 probes every coordinate.
double gradcheck_max_rel_error(
    std::vector<Tensor<double>> leaves,
    const std::function<Tensor<double>()>& build_loss, int samples_per_leaf,
    uint64_t seed);

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed);

bool all_passed(const std::vector<GradCheckResult>& results);
void print_gradcheck_report(const std::vector<GradCheckResult>& results,
                            std::ostream& os);

}  // namespace uve
