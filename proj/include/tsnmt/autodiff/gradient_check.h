#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tsnmt/autodiff/graph.h"

namespace tsnmt::ad {

struct GradientCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-5;
  // 0 checks every coordinate; otherwise at most this many, sampled per seed
  // (never fewer than 200 unless the parameters have fewer coordinates).
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 1;
};

struct GradientCheckReport {
  bool passed = true;
  std::size_t checked = 0;
  double worst_error = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;

  std::string summary() const;
};

// Builds the scalar loss of `build` in a fresh graph, compares d loss / d theta
// from backward() with central differences for the coordinates of `params`.
// Error metric: |analytic - numeric| / max(1, |analytic|).
GradientCheckReport gradient_check(const std::function<Expr<double>(Graph<double>&)>& build,
                                   const std::vector<Parameter<double>*>& params,
                                   const GradientCheckOptions& options = {});

}  // namespace tsnmt::ad
