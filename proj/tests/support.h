#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "tsnmt/autodiff/graph.h"
#include "tsnmt/random.h"

namespace testing {

using tsnmt::ad::Parameter;
using tsnmt::ad::Shape;
using tsnmt::ad::Tensor;

inline Tensor<double> random_tensor(Shape shape, tsnmt::Rng& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline Parameter<double> random_param(const std::string& name, Shape shape, tsnmt::Rng& rng, double lo = -1, double hi = 1) {
  Parameter<double> p(name, shape);
  p.value = random_tensor(shape, rng, lo, hi);
  return p;
}

// A fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tsnmt-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
