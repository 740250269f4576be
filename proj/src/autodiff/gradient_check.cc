#include "tsnmt/autodiff/gradient_check.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tsnmt/errors.h"

namespace tsnmt::ad {

std::string GradientCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "passed" : "FAILED") << ": " << checked << " coordinates, worst " << worst_error << " at "
     << worst_parameter << "[" << worst_index << "] (analytic " << worst_analytic << ", numeric " << worst_numeric << ")";
  return os.str();
}

GradientCheckReport gradient_check(const std::function<Expr<double>(Graph<double>&)>& build,
                                   const std::vector<Parameter<double>*>& params,
                                   const GradientCheckOptions& options) {
  auto loss_at = [&]() {
    Graph<double> g;
    return build(g).value()[0];
  };

  for (auto* p : params) p->grad = Tensor<double>(p->value.shape());
  {
    Graph<double> g;
    auto loss = build(g);
    g.backward(loss);
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k]->size(); ++i) coords.emplace_back(k, i);
  if (options.max_coordinates != 0) {
    const std::size_t limit = std::max<std::size_t>(options.max_coordinates, 200);
    if (coords.size() > limit) {
      std::mt19937_64 rng(options.seed);
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(limit);
      std::sort(coords.begin(), coords.end());
    }
  }

  GradientCheckReport report;
  for (auto [k, i] : coords) {
    auto& p = *params[k];
    const double saved = p.value[i];
    p.value[i] = saved + options.epsilon;
    const double up = loss_at();
    p.value[i] = saved - options.epsilon;
    const double down = loss_at();
    p.value[i] = saved;

    const double numeric = (up - down) / (2 * options.epsilon);
    const double analytic = p.grad[i];
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    ++report.checked;
    if (!std::isfinite(err) || err > report.worst_error || report.worst_parameter.empty()) {
      report.worst_error = std::isfinite(err) ? err : INFINITY;
      report.worst_parameter = p.name;
      report.worst_index = i;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.worst_error < options.tolerance;
  return report;
}

}  // namespace tsnmt::ad
