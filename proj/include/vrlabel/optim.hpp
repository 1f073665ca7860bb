#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vrlabel/error.hpp"

namespace vrlabel {

struct OptResult {
  std::vector<double> params;
  std::vector<double> trace;  // accepted objective value per epoch, index 0 = init
};

// Full-batch gradient ascent with a monotone acceptance rule: a proposed step
// must not decrease the objective; on decrease (or a non-finite value) the
// step halves, up to max_halvings per epoch. The shrunken step persists
// across epochs. Stops early once no acceptable step exists.
template <typename ValueFn, typename GradFn>
OptResult ascend(std::vector<double> params, ValueFn&& value, GradFn&& grad,
                 double step, std::size_t epochs,
                 std::size_t max_halvings = 20) {
  OptResult out;
  out.params = std::move(params);
  double current = value(out.params);
  if (!std::isfinite(current)) {
    throw NumericError("non-finite objective at epoch 0");
  }
  out.trace.reserve(epochs + 1);
  out.trace.push_back(current);

  std::vector<double> proposal(out.params.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<double> g = grad(out.params);
    bool moved = false;
    for (std::size_t attempt = 0; attempt <= max_halvings; ++attempt) {
      for (std::size_t i = 0; i < proposal.size(); ++i) {
        proposal[i] = out.params[i] + step * g[i];
      }
      const double candidate = value(proposal);
      if (std::isfinite(candidate) && candidate >= current) {
        out.params = proposal;
        current = candidate;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    out.trace.push_back(current);
  }
  return out;
}

}  // namespace vrlabel
