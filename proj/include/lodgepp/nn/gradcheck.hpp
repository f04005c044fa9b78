#pragma once

#include <functional>
#include <vector>

#include "lodgepp/core/rng.hpp"
#include "lodgepp/nn/graph.hpp"

namespace lodgepp::nn {

// Central finite-difference check of analytic parameter gradients over a
// random subset of coordinates. `run` evaluates the loss and, as a side
// effect, accumulates analytic gradients into the params.
struct GradCheckReport {
  double rel_error = 0.0;  // ||analytic - fd|| / max(||analytic||, ||fd||)
  int coords = 0;
};

inline GradCheckReport check_parameter_gradients(
    const std::vector<Param*>& params, const std::function<double()>& run,
    Rng& rng, int sample_coords = 24, double step = 1e-5) {
  for (Param* p : params) p->zero_grad();
  run();
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  // The runner re-accumulates gradients on every FD evaluation; they are
  // cleared each time and only the loss value is used.
  auto eval = [&]() {
    for (Param* p : params) p->zero_grad();
    return run();
  };

  double num = 0.0, den_a = 0.0, den_f = 0.0;
  int coords = 0;
  for (int s = 0; s < sample_coords; ++s) {
    size_t pi = static_cast<size_t>(
        rng.index(static_cast<std::int64_t>(params.size())));
    Param* p = params[pi];
    Eigen::Index i = rng.index(p->value.rows());
    Eigen::Index j = rng.index(p->value.cols());
    double saved = p->value(i, j);
    p->value(i, j) = saved + step;
    double up = eval();
    p->value(i, j) = saved - step;
    double down = eval();
    p->value(i, j) = saved;
    double fd = (up - down) / (2.0 * step);
    double a = analytic[pi](i, j);
    num += (a - fd) * (a - fd);
    den_a += a * a;
    den_f += fd * fd;
    ++coords;
  }
  GradCheckReport report;
  report.coords = coords;
  double den = std::sqrt(std::max(den_a, den_f));
  report.rel_error = den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
  return report;
}

}  // namespace lodgepp::nn
