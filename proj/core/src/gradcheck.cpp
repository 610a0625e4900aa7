// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "lsat/ops.hpp"

namespace lsat {

double relative_error(double analytic, double numeric, double floor) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(ParameterStore<double>& params, const std::function<Tensor<double>()>& loss,
                          const GradcheckOptions& options) {
  auto start = std::chrono::steady_clock::now();
  params.zero_grad();
  loss().backward();

  GradcheckReport report;
  for (auto& p : params.entries()) {
    GradcheckTensor row{p.name, 0, 0.0, 0.0};
    std::vector<double> analytic(p.value.grad().begin(), p.value.grad().end());
    if (analytic.empty()) analytic.assign(p.value.numel(), 0.0);
    std::span<double> values = p.value.mutable_data();
    std::size_t n = values.size();
    std::size_t count = options.max_entries_per_tensor == 0 ? n : std::min(n, options.max_entries_per_tensor);
    NoGradGuard guard;
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t i = count == n ? k : k * n / count;
      double saved = values[i];
      values[i] = saved + options.step;
      double plus = loss().item();
      values[i] = saved - options.step;
      double minus = loss().item();
      values[i] = saved;
      double numeric = (plus - minus) / (2.0 * options.step);
      row.max_rel_error = std::max(row.max_rel_error, relative_error(analytic[i], numeric, options.floor));
      row.max_abs_error = std::max(row.max_abs_error, std::abs(analytic[i] - numeric));
      ++row.checked;
    }
    report.checked += row.checked;
    if (row.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = row.max_rel_error;
      report.worst = row.name;
    }
    report.tensors.push_back(std::move(row));
  }
  report.passed = report.max_rel_error < options.tolerance;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

GradcheckReport gradcheck_model(const ModelConfig& config, const GradcheckOptions& options) {
  Model<double> model(config, options.seed);
  std::mt19937_64 rng(options.seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<double> image({config.channels, config.height, config.width});
  for (double& v : image.mutable_data()) v = normal(rng);
  std::vector<int> label{static_cast<int>(options.seed % config.classes)};
  auto loss = [&] { return cross_entropy(reshape(model.forward_image(image), {1, config.classes}), label); };
  return gradcheck(model.parameters(), loss, options);
}

}  // namespace lsat
