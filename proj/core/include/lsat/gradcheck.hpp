// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lsat/model.hpp"

namespace lsat {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-3;
  // Floor on the relative-error denominator, so gradients at rounding-noise
  // scale are compared absolutely.
  double floor = 1e-6;
  // Entries checked per tensor, spread evenly; 0 checks every entry.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradcheckTensor {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckTensor> tensors;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // tensor holding the largest relative error
  double seconds = 0.0;
  bool passed = false;
};

// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

// Compares the analytic gradient of `loss` with respect to every entry of
// every parameter against central differences.
GradcheckReport gradcheck(ParameterStore<double>& params, const std::function<Tensor<double>()>& loss,
                          const GradcheckOptions& options);

// Builds a 64-bit model from `config` and checks the cross-entropy of one
// random image.
GradcheckReport gradcheck_model(const ModelConfig& config, const GradcheckOptions& options);

}  // namespace lsat
