#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mfrbp/nn/tensor.hpp"

namespace mfrbp::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double rel_tolerance = 1e-4;
  double abs_floor = 1e-6;
  /// Only these parameters are probed when non-empty.
  std::vector<std::string> only;
};

struct ParameterCheck {
  std::string name;
  std::size_t entries = 0;
  /// Largest |analytic - numeric| / max(|analytic|, |numeric|) over entries
  /// whose absolute difference exceeds the floor; 0 when none do.
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::vector<std::size_t> flagged;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;

  bool passed() const;
  double max_rel_error() const;
  std::string summary() const;
};

/// Compares the gradients stored in `store` against central differences of
/// `loss`, which must recompute the scalar loss from the store's current
/// values. Values are restored after probing.
GradCheckReport finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        const GradCheckOptions& options = {});

}  // namespace mfrbp::nn
