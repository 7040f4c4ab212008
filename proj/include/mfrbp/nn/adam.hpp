#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mfrbp/nn/tensor.hpp"

namespace mfrbp::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

/// Bias-corrected Adam update using the gradients currently in `store`.
void adam_step(ParameterStore& store, AdamState& state);

}  // namespace mfrbp::nn
