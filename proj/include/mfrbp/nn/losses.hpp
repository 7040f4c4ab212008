#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfrbp/scene.hpp"

namespace mfrbp::nn {

/// Per-step parameters of a bivariate Gaussian.
struct GaussianStep {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
};

/// Negative log density of `targets` under the per-step Gaussians, averaged
/// over steps. When `grad` is non-empty it receives dL/d(each parameter).
/// Throws if any sigma is non-positive or |rho| >= 1.
double bivariate_gaussian_nll(std::span<const Vec2> targets, std::span<const GaussianStep> params,
                              std::span<GaussianStep> grad = {});

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[class_index]; grad (if non-empty) = softmax - onehot.
double softmax_cross_entropy(std::span<const double> logits, std::size_t class_index,
                             std::span<double> grad = {});

}  // namespace mfrbp::nn
