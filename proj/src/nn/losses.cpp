#include "mfrbp/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::nn {

double bivariate_gaussian_nll(std::span<const Vec2> targets, std::span<const GaussianStep> params,
                              std::span<GaussianStep> grad) {
  if (targets.size() != params.size() || targets.empty()) {
    throw ShapeError("gaussian nll: " + std::to_string(targets.size()) + " targets vs " +
                     std::to_string(params.size()) + " parameter steps");
  }
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  double total = 0.0;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    const auto& p = params[s];
    if (!(p.sigma_x > 0.0) || !(p.sigma_y > 0.0)) {
      throw Error("gaussian nll: non-positive sigma at step " + std::to_string(s) +
                  " (missing exp output transform?)");
    }
    if (!(std::abs(p.rho) < 1.0)) {
      throw Error("gaussian nll: |rho| >= 1 at step " + std::to_string(s));
    }
    const double ux = (targets[s].x - p.mu_x) / p.sigma_x;
    const double uy = (targets[s].y - p.mu_y) / p.sigma_y;
    const double one_m_r2 = 1.0 - p.rho * p.rho;
    const double z = ux * ux + uy * uy - 2.0 * p.rho * ux * uy;
    total += log_two_pi + std::log(p.sigma_x) + std::log(p.sigma_y) + 0.5 * std::log(one_m_r2) +
             z / (2.0 * one_m_r2);
    if (!grad.empty()) {
      const double k = inv_n / one_m_r2;
      // dz/dux = 2ux - 2 rho uy, dux/dmu = -1/sx, dux/dsx = -ux/sx
      const double dz_dux = ux - p.rho * uy;  // halved; the 1/(2(1-r^2)) supplies the 2
      const double dz_duy = uy - p.rho * ux;
      grad[s].mu_x = -k * dz_dux / p.sigma_x;
      grad[s].mu_y = -k * dz_duy / p.sigma_y;
      grad[s].sigma_x = inv_n / p.sigma_x - k * dz_dux * ux / p.sigma_x;
      grad[s].sigma_y = inv_n / p.sigma_y - k * dz_duy * uy / p.sigma_y;
      grad[s].rho =
          inv_n * (-p.rho / one_m_r2 - ux * uy / one_m_r2 + p.rho * z / (one_m_r2 * one_m_r2));
    }
  }
  return total * inv_n;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t class_index,
                             std::span<double> grad) {
  if (class_index >= logits.size()) {
    throw Error("class index " + std::to_string(class_index) + " out of range for " +
                std::to_string(logits.size()) + " logits");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double log_z = m + std::log(sum);
  if (!grad.empty()) {
    for (std::size_t i = 0; i < logits.size(); ++i) {
      grad[i] = std::exp(logits[i] - log_z) - (i == class_index ? 1.0 : 0.0);
    }
  }
  return log_z - logits[class_index];
}

}  // namespace mfrbp::nn
