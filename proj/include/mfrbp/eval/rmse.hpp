#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfrbp/scene.hpp"

namespace mfrbp::eval {

/// Evaluation horizons in seconds.
inline const std::vector<double> kHorizons{1.0, 2.0, 3.0, 4.0, 5.0};

struct RmseRow {
  double horizon_s = 0.0;
  double rmse = 0.0;  // meters
  std::size_t count = 0;

  friend bool operator==(const RmseRow&, const RmseRow&) = default;
};

struct RmseTable {
  std::vector<RmseRow> rows;

  /// Throws if the horizon is not tabulated.
  const RmseRow& at(double horizon_s) const;
  friend bool operator==(const RmseTable&, const RmseTable&) = default;
};

/// Euclidean error of the predicted mean at exactly each horizon (step
/// horizon * rate, 1-based). Throws when a horizon exceeds either trajectory.
std::vector<double> horizon_errors(std::span<const Vec2> predicted, std::span<const Vec2> truth,
                                   const std::vector<double>& horizons_s, double sample_rate);

/// Collects per-prediction errors and reduces them to an RMSE table.
class RmseAccumulator {
 public:
  explicit RmseAccumulator(std::vector<double> horizons_s = kHorizons);

  void add(std::span<const double> errors);
  std::size_t count() const { return count_; }
  RmseTable table() const;

 private:
  std::vector<double> horizons_;
  std::vector<double> sum_sq_;
  std::size_t count_ = 0;
};

RmseTable rmse_by_horizon(const std::vector<std::vector<double>>& errors,
                          const std::vector<double>& horizons_s = kHorizons);

/// Count-weighted mean of per-pass tables, row by row; counts are summed.
RmseTable weighted_mean(const std::vector<RmseTable>& tables);

}  // namespace mfrbp::eval
