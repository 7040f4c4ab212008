#include "mfrbp/eval/rmse.hpp"

#include <cmath>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::eval {

const RmseRow& RmseTable::at(double horizon_s) const {
  for (const auto& r : rows) {
    if (r.horizon_s == horizon_s) return r;
  }
  throw Error("no RMSE row for horizon " + std::to_string(horizon_s) + " s");
}

std::vector<double> horizon_errors(std::span<const Vec2> predicted, std::span<const Vec2> truth,
                                   const std::vector<double>& horizons_s, double sample_rate) {
  std::vector<double> out;
  out.reserve(horizons_s.size());
  for (double h : horizons_s) {
    const auto step = static_cast<std::size_t>(std::llround(h * sample_rate));
    if (step == 0 || step > predicted.size() || step > truth.size()) {
      throw Error("horizon " + std::to_string(h) + " s exceeds the prediction (" +
                  std::to_string(predicted.size()) + " steps) or ground truth (" +
                  std::to_string(truth.size()) + " steps)");
    }
    out.push_back((predicted[step - 1] - truth[step - 1]).norm());
  }
  return out;
}

RmseAccumulator::RmseAccumulator(std::vector<double> horizons_s)
    : horizons_(std::move(horizons_s)), sum_sq_(horizons_.size(), 0.0) {}

void RmseAccumulator::add(std::span<const double> errors) {
  if (errors.size() != horizons_.size()) throw Error("error vector does not match the horizons");
  for (std::size_t i = 0; i < errors.size(); ++i) sum_sq_[i] += errors[i] * errors[i];
  ++count_;
}

RmseTable RmseAccumulator::table() const {
  RmseTable t;
  for (std::size_t i = 0; i < horizons_.size(); ++i) {
    const double rmse = count_ == 0 ? 0.0 : std::sqrt(sum_sq_[i] / static_cast<double>(count_));
    t.rows.push_back({horizons_[i], rmse, count_});
  }
  return t;
}

RmseTable rmse_by_horizon(const std::vector<std::vector<double>>& errors,
                          const std::vector<double>& horizons_s) {
  RmseAccumulator acc(horizons_s);
  for (const auto& e : errors) acc.add(e);
  return acc.table();
}

RmseTable weighted_mean(const std::vector<RmseTable>& tables) {
  if (tables.empty()) throw Error("no tables to average");
  RmseTable out;
  for (std::size_t r = 0; r < tables.front().rows.size(); ++r) {
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& t : tables) {
      if (t.rows.size() != tables.front().rows.size() ||
          t.rows[r].horizon_s != tables.front().rows[r].horizon_s) {
        throw Error("tables have different horizons");
      }
      weighted += static_cast<double>(t.rows[r].count) * t.rows[r].rmse;
      total += t.rows[r].count;
    }
    out.rows.push_back({tables.front().rows[r].horizon_s,
                        total == 0 ? 0.0 : weighted / static_cast<double>(total), total});
  }
  return out;
}

}  // namespace mfrbp::eval
