#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfrbp/eval/experiments.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::eval {

/// Semi-axes (meters) and orientation (radians, major axis from +x) of the
/// k-sigma ellipse of a 2x2 covariance.
struct Ellipse {
  double major = 0.0;
  double minor = 0.0;
  double angle = 0.0;
};
Ellipse covariance_ellipse(const Cov2& cov, double k);

inline constexpr double kEllipseSigmas = 2.0;

std::string format_table(const RmseTable& table);
/// Parses the output of format_table().
RmseTable parse_table(const std::string& text);

/// SVG of one prediction: history, ground truth, level-0 and level-1 means
/// with kEllipseSigmas covariance ellipses every second.
std::string plot_svg(const PlotSample& sample, double sample_rate);

/// Writes into `dir` (created if needed):
///   rmse.tsv, rmse_level0.tsv, rmse_cv.tsv   RMSE tables
///   passes.tsv                               per-pass tables
///   segment_errors.tsv                       one row per evaluated prediction
///   loss_curve.tsv                           when loss_curve is non-empty
///   plots/sample_<i>.svg
/// Numbers are printed with round-trip precision so reruns are
/// byte-identical.
void emit_artifacts(const std::filesystem::path& dir, const ExperimentResult& result,
                    const std::vector<double>& loss_curve, double sample_rate);

/// Reads rmse.tsv from a results directory.
RmseTable read_results_table(const std::filesystem::path& dir);

}  // namespace mfrbp::eval
