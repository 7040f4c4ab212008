#include "mfrbp/eval/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfrbp/error.hpp"

namespace mfrbp::eval {
namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string join_errors(const std::vector<double>& e) {
  std::string out;
  for (double v : e) out += '\t' + num(v);
  return out;
}

}  // namespace

Ellipse covariance_ellipse(const Cov2& cov, double k) {
  const double mean = 0.5 * (cov.xx + cov.yy);
  const double diff = 0.5 * (cov.xx - cov.yy);
  const double r = std::hypot(diff, cov.xy);
  const double l1 = mean + r;
  const double l2 = std::max(0.0, mean - r);
  Ellipse e;
  e.major = k * std::sqrt(std::max(0.0, l1));
  e.minor = k * std::sqrt(l2);
  e.angle = 0.5 * std::atan2(2.0 * cov.xy, cov.xx - cov.yy);
  return e;
}

std::string format_table(const RmseTable& table) {
  std::string out = "horizon_s\trmse_m\tcount\n";
  for (const auto& r : table.rows) {
    out += num(r.horizon_s) + '\t' + num(r.rmse) + '\t' + std::to_string(r.count) + '\n';
  }
  return out;
}

RmseTable parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  RmseTable t;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream row(line);
    RmseRow r;
    if (!(row >> r.horizon_s >> r.rmse >> r.count)) throw ParseError("malformed RMSE row", line_no);
    t.rows.push_back(r);
  }
  if (t.rows.empty()) throw Error("RMSE table is empty");
  return t;
}

std::string plot_svg(const PlotSample& sample, double sample_rate) {
  std::vector<Vec2> all = sample.history;
  all.insert(all.end(), sample.truth.begin(), sample.truth.end());
  all.insert(all.end(), sample.level0.means.begin(), sample.level0.means.end());
  all.insert(all.end(), sample.level1.means.begin(), sample.level1.means.end());
  double min_x = all.front().x, max_x = min_x, min_y = all.front().y, max_y = min_y;
  for (const auto& p : all) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double pad = 5.0;
  min_x -= pad;
  max_x += pad;
  min_y -= pad;
  max_y += pad;
  const double scale = 8.0;  // px per meter
  const double width = (max_x - min_x) * scale;
  const double height = (max_y - min_y) * scale;
  // Longitudinal x to the right, lateral y upwards.
  auto px = [&](Vec2 p) { return Vec2{(p.x - min_x) * scale, (max_y - p.y) * scale}; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\">\n";
  svg << "<title>vehicle " << sample.segment.target << " at frame " << sample.segment.frame
      << " (" << sample.segment.subset << ")</title>\n";
  auto polyline = [&](const std::vector<Vec2>& pts, const char* color, const char* dash) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
    svg << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto q = px(pts[i]);
      svg << (i ? " " : "") << num(q.x) << ',' << num(q.y);
    }
    svg << "\"/>\n";
  };
  auto ellipses = [&](const TrajectoryGaussian& t, const char* color) {
    const auto every = static_cast<std::size_t>(std::max(1.0, std::round(sample_rate)));
    for (std::size_t s = every - 1; s < t.horizon(); s += every) {
      const auto e = covariance_ellipse(t.covariances[s], kEllipseSigmas);
      const auto c = px(t.means[s]);
      // Screen y points down, so the rotation flips sign.
      svg << "<ellipse fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.5\" cx=\""
          << num(c.x) << "\" cy=\"" << num(c.y) << "\" rx=\"" << num(e.major * scale)
          << "\" ry=\"" << num(e.minor * scale) << "\" transform=\"rotate("
          << num(-e.angle * 180.0 / M_PI) << ' ' << num(c.x) << ' ' << num(c.y) << ")\"/>\n";
    }
  };
  polyline(sample.history, "black", "");
  polyline(sample.truth, "green", "");
  polyline(sample.level0.means, "blue", "4 2");
  ellipses(sample.level0, "blue");
  polyline(sample.level1.means, "red", "");
  ellipses(sample.level1, "red");
  svg << "<text x=\"4\" y=\"12\" font-size=\"10\">history (black), truth (green), level 0 "
         "(blue), level 1 (red)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_artifacts(const std::filesystem::path& dir, const ExperimentResult& result,
                    const std::vector<double>& loss_curve, double sample_rate) {
  try {
    std::filesystem::create_directories(dir / "plots");
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error("cannot create " + dir.string() + ": " + e.what());
  }
  write_file(dir / "rmse.tsv", format_table(result.table));
  write_file(dir / "rmse_level0.tsv", format_table(result.level0));
  write_file(dir / "rmse_cv.tsv", format_table(result.cv));

  std::string passes = "pass\thorizon_s\trmse_m\tcount\n";
  for (std::size_t p = 0; p < result.pass_tables.size(); ++p) {
    for (const auto& r : result.pass_tables[p].rows) {
      passes += std::to_string(p) + '\t' + num(r.horizon_s) + '\t' + num(r.rmse) + '\t' +
                std::to_string(r.count) + '\n';
    }
  }
  write_file(dir / "passes.tsv", passes);

  std::string seg = "pass\tsubset\tvehicle\tframe\tego";
  for (const char* kind : {"final", "level0", "cv"}) {
    for (double h : kHorizons) seg += '\t' + std::string(kind) + "_" + num(h) + "s";
  }
  seg += '\n';
  for (const auto& e : result.errors) {
    seg += std::to_string(e.pass) + '\t' + e.segment.subset + '\t' +
           std::to_string(e.segment.target) + '\t' + std::to_string(e.segment.frame) + '\t' +
           std::to_string(e.ego) + join_errors(e.level1) + join_errors(e.level0) +
           join_errors(e.cv) + '\n';
  }
  write_file(dir / "segment_errors.tsv", seg);

  if (!loss_curve.empty()) {
    std::string loss = "epoch\tloss\n";
    for (std::size_t i = 0; i < loss_curve.size(); ++i) {
      loss += std::to_string(i) + '\t' + num(loss_curve[i]) + '\n';
    }
    write_file(dir / "loss_curve.tsv", loss);
  }
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    write_file(dir / "plots" / ("sample_" + std::to_string(i) + ".svg"),
               plot_svg(result.samples[i], sample_rate));
  }
}

RmseTable read_results_table(const std::filesystem::path& dir) {
  try {
    return parse_table(read_file(dir / "rmse.tsv"));
  } catch (const ParseError& e) {
    throw Error((dir / "rmse.tsv").string() + ": " + e.what());
  }
}

}  // namespace mfrbp::eval
