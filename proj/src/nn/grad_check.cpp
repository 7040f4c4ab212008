#include "mfrbp/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfrbp::nn {

bool GradCheckReport::passed() const {
  return std::all_of(parameters.begin(), parameters.end(),
                     [](const ParameterCheck& p) { return p.flagged.empty(); });
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& p : parameters) m = std::max(m, p.max_rel_error);
  return m;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& p : parameters) {
    os << p.name << ": max_rel=" << p.max_rel_error << " max_abs=" << p.max_abs_error
       << " flagged=" << p.flagged.size() << "/" << p.entries << "\n";
  }
  return os.str();
}

GradCheckReport finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        const GradCheckOptions& options) {
  GradCheckReport report;
  const double h = options.step;
  for (const auto& name : store.names()) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), name) == options.only.end()) {
      continue;
    }
    Tensor& w = store.value(name);
    const Tensor analytic = store.grad(name);
    ParameterCheck check{name, w.size(), 0.0, 0.0, {}};
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = loss();
      w[i] = saved - h;
      const double down = loss();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double diff = std::abs(analytic[i] - numeric);
      check.max_abs_error = std::max(check.max_abs_error, diff);
      if (diff <= options.abs_floor) continue;
      const double rel = diff / std::max(std::abs(analytic[i]), std::abs(numeric));
      check.max_rel_error = std::max(check.max_rel_error, rel);
      if (rel > options.rel_tolerance) check.flagged.push_back(i);
    }
    report.parameters.push_back(std::move(check));
  }
  return report;
}

}  // namespace mfrbp::nn
