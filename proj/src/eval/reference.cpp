#include "mfrbp/eval/reference.hpp"

#include <cstdio>

#include "mfrbp/error.hpp"

namespace mfrbp::eval {

const std::vector<ReferenceColumn>& reference_columns() {
  static const std::vector<ReferenceColumn> columns{
      {"cspdag", "CSP (dagger)", {0.62, 1.29, 2.13, 3.20, 4.52}},
      {"cspstar", "CSP (star)", {0.54, 1.20, 2.03, 3.09, 4.39}},
      {"l1rbp", "L1-RBP", {0.53, 1.19, 1.95, 2.87, 3.97}},
      {"l1mfrbp", "L1-MFRBP", {0.54, 1.20, 1.99, 2.97, 4.16}},
      {"planning", "L1-MFRBP planning-aware", {0.54, 1.19, 1.95, 2.88, 4.01}},
  };
  return columns;
}

const ReferenceColumn& reference_column(const std::string& key) {
  for (const auto& c : reference_columns()) {
    if (c.key == key) return c;
  }
  std::string known;
  for (const auto& c : reference_columns()) known += (known.empty() ? "" : ", ") + c.key;
  throw Error("unknown reference column '" + key + "' (known: " + known + ")");
}

std::string reference_compare(const RmseTable& table, const std::string& key) {
  const auto& ref = reference_column(key);
  std::string out = "RMSE in meters; reference column: " + ref.label + "\n";
  out += std::string(kReferenceDisclaimer) + "\n";
  out += "horizon_s\tthis_run\treference\tdelta\tcount\n";
  char line[128];
  for (std::size_t i = 0; i < ref.rmse.size(); ++i) {
    const double h = static_cast<double>(i + 1);
    const auto& row = table.at(h);
    std::snprintf(line, sizeof(line), "%.0f\t%.4f\t%.2f\t%+.4f\t%zu\n", h, row.rmse, ref.rmse[i],
                  row.rmse - ref.rmse[i], row.count);
    out += line;
  }
  return out;
}

}  // namespace mfrbp::eval
