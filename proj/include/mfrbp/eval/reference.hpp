#pragma once

#include <array>
#include <string>
#include <vector>

#include "mfrbp/eval/rmse.hpp"

namespace mfrbp::eval {

/// Published full-scale RMSE (m) at 1..5 s for one method.
struct ReferenceColumn {
  std::string key;
  std::string label;
  std::array<double, 5> rmse;
};

const std::vector<ReferenceColumn>& reference_columns();
/// Throws for an unknown key.
const ReferenceColumn& reference_column(const std::string& key);

inline constexpr const char* kReferenceDisclaimer =
    "Reference values are full-scale NGSIM results; desk-scale runs are not expected to match "
    "them.";

/// Side-by-side text report: horizon, this run, reference, delta.
std::string reference_compare(const RmseTable& table, const std::string& key);

}  // namespace mfrbp::eval
