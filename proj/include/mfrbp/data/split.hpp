#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mfrbp/scene.hpp"

namespace mfrbp::data {

struct VehicleSplit {
  std::set<AgentId> train;
  std::set<AgentId> test;
};

/// Seeded shuffle of the (deduplicated) ids; round(n / 4) go to test.
VehicleSplit split_vehicles(std::vector<AgentId> ids, std::uint64_t seed);

/// split_vehicles per subset, with the subset name mixed into the seed.
std::map<std::string, VehicleSplit> split_train_test(
    const std::map<std::string, std::vector<AgentId>>& ids_by_subset, std::uint64_t seed);

}  // namespace mfrbp::data
