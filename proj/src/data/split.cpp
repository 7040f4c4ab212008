#include "mfrbp/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfrbp::data {

VehicleSplit split_vehicles(std::vector<AgentId> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(ids.size()) / 4.0));
  VehicleSplit split;
  split.test.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  return split;
}

std::map<std::string, VehicleSplit> split_train_test(
    const std::map<std::string, std::vector<AgentId>>& ids_by_subset, std::uint64_t seed) {
  std::map<std::string, VehicleSplit> out;
  for (const auto& [name, ids] : ids_by_subset) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                     static_cast<std::uint32_t>(seed >> 32)};
    for (unsigned char ch : name) words.push_back(ch);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t mixed[2];
    seq.generate(mixed, mixed + 2);
    const std::uint64_t subset_seed = (static_cast<std::uint64_t>(mixed[0]) << 32) | mixed[1];
    out.emplace(name, split_vehicles(ids, subset_seed));
  }
  return out;
}

}  // namespace mfrbp::data
