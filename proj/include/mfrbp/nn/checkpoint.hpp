#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "mfrbp/nn/tensor.hpp"

namespace mfrbp::nn {

/// Binary checkpoint container, all integers little-endian:
///
///   bytes 0..7   magic "MFRBPCKP"
///   u32          format version (kCheckpointVersion)
///   u64 + bytes  metadata string (free-form, usually JSON)
///   u64          entry count
///   per entry:   u64 + bytes name, u64 rank, rank x u64 dims,
///                prod(dims) x IEEE-754 binary64 values
///
/// Values are stored as raw bit patterns so save/load is exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;
  ParameterStore parameters;
};

void write_checkpoint(std::ostream& out, const ParameterStore& store, const std::string& metadata);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::string& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mfrbp::nn
