#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfrbp/scene.hpp"

// Columnar trajectory text, one observation per row:
//
//   vehicle_id frame_id local_x local_y [lane_id]
//
// Fields are separated by whitespace and/or commas. Lines starting with '#'
// are comments; "# units: feet" or "# units: meters" selects the length
// unit (feet when absent, as in NGSIM). A row whose first field is not an
// integer is treated as a column header; lane_id is accepted and ignored.
// local_x is lateral and local_y longitudinal, so AgentState.x = local_y and
// AgentState.y = local_x.

namespace mfrbp::data {

inline constexpr double kMetersPerFoot = 0.3048;

enum class LengthUnit { Feet, Meters };

const char* to_string(LengthUnit unit);

/// A missing stretch of frames inside one vehicle's record.
struct FrameGap {
  AgentId vehicle_id = 0;
  Frame last_before = 0;
  Frame first_after = 0;
};

struct ParsedTrajectories {
  LengthUnit unit = LengthUnit::Feet;
  /// Contiguous runs ordered by vehicle id then frame; a vehicle with gaps
  /// contributes one run per contiguous stretch.
  std::vector<TrackHistory> tracks;
  std::vector<FrameGap> gaps;
};

/// Throws ParseError (with the 1-based line number) on malformed rows or
/// when a vehicle's frames do not strictly increase down the file.
ParsedTrajectories parse_trajectories(std::istream& in);
ParsedTrajectories parse_trajectories(const std::filesystem::path& path);

/// Writes a units comment and one row per state, ordered by vehicle then
/// frame. Values are printed in the shortest form that parses back to the
/// same meters; throws if a meter value has no exact representation in the
/// requested unit.
void write_trajectories(std::ostream& out, const std::vector<TrackHistory>& tracks,
                        LengthUnit unit);
void write_trajectories(const std::filesystem::path& path, const std::vector<TrackHistory>& tracks,
                        LengthUnit unit);

}  // namespace mfrbp::data
