#include "mfrbp/data/ngsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mfrbp/error.hpp"

namespace mfrbp::data {

const char* to_string(LengthUnit unit) { return unit == LengthUnit::Feet ? "feet" : "meters"; }

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double unit_scale(LengthUnit unit) { return unit == LengthUnit::Feet ? kMetersPerFoot : 1.0; }

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format value");
  return std::string(buf, ptr);
}

// Shortest text whose parsed value times `scale` reproduces `meters`.
std::string format_length(double meters, LengthUnit unit) {
  if (unit == LengthUnit::Meters) return shortest(meters);
  const double guess = meters / kMetersPerFoot;
  std::string best;
  double lo = guess, hi = guess;
  auto consider = [&](double f) {
    if (f * kMetersPerFoot != meters) return;
    std::string s = shortest(f);
    if (best.empty() || s.size() < best.size()) best = std::move(s);
  };
  consider(guess);
  for (int k = 0; k < 8; ++k) {
    lo = std::nextafter(lo, -INFINITY);
    hi = std::nextafter(hi, INFINITY);
    consider(lo);
    consider(hi);
  }
  if (best.empty()) {
    throw Error("length " + shortest(meters) + " m has no exact representation in feet");
  }
  return best;
}

}  // namespace

ParsedTrajectories parse_trajectories(std::istream& in) {
  ParsedTrajectories result;
  std::map<AgentId, std::vector<AgentState>> by_vehicle;
  std::string line;
  std::size_t line_no = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view.remove_prefix(1);
      view = trim(view);
      if (view.starts_with("units:")) {
        auto unit = trim(view.substr(6));
        if (saw_data) throw ParseError("units must be declared before the first row", line_no);
        if (unit == "feet" || unit == "ft") {
          result.unit = LengthUnit::Feet;
        } else if (unit == "meters" || unit == "m") {
          result.unit = LengthUnit::Meters;
        } else {
          throw ParseError("unknown length unit '" + std::string(unit) + "'", line_no);
        }
      }
      continue;
    }
    auto fields = split_fields(view);
    AgentId id = 0;
    if (!parse_number(fields[0], id)) {
      if (saw_data) throw ParseError("malformed vehicle id '" + std::string(fields[0]) + "'", line_no);
      continue;  // column header
    }
    if (fields.size() != 4 && fields.size() != 5) {
      throw ParseError("expected 4 or 5 fields, found " + std::to_string(fields.size()), line_no);
    }
    Frame frame = 0;
    double lx = 0.0, ly = 0.0;
    if (!parse_number(fields[1], frame) || frame < 0) {
      throw ParseError("malformed frame id '" + std::string(fields[1]) + "'", line_no);
    }
    if (!parse_number(fields[2], lx) || !parse_number(fields[3], ly) || !std::isfinite(lx) ||
        !std::isfinite(ly)) {
      throw ParseError("malformed coordinates", line_no);
    }
    if (fields.size() == 5) {
      int lane = 0;
      if (!parse_number(fields[4], lane)) throw ParseError("malformed lane id", line_no);
    }
    saw_data = true;
    auto& states = by_vehicle[id];
    if (!states.empty() && frame <= states.back().frame) {
      throw ParseError("frames of vehicle " + std::to_string(id) + " are not increasing (" +
                           std::to_string(frame) + " after " +
                           std::to_string(states.back().frame) + ")",
                       line_no);
    }
    const double s = unit_scale(result.unit);
    states.push_back({ly * s, lx * s, frame});
  }

  for (auto& [id, states] : by_vehicle) {
    std::size_t start = 0;
    for (std::size_t i = 1; i <= states.size(); ++i) {
      if (i < states.size() && states[i].frame == states[i - 1].frame + 1) continue;
      if (i < states.size()) result.gaps.push_back({id, states[i - 1].frame, states[i].frame});
      result.tracks.emplace_back(
          id, std::vector<AgentState>(states.begin() + static_cast<std::ptrdiff_t>(start),
                                      states.begin() + static_cast<std::ptrdiff_t>(i)));
      start = i;
    }
  }
  return result;
}

ParsedTrajectories parse_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_trajectories(in);
  } catch (const ParseError& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_trajectories(std::ostream& out, const std::vector<TrackHistory>& tracks,
                        LengthUnit unit) {
  std::vector<const TrackHistory*> order;
  for (const auto& t : tracks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const TrackHistory* a, const TrackHistory* b) {
    return a->id() != b->id() ? a->id() < b->id() : a->first_frame() < b->first_frame();
  });
  out << "# units: " << to_string(unit) << '\n';
  for (const auto* t : order) {
    for (const auto& s : t->states()) {
      out << t->id() << ' ' << s.frame << ' ' << format_length(s.y, unit) << ' '
          << format_length(s.x, unit) << '\n';
    }
  }
}

void write_trajectories(const std::filesystem::path& path, const std::vector<TrackHistory>& tracks,
                        LengthUnit unit) {
  std::ostringstream buf;
  write_trajectories(buf, tracks, unit);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << buf.str();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace mfrbp::data
