#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "socrates/assertion.hpp"
#include "socrates/network.hpp"

namespace socrates::cli {

struct WitnessEntry {
  std::string variable;
  std::vector<double> values;
  std::optional<std::string> csv;    // written file, if any
  std::optional<std::string> image;  // written PGM, if any
};

/// Outcome of one run, serialised as the tool's JSON output.
struct RunReport {
  std::string task;
  std::string engine;
  std::string verdict;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::vector<WitnessEntry>> witness;  // present iff falsified
  std::map<std::string, double> details;             // engine counters
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
};

std::string report_to_json(const RunReport& report);

/// Grey level of `v` inside [lb, ub]: floor(255 (v - lb) / (ub - lb) + 0.5),
/// clamped to [0, 255]; 0 for a degenerate interval.
int pixel_value(double v, double lb, double ub);

/// Plain PGM ("P2", maxval 255). The last resolution entry is the width; the
/// others multiply into the height.
std::string pgm_image(const std::vector<double>& values, const nn::Box& box, const Shape& resolution);

struct RenderResult {
  std::vector<WitnessEntry> entries;
  std::optional<std::string> error;  // e.g. resolution mismatch; CSVs are still written
};

/// Writes <stem>.<var>.csv for every variable and, when a resolution is
/// given, <stem>.<var>.pgm.
RenderResult render_witness(const logic::Env& witness, const std::vector<std::string>& order, const nn::Box& box,
                            const std::optional<Shape>& resolution, const std::filesystem::path& stem);

}  // namespace socrates::cli
