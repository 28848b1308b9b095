#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace socrates::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string report_to_json(const RunReport& report) {
  json j;
  j["task"] = report.task;
  j["engine"] = report.engine;
  j["verdict"] = report.verdict;
  j["wall_time_seconds"] = report.wall_time_seconds;
  j["seed"] = report.seed;
  if (report.witness) {
    json w = json::object();
    for (const auto& e : *report.witness) {
      json entry;
      entry["values"] = e.values;
      entry["csv"] = e.csv ? json(*e.csv) : json(nullptr);
      entry["image"] = e.image ? json(*e.image) : json(nullptr);
      w[e.variable] = std::move(entry);
    }
    j["witness"] = std::move(w);
  } else {
    j["witness"] = nullptr;
  }
  j["details"] = json::object();
  for (const auto& [k, v] : report.details) j["details"][k] = v;
  j["warnings"] = report.warnings;
  j["notes"] = report.notes;
  return j.dump(2);
}

int pixel_value(double v, double lb, double ub) {
  if (!(ub > lb)) return 0;
  const double p = std::floor(255.0 * (v - lb) / (ub - lb) + 0.5);
  return static_cast<int>(std::clamp(p, 0.0, 255.0));
}

std::string pgm_image(const std::vector<double>& values, const nn::Box& box, const Shape& resolution) {
  const std::size_t width = resolution.back();
  const std::size_t height = shape_size(resolution) / width;
  std::ostringstream out;
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t i = r * width + c;
      out << (c ? " " : "") << pixel_value(values[i], box.lower[i], box.upper[i]);
    }
    out << '\n';
  }
  return out.str();
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string csv_line(const std::vector<double>& values) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    auto res = std::to_chars(buf, buf + sizeof buf, values[i]);
    s.append(buf, res.ptr);
  }
  return s + '\n';
}

}  // namespace

RenderResult render_witness(const logic::Env& witness, const std::vector<std::string>& order, const nn::Box& box,
                            const std::optional<Shape>& resolution, const fs::path& stem) {
  RenderResult result;
  for (const auto& var : order) {
    auto it = witness.find(var);
    if (it == witness.end()) continue;
    WitnessEntry e{var, it->second.values(), std::nullopt, std::nullopt};
    const fs::path csv = stem.string() + "." + var + ".csv";
    write_file(csv, csv_line(e.values));
    e.csv = csv.string();
    if (resolution) {
      if (shape_size(*resolution) != e.values.size()) {
        result.error = "resolution " + shape_to_string(*resolution) + " does not cover " +
                       std::to_string(e.values.size()) + " features";
      } else {
        const fs::path pgm = stem.string() + "." + var + ".pgm";
        write_file(pgm, pgm_image(e.values, box, *resolution));
        e.image = pgm.string();
      }
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace socrates::cli
