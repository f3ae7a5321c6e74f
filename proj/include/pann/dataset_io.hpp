#pragma once

// Dataset persistence: one CSV per segment (time, i_L, v_p, v_s, target) and
// a JSON manifest. Numbers are written with 17 significant digits, so a
// save/load cycle reproduces every double exactly.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pann/dataset.hpp"
#include "pann/error.hpp"
#include "pann/signals.hpp"

namespace pann {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kDatasetSchema = "pann.dataset/1";
inline constexpr const char* kSegmentCsvHeader = "time,i_L,v_p,v_s,target";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("cannot parse number '" + s + "'");
  return v;
}

inline ordered_json to_json(const ModulationSpec& s) {
  return ordered_json{{"v_in", s.v_in},           {"v_out", s.v_out}, {"f_s", s.f_s},
                      {"phase_shift", s.phase_shift}, {"dt", s.dt},       {"n_periods", s.n_periods}};
}

inline ModulationSpec modulation_from_json(const ordered_json& j) {
  ModulationSpec s;
  s.v_in = j.value("v_in", s.v_in);
  s.v_out = j.value("v_out", s.v_out);
  s.f_s = j.value("f_s", s.f_s);
  s.phase_shift = j.value("phase_shift", s.phase_shift);
  s.dt = j.value("dt", s.dt);
  s.n_periods = j.value("n_periods", s.n_periods);
  return s;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string segment_csv(const WaveformSegment& seg) {
  if (seg.z.rows() != 3 || seg.targets.rows() != 1) {
    throw ShapeMismatch("segment CSV export expects the DAB layout (i_L, v_p, v_s)");
  }
  std::string out = std::string(kSegmentCsvHeader) + "\n";
  for (Eigen::Index k = 0; k < seg.steps(); ++k) {
    out += format_double(seg.times(k)) + ',' + format_double(seg.z(0, k)) + ',' + format_double(seg.z(1, k)) +
           ',' + format_double(seg.z(2, k)) + ',' + format_double(seg.targets(0, k)) + '\n';
  }
  return out;
}

inline void parse_segment_csv(const std::string& text, WaveformSegment& seg) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSegmentCsvHeader) {
    throw ConfigError("segment CSV: expected header '" + std::string(kSegmentCsvHeader) + "'");
  }
  std::vector<std::array<double, 5>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 5> r{};
    std::istringstream ls(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= 5) throw ConfigError("segment CSV: too many columns");
      r[c++] = parse_double(cell);
    }
    if (c != 5) throw ConfigError("segment CSV: expected 5 columns");
    rows.push_back(r);
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  seg.times.resize(k);
  seg.z.resize(3, k);
  seg.targets.resize(1, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    seg.times(i) = r[0];
    seg.z(0, i) = r[1];
    seg.z(1, i) = r[2];
    seg.z(2, i) = r[3];
    seg.targets(0, i) = r[4];
  }
}

struct DatasetManifestInfo {
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  ordered_json extra = ordered_json::object();
};

// Writes <dir>/<role>/segment_NNN.csv for every dataset and <dir>/manifest.json.
inline std::filesystem::path save_datasets(const std::filesystem::path& dir,
                                           const std::vector<const WaveformDataset*>& datasets,
                                           const DatasetManifestInfo& info) {
  ordered_json manifest;
  manifest["schema"] = kDatasetSchema;
  manifest["seed"] = info.seed;
  manifest["noise_sigma"] = info.noise_sigma;
  manifest["columns"] = ordered_json::array({"time", "i_L", "v_p", "v_s", "target"});
  if (!info.extra.empty()) manifest["config"] = info.extra;
  ordered_json roles = ordered_json::object();
  for (const WaveformDataset* d : datasets) {
    const std::string role(to_string(d->role));
    ordered_json segs = ordered_json::array();
    for (std::size_t i = 0; i < d->segments.size(); ++i) {
      const auto& seg = d->segments[i];
      char name[32];
      std::snprintf(name, sizeof name, "segment_%03zu.csv", i);
      const std::string rel = role + "/" + name;
      write_text_file(dir / rel, segment_csv(seg));
      segs.push_back(ordered_json{{"file", rel},
                                  {"role", role},
                                  {"steps", seg.steps()},
                                  {"noise_sigma", seg.noise_sigma},
                                  {"settled", seg.settled},
                                  {"spec", to_json(seg.spec)}});
    }
    roles[role] = ordered_json{{"count", d->segments.size()}, {"segments", segs}};
  }
  manifest["roles"] = roles;
  const auto path = dir / "manifest.json";
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

inline WaveformDataset load_dataset(const std::filesystem::path& manifest_path, DatasetRole role) {
  const auto manifest = ordered_json::parse(read_text_file(manifest_path));
  if (manifest.value("schema", std::string{}) != kDatasetSchema) {
    throw ConfigError("'" + manifest_path.string() + "' is not a dataset manifest");
  }
  const std::string key(to_string(role));
  WaveformDataset data;
  data.role = role;
  const auto& roles = manifest.at("roles");
  if (!roles.contains(key)) return data;
  const auto base = manifest_path.parent_path();
  for (const auto& entry : roles.at(key).at("segments")) {
    WaveformSegment seg;
    parse_segment_csv(read_text_file(base / entry.at("file").get<std::string>()), seg);
    seg.spec = modulation_from_json(entry.at("spec"));
    seg.noise_sigma = entry.value("noise_sigma", 0.0);
    seg.settled = entry.value("settled", true);
    data.segments.push_back(std::move(seg));
  }
  return data;
}

}  // namespace pann
