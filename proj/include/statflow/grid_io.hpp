#pragma once

// Grid import/export.
//
//   <stem>.bin   headerless float64 values, row-major (last axis fastest),
//                host byte order
//   <stem>.json  {"schema_version", "dimension", "cells", "origin",
//                 "spacing", "extension", "interpolation"}
//   CSV          one node per row: x0[,x1[,x2]],value with a header row
//   PGM          8-bit binary graymap, min..max mapped to 0..255 (2-D, or
//                the middle z-slice in 3-D)

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statflow/error.hpp"
#include "statflow/grid.hpp"

namespace statflow {

inline constexpr int kGridSchemaVersion = 1;

inline nlohmann::json extension_to_json(const ExtensionPolicy& e) {
  switch (e.kind) {
    case ExtensionKind::ClampToNearestNode:
      return {{"kind", "clamp"}};
    case ExtensionKind::Constant:
      return {{"kind", "constant"}, {"value", e.far_value}};
    case ExtensionKind::Periodic:
      return {{"kind", "periodic"}};
  }
  return {};
}

inline ExtensionPolicy extension_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "clamp") return ExtensionPolicy::clamp();
  if (kind == "constant") return ExtensionPolicy::constant(j.at("value").get<double>());
  if (kind == "periodic") return ExtensionPolicy::periodic();
  throw UsageError("unknown extension kind '" + kind + "'");
}

inline nlohmann::json grid_descriptor(const GridField& f) {
  const GridSpec& s = f.spec();
  nlohmann::json cells = nlohmann::json::array();
  nlohmann::json origin = nlohmann::json::array();
  for (int a = 0; a < s.dim; ++a) {
    cells.push_back(s.cells[a]);
    origin.push_back(s.origin[a]);
  }
  return {{"schema_version", kGridSchemaVersion},
          {"dimension", s.dim},
          {"cells", cells},
          {"origin", origin},
          {"spacing", s.spacing},
          {"extension", extension_to_json(f.extension())},
          {"interpolation", f.interpolation() == Interpolation::Linear ? "linear" : "cubic"}};
}

inline void write_grid(const GridField& f, const std::filesystem::path& stem) {
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw UsageError("cannot open " + bin.string() + " for writing");
    const auto v = f.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  std::ofstream out(meta);
  if (!out) throw UsageError("cannot open " + meta.string() + " for writing");
  out << std::setw(2) << grid_descriptor(f) << '\n';
}

inline GridField read_grid(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  std::ifstream min(meta);
  if (!min) throw UsageError("cannot open " + meta.string());
  nlohmann::json j;
  try {
    min >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed grid descriptor " + meta.string() + ": " + e.what());
  }
  GridSpec s;
  s.dim = j.at("dimension").get<int>();
  detail::require(s.dim >= 1 && s.dim <= kMaxDim, "grid descriptor: bad dimension");
  const auto& cells = j.at("cells");
  const auto& origin = j.at("origin");
  detail::require(cells.size() == static_cast<std::size_t>(s.dim) &&
                      origin.size() == static_cast<std::size_t>(s.dim),
                  "grid descriptor: cells/origin length must equal the dimension");
  s.origin = Vec(s.dim);
  for (int a = 0; a < s.dim; ++a) {
    s.cells[a] = cells[a].get<int>();
    s.origin[a] = origin[a].get<double>();
  }
  s.spacing = j.at("spacing").get<double>();
  s.validate();
  const ExtensionPolicy ext = j.contains("extension") ? extension_from_json(j["extension"])
                                                       : ExtensionPolicy::clamp();
  const Interpolation interp =
      j.value("interpolation", std::string("linear")) == "cubic" ? Interpolation::Cubic
                                                                  : Interpolation::Linear;

  std::ifstream in(bin, std::ios::binary | std::ios::ate);
  if (!in) throw UsageError("cannot open " + bin.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  detail::require(bytes == s.size() * sizeof(double),
                  "grid binary " + bin.string() + " has " + std::to_string(bytes) +
                      " bytes, descriptor implies " + std::to_string(s.size() * sizeof(double)));
  in.seekg(0);
  std::vector<double> v(s.size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  return GridField(s, std::move(v), ext, interp);
}

inline void write_grid_csv(const GridField& f, std::ostream& out) {
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  const GridSpec& s = f.spec();
  for (int a = 0; a < s.dim; ++a) out << kAxis[a] << ',';
  out << "value\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec x = s.node(i);
    for (int a = 0; a < s.dim; ++a) out << x[a] << ',';
    out << f[i] << '\n';
  }
}

inline void write_grid_csv(const GridField& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  write_grid_csv(f, out);
}

inline void write_pgm(const GridField& f, const std::filesystem::path& path) {
  const GridSpec& s = f.spec();
  detail::require(s.dim >= 2, "heatmaps need a 2-D or 3-D grid");
  const int w = s.nodes(0), h = s.nodes(1);
  const int z = s.dim == 3 ? s.cells[2] / 2 : 0;
  std::vector<double> slice;
  slice.reserve(static_cast<std::size_t>(w) * h);
  for (int j = h - 1; j >= 0; --j)  // top row is the largest y
    for (int i = 0; i < w; ++i) slice.push_back(f[s.flat(Index{i, j, z})]);
  const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
  const double span = *hi > *lo ? *hi - *lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (double v : slice) out.put(static_cast<char>(std::lround(255.0 * (v - *lo) / span)));
}

}  // namespace statflow
