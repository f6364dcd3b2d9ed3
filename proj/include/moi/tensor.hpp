// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOI_TENSOR_HPP_
#define MOI_TENSOR_HPP_

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moi/error.hpp"
#include "moi/numeric.hpp"

namespace moi {

/// Dense (channels, height, width) tensor, row-major within each channel.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c < 1 || h < 1 || w < 1) fail(ErrorCode::kShapeMismatch, "tensor dimensions must be positive");
  }

  std::size_t size() const { return data.size(); }
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[index(c, y, x)]; }

  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  void check_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) fail(ErrorCode::kFormatError, "tensor holds a non-finite value");
    }
  }

  /// Content digest used in evaluator descriptors.
  std::uint64_t digest() const {
    std::uint64_t h = hash_combine(hash_combine(hash_combine(0, channels), height), width);
    for (double v : data) h = hash_combine(h, std::bit_cast<std::uint64_t>(v));
    return h;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// On-disk formats
//
// Raw: `<path>` holds channels*height*width IEEE-754 binary32 values,
// little-endian, no header. A sidecar `<path>.json` describes it:
//   {"format": "f32le", "channels": C, "height": H, "width": W, "layout": "CHW"}
// "layout" is "CHW" (planar) or "HWC" (interleaved).
//
// CSV (files ending in .csv): a single-channel tensor, one image row per
// line, values separated by commas. Empty lines are skipped.

namespace detail {

inline float load_f32le(const unsigned char* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                    static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(u);
}

inline void store_f32le(float f, unsigned char* p) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  p[0] = static_cast<unsigned char>(u);
  p[1] = static_cast<unsigned char>(u >> 8);
  p[2] = static_cast<unsigned char>(u >> 16);
  p[3] = static_cast<unsigned char>(u >> 24);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kFormatError, where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline Tensor read_tensor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(detail::parse_double(
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start),
          path.string() + ":" + std::to_string(line_no)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::kFormatError, path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::kFormatError, path.string() + ": empty tensor");
  Tensor t(1, static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      t.at(0, y, x) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
    }
  }
  t.check_finite();
  return t;
}

inline Tensor read_tensor_raw(const std::filesystem::path& path) {
  const auto sidecar = std::filesystem::path(path.string() + ".json");
  std::ifstream meta_in(sidecar);
  if (!meta_in) fail(ErrorCode::kIoError, "missing descriptor " + sidecar.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, sidecar.string() + ": " + e.what());
  }
  const std::string format = meta.value("format", "f32le");
  const std::string layout = meta.value("layout", "CHW");
  if (format != "f32le") fail(ErrorCode::kFormatError, sidecar.string() + ": unsupported format " + format);
  if (layout != "CHW" && layout != "HWC") {
    fail(ErrorCode::kFormatError, sidecar.string() + ": unsupported layout " + layout);
  }
  Tensor t;
  try {
    t = Tensor(meta.at("channels").get<int>(), meta.at("height").get<int>(), meta.at("width").get<int>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, sidecar.string() + ": " + e.what());
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != t.size() * 4) {
    fail(ErrorCode::kFormatError, path.string() + ": expected " + std::to_string(t.size() * 4) +
                                      " bytes, found " + std::to_string(bytes.size()));
  }
  std::size_t k = 0;
  if (layout == "CHW") {
    for (auto& v : t.data) v = detail::load_f32le(&bytes[4 * k++]);
  } else {
    for (int y = 0; y < t.height; ++y) {
      for (int x = 0; x < t.width; ++x) {
        for (int c = 0; c < t.channels; ++c) t.at(c, y, x) = detail::load_f32le(&bytes[4 * k++]);
      }
    }
  }
  t.check_finite();
  return t;
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_tensor_csv(path) : read_tensor_raw(path);
}

/// Writes the raw format (CHW) plus its sidecar. Values are rounded to float.
inline void write_tensor_raw(const std::filesystem::path& path, const Tensor& t) {
  std::vector<unsigned char> bytes(t.size() * 4);
  for (std::size_t k = 0; k < t.size(); ++k) detail::store_f32le(static_cast<float>(t.data[k]), &bytes[4 * k]);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  nlohmann::json meta{{"format", "f32le"}, {"channels", t.channels}, {"height", t.height},
                      {"width", t.width}, {"layout", "CHW"}};
  std::ofstream meta_out(path.string() + ".json");
  meta_out << meta.dump(2) << "\n";
  if (!meta_out) fail(ErrorCode::kIoError, "cannot write descriptor for " + path.string());
}

}  // namespace moi

#endif  // MOI_TENSOR_HPP_
