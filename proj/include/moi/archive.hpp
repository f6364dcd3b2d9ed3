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


// On-disk interaction records.
//
// A run directory holds one text file per sample under records/:
//
//   #moi-archive version=1 n=8 sample=s0 v_full=0.5 v_empty=-0.25 deltas=0
//   sample,i,j,m,mean,stderr,contexts_used,exact,deltas
//   s0,0,1,0,0.125,0,1,1,
//   ...
//
// Rows are grouped by pair, orders ascending within a pair. `deltas` is
// empty unless the header says deltas=1, in which case it lists every
// per-context delta separated by ';'. Numbers use format_double. Readers
// reject any version other than the one they were built for.

#ifndef MOI_ARCHIVE_HPP_
#define MOI_ARCHIVE_HPP_

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "moi/csv.hpp"
#include "moi/error.hpp"
#include "moi/interaction.hpp"
#include "moi/metrics.hpp"

namespace moi {

inline constexpr int kArchiveVersion = 1;
inline constexpr std::string_view kArchiveMagic = "#moi-archive";
inline constexpr std::string_view kRecordColumns = "sample,i,j,m,mean,stderr,contexts_used,exact,deltas";

/// Sample ids end up in file contents and names: [A-Za-z0-9_.-]+.
inline bool valid_sample_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
           c == '-';
  });
}

inline void write_record(std::ostream& out, const SampleRecord& r, int n, bool with_deltas) {
  if (!valid_sample_id(r.sample_id)) fail(ErrorCode::kInvalidArgument, "bad sample id '" + r.sample_id + "'");
  out << kArchiveMagic << " version=" << kArchiveVersion << " n=" << n << " sample=" << r.sample_id
      << " v_full=" << format_double(r.v_full) << " v_empty=" << format_double(r.v_empty)
      << " deltas=" << (with_deltas ? 1 : 0) << "\n";
  out << kRecordColumns << "\n";
  for (const auto& p : r.profiles) {
    for (const auto& e : p.values) {
      out << r.sample_id << "," << e.i << "," << e.j << "," << e.m << "," << format_double(e.mean) << ","
          << format_double(e.std_error) << "," << e.contexts_used << "," << (e.exact ? 1 : 0) << ",";
      if (with_deltas) {
        if (e.deltas.size() != e.contexts_used) {
          fail(ErrorCode::kDeltasNotRetained, "record for pair (" + std::to_string(e.i) + ", " +
                                                  std::to_string(e.j) + ") has no retained deltas");
        }
        for (std::size_t k = 0; k < e.deltas.size(); ++k) {
          if (k) out << ';';
          out << format_double(e.deltas[k]);
        }
      }
      out << "\n";
    }
  }
}

inline std::string record_text(const SampleRecord& r, int n, bool with_deltas) {
  std::ostringstream os;
  write_record(os, r, n, with_deltas);
  return os.str();
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

}  // namespace detail

struct RecordFile {
  int n = 0;
  bool has_deltas = false;
  SampleRecord record;
};

inline RecordFile read_record(std::istream& in, const std::string& where) {
  auto at = [&](int line) { return where + ":" + std::to_string(line); };
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kArchiveMagic)) {
    fail(ErrorCode::kFormatError, at(1) + ": not a moi archive record");
  }
  std::map<std::string, std::string, std::less<>> fields;
  for (auto token : detail::split(std::string_view(line).substr(kArchiveMagic.size()), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::kFormatError, at(1) + ": bad header field '" + std::string(token) + "'");
    fields.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
  }
  auto field = [&](const char* key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) fail(ErrorCode::kFormatError, at(1) + ": header lacks '" + key + "'");
    return it->second;
  };
  const int version = parse_int_field<int>(field("version"), at(1));
  if (version != kArchiveVersion) {
    fail(ErrorCode::kFormatError, at(1) + ": archive version " + std::to_string(version) +
                                      " is not supported (this build reads version " +
                                      std::to_string(kArchiveVersion) + ")");
  }
  RecordFile out;
  out.n = parse_int_field<int>(field("n"), at(1));
  check_player_count(out.n);
  out.record.sample_id = field("sample");
  out.record.v_full = parse_double_field(field("v_full"), at(1));
  out.record.v_empty = parse_double_field(field("v_empty"), at(1));
  out.has_deltas = field("deltas") == "1";

  if (!std::getline(in, line) || line != kRecordColumns) {
    fail(ErrorCode::kFormatError, at(2) + ": expected column header '" + std::string(kRecordColumns) + "'");
  }
  int line_no = 2;
  std::map<std::pair<int, int>, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 9) fail(ErrorCode::kFormatError, at(line_no) + ": expected 9 columns");
    if (cols[0] != out.record.sample_id) fail(ErrorCode::kFormatError, at(line_no) + ": sample id differs from header");
    PairOrderEstimate e;
    e.i = parse_int_field<int>(cols[1], at(line_no));
    e.j = parse_int_field<int>(cols[2], at(line_no));
    e.m = parse_int_field<int>(cols[3], at(line_no));
    e.mean = parse_double_field(cols[4], at(line_no));
    e.std_error = parse_double_field(cols[5], at(line_no));
    e.contexts_used = parse_int_field<std::uint64_t>(cols[6], at(line_no));
    e.exact = cols[7] == "1";
    check_pair(out.n, e.i, e.j);
    if (e.m < 0 || e.m > out.n - 2) fail(ErrorCode::kFormatError, at(line_no) + ": order out of range");
    if (out.has_deltas) {
      for (auto d : detail::split(cols[8], ';')) e.deltas.push_back(parse_double_field(d, at(line_no)));
      if (e.deltas.size() != e.contexts_used) {
        fail(ErrorCode::kFormatError, at(line_no) + ": delta count differs from contexts_used");
      }
    } else if (!cols[8].empty()) {
      fail(ErrorCode::kFormatError, at(line_no) + ": deltas present in a lean record");
    }
    auto [it, fresh] = index.emplace(std::pair{e.i, e.j}, out.record.profiles.size());
    if (fresh) {
      out.record.profiles.push_back({out.n, e.i, e.j, {}});
    }
    auto& values = out.record.profiles[it->second].values;
    if (!values.empty() && values.back().m >= e.m) {
      fail(ErrorCode::kFormatError, at(line_no) + ": orders must ascend within a pair");
    }
    values.push_back(std::move(e));
  }
  return out;
}

inline RecordFile read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  return read_record(in, path.string());
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

/// File names inside a run directory.
struct ArchiveLayout {
  std::filesystem::path root;

  std::filesystem::path records_dir() const { return root / "records"; }
  std::filesystem::path record_path(std::size_t k) const {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%05zu.csv", k);
    return records_dir() / name;
  }
  std::filesystem::path partial_marker() const { return root / "PARTIAL"; }
  std::filesystem::path lock_path() const { return root / ".lock"; }
  std::filesystem::path manifest_path() const { return root / "manifest.json"; }
  std::filesystem::path config_path() const { return root / "config.resolved.yaml"; }
};

inline std::vector<std::filesystem::path> record_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("sample_") && name.ends_with(".csv")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Loads a run directory (or its records/ directory). A run that left its
/// PARTIAL marker behind is refused unless `allow_partial`.
inline SampleRecordSet read_archive(const std::filesystem::path& path, bool allow_partial = false) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) fail(ErrorCode::kIoError, "no archive at " + path.string());
  fs::path records = path;
  if (fs::is_directory(path / "records")) {
    records = path / "records";
    if (!allow_partial && fs::exists(ArchiveLayout{path}.partial_marker())) {
      fail(ErrorCode::kIncompleteProfile, path.string() + " holds an unfinished run (resume it first)");
    }
  }
  std::vector<fs::path> files = fs::is_directory(records) ? record_files(records) : std::vector<fs::path>{records};
  if (files.empty()) fail(ErrorCode::kIncompleteProfile, "no record files in " + records.string());
  SampleRecordSet set;
  for (const auto& f : files) {
    auto rf = read_record_file(f);
    if (set.samples.empty()) {
      set.n = rf.n;
    } else if (rf.n != set.n) {
      fail(ErrorCode::kFormatError, f.string() + ": n=" + std::to_string(rf.n) + " differs from n=" +
                                        std::to_string(set.n) + " in the rest of the archive");
    }
    set.samples.push_back(std::move(rf.record));
  }
  return set;
}

}  // namespace moi

#endif  // MOI_ARCHIVE_HPP_
