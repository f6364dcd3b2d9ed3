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


// Plain-text number formatting and the metric CSV layout.

#ifndef MOI_CSV_HPP_
#define MOI_CSV_HPP_

#include <charconv>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "moi/error.hpp"
#include "moi/metrics.hpp"

namespace moi {

/// 17 significant digits, '.' decimal point, no grouping; independent of
/// the C and C++ locales. Round-trips every finite double.
inline std::string format_double(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline double parse_double_field(std::string_view s, std::string_view what) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(ErrorCode::kFormatError, std::string(what) + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int_field(std::string_view s, std::string_view what) {
  Int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(ErrorCode::kFormatError, std::string(what) + ": cannot parse integer '" + std::string(s) + "'");
  }
  return v;
}

inline constexpr std::string_view kProfileCsvHeader = "order,value,stderr,kind";

/// One row per order; the stderr field is empty when the metric has none.
inline void write_profile_csv(std::ostream& out, const OrderProfile& p, std::string_view kind_label = {}) {
  const std::string kind = kind_label.empty() ? std::string(to_string(p.kind)) : std::string(kind_label);
  out << kProfileCsvHeader << "\n";
  for (std::size_t k = 0; k < p.orders.size(); ++k) {
    out << p.orders[k] << "," << format_double(p.values[k]) << ",";
    if (k < p.std_errors.size()) out << format_double(p.std_errors[k]);
    out << "," << kind << "\n";
  }
}

inline std::string profile_csv(const OrderProfile& p, std::string_view kind_label = {}) {
  std::ostringstream os;
  write_profile_csv(os, p, kind_label);
  return os.str();
}

}  // namespace moi

#endif  // MOI_CSV_HPP_
