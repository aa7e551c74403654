// Copyright 2026 The mpsntk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// CSV dialect shared by every artifact: comma separated, '.' decimal point,
// LF line endings, floats at 17 significant digits.

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace mpsntk::csv {

inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes one row; cells are separated by commas and the row ends in '\n'.
class RowWriter {
 public:
  explicit RowWriter(std::ostream& os) : os_(os) {}
  ~RowWriter() { os_ << '\n'; }
  RowWriter(const RowWriter&) = delete;
  RowWriter& operator=(const RowWriter&) = delete;

  RowWriter& operator<<(double v) { return cell(format(v)); }
  RowWriter& operator<<(std::string_view v) { return cell(v); }
  RowWriter& operator<<(const char* v) { return cell(v); }
  RowWriter& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  RowWriter& operator<<(unsigned long long v) { return cell(std::to_string(v)); }
  RowWriter& operator<<(int v) { return cell(std::to_string(v)); }

 private:
  RowWriter& cell(std::string_view v) {
    if (!first_) os_ << ',';
    first_ = false;
    os_ << v;
    return *this;
  }
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace mpsntk::csv
