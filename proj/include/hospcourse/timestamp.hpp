// Copyright 2026 The hospcourse Authors.
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

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "hospcourse/error.hpp"

namespace hospcourse {

/// An instant plus the UTC offset it was recorded with. Ordering and
/// arithmetic use the instant; calendar days use the recorded offset.
struct Timestamp {
  std::int64_t utc_seconds = 0;
  int offset_minutes = 0;

  std::chrono::sys_days local_day() const {
    const auto local = std::chrono::sys_seconds(
        std::chrono::seconds(utc_seconds + std::int64_t{offset_minutes} * 60));
    return std::chrono::floor<std::chrono::days>(local);
  }

  std::strong_ordering operator<=>(const Timestamp& o) const noexcept {
    return utc_seconds <=> o.utc_seconds;
  }
  bool operator==(const Timestamp& o) const noexcept {
    return utc_seconds == o.utc_seconds;
  }
};

inline constexpr std::int64_t kSecondsPerHour = 3600;

inline std::string format_day(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM[:SS[.frac]][Z|+HH:MM|+HHMM]".
/// A missing offset means UTC.
inline Timestamp parse_timestamp(std::string_view s) {
  auto fail = [&] {
    return Error(Errc::parse_error, "bad ISO-8601 timestamp: \"" + std::string(s) + "\"");
  };
  std::size_t pos = 0;
  auto digits = [&](std::size_t n) {
    if (pos + n > s.size()) throw fail();
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char c = s[pos + i];
      if (c < '0' || c > '9') throw fail();
      v = v * 10 + (c - '0');
    }
    pos += n;
    return v;
  };
  auto expect = [&](char c) {
    if (pos >= s.size() || s[pos] != c) throw fail();
    ++pos;
  };

  const int y = digits(4);
  expect('-');
  const int mo = digits(2);
  expect('-');
  const int d = digits(2);
  const std::chrono::year_month_day ymd{std::chrono::year(y),
                                        std::chrono::month(static_cast<unsigned>(mo)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) throw fail();

  int hh = 0, mm = 0, ss = 0, off = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') throw fail();
    ++pos;
    hh = digits(2);
    expect(':');
    mm = digits(2);
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      ss = digits(2);
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        const auto start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) throw fail();
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) throw fail();
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        const int oh = digits(2);
        if (pos < s.size() && s[pos] == ':') ++pos;
        const int om = digits(2);
        if (oh > 23 || om > 59) throw fail();
        off = sign * (oh * 60 + om);
      } else {
        throw fail();
      }
    }
  }
  if (pos != s.size()) throw fail();

  const std::int64_t days = std::chrono::sys_days(ymd).time_since_epoch().count();
  const std::int64_t local = days * 86400 + hh * 3600 + mm * 60 + ss;
  return Timestamp{local - std::int64_t{off} * 60, off};
}

}  // namespace hospcourse
