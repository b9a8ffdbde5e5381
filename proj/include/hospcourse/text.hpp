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

// Word-level text normalization shared by term matching, constrained
// decoding and ROUGE. Everything operates on bytes; only ASCII letters are
// case-folded and only ASCII punctuation is stripped.

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hospcourse::text {

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_punct(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) ||
         (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

inline char to_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), to_lower);
  return out;
}

inline std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

/// Splits on runs of whitespace; never yields empty pieces.
inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Lowercases a single whitespace-free piece and strips leading and trailing
/// punctuation. May return an empty string (e.g. for "--").
inline std::string normalize_word(std::string_view piece) {
  std::size_t b = 0, e = piece.size();
  while (b < e && is_punct(piece[b])) ++b;
  while (e > b && is_punct(piece[e - 1])) --e;
  return lowercase(piece.substr(b, e - b));
}

/// Normalized word sequence of free text. Pieces that normalize to nothing
/// are dropped, so "diabetes , hypotension" yields two words.
inline std::vector<std::string> normalize_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto piece : split_whitespace(s)) {
    auto w = normalize_word(piece);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

inline std::string join(std::span<const std::string> parts,
                        std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// True when `phrase` occurs as a contiguous subsequence of `words`.
inline bool contains_phrase(std::span<const std::string> words,
                            std::span<const std::string> phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  return std::search(words.begin(), words.end(), phrase.begin(),
                     phrase.end()) != words.end();
}

}  // namespace hospcourse::text
