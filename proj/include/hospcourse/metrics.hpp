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

// Evaluation metrics: ROUGE-N / ROUGE-L recall, classification reports,
// consistency ICC from a two-way model, and word-count statistics.
//
// ROUGE tokenization is the shared word normalization (lowercase, strip edge
// punctuation, split on whitespace) with no stemming and no stopword removal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hospcourse/error.hpp"
#include "hospcourse/text.hpp"

namespace hospcourse {

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct IccResult {
  double icc_single = 0.0;
  double icc_average = 0.0;
  double ms_rows = 0.0;
  double ms_error = 0.0;
  std::size_t subjects = 0;
  std::size_t raters = 0;
};

struct WordCountStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

namespace detail {

using Ngram = std::vector<std::string>;

inline std::map<Ngram, std::size_t> ngram_counts(std::span<const std::string> words,
                                                 std::size_t n) {
  std::map<Ngram, std::size_t> out;
  for (std::size_t i = 0; i + n <= words.size(); ++i)
    ++out[Ngram(words.begin() + static_cast<std::ptrdiff_t>(i),
                words.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace detail

/// Length of the longest common subsequence, O(|a|*|b|) time, O(|b|) space.
inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

inline double rouge_n_recall(std::string_view candidate, std::string_view reference,
                             std::size_t n) {
  if (n < 1) throw Error(Errc::invalid_config, "ROUGE-N needs n >= 1");
  const auto ref = text::normalize_words(reference);
  if (ref.size() < n)
    throw Error(Errc::reference_too_short,
                "reference has fewer than " + std::to_string(n) + " words");
  const auto cand = text::normalize_words(candidate);
  const auto ref_counts = detail::ngram_counts(ref, n);
  const auto cand_counts = detail::ngram_counts(cand, n);

  std::size_t overlap = 0;
  for (const auto& [g, c] : ref_counts) {
    auto it = cand_counts.find(g);
    if (it != cand_counts.end()) overlap += std::min(c, it->second);
  }
  return 100.0 * static_cast<double>(overlap) / static_cast<double>(ref.size() - n + 1);
}

inline double rouge_l_recall(std::string_view candidate, std::string_view reference) {
  const auto ref = text::normalize_words(reference);
  if (ref.empty()) throw Error(Errc::empty_reference, "reference has no words");
  const auto cand = text::normalize_words(candidate);
  return 100.0 * static_cast<double>(lcs_length(cand, ref)) / static_cast<double>(ref.size());
}

inline RougeScores rouge_recall(std::string_view candidate, std::string_view reference) {
  return {rouge_n_recall(candidate, reference, 1), rouge_n_recall(candidate, reference, 2),
          rouge_l_recall(candidate, reference)};
}

/// Positive class is 1. Undefined ratios (no predicted or no gold positives)
/// are reported as 0.
inline ClassificationMetrics classification_report(std::span<const int> predictions,
                                                   std::span<const int> golds) {
  if (predictions.size() != golds.size())
    throw Error(Errc::length_mismatch, "predictions and golds differ in length");
  if (predictions.empty()) throw Error(Errc::empty_input, "no labels");

  ClassificationMetrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], g = golds[i];
    if ((p != 0 && p != 1) || (g != 0 && g != 1))
      throw Error(Errc::parse_error, "labels must be 0 or 1");
    if (p && g) ++m.tp;
    else if (p) ++m.fp;
    else if (g) ++m.fn;
    else ++m.tn;
  }
  auto ratio = [](std::uint64_t a, std::uint64_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(m.tp + m.tn, predictions.size());
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  const double pr = m.precision + m.recall;
  m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
  return m;
}

/// Consistency ICC from a two-way ANOVA of an n-subjects x k-raters matrix:
///   single  = (MSR - MSE) / (MSR + (k-1) MSE)
///   average = (MSR - MSE) / MSR
inline IccResult icc_consistency(const std::vector<std::vector<double>>& ratings) {
  const std::size_t n = ratings.size();
  if (n < 2) throw Error(Errc::too_few_subjects, "ICC needs at least 2 subjects");
  const std::size_t k = ratings.front().size();
  if (k < 2) throw Error(Errc::too_few_subjects, "ICC needs at least 2 raters");
  for (const auto& row : ratings) {
    if (row.size() != k) throw Error(Errc::length_mismatch, "ragged ratings matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw Error(Errc::parse_error, "non-finite rating");
  }

  const double nk = static_cast<double>(n * k);
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      grand += ratings[i][j];
      row_mean[i] += ratings[i][j];
      col_mean[j] += ratings[i][j];
    }
  grand /= nk;
  for (auto& r : row_mean) r /= static_cast<double>(k);
  for (auto& c : col_mean) c /= static_cast<double>(n);

  double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (ratings[i][j] - grand) * (ratings[i][j] - grand);
  for (double r : row_mean) ss_rows += static_cast<double>(k) * (r - grand) * (r - grand);
  for (double c : col_mean) ss_cols += static_cast<double>(n) * (c - grand) * (c - grand);
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  IccResult out;
  out.subjects = n;
  out.raters = k;
  out.ms_rows = ss_rows / static_cast<double>(n - 1);
  out.ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  // Rounding noise on an all-equal-rows matrix must not pass for variance.
  if (out.ms_rows <= 1e-12 * (1.0 + ss_total / nk + grand * grand))
    throw Error(Errc::degenerate_ratings, "no between-subject variance");

  const double kk = static_cast<double>(k);
  out.icc_single = (out.ms_rows - out.ms_error) / (out.ms_rows + (kk - 1.0) * out.ms_error);
  out.icc_average = (out.ms_rows - out.ms_error) / out.ms_rows;
  return out;
}

/// Whitespace word counts; sample standard deviation (n - 1).
inline WordCountStats word_count_stats(std::span<const std::string> texts) {
  if (texts.empty()) throw Error(Errc::empty_input, "no texts");
  std::vector<double> counts;
  for (const auto& t : texts) counts.push_back(static_cast<double>(text::split_whitespace(t).size()));
  WordCountStats s;
  s.n = counts.size();
  for (double c : counts) s.mean += c;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double c : counts) ss += (c - s.mean) * (c - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

/// Ratings CSV: a header row, then one row per subject and one numeric
/// column per rater.
inline std::vector<std::vector<double>> parse_ratings_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::size_t b = 0;
    for (;;) {
      const auto e = line.find(',', b);
      cells.emplace_back(text::trim(std::string_view(line).substr(
          b, (e == std::string::npos ? line.size() : e) - b)));
      if (e == std::string::npos) break;
      b = e + 1;
    }
    auto bad = [&](const std::string& why) {
      return Error(Errc::parse_error, "ratings line " + std::to_string(lineno) + ": " + why);
    };
    if (header) {
      width = cells.size();
      header = false;
      continue;
    }
    if (cells.size() != width) throw bad("expected " + std::to_string(width) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) {
      if (c.empty()) throw bad("missing rating");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw bad("not a number: \"" + c + "\"");
      }
      if (used != c.size() || !std::isfinite(v)) throw bad("not a number: \"" + c + "\"");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (header) throw Error(Errc::parse_error, "ratings file has no header row");
  return rows;
}

}  // namespace hospcourse
