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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hospcourse/metrics.hpp"
#include "oracles.hpp"

namespace hc = hospcourse;

namespace {

hc::Errc kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const hc::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no hospcourse::Error thrown";
  return hc::Errc::parse_error;
}

/// Labels realizing the given confusion counts.
std::pair<std::vector<int>, std::vector<int>> labels(int tp, int fp, int fn, int tn) {
  std::vector<int> p, g;
  auto add = [&](int n, int pv, int gv) {
    for (int i = 0; i < n; ++i) {
      p.push_back(pv);
      g.push_back(gv);
    }
  };
  add(tp, 1, 1);
  add(fp, 1, 0);
  add(fn, 0, 1);
  add(tn, 0, 0);
  return {p, g};
}

}  // namespace

TEST(Rouge, Examples) {
  EXPECT_DOUBLE_EQ(hc::rouge_n_recall("the cat sat", "the cat sat down", 1), 75.0);
  EXPECT_NEAR(hc::rouge_n_recall("the cat sat", "the cat sat down", 2), 66.67, 0.01);
  EXPECT_DOUBLE_EQ(hc::rouge_n_recall("dog ran", "the cat sat", 1), 0.0);
  EXPECT_DOUBLE_EQ(hc::rouge_l_recall("a b c", "a x c x"), 50.0);
  EXPECT_DOUBLE_EQ(hc::rouge_l_recall("", "a x c x"), 0.0);
  const auto same = hc::rouge_recall("The patient improved.", "the patient IMPROVED");
  EXPECT_DOUBLE_EQ(same.r1, 100.0);
  EXPECT_DOUBLE_EQ(same.r2, 100.0);
  EXPECT_DOUBLE_EQ(same.rl, 100.0);
}

TEST(Rouge, ClipsRepeatedNgrams) {
  EXPECT_DOUBLE_EQ(hc::rouge_n_recall("the the the the", "the cat", 1), 50.0);
}

TEST(Rouge, Preconditions) {
  EXPECT_EQ(kind_of([] { hc::rouge_n_recall("a", "one", 2); }), hc::Errc::reference_too_short);
  EXPECT_EQ(kind_of([] { hc::rouge_l_recall("a", " ... "); }), hc::Errc::empty_reference);
}

TEST(RougeProperty, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
  auto gen = [&](std::size_t min) {
    std::vector<std::string> w(min + rng() % (21 - min));
    for (auto& x : w) x = words[rng() % words.size()];
    return w;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = gen(0), r = gen(2);
    const auto cs = hc::text::join(c, " "), rs = hc::text::join(r, " ");
    EXPECT_NEAR(hc::rouge_n_recall(cs, rs, 1), oracle::rouge_n(c, r, 1), 1e-9);
    EXPECT_NEAR(hc::rouge_n_recall(cs, rs, 2), oracle::rouge_n(c, r, 2), 1e-9);
    EXPECT_NEAR(hc::rouge_l_recall(cs, rs),
                100.0 * static_cast<double>(oracle::lcs(c, r)) / static_cast<double>(r.size()),
                1e-9);
    const auto s = hc::rouge_recall(cs, rs);
    for (double v : {s.r1, s.r2, s.rl}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
    }
  }
}

TEST(Classification, KnownRowsFromConfusionCounts) {
  {
    auto [p, g] = labels(18, 6, 23, 90);
    const auto m = hc::classification_report(p, g);
    EXPECT_NEAR(m.precision, 0.7500, 0.00005);
    EXPECT_NEAR(m.recall, 0.4390, 0.00005);
    EXPECT_NEAR(m.f1, 0.5538, 0.0005);
  }
  {
    auto [p, g] = labels(179, 35, 49, 1894);
    const auto m = hc::classification_report(p, g);
    EXPECT_NEAR(m.precision, 0.8364, 0.00005);
    EXPECT_NEAR(m.recall, 0.7851, 0.00005);
    EXPECT_NEAR(m.f1, 0.8100, 0.0005);
  }
}

TEST(Classification, PerfectAndDegenerate) {
  auto [p, g] = labels(3, 0, 0, 2);
  const auto m = hc::classification_report(p, g);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  auto [p0, g0] = labels(0, 0, 0, 4);
  const auto z = hc::classification_report(p0, g0);
  EXPECT_EQ(z.f1, 0.0);
  EXPECT_EQ(z.accuracy, 1.0);
}

TEST(Classification, Preconditions) {
  const std::vector<int> a{1, 0}, b{1}, none, bad{2, 0};
  EXPECT_EQ(kind_of([&] { hc::classification_report(a, b); }), hc::Errc::length_mismatch);
  EXPECT_EQ(kind_of([&] { hc::classification_report(none, none); }), hc::Errc::empty_input);
  EXPECT_EQ(kind_of([&] { hc::classification_report(bad, a); }), hc::Errc::parse_error);
}

TEST(ClassificationProperty, F1BetweenPrecisionAndRecall) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const int tp = static_cast<int>(rng() % 30), fp = static_cast<int>(rng() % 30),
              fn = static_cast<int>(rng() % 30), tn = static_cast<int>(rng() % 30);
    if (tp + fp + fn + tn == 0) continue;
    auto [p, g] = labels(tp, fp, fn, tn);
    const auto m = hc::classification_report(p, g);
    EXPECT_EQ(m.tp + m.fp + m.fn + m.tn, p.size());
    if (m.precision + m.recall > 0) {
      EXPECT_LE(std::min(m.precision, m.recall), m.f1 + 1e-15);
      EXPECT_GE(std::max(m.precision, m.recall), m.f1 - 1e-15);
      EXPECT_NEAR(m.f1, 2.0 * tp / (2.0 * tp + fp + fn), 1e-12);
    }
  }
}

TEST(Icc, AdditiveShiftIsPerfectConsistency) {
  const auto r = hc::icc_consistency({{1, 2}, {2, 3}, {3, 4}});
  EXPECT_NEAR(r.icc_single, 1.0, 1e-9);
  EXPECT_NEAR(r.icc_average, 1.0, 1e-9);
  EXPECT_EQ(r.subjects, 3u);
  EXPECT_EQ(r.raters, 2u);
}

TEST(Icc, Preconditions) {
  EXPECT_EQ(kind_of([] { hc::icc_consistency({{2, 2}, {2, 2}, {2, 2}}); }),
            hc::Errc::degenerate_ratings);
  EXPECT_EQ(kind_of([] { hc::icc_consistency({{1, 2}}); }), hc::Errc::too_few_subjects);
  EXPECT_EQ(kind_of([] { hc::icc_consistency({{1}, {2}}); }), hc::Errc::too_few_subjects);
  EXPECT_EQ(kind_of([] { hc::icc_consistency({{1, 2}, {2}}); }), hc::Errc::length_mismatch);
}

TEST(IccProperty, MatchesAnovaOracle) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> score(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 12, k = 2 + rng() % 4;
    std::vector<std::vector<double>> x(n, std::vector<double>(k));
    for (auto& row : x)
      for (auto& v : row) v = score(rng);
    const auto want = oracle::icc(x);
    try {
      const auto got = hc::icc_consistency(x);
      EXPECT_NEAR(got.icc_single, want.single, 1e-9);
      EXPECT_NEAR(got.icc_average, want.average, 1e-9);
      EXPECT_LE(got.icc_single, 1.0 + 1e-12);
    } catch (const hc::Error& e) {
      EXPECT_EQ(e.kind(), hc::Errc::degenerate_ratings);
    }
  }
}

TEST(WordCounts, Examples) {
  const std::vector<std::string> one{"one two three four five"};
  const auto a = hc::word_count_stats(one);
  EXPECT_EQ(a.mean, 5.0);
  EXPECT_EQ(a.sd, 0.0);
  std::vector<std::string> two{std::string(), std::string()};
  for (int i = 0; i < 400; ++i) two[0] += "w ";
  for (int i = 0; i < 440; ++i) two[1] += "w ";
  const auto b = hc::word_count_stats(two);
  EXPECT_EQ(b.mean, 420.0);
  EXPECT_NEAR(b.sd, 28.28, 0.01);
  EXPECT_EQ(kind_of([] { hc::word_count_stats({}); }), hc::Errc::empty_input);
}

TEST(WordCountsProperty, DuplicatingListKeepsMean) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts(1 + rng() % 6);
    for (auto& t : texts)
      for (std::size_t i = 0, n = rng() % 10; i < n; ++i) t += "x ";
    auto doubled = texts;
    doubled.insert(doubled.end(), texts.begin(), texts.end());
    const auto a = hc::word_count_stats(texts), b = hc::word_count_stats(doubled);
    EXPECT_NEAR(a.mean, b.mean, 1e-12);
    // Sample sd shrinks by sqrt((n-1)/(2n-1)) * sqrt(2) when duplicated.
    const double n = static_cast<double>(texts.size());
    if (texts.size() > 1)
      EXPECT_NEAR(b.sd, a.sd * std::sqrt(2.0 * (n - 1) / (2 * n - 1)), 1e-9);
    else
      EXPECT_EQ(b.sd, 0.0);
  }
}

TEST(RatingsCsv, Parses) {
  std::istringstream in("r1,r2\n1,2\n\n2, 3\r\n3,4\n");
  const auto rows = hc::parse_ratings_csv(in);
  EXPECT_EQ(rows, (std::vector<std::vector<double>>{{1, 2}, {2, 3}, {3, 4}}));
  std::istringstream ragged("a,b\n1\n");
  EXPECT_EQ(kind_of([&] { hc::parse_ratings_csv(ragged); }), hc::Errc::parse_error);
  std::istringstream text("a,b\n1,x\n");
  EXPECT_EQ(kind_of([&] { hc::parse_ratings_csv(text); }), hc::Errc::parse_error);
  std::istringstream empty("");
  EXPECT_EQ(kind_of([&] { hc::parse_ratings_csv(empty); }), hc::Errc::parse_error);
}
