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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hospcourse/error.hpp"
#include "hospcourse/text.hpp"

namespace hospcourse {

using TokenId = std::uint32_t;

inline constexpr std::string_view kEndToken = "<end>";
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// How a scorer's tokens map onto words.
enum class WordBoundary {
  // Every token is a complete word.
  whole_token,
  // A token starting with a space, U+0120 or U+2581 opens a new word; other
  // tokens continue the current one.
  leading_marker,
};

/// Natural-log probabilities indexed by token id. Ids absent from a sparse
/// source carry -inf.
class LogProbDistribution {
 public:
  LogProbDistribution() = default;
  explicit LogProbDistribution(std::vector<double> lp) : lp_(std::move(lp)) {}

  std::size_t size() const noexcept { return lp_.size(); }
  double operator[](TokenId id) const {
    return id < lp_.size() ? lp_[id] : kNegInf;
  }
  std::span<const double> values() const noexcept { return lp_; }

  double mass() const {
    double s = 0.0;
    for (double v : lp_) s += std::exp(v);
    return s;
  }

  bool is_valid(double tol = 1e-9) const {
    if (std::abs(mass() - 1.0) > tol) return false;
    return std::all_of(lp_.begin(), lp_.end(),
                       [](double v) { return !std::isnan(v) && v <= 1e-12; });
  }

 private:
  std::vector<double> lp_;
};

/// Next-token model queried by the decoder: P(token | prefix, source).
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::string token(TokenId id) const = 0;
  virtual std::optional<TokenId> find(std::string_view tok) const = 0;
  virtual TokenId end_token() const = 0;
  virtual WordBoundary boundary() const { return WordBoundary::whole_token; }

  /// Whether score() may be called from several threads at once.
  virtual bool concurrent() const { return true; }

  virtual LogProbDistribution score(std::string_view source,
                                    std::span<const TokenId> prefix) const = 0;
};

/// Looks up string prefix tokens and scores the next position.
inline LogProbDistribution score_next(const TokenScorer& scorer,
                                      std::string_view source,
                                      std::span<const std::string> prefix) {
  std::vector<TokenId> ids;
  ids.reserve(prefix.size());
  for (const auto& t : prefix) {
    auto id = scorer.find(t);
    if (!id) throw Error(Errc::unknown_token, "token not in vocabulary: " + t);
    ids.push_back(*id);
  }
  return scorer.score(source, ids);
}

namespace detail {

inline constexpr std::string_view kGpt2Space = "\xC4\xA0";
inline constexpr std::string_view kSentencePieceSpace = "\xE2\x96\x81";

/// Length of the word-start marker at the front of `tok`, 0 if none.
inline std::size_t marker_length(std::string_view tok) {
  if (!tok.empty() && tok.front() == ' ') return 1;
  if (tok.starts_with(kGpt2Space)) return kGpt2Space.size();
  if (tok.starts_with(kSentencePieceSpace)) return kSentencePieceSpace.size();
  return 0;
}

}  // namespace detail

/// Surface text of a token as it contributes to the output stream. For
/// leading-marker vocabularies the marker becomes a space.
inline std::string surface(WordBoundary b, std::string_view tok) {
  if (b == WordBoundary::whole_token) return std::string(tok) + ' ';
  const auto m = detail::marker_length(tok);
  if (m == 0) return std::string(tok);
  return " " + std::string(tok.substr(m));
}

/// Output text for a token sequence; the end token contributes nothing.
inline std::string detokenize(const TokenScorer& scorer,
                              std::span<const TokenId> seq) {
  std::string out;
  const auto b = scorer.boundary();
  for (auto id : seq)
    if (id != scorer.end_token()) out += surface(b, scorer.token(id));
  return std::string(text::trim(out));
}

/// Keeps the last `budget` whitespace tokens of `source`.
inline std::string truncate_source(std::string_view source,
                                   std::size_t budget) {
  const auto toks = text::split_whitespace(source);
  if (toks.size() <= budget) return std::string(source);
  std::string out;
  for (std::size_t i = toks.size() - budget; i < toks.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += toks[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Add-alpha smoothed word n-gram model. Ignores the source at query time.
class NgramScorer final : public TokenScorer {
 public:
  std::size_t vocab_size() const override { return tokens_.size(); }
  std::string token(TokenId id) const override { return tokens_.at(id); }
  std::optional<TokenId> find(std::string_view tok) const override {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  TokenId end_token() const override { return end_; }

  LogProbDistribution score(std::string_view,
                            std::span<const TokenId> prefix) const override {
    for (auto id : prefix)
      if (id >= tokens_.size())
        throw Error(Errc::unknown_token,
                    "token id out of range: " + std::to_string(id));
    const auto ctx = context_of(prefix);
    const double v = static_cast<double>(tokens_.size());
    std::vector<double> lp(tokens_.size());
    auto it = counts_.find(ctx);
    if (it == counts_.end()) {
      std::fill(lp.begin(), lp.end(), -std::log(v));
      return LogProbDistribution(std::move(lp));
    }
    const auto& row = it->second;
    const double denom = static_cast<double>(row.total) + alpha_ * v;
    for (TokenId t = 0; t < lp.size(); ++t) {
      auto c = row.next.find(t);
      const double n = c == row.next.end() ? 0.0 : static_cast<double>(c->second);
      lp[t] = std::log((n + alpha_) / denom);
    }
    return LogProbDistribution(std::move(lp));
  }

  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<std::string>& vocabulary() const noexcept { return tokens_; }

  friend NgramScorer train_ngram_scorer(std::span<const std::string> corpus,
                                        int order, double alpha);

 private:
  static constexpr TokenId kBos = std::numeric_limits<TokenId>::max();

  struct Row {
    std::map<TokenId, std::uint64_t> next;
    std::uint64_t total = 0;
  };

  std::vector<TokenId> context_of(std::span<const TokenId> prefix) const {
    const std::size_t n = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> ctx(n, kBos);
    const std::size_t take = std::min(n, prefix.size());
    std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
              ctx.end() - static_cast<std::ptrdiff_t>(take));
    return ctx;
  }

  int order_ = 1;
  double alpha_ = 1.0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId end_ = 0;
  std::map<std::vector<TokenId>, Row> counts_;
};

/// Vocabulary is the sorted set of whitespace word types followed by <end>.
inline NgramScorer train_ngram_scorer(std::span<const std::string> corpus,
                                      int order, double alpha) {
  if (corpus.empty()) throw Error(Errc::empty_corpus, "training corpus is empty");
  if (order < 1)
    throw Error(Errc::invalid_order, "n-gram order must be >= 1, got " +
                                         std::to_string(order));
  if (!(alpha > 0.0))
    throw Error(Errc::invalid_config, "smoothing constant must be positive");

  NgramScorer s;
  s.order_ = order;
  s.alpha_ = alpha;

  std::vector<std::vector<std::string_view>> docs;
  std::vector<std::string> types;
  for (const auto& t : corpus) {
    docs.push_back(text::split_whitespace(t));
    for (auto w : docs.back()) types.emplace_back(w);
  }
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  std::erase(types, std::string(kEndToken));
  types.emplace_back(kEndToken);
  s.tokens_ = std::move(types);
  for (TokenId i = 0; i < s.tokens_.size(); ++i) s.index_.emplace(s.tokens_[i], i);
  s.end_ = s.index_.at(std::string(kEndToken));

  for (const auto& doc : docs) {
    std::vector<TokenId> seq;
    for (auto w : doc) seq.push_back(s.index_.at(std::string(w)));
    seq.push_back(s.end_);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      auto ctx = s.context_of(std::span(seq).first(i));
      auto& row = s.counts_[ctx];
      ++row.next[seq[i]];
      ++row.total;
    }
  }
  return s;
}

}  // namespace hospcourse
