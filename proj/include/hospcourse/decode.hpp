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

// Beam search over a TokenScorer, with an optional banned-term constraint.
//
// Each step expands every live hypothesis by every token with finite
// log-probability, ranks the expansions by cumulative log score (ties go to
// the lexicographically smaller token-id sequence) and keeps the best
// `beam_width` that survive the constraint. An expansion that completes a
// banned term is scored -inf and dropped, so the next best alternative takes
// its slot; the parent's other expansions are unaffected.
//
// Words are completed when the following token opens a new word, when the
// end token arrives or when max_len is reached. Finished hypotheses move to a
// pool; decoding stops when no live hypothesis remains or none can beat the
// pool any more.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hospcourse/error.hpp"
#include "hospcourse/scorer.hpp"
#include "hospcourse/text.hpp"
#include "hospcourse/vocab.hpp"

namespace hospcourse {

struct BeamConfig {
  std::size_t beam_width = 4;
  // Counts every emitted token, including the end token.
  std::size_t max_len = 64;
  // Finished hypotheses are ranked by score / len^length_penalty; 0 disables.
  double length_penalty = 0.0;
  // Threads used to score live beams; only honoured for concurrent scorers.
  std::size_t workers = 1;

  void validate() const {
    if (beam_width < 1) throw Error(Errc::invalid_config, "beam_width must be >= 1");
    if (max_len < 1) throw Error(Errc::invalid_config, "max_len must be >= 1");
  }
};

struct Hypothesis {
  std::vector<TokenId> tokens;
  double score = 0.0;
  // The end token was emitted; max_len truncation leaves this false.
  bool finished = false;
  ConstraintState match;
  // Surface text of the word still being built.
  std::string partial;

  double adjusted_score(double length_penalty) const {
    if (length_penalty == 0.0 || tokens.empty()) return score;
    return score / std::pow(static_cast<double>(tokens.size()), length_penalty);
  }
};

namespace detail {

/// Feeds the completed words of `h.partial` to the constraint. When `flush`
/// is set the trailing word counts as completed too.
inline bool complete_words(Hypothesis& h, const BannedSet& banned, bool flush) {
  const auto pieces = text::split_whitespace(h.partial);
  const bool open_tail =
      !flush && !h.partial.empty() && !text::is_space(h.partial.back());
  const std::size_t done = open_tail ? pieces.size() - 1 : pieces.size();
  for (std::size_t i = 0; i < done; ++i) {
    const auto w = text::normalize_word(pieces[i]);
    if (!w.empty() && !banned.advance(h.match, w)) return false;
  }
  h.partial = open_tail ? std::string(pieces.back()) : std::string();
  return true;
}

/// Parent extended by `tok`, or nullopt when the expansion breaks the
/// constraint.
inline std::optional<Hypothesis> extend(const TokenScorer& scorer,
                                        const BannedSet& banned,
                                        const BeamConfig& cfg,
                                        const Hypothesis& parent, TokenId tok,
                                        double lp) {
  Hypothesis h = parent;
  h.tokens.push_back(tok);
  h.score += lp;
  const bool is_end = tok == scorer.end_token();
  h.finished = is_end;
  if (banned.empty()) return h;

  const bool last = is_end || h.tokens.size() >= cfg.max_len;
  if (!is_end) h.partial += surface(scorer.boundary(), scorer.token(tok));
  if (!complete_words(h, banned, last)) return std::nullopt;
  if (last && !BannedSet::may_finish(h.match)) return std::nullopt;
  return h;
}

inline bool better(const Hypothesis& a, const Hypothesis& b, double lp) {
  const double sa = a.adjusted_score(lp), sb = b.adjusted_score(lp);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

inline std::vector<LogProbDistribution> score_all(
    const TokenScorer& scorer, std::string_view source,
    const std::vector<Hypothesis>& live, const BeamConfig& cfg) {
  std::vector<LogProbDistribution> out(live.size());
  const std::size_t workers = std::min(cfg.workers, live.size());
  if (workers <= 1 || !scorer.concurrent()) {
    for (std::size_t i = 0; i < live.size(); ++i)
      out[i] = scorer.score(source, live[i].tokens);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < live.size(); i += workers)
        out[i] = scorer.score(source, live[i].tokens);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace detail

inline Hypothesis constrained_beam_search(const TokenScorer& scorer,
                                          std::string_view source,
                                          const BannedSet& banned,
                                          const BeamConfig& cfg) {
  cfg.validate();
  if (scorer.vocab_size() == 0)
    throw Error(Errc::empty_vocabulary, "scorer has an empty vocabulary");

  struct Candidate {
    std::size_t beam;
    TokenId token;
    double score;
  };

  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> pool;
  while (!live.empty()) {
    const auto dists = detail::score_all(scorer, source, live, cfg);

    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const auto lp = dists[b].values();
      for (TokenId t = 0; t < lp.size(); ++t)
        if (std::isfinite(lp[t])) cands.push_back({b, t, live[b].score + lp[t]});
    }
    std::sort(cands.begin(), cands.end(),
              [&](const Candidate& x, const Candidate& y) {
                if (x.score != y.score) return x.score > y.score;
                if (x.beam != y.beam && live[x.beam].tokens != live[y.beam].tokens)
                  return live[x.beam].tokens < live[y.beam].tokens;
                return x.token < y.token;
              });

    std::vector<Hypothesis> next;
    std::size_t kept = 0;
    for (const auto& c : cands) {
      if (kept == cfg.beam_width) break;
      auto h = detail::extend(scorer, banned, cfg, live[c.beam], c.token,
                              dists[c.beam][c.token]);
      if (!h) continue;
      ++kept;
      if (h->finished || h->tokens.size() >= cfg.max_len)
        pool.push_back(std::move(*h));
      else
        next.push_back(std::move(*h));
    }
    live = std::move(next);

    // Scores only decrease, so without a length penalty nothing live can
    // overtake the best finished hypothesis.
    if (cfg.length_penalty == 0.0 && !pool.empty() && !live.empty()) {
      const double best = std::max_element(pool.begin(), pool.end(),
                                           [](const auto& a, const auto& b) {
                                             return a.score < b.score;
                                           })->score;
      const bool beatable = std::any_of(
          live.begin(), live.end(), [&](const auto& h) { return h.score >= best; });
      if (!beatable) live.clear();
    }
  }

  if (pool.empty())
    throw Error(Errc::all_beams_pruned,
                "every candidate completed a banned term; no output survives");
  return *std::min_element(pool.begin(), pool.end(),
                           [&](const Hypothesis& a, const Hypothesis& b) {
                             return detail::better(a, b, cfg.length_penalty);
                           });
}

inline Hypothesis beam_search(const TokenScorer& scorer, std::string_view source,
                              const BeamConfig& cfg) {
  static const BannedSet kNone;
  return constrained_beam_search(scorer, source, kNone, cfg);
}

}  // namespace hospcourse
