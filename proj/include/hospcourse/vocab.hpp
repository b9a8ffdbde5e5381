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

// Medical vocabulary, source-document term matching, synonym expansion and
// the banned-term set that drives constrained decoding.
//
// Terms are sequences of normalized words. A banned set keeps a word trie
// over its terms so a decoder can detect banned phrases one completed word at
// a time (see BannedSet::advance).

#include <algorithm>
#include <compare>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hospcourse/error.hpp"
#include "hospcourse/text.hpp"

namespace hospcourse {

class Term {
 public:
  Term() = default;

  /// Normalizes raw text into a term. Throws MalformedVocabulary when
  /// nothing survives normalization.
  static Term parse(std::string_view raw) {
    auto words = text::normalize_words(raw);
    if (words.empty())
      throw Error(Errc::malformed_vocabulary,
                  "term is empty after normalization: \"" + std::string(raw) +
                      "\"");
    Term t;
    t.words_ = std::move(words);
    return t;
  }

  /// Builds a term from words that are already normalized.
  static Term from_words(std::vector<std::string> words) {
    if (words.empty())
      throw Error(Errc::malformed_vocabulary, "term has no words");
    for (const auto& w : words) {
      if (w.empty() || text::normalize_word(w) != w ||
          std::any_of(w.begin(), w.end(), text::is_space))
        throw Error(Errc::malformed_vocabulary,
                    "term word is not normalized: \"" + w + "\"");
    }
    Term t;
    t.words_ = std::move(words);
    return t;
  }

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  std::string str() const { return text::join(words_, " "); }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;

 private:
  std::vector<std::string> words_;
};

using TermSet = std::set<Term>;

/// Word-keyed prefix tree over term word sequences. Each node records which
/// kinds of terms end there and whether a permitted term ends strictly below.
class TermTrie {
 public:
  static constexpr std::uint8_t kBanned = 1;
  static constexpr std::uint8_t kPermitted = 2;

  struct Node {
    std::map<std::string, int, std::less<>> next;
    std::uint8_t ends = 0;
    bool permitted_below = false;
    int term = -1;
  };

  TermTrie() : nodes_(1) {}

  void insert(const Term& term, std::uint8_t kind) {
    std::vector<int> path{0};
    int cur = 0;
    for (const auto& w : term.words()) {
      auto it = nodes_[cur].next.find(w);
      if (it == nodes_[cur].next.end()) {
        const int id = static_cast<int>(nodes_.size());
        nodes_[cur].next.emplace(w, id);
        nodes_.emplace_back();
        cur = id;
      } else {
        cur = it->second;
      }
      path.push_back(cur);
    }
    nodes_[cur].ends |= kind;
    if (nodes_[cur].term < 0) {
      nodes_[cur].term = static_cast<int>(terms_.size());
      terms_.push_back(term);
    }
    if (kind & kPermitted) {
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        nodes_[path[i]].permitted_below = true;
    }
  }

  int root() const noexcept { return 0; }

  /// Child of `node` along `word`, or -1.
  int step(int node, std::string_view word) const {
    const auto& next = nodes_[node].next;
    auto it = next.find(word);
    return it == next.end() ? -1 : it->second;
  }

  const Node& node(int id) const { return nodes_[id]; }
  const Term& term_at(int node) const { return terms_[nodes_[node].term]; }
  bool empty() const noexcept { return nodes_[0].next.empty(); }

 private:
  std::vector<Node> nodes_;
  std::vector<Term> terms_;
};

class MedicalVocabulary {
 public:
  MedicalVocabulary() = default;

  /// Every group member becomes a term. Groups that share a member are
  /// merged so the stored groups are disjoint; duplicate and single-member
  /// groups collapse away.
  MedicalVocabulary(TermSet terms, const std::vector<TermSet>& groups)
      : terms_(std::move(terms)) {
    for (const auto& g : groups) terms_.insert(g.begin(), g.end());

    std::vector<TermSet> merged;
    for (const auto& g : groups) {
      TermSet acc = g;
      for (auto it = merged.begin(); it != merged.end();) {
        const bool overlaps = std::any_of(
            it->begin(), it->end(), [&](const Term& t) { return acc.count(t); });
        if (overlaps) {
          acc.insert(it->begin(), it->end());
          it = merged.erase(it);
        } else {
          ++it;
        }
      }
      merged.push_back(std::move(acc));
    }
    std::erase_if(merged, [](const TermSet& g) { return g.size() < 2; });
    std::sort(merged.begin(), merged.end());
    groups_ = std::move(merged);

    for (std::size_t i = 0; i < groups_.size(); ++i)
      for (const auto& t : groups_[i]) group_index_.emplace(t, i);
    for (const auto& t : terms_) trie_.insert(t, TermTrie::kPermitted);
  }

  const TermSet& terms() const noexcept { return terms_; }
  const std::vector<TermSet>& synonym_groups() const noexcept {
    return groups_;
  }
  bool contains(const Term& t) const { return terms_.count(t) > 0; }

  /// The synonym group containing `t`, or nullptr.
  const TermSet* group_of(const Term& t) const {
    auto it = group_index_.find(t);
    return it == group_index_.end() ? nullptr : &groups_[it->second];
  }

  const TermTrie& trie() const noexcept { return trie_; }

 private:
  TermSet terms_;
  std::vector<TermSet> groups_;
  std::map<Term, std::size_t> group_index_;
  TermTrie trie_;
};

struct PermittedTerms {
  TermSet terms;

  bool contains(const Term& t) const { return terms.count(t) > 0; }
  bool operator==(const PermittedTerms&) const = default;
};

/// Incremental match position of one decoded word stream against a
/// BannedSet. Cheap to copy; one per hypothesis.
struct ConstraintState {
  struct Partial {
    int node;
    std::size_t start;
  };
  struct Span {
    std::size_t begin, end;
  };
  std::vector<Partial> active;
  std::vector<Span> pending;
  std::size_t words = 0;
};

/// Terms that must not appear in generated output, plus the permitted terms
/// that shield them: an occurrence of a banned term lying inside an
/// occurrence of a longer permitted term is not a violation.
class BannedSet {
 public:
  BannedSet() = default;

  BannedSet(TermSet banned, const TermSet& shields) : terms_(std::move(banned)) {
    for (const auto& t : terms_) trie_.insert(t, TermTrie::kBanned);
    // Only shields that can cover a banned occurrence matter.
    for (const auto& s : shields) {
      if (terms_.count(s)) continue;
      const bool covers = std::any_of(
          terms_.begin(), terms_.end(), [&](const Term& b) {
            return b.size() < s.size() &&
                   text::contains_phrase(s.words(), b.words());
          });
      if (covers) trie_.insert(s, TermTrie::kPermitted);
    }
  }

  const TermSet& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  bool contains(const Term& t) const { return terms_.count(t) > 0; }
  const TermTrie& trie() const noexcept { return trie_; }

  /// Feeds one completed, normalized word. Returns false once the stream
  /// contains a banned occurrence that no permitted term can still cover.
  bool advance(ConstraintState& st, std::string_view word) const {
    const std::size_t pos = st.words++;
    if (trie_.empty()) return true;

    std::vector<ConstraintState::Partial> next;
    std::vector<ConstraintState::Span> shields;
    auto visit = [&](int from, std::size_t start) {
      const int n = trie_.step(from, word);
      if (n < 0) return;
      const auto& node = trie_.node(n);
      if (node.ends & TermTrie::kBanned) st.pending.push_back({start, pos + 1});
      if (node.ends & TermTrie::kPermitted) shields.push_back({start, pos + 1});
      if (!node.next.empty()) next.push_back({n, start});
    };
    for (const auto& p : st.active) visit(p.node, p.start);
    visit(trie_.root(), pos);
    st.active = std::move(next);

    std::erase_if(st.pending, [&](const ConstraintState::Span& b) {
      return std::any_of(shields.begin(), shields.end(),
                         [&](const ConstraintState::Span& s) {
                           return s.begin <= b.begin && s.end >= b.end;
                         });
    });
    for (const auto& b : st.pending) {
      const bool coverable = std::any_of(
          st.active.begin(), st.active.end(),
          [&](const ConstraintState::Partial& p) {
            return p.start <= b.begin && trie_.node(p.node).permitted_below;
          });
      if (!coverable) return false;
    }
    return true;
  }

  /// True when the stream may end here without a violation.
  static bool may_finish(const ConstraintState& st) noexcept {
    return st.pending.empty();
  }

  /// Whole-text check using the same streaming rules.
  bool allows(std::string_view text_in) const {
    ConstraintState st;
    for (const auto& w : text::normalize_words(text_in))
      if (!advance(st, w)) return false;
    return may_finish(st);
  }

 private:
  TermSet terms_;
  TermTrie trie_;
};

// ---------------------------------------------------------------------------
// Persistence

/// Reads the JSON-lines vocabulary format: each non-blank line is either
/// {"term": "..."} or {"synonyms": ["...", ...]}.
inline MedicalVocabulary parse_vocabulary(std::istream& in) {
  TermSet terms;
  std::vector<TermSet> groups;
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    return Error(Errc::malformed_vocabulary,
                 "line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw bad(e.what());
    }
    if (!rec.is_object()) throw bad("record is not an object");
    auto parse_term = [&](const std::string& raw) {
      try {
        return Term::parse(raw);
      } catch (const Error& e) {
        throw bad(e.what());
      }
    };
    if (rec.contains("term") && rec["term"].is_string()) {
      terms.insert(parse_term(rec["term"].get<std::string>()));
    } else if (rec.contains("synonyms") && rec["synonyms"].is_array()) {
      TermSet g;
      for (const auto& m : rec["synonyms"]) {
        if (!m.is_string()) throw bad("synonym member is not a string");
        g.insert(parse_term(m.get<std::string>()));
      }
      if (g.empty()) throw bad("empty synonym group");
      groups.push_back(std::move(g));
    } else {
      throw bad("expected \"term\" or \"synonyms\"");
    }
  }
  return MedicalVocabulary(std::move(terms), groups);
}

inline MedicalVocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open vocabulary: " + path);
  return parse_vocabulary(in);
}

/// Canonical serialization: ungrouped terms first, then groups, both sorted.
inline void write_vocabulary(std::ostream& out, const MedicalVocabulary& v) {
  for (const auto& t : v.terms()) {
    if (v.group_of(t)) continue;
    out << nlohmann::json{{"term", t.str()}}.dump() << '\n';
  }
  for (const auto& g : v.synonym_groups()) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& t : g) members.push_back(t.str());
    out << nlohmann::json{{"synonyms", members}}.dump() << '\n';
  }
}

/// Raw term list: one term per non-blank line.
inline TermSet parse_term_list(std::istream& in) {
  TermSet out;
  std::string line;
  while (std::getline(in, line))
    if (!text::trim(line).empty()) out.insert(Term::parse(line));
  return out;
}

/// Raw synonym list: one group per non-blank line, members separated by '|'.
inline std::vector<TermSet> parse_synonym_list(std::istream& in) {
  std::vector<TermSet> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    TermSet g;
    std::size_t b = 0;
    while (b <= line.size()) {
      const auto e = std::min(line.find('|', b), line.size());
      g.insert(Term::parse(std::string_view(line).substr(b, e - b)));
      b = e + 1;
    }
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constraint construction

/// Vocabulary terms occurring in the normalized document as contiguous word
/// sequences.
inline PermittedTerms match_terms(std::string_view doc,
                                  const MedicalVocabulary& vocab) {
  PermittedTerms out;
  const auto words = text::normalize_words(doc);
  const auto& trie = vocab.trie();
  for (std::size_t i = 0; i < words.size(); ++i) {
    int node = trie.root();
    for (std::size_t j = i; j < words.size(); ++j) {
      node = trie.step(node, words[j]);
      if (node < 0) break;
      if (trie.node(node).term >= 0) out.terms.insert(trie.term_at(node));
    }
  }
  return out;
}

/// Adds every term that shares a synonym group with a permitted term.
inline PermittedTerms expand_synonyms(const PermittedTerms& permitted,
                                      const MedicalVocabulary& vocab) {
  PermittedTerms out = permitted;
  for (const auto& t : permitted.terms)
    if (const auto* g = vocab.group_of(t)) out.terms.insert(g->begin(), g->end());
  return out;
}

inline BannedSet build_banned_set(const MedicalVocabulary& vocab,
                                  const PermittedTerms& permitted) {
  TermSet banned;
  std::set_difference(vocab.terms().begin(), vocab.terms().end(),
                      permitted.terms.begin(), permitted.terms.end(),
                      std::inserter(banned, banned.end()));
  return BannedSet(std::move(banned), permitted.terms);
}

/// match, expand, subtract: the banned set for one source document.
inline BannedSet banned_for_source(std::string_view source,
                                   const MedicalVocabulary& vocab) {
  return build_banned_set(vocab, expand_synonyms(match_terms(source, vocab), vocab));
}

}  // namespace hospcourse
