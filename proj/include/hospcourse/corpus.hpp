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

// Admission records and the day-to-day segmentation of their notes:
//   - admission and ED provider notes feed the HPI summary,
//   - every other note is bucketed by local calendar day,
//   - sentences from notes written in the 72 hours up to discharge are
//     follow-up candidates.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hospcourse/error.hpp"
#include "hospcourse/text.hpp"
#include "hospcourse/timestamp.hpp"

namespace hospcourse {

enum class NoteType {
  admission,
  ed_provider,
  progress,
  consult,
  operative,
  pathology,
  radiology,
};

inline constexpr std::array<std::pair<NoteType, std::string_view>, 7> kNoteTypeNames{{
    {NoteType::admission, "admission"},
    {NoteType::ed_provider, "ed_provider"},
    {NoteType::progress, "progress"},
    {NoteType::consult, "consult"},
    {NoteType::operative, "operative"},
    {NoteType::pathology, "pathology"},
    {NoteType::radiology, "radiology"},
}};

inline std::string_view to_string(NoteType t) {
  for (const auto& [k, v] : kNoteTypeNames)
    if (k == t) return v;
  return "unknown";
}

inline std::optional<NoteType> parse_note_type(std::string_view s) {
  for (const auto& [k, v] : kNoteTypeNames)
    if (v == s) return k;
  return std::nullopt;
}

inline bool feeds_hpi(NoteType t) {
  return t == NoteType::admission || t == NoteType::ed_provider;
}

struct ClinicalNote {
  NoteType type = NoteType::progress;
  Timestamp timestamp;
  std::string text;
};

struct AdmissionRecord {
  std::string admission_id;
  Timestamp admit_date;
  Timestamp discharge_date;
  std::vector<ClinicalNote> notes;
  std::string discharge_summary_text;

  /// Throws MalformedCorpus when a record invariant does not hold.
  void validate() const {
    auto bad = [&](const std::string& why) {
      return Error(Errc::malformed_corpus, "admission " + admission_id + ": " + why);
    };
    if (admission_id.empty()) throw Error(Errc::malformed_corpus, "empty admission_id");
    if (discharge_date < admit_date) throw bad("discharge precedes admission");
    if (text::trim(discharge_summary_text).empty()) throw bad("no discharge summary");
    if (std::none_of(notes.begin(), notes.end(),
                     [](const auto& n) { return n.type == NoteType::admission; }))
      throw bad("no admission note");
    const std::int64_t day = 24 * kSecondsPerHour;
    for (const auto& n : notes) {
      if (n.timestamp.utc_seconds < admit_date.utc_seconds - day ||
          n.timestamp.utc_seconds > discharge_date.utc_seconds + day)
        throw bad("note timestamp outside the stay");
    }
  }
};

/// Parses one corpus line. Throws MalformedCorpus.
inline AdmissionRecord parse_record(const nlohmann::json& j) {
  auto str = [&](const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
      throw Error(Errc::malformed_corpus, std::string("missing string field \"") + key + "\"");
    return obj[key].get<std::string>();
  };
  auto when = [&](const nlohmann::json& obj, const char* key) {
    try {
      return parse_timestamp(str(obj, key));
    } catch (const Error& e) {
      if (e.kind() == Errc::malformed_corpus) throw;
      throw Error(Errc::malformed_corpus, e.what());
    }
  };

  AdmissionRecord r;
  r.admission_id = str(j, "admission_id");
  r.admit_date = when(j, "admit_date");
  r.discharge_date = when(j, "discharge_date");
  r.discharge_summary_text = str(j, "discharge_summary_text");
  if (!j.contains("notes") || !j["notes"].is_array())
    throw Error(Errc::malformed_corpus, "missing \"notes\" array");
  for (const auto& n : j["notes"]) {
    ClinicalNote note;
    const auto type = str(n, "type");
    const auto parsed = parse_note_type(type);
    if (!parsed) throw Error(Errc::malformed_corpus, "unknown note type \"" + type + "\"");
    note.type = *parsed;
    note.timestamp = when(n, "timestamp");
    note.text = str(n, "text");
    r.notes.push_back(std::move(note));
  }
  r.validate();
  return r;
}

inline std::vector<AdmissionRecord> parse_corpus(std::istream& in) {
  std::vector<AdmissionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse_record(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::malformed_corpus, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::malformed_corpus, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AdmissionRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open corpus: " + path);
  return parse_corpus(in);
}

// ---------------------------------------------------------------------------
// Hospital-course extraction

/// Header phrases are matched case-insensitively at the start of a line, with
/// any run of whitespace between words.
struct SectionLexicon {
  std::vector<std::string> course_headers{
      "brief hospital course",
      "summary of hospital course",
      "hospital course by problem",
      "hospital course by system",
      "hospital course",
      "course in hospital",
      "clinical course",
  };
  std::vector<std::string> section_headers{
      "discharge medications",  "discharge medication",  "medications on discharge",
      "discharge diagnoses",    "discharge diagnosis",   "discharge condition",
      "condition at discharge", "discharge disposition", "disposition",
      "discharge instructions", "follow-up",             "follow up",
      "followup instructions",  "followup",              "pertinent results",
      "procedures",             "major surgical or invasive procedure",
      "admission medications",  "medications on admission",
      "physical exam",          "discharge exam",        "history of present illness",
      "past medical history",   "allergies",             "social history",
      "family history",         "pending results",       "code status",
      "diet",                   "activity",
  };
};

namespace detail {

struct Line {
  std::size_t begin, end;  // [begin, end) excludes the newline
};

inline std::vector<Line> lines_of(std::string_view s) {
  std::vector<Line> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    auto e = s.find('\n', b);
    if (e == std::string_view::npos) e = s.size();
    out.push_back({b, e});
    if (e == s.size()) break;
    b = e + 1;
  }
  return out;
}

/// If `line` starts with `phrase` (after optional indentation or markup),
/// returns the offset just past the phrase.
inline std::optional<std::size_t> match_header_phrase(std::string_view line,
                                                      std::string_view phrase) {
  std::size_t i = 0;
  while (i < line.size() && (text::is_space(line[i]) || line[i] == '#' || line[i] == '*'))
    ++i;
  const auto words = text::split_whitespace(phrase);
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) {
      if (i >= line.size() || !text::is_space(line[i])) return std::nullopt;
      while (i < line.size() && text::is_space(line[i])) ++i;
    }
    for (char c : words[w]) {
      if (i >= line.size() || text::to_lower(line[i]) != text::to_lower(c))
        return std::nullopt;
      ++i;
    }
  }
  // The phrase must end on a word boundary.
  if (i < line.size() && !text::is_space(line[i]) && line[i] != ':' && line[i] != '*')
    return std::nullopt;
  return i;
}

/// Offset where section content starts when `line` is a header for one of
/// `phrases`: the header must stand alone or be followed by a colon.
inline std::optional<std::size_t> header_content_start(
    std::string_view line, std::span<const std::string> phrases) {
  for (const auto& p : phrases) {
    auto end = match_header_phrase(line, p);
    if (!end) continue;
    std::size_t i = *end;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '*')) ++i;
    if (i < line.size() && line[i] == ':') return i + 1;
    if (text::trim(line.substr(i)).empty()) return line.size();
  }
  return std::nullopt;
}

/// An all-capitals line ending in a colon, e.g. "NEURO EXAM:".
inline bool is_caps_header(std::string_view line) {
  const auto t = text::trim(line);
  if (t.size() < 4 || t.back() != ':') return false;
  std::size_t letters = 0;
  for (char c : t.substr(0, t.size() - 1)) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') ++letters;
    else if (c != ' ' && c != '/' && c != '&' && c != '-') return false;
  }
  return letters >= 3;
}

}  // namespace detail

/// The text between a hospital-course header and the next section header
/// (or the end of the document), trimmed. Always a substring of the input.
inline std::string extract_hospital_course(std::string_view doc,
                                           const SectionLexicon& lex = {}) {
  const auto lines = detail::lines_of(doc);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = doc.substr(lines[li].begin, lines[li].end - lines[li].begin);
    const auto start = detail::header_content_start(line, lex.course_headers);
    if (!start) continue;

    const std::size_t begin = lines[li].begin + *start;
    std::size_t end = doc.size();
    for (std::size_t lj = li + 1; lj < lines.size(); ++lj) {
      const auto next = doc.substr(lines[lj].begin, lines[lj].end - lines[lj].begin);
      if (detail::header_content_start(next, lex.section_headers) ||
          detail::header_content_start(next, lex.course_headers) ||
          detail::is_caps_header(next)) {
        end = lines[lj].begin;
        break;
      }
    }
    auto span = text::trim(doc.substr(begin, end - begin));
    return std::string(span);
  }
  throw Error(Errc::section_not_found, "no hospital course header found");
}

// ---------------------------------------------------------------------------
// Sentence splitting

namespace detail {

inline bool is_abbreviation(std::string_view word) {
  static const std::set<std::string, std::less<>> kAbbrev{
      "dr", "mr", "mrs", "ms", "st", "vs", "prof", "sr", "jr", "approx",
      "no", "fig", "inc", "dept", "hx", "sx", "dx", "tx", "pt"};
  std::size_t b = 0;
  while (b < word.size() && (word[b] == '(' || word[b] == '"' || word[b] == '\'')) ++b;
  word = word.substr(b);
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0])))
    return true;
  if (word.find('.') != std::string_view::npos) return true;  // e.g. "b.i.d"
  return kAbbrev.count(text::lowercase(word)) > 0;
}

}  // namespace detail

/// Byte ranges of sentences. Everything outside the ranges is whitespace, so
/// the input is the ranges joined by their original separators.
inline std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(std::string_view s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  auto skip_space = [&](std::size_t p) {
    while (p < s.size() && text::is_space(s[p])) ++p;
    return p;
  };
  i = skip_space(0);
  std::size_t start = i;
  auto emit = [&](std::size_t end) {
    auto e = end;
    while (e > start && text::is_space(s[e - 1])) --e;
    if (e > start) out.emplace_back(start, e);
  };

  while (i < s.size()) {
    const char c = s[i];
    // Paragraph break.
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
      if (j < s.size() && s[j] == '\n') {
        emit(i);
        i = start = skip_space(j);
        continue;
      }
    }
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
      while (j < s.size() && (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']')) ++j;
      const bool at_end = j >= s.size();
      if (at_end || text::is_space(s[j])) {
        const std::size_t next = skip_space(j);
        bool split = true;
        if (next < s.size() && std::islower(static_cast<unsigned char>(s[next])))
          split = false;
        if (split && c == '.') {
          std::size_t wb = i;
          while (wb > start && !text::is_space(s[wb - 1])) --wb;
          if (detail::is_abbreviation(s.substr(wb, i - wb))) split = false;
        }
        if (split) {
          emit(j);
          i = start = next;
          continue;
        }
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(s.size());
  return out;
}

inline std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& [b, e] : sentence_spans(s)) out.emplace_back(s.substr(b, e - b));
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

inline constexpr std::int64_t kFollowupWindowHours = 72;

struct FollowupCandidate {
  std::string sentence;
  Timestamp source_time;
};

struct SegmentedRecord {
  std::vector<ClinicalNote> hpi_inputs;
  std::map<std::chrono::sys_days, std::vector<ClinicalNote>> daily_inputs;
  std::vector<FollowupCandidate> followup_candidates;
};

/// True when `t` falls in [discharge - 72h, discharge].
inline bool in_followup_window(const Timestamp& t, const Timestamp& discharge) {
  const auto before = discharge.utc_seconds - t.utc_seconds;
  return before >= 0 && before <= kFollowupWindowHours * kSecondsPerHour;
}

inline SegmentedRecord segment_record(const AdmissionRecord& record) {
  std::vector<ClinicalNote> notes = record.notes;
  std::stable_sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });

  SegmentedRecord out;
  for (const auto& n : notes) {
    if (feeds_hpi(n.type))
      out.hpi_inputs.push_back(n);
    else
      out.daily_inputs[n.timestamp.local_day()].push_back(n);

    if (in_followup_window(n.timestamp, record.discharge_date))
      for (auto& s : split_sentences(n.text))
        out.followup_candidates.push_back({std::move(s), n.timestamp});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inclusion decisions

class InclusionClassifier {
 public:
  virtual ~InclusionClassifier() = default;
  virtual int decide(std::string_view text) const = 0;
};

/// Fires when the normalized text contains any cue phrase.
class CuePhraseClassifier final : public InclusionClassifier {
 public:
  explicit CuePhraseClassifier(std::span<const std::string> cues) {
    for (const auto& c : cues) {
      auto words = text::normalize_words(c);
      if (!words.empty()) cues_.push_back(std::move(words));
    }
  }
  CuePhraseClassifier(std::initializer_list<std::string> cues)
      : CuePhraseClassifier(std::vector<std::string>(cues)) {}

  int decide(std::string_view t) const override {
    const auto words = text::normalize_words(t);
    for (const auto& c : cues_)
      if (text::contains_phrase(words, c)) return 1;
    return 0;
  }

 private:
  std::vector<std::vector<std::string>> cues_;
};

inline CuePhraseClassifier baseline_followup_classifier() {
  return {"follow up", "follow-up", "followup", "f/u", "will follow", "outpatient",
          "appointment", "return to clinic", "clinic visit", "call to schedule",
          "scheduled with", "recheck", "repeat imaging", "after discharge",
          "see her in", "see him in", "see the patient in"};
}

inline CuePhraseClassifier baseline_document_classifier() {
  return {"started",     "initiated",  "transferred", "consulted",  "procedure",
          "surgery",     "craniotomy", "biopsy",      "mri",        "ct",
          "cta",         "eeg",        "intubated",   "extubated",  "worsening",
          "worsened",    "improved",   "improving",   "new",        "complication",
          "thrombectomy", "seizure",   "hemorrhage",  "discontinued", "increased",
          "decreased",   "stable for transfer", "admitted", "diagnosed", "treated"};
}

/// Forces inclusion of a note by type or by a keyword phrase.
struct OverrideRule {
  std::optional<NoteType> note_type;
  std::vector<std::string> keyword;  // normalized words

  bool fires(const ClinicalNote& note) const {
    if (note_type && *note_type == note.type) return true;
    if (!keyword.empty())
      return text::contains_phrase(text::normalize_words(note.text), keyword);
    return false;
  }
};

inline OverrideRule keyword_rule(std::string_view phrase) {
  auto words = text::normalize_words(phrase);
  if (words.empty()) throw Error(Errc::parse_error, "empty override keyword");
  return OverrideRule{std::nullopt, std::move(words)};
}

inline OverrideRule note_type_rule(NoteType t) { return OverrideRule{t, {}}; }

inline std::vector<OverrideRule> default_override_rules() {
  return {note_type_rule(NoteType::operative), keyword_rule("tPA"),
          keyword_rule("thrombectomy")};
}

/// JSON lines: {"note_type": "operative"} or {"keyword": "tPA"}.
inline std::vector<OverrideRule> parse_override_rules(std::istream& in) {
  std::vector<OverrideRule> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto bad = [&](const std::string& why) {
      return Error(Errc::parse_error, "override rules line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw bad(e.what());
    }
    if (j.contains("note_type") && j["note_type"].is_string()) {
      auto t = parse_note_type(j["note_type"].get<std::string>());
      if (!t) throw bad("unknown note type");
      out.push_back(note_type_rule(*t));
    } else if (j.contains("keyword") && j["keyword"].is_string()) {
      const auto kw = j["keyword"].get<std::string>();
      if (text::normalize_words(kw).empty()) throw bad("empty keyword");
      out.push_back(keyword_rule(kw));
    } else {
      throw bad("expected \"note_type\" or \"keyword\"");
    }
  }
  return out;
}

inline std::vector<OverrideRule> load_override_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open override rules: " + path);
  return parse_override_rules(in);
}

inline int classify_document(const ClinicalNote& note, const InclusionClassifier& classifier,
                             std::span<const OverrideRule> overrides) {
  for (const auto& r : overrides)
    if (r.fires(note)) return 1;
  return classifier.decide(note.text) ? 1 : 0;
}

inline int classify_followup(std::string_view sentence, const InclusionClassifier& classifier) {
  return classifier.decide(sentence) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Train / validation / test split

template <typename T>
struct CorpusSplit {
  std::vector<T> train, validation, test;
};

/// Partition sizes by largest remainder; ties go to the earlier partition.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw Error(Errc::invalid_ratios, "split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::invalid_ratios, "split ratios must sum to 1");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

/// Seeded Fisher-Yates shuffle, then contiguous partitions. The generator is
/// mt19937_64 with modulo reduction, so results are identical across
/// standard libraries.
template <typename T>
CorpusSplit<T> split_corpus(std::span<const T> items, std::array<double, 3> ratios,
                            std::uint64_t seed) {
  const auto sizes = split_sizes(items.size(), ratios);
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);

  CorpusSplit<T> out;
  std::size_t k = 0;
  for (; k < sizes[0]; ++k) out.train.push_back(items[idx[k]]);
  for (; k < sizes[0] + sizes[1]; ++k) out.validation.push_back(items[idx[k]]);
  for (; k < idx.size(); ++k) out.test.push_back(items[idx[k]]);
  return out;
}

}  // namespace hospcourse
