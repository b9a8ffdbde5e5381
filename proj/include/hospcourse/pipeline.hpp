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

// Day-to-day hospital course generation: summarize the HPI notes, summarize
// each day's included notes, append follow-up sentences, then assemble in
// that order.

#include <chrono>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hospcourse/corpus.hpp"
#include "hospcourse/decode.hpp"
#include "hospcourse/error.hpp"
#include "hospcourse/scorer.hpp"
#include "hospcourse/vocab.hpp"

namespace hospcourse {

struct DailyEntry {
  std::chrono::sys_days day;
  std::string text;
};

struct HospitalCourse {
  std::string hpi_summary;
  std::vector<DailyEntry> daily_entries;
  std::vector<std::string> followups;
  std::string assembled_text;
};

struct Classifiers {
  const InclusionClassifier& document;
  const InclusionClassifier& followup;
  std::vector<OverrideRule> overrides;
};

struct SummarizeConfig {
  BeamConfig hpi{.beam_width = 4, .max_len = 60};
  // Daily entries are meant to be one or two sentences.
  BeamConfig daily{.beam_width = 4, .max_len = 30};
  bool constrain = true;
};

/// Non-empty parts joined by one blank line.
inline std::string assemble(const std::string& hpi, std::span<const DailyEntry> daily,
                            std::span<const std::string> followups) {
  std::vector<std::string> parts;
  if (!hpi.empty()) parts.push_back(hpi);
  for (const auto& d : daily)
    if (!d.text.empty()) parts.push_back(d.text);
  for (const auto& f : followups)
    if (!f.empty()) parts.push_back(f);
  return text::join(parts, "\n\n");
}

namespace detail {

inline std::string concat_notes(std::span<const ClinicalNote> notes) {
  std::string out;
  for (const auto& n : notes) {
    if (!out.empty()) out += "\n\n";
    out += n.text;
  }
  return out;
}

inline std::string summarize_segment(const std::string& name, const std::string& source,
                                     const TokenScorer& scorer, const MedicalVocabulary& vocab,
                                     const BeamConfig& beam, bool constrain) {
  try {
    const BannedSet banned = constrain ? banned_for_source(source, vocab) : BannedSet{};
    const auto best = constrained_beam_search(scorer, source, banned, beam);
    return detokenize(scorer, best.tokens);
  } catch (const Error& e) {
    throw Error(Errc::segment_failure, "segment " + name + ": " + e.what(), e.root_kind());
  }
}

}  // namespace detail

inline HospitalCourse summarize_admission(const AdmissionRecord& record,
                                          const TokenScorer& scorer,
                                          const MedicalVocabulary& vocab,
                                          const Classifiers& classifiers,
                                          const SummarizeConfig& cfg) {
  const auto seg = segment_record(record);
  HospitalCourse out;

  out.hpi_summary = detail::summarize_segment(
      "hpi", detail::concat_notes(seg.hpi_inputs), scorer, vocab, cfg.hpi, cfg.constrain);

  for (const auto& [day, notes] : seg.daily_inputs) {
    std::vector<ClinicalNote> kept;
    for (const auto& n : notes)
      if (classify_document(n, classifiers.document, classifiers.overrides)) kept.push_back(n);
    if (kept.empty()) continue;
    auto summary = detail::summarize_segment("day " + format_day(day), detail::concat_notes(kept),
                                             scorer, vocab, cfg.daily, cfg.constrain);
    out.daily_entries.push_back({day, std::move(summary)});
  }

  std::set<std::string> seen;
  for (const auto& c : seg.followup_candidates)
    if (classify_followup(c.sentence, classifiers.followup) && seen.insert(c.sentence).second)
      out.followups.push_back(c.sentence);

  out.assembled_text = assemble(out.hpi_summary, out.daily_entries, out.followups);
  return out;
}

}  // namespace hospcourse
