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

#include "hospcourse/pipeline.hpp"

namespace hc = hospcourse;

namespace {

hc::ClinicalNote note(hc::NoteType t, const std::string& when, const std::string& text) {
  return {t, hc::parse_timestamp(when), text};
}

hc::AdmissionRecord three_day_stay() {
  hc::AdmissionRecord r;
  r.admission_id = "P1";
  r.admit_date = hc::parse_timestamp("2023-06-01T08:00:00-04:00");
  r.discharge_date = hc::parse_timestamp("2023-06-07T15:00:00-04:00");
  r.discharge_summary_text = "Hospital Course:\nDid well.";
  r.notes = {
      note(hc::NoteType::progress, "2023-06-03T09:00:00-04:00", "MRI improved. Stable."),
      note(hc::NoteType::progress, "2023-06-01T20:00:00-04:00", "Started heparin."),
      note(hc::NoteType::admission, "2023-06-01T09:00:00-04:00",
           "Patient with diabetes presents with weakness."),
      note(hc::NoteType::consult, "2023-06-02T11:00:00-04:00", "Neurology consulted."),
      note(hc::NoteType::progress, "2023-06-06T10:00:00-04:00",
           "Afebrile. She will follow up with Dr. [Physician] in two weeks."),
  };
  return r;
}

// Trained only on text that states "altered mental status", so an
// unconstrained decode hallucinates it.
hc::NgramScorer planted_scorer() {
  const std::vector<std::string> corpus{
      "the patient presented with altered mental status and hypotension .",
      "the patient presented with altered mental status .",
      "the patient presented with diabetes and improved .",
  };
  return hc::train_ngram_scorer(corpus, 2, 0.01);
}

hc::MedicalVocabulary vocab() {
  return hc::MedicalVocabulary({hc::Term::parse("altered mental status"),
                                hc::Term::parse("hypotension"), hc::Term::parse("diabetes")},
                               {});
}

struct Fixture {
  hc::CuePhraseClassifier doc = hc::baseline_document_classifier();
  hc::CuePhraseClassifier fu = hc::baseline_followup_classifier();
  hc::Classifiers cls{doc, fu, hc::default_override_rules()};
};

}  // namespace

TEST(Assemble, JoinsNonEmptyPartsWithBlankLines) {
  const std::vector<hc::DailyEntry> days{{{}, "d1"}, {{}, ""}, {{}, "d2"}};
  const std::vector<std::string> fus{"f1"};
  EXPECT_EQ(hc::assemble("h", days, fus), "h\n\nd1\n\nd2\n\nf1");
  EXPECT_EQ(hc::assemble("h", {}, fus), "h\n\nf1");
  EXPECT_EQ(hc::assemble("", {}, {}), "");
}

TEST(Summarize, ConstrainedOutputCarriesNoBannedTerms) {
  Fixture f;
  const auto scorer = planted_scorer();
  const auto v = vocab();
  const auto r = three_day_stay();

  hc::SummarizeConfig off;
  off.constrain = false;
  const auto free = hc::summarize_admission(r, scorer, v, f.cls, off);
  EXPECT_NE(free.hpi_summary.find("altered mental status"), std::string::npos);

  const auto fixed = hc::summarize_admission(r, scorer, v, f.cls, {});
  EXPECT_EQ(fixed.assembled_text.find("altered mental status"), std::string::npos);
  EXPECT_EQ(fixed.assembled_text.find("hypotension"), std::string::npos);
  // "diabetes" is in the HPI source and stays allowed there.
  EXPECT_TRUE(hc::banned_for_source(r.notes[2].text, v).allows(fixed.hpi_summary));
}

TEST(Summarize, DailyEntriesAscendAndOrderHolds) {
  Fixture f;
  const auto scorer = planted_scorer();
  const auto hc_ = hc::summarize_admission(three_day_stay(), scorer, vocab(), f.cls, {});
  ASSERT_EQ(hc_.daily_entries.size(), 3u);
  for (std::size_t i = 1; i < hc_.daily_entries.size(); ++i)
    EXPECT_LT(hc_.daily_entries[i - 1].day, hc_.daily_entries[i].day);
  EXPECT_EQ(hc::format_day(hc_.daily_entries[0].day), "2023-06-01");
  ASSERT_EQ(hc_.followups.size(), 1u);
  EXPECT_EQ(hc_.followups[0], "She will follow up with Dr. [Physician] in two weeks.");
  EXPECT_EQ(hc_.assembled_text,
            hc::assemble(hc_.hpi_summary, hc_.daily_entries, hc_.followups));
}

TEST(Summarize, NoIncludedDailyNotes) {
  Fixture f;
  auto r = three_day_stay();
  std::erase_if(r.notes, [](const auto& n) { return n.type != hc::NoteType::admission; });
  r.notes.push_back(note(hc::NoteType::progress, "2023-06-07T09:00:00-04:00",
                         "Quiet night. Return to clinic in 1 week."));
  const hc::CuePhraseClassifier never{"zzzz"};
  const hc::Classifiers cls{never, f.fu, {}};
  const auto out = hc::summarize_admission(r, planted_scorer(), vocab(), cls, {});
  EXPECT_TRUE(out.daily_entries.empty());
  EXPECT_EQ(out.assembled_text, out.hpi_summary + "\n\nReturn to clinic in 1 week.");
}

TEST(Summarize, SegmentFailureNamesTheSegment) {
  Fixture f;
  const hc::MedicalVocabulary v({hc::Term::parse("hypotension")}, {});
  const auto r = three_day_stay();
  // The only word the scorer can emit is banned and the end token is
  // impossible.
  class OnlyBanned final : public hc::TokenScorer {
   public:
    std::size_t vocab_size() const override { return 2; }
    std::string token(hc::TokenId id) const override { return id ? "<end>" : "hypotension"; }
    std::optional<hc::TokenId> find(std::string_view) const override { return std::nullopt; }
    hc::TokenId end_token() const override { return 1; }
    hc::LogProbDistribution score(std::string_view, std::span<const hc::TokenId>) const override {
      return hc::LogProbDistribution({0.0, hc::kNegInf});
    }
  } only;
  try {
    hc::summarize_admission(r, only, v, f.cls, {});
    FAIL();
  } catch (const hc::Error& e) {
    EXPECT_EQ(e.kind(), hc::Errc::segment_failure);
    EXPECT_EQ(e.root_kind(), hc::Errc::all_beams_pruned);
    EXPECT_NE(std::string(e.what()).find("segment hpi"), std::string::npos);
  }
}
