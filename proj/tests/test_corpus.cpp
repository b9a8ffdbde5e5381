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

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hospcourse/corpus.hpp"

namespace hc = hospcourse;
using namespace std::chrono;

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

hc::ClinicalNote note(hc::NoteType t, const std::string& when, const std::string& text) {
  return {t, hc::parse_timestamp(when), text};
}

hc::AdmissionRecord record(std::vector<hc::ClinicalNote> notes,
                           const std::string& admit = "2023-05-01T08:00:00-04:00",
                           const std::string& discharge = "2023-05-04T12:00:00-04:00") {
  hc::AdmissionRecord r;
  r.admission_id = "T1";
  r.admit_date = hc::parse_timestamp(admit);
  r.discharge_date = hc::parse_timestamp(discharge);
  r.notes = std::move(notes);
  r.discharge_summary_text = "Hospital Course:\nUneventful.";
  return r;
}

sys_days ymd(int y, unsigned m, unsigned d) { return sys_days{year{y} / month{m} / d}; }

}  // namespace

// ---------------------------------------------------------------------------
// Timestamps

TEST(Timestamp, ParsesOffsetsAndBucketsByLocalDay) {
  const auto t = hc::parse_timestamp("2023-03-01T23:30:00-05:00");
  EXPECT_EQ(t.offset_minutes, -300);
  EXPECT_EQ(t.local_day(), ymd(2023, 3, 1));
  EXPECT_EQ(hc::parse_timestamp("2023-03-02T04:30:00Z"), t);
  EXPECT_EQ(hc::parse_timestamp("2023-03-02T04:30:00Z").local_day(), ymd(2023, 3, 2));
  EXPECT_EQ(hc::parse_timestamp("2023-03-02T10:00:00.250+0530").offset_minutes, 330);
  EXPECT_EQ(hc::parse_timestamp("2023-03-02").utc_seconds,
            hc::parse_timestamp("2023-03-02T00:00:00Z").utc_seconds);
  EXPECT_EQ(hc::format_day(ymd(2023, 3, 9)), "2023-03-09");
}

TEST(Timestamp, RejectsMalformed) {
  for (const char* bad : {"", "2023-13-01", "2023-02-30T00:00:00Z", "2023-03-01T25:00:00Z",
                          "2023-03-01T10:00:00+5", "yesterday", "2023-03-01T10:00:00Zjunk"})
    EXPECT_EQ(kind_of([&] { hc::parse_timestamp(bad); }), hc::Errc::parse_error) << bad;
}

// ---------------------------------------------------------------------------
// Corpus files

TEST(Corpus, LoadsFixture) {
  const auto rs = hc::load_corpus(HOSPCOURSE_FIXTURES "/corpus5.jsonl");
  ASSERT_EQ(rs.size(), 5u);
  EXPECT_EQ(rs[0].admission_id, "A001");
  EXPECT_EQ(rs[0].notes.size(), 4u);
}

TEST(Corpus, RecordInvariants) {
  auto ok = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "x")});
  EXPECT_NO_THROW(ok.validate());
  auto no_admission = record({note(hc::NoteType::progress, "2023-05-01T09:00:00-04:00", "x")});
  EXPECT_EQ(kind_of([&] { no_admission.validate(); }), hc::Errc::malformed_corpus);
  auto backwards = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "x")},
                          "2023-05-04T08:00:00-04:00", "2023-05-01T08:00:00-04:00");
  EXPECT_EQ(kind_of([&] { backwards.validate(); }), hc::Errc::malformed_corpus);
  auto stray = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "x"),
                       note(hc::NoteType::progress, "2023-05-08T09:00:00-04:00", "late")});
  EXPECT_EQ(kind_of([&] { stray.validate(); }), hc::Errc::malformed_corpus);
  auto no_summary = ok;
  no_summary.discharge_summary_text = "  ";
  EXPECT_EQ(kind_of([&] { no_summary.validate(); }), hc::Errc::malformed_corpus);
}

TEST(Corpus, MalformedLinesNameTheLine) {
  std::istringstream in("\n{\"admission_id\": \"X\"}\n");
  try {
    hc::parse_corpus(in);
    FAIL();
  } catch (const hc::Error& e) {
    EXPECT_EQ(e.kind(), hc::Errc::malformed_corpus);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad_type(
      R"({"admission_id":"X","admit_date":"2023-01-01","discharge_date":"2023-01-02",)"
      R"("discharge_summary_text":"s","notes":[{"type":"nursing","timestamp":"2023-01-01","text":""}]})");
  EXPECT_EQ(kind_of([&] { hc::parse_corpus(bad_type); }), hc::Errc::malformed_corpus);
  EXPECT_EQ(kind_of([] { hc::load_corpus("/nonexistent.jsonl"); }), hc::Errc::io_failure);
}

// ---------------------------------------------------------------------------
// Hospital-course extraction

TEST(Extract, PlainHeader) {
  EXPECT_EQ(hc::extract_hospital_course(
                "Name: X\nHospital Course:\nPatient admitted for chest pain.\n"
                "Discharge Medications:\n1. Aspirin",
                {}),
            "Patient admitted for chest pain.");
}

TEST(Extract, HeaderVariantsMatchHandLabels) {
  std::ifstream f(HOSPCOURSE_FIXTURES "/corpus5_courses.json");
  const auto want = nlohmann::json::parse(f);
  const auto rs = hc::load_corpus(HOSPCOURSE_FIXTURES "/corpus5.jsonl");
  for (const auto& r : rs) {
    const auto got = hc::extract_hospital_course(r.discharge_summary_text, {});
    EXPECT_EQ(got, want.at(r.admission_id).get<std::string>()) << r.admission_id;
    EXPECT_NE(r.discharge_summary_text.find(got), std::string::npos);
  }
}

TEST(Extract, MissingHeaderIsSectionNotFound) {
  EXPECT_EQ(kind_of([] { hc::extract_hospital_course("Discharge Medications:\nnone", {}); }),
            hc::Errc::section_not_found);
  EXPECT_EQ(kind_of([] { hc::extract_hospital_course("", {}); }), hc::Errc::section_not_found);
  // A mention inside prose is not a header.
  EXPECT_EQ(kind_of([] {
              hc::extract_hospital_course("Her hospital course was complicated by sepsis.", {});
            }),
            hc::Errc::section_not_found);
}

TEST(Extract, CustomLexicon) {
  hc::SectionLexicon lex;
  lex.course_headers = {"narrative"};
  lex.section_headers = {"plan"};
  EXPECT_EQ(hc::extract_hospital_course("NARRATIVE: did well\nPlan: home", lex), "did well");
}

// ---------------------------------------------------------------------------
// Sentences

TEST(Sentences, AbbreviationsDoNotSplit) {
  EXPECT_EQ(hc::split_sentences("She will follow up with Dr. [Physician] as an outpatient."),
            std::vector<std::string>{"She will follow up with Dr. [Physician] as an outpatient."});
  EXPECT_TRUE(hc::split_sentences("").empty());
  EXPECT_TRUE(hc::split_sentences("   \n ").empty());
}

TEST(Sentences, DecimalsAndPercentages) {
  EXPECT_EQ(hc::split_sentences("EF 15%. HR 80."),
            (std::vector<std::string>{"EF 15%.", "HR 80."}));
  EXPECT_EQ(hc::split_sentences("Temp 38.5 overnight. Cr 1.2 stable! Plan? None"),
            (std::vector<std::string>{"Temp 38.5 overnight.", "Cr 1.2 stable!", "Plan?", "None"}));
  EXPECT_EQ(hc::split_sentences("Given 2 mg i.v. at noon. Then slept."),
            (std::vector<std::string>{"Given 2 mg i.v. at noon.", "Then slept."}));
}

TEST(SentencesProperty, SpansReassembleInput) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> pieces{"Dr.", "Smith", "EF", "15%.", "ok.", "\n\n", "Plan:",
                                        "i.e.", "yes!", "why?", "x", "  ", "Mr.", "3.5"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    for (std::size_t i = 0, n = rng() % 20; i < n; ++i)
      s += pieces[rng() % pieces.size()] + (rng() % 3 ? " " : "");
    const auto spans = hc::sentence_spans(s);
    std::size_t prev = 0;
    for (const auto& [b, e] : spans) {
      ASSERT_LE(prev, b);
      ASSERT_LT(b, e);
      for (std::size_t i = prev; i < b; ++i) EXPECT_TRUE(hc::text::is_space(s[i])) << s;
      prev = e;
    }
    for (std::size_t i = prev; i < s.size(); ++i) EXPECT_TRUE(hc::text::is_space(s[i])) << s;
  }
}

// ---------------------------------------------------------------------------
// Segmentation

TEST(Segment, MinimalRecord) {
  const auto r = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "Adm.")});
  const auto s = hc::segment_record(r);
  EXPECT_EQ(s.hpi_inputs.size(), 1u);
  EXPECT_TRUE(s.daily_inputs.empty());
}

TEST(Segment, ThreeDayStayAscendsRegardlessOfInputOrder) {
  const auto r = record({note(hc::NoteType::progress, "2023-05-03T09:00:00-04:00", "Day three."),
                         note(hc::NoteType::ed_provider, "2023-05-01T07:00:00-04:00", "ED."),
                         note(hc::NoteType::progress, "2023-05-01T21:00:00-04:00", "Day one."),
                         note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "Adm."),
                         note(hc::NoteType::radiology, "2023-05-02T23:59:00-04:00", "CT.")});
  const auto s = hc::segment_record(r);
  ASSERT_EQ(s.hpi_inputs.size(), 2u);
  EXPECT_EQ(s.hpi_inputs[0].text, "ED.");
  std::vector<sys_days> keys;
  for (const auto& [d, _] : s.daily_inputs) keys.push_back(d);
  EXPECT_EQ(keys, (std::vector<sys_days>{ymd(2023, 5, 1), ymd(2023, 5, 2), ymd(2023, 5, 3)}));
}

TEST(Segment, FollowupWindowIsInclusiveAt72Hours) {
  // Discharge 2023-05-04 12:00 -04:00.
  const auto r = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "Adm."),
                         note(hc::NoteType::progress, "2023-05-01T14:00:00-04:00", "At 70h."),
                         note(hc::NoteType::progress, "2023-05-01T12:00:00-04:00", "At 72h."),
                         note(hc::NoteType::progress, "2023-05-01T04:00:00-04:00", "At 80h."),
                         note(hc::NoteType::progress, "2023-05-04T13:00:00-04:00", "After.")});
  std::vector<std::string> got;
  for (const auto& c : hc::segment_record(r).followup_candidates) got.push_back(c.sentence);
  EXPECT_EQ(got, (std::vector<std::string>{"At 72h.", "At 70h."}));
}

TEST(SegmentProperty, EveryNoteHasExactlyOneHome) {
  std::mt19937_64 rng(12);
  const auto base = hc::parse_timestamp("2023-05-01T00:00:00-04:00").utc_seconds;
  for (int trial = 0; trial < 200; ++trial) {
    auto r = record({note(hc::NoteType::admission, "2023-05-01T09:00:00-04:00", "0")});
    for (std::size_t i = 1, n = rng() % 12; i <= n; ++i) {
      hc::ClinicalNote x;
      x.type = static_cast<hc::NoteType>(rng() % 7);
      x.timestamp.utc_seconds = base + static_cast<std::int64_t>(rng() % (4 * 86400));
      x.timestamp.offset_minutes = -240;
      x.text = std::to_string(i) + ".";
      r.notes.push_back(x);
    }
    const auto s = hc::segment_record(r);
    std::multiset<std::string> seen;
    for (const auto& n : s.hpi_inputs) seen.insert(n.text);
    sys_days prev{};
    bool first = true;
    for (const auto& [d, notes] : s.daily_inputs) {
      if (!first) {
        EXPECT_LT(prev, d);
      }
      prev = d;
      first = false;
      for (const auto& n : notes) {
        seen.insert(n.text);
        EXPECT_EQ(n.timestamp.local_day(), d);
      }
    }
    std::multiset<std::string> all;
    for (const auto& n : r.notes) all.insert(n.text);
    EXPECT_EQ(seen, all);
    for (const auto& c : s.followup_candidates)
      EXPECT_TRUE(hc::in_followup_window(c.source_time, r.discharge_date));
  }
}

// ---------------------------------------------------------------------------
// Classification

TEST(Classify, OverrideForcesInclusion) {
  const hc::CuePhraseClassifier never{"zzzz"};
  const auto rules = hc::default_override_rules();
  const hc::ClinicalNote tpa{hc::NoteType::progress, {}, "Given tPA at 14:05."};
  EXPECT_EQ(hc::classify_document(tpa, never, rules), 1);
  EXPECT_EQ(hc::classify_document(tpa, never, {}), 0);
  const hc::ClinicalNote op{hc::NoteType::operative, {}, "Uncomplicated."};
  EXPECT_EQ(hc::classify_document(op, never, rules), 1);
  const hc::ClinicalNote empty{hc::NoteType::progress, {}, ""};
  EXPECT_EQ(hc::classify_document(empty, hc::baseline_document_classifier(), {}), 0);
}

TEST(Classify, BaselineFollowupCues) {
  const auto c = hc::baseline_followup_classifier();
  EXPECT_EQ(hc::classify_followup("She will follow up with Dr. [Physician] as an outpatient.", c), 1);
  EXPECT_EQ(hc::classify_followup("Patient was given aspirin on arrival.", c), 0);
  EXPECT_EQ(hc::classify_followup("", c), 0);
}

TEST(Classify, OverrideRuleFile) {
  std::istringstream in("{\"note_type\": \"radiology\"}\n\n{\"keyword\": \"Code Stroke\"}\n");
  const auto rules = hc::parse_override_rules(in);
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_TRUE(rules[1].fires({hc::NoteType::progress, {}, "CODE STROKE called."}));
  std::istringstream bad("{\"note_type\": \"nursing\"}\n");
  EXPECT_EQ(kind_of([&] { hc::parse_override_rules(bad); }), hc::Errc::parse_error);
}

// ---------------------------------------------------------------------------
// Splits

TEST(Split, Sizes) {
  const std::array<double, 3> r{0.8, 0.1, 0.1};
  EXPECT_EQ(hc::split_sizes(100, r), (std::array<std::size_t, 3>{80, 10, 10}));
  EXPECT_EQ(hc::split_sizes(1, r), (std::array<std::size_t, 3>{1, 0, 0}));
  EXPECT_EQ(hc::split_sizes(0, r), (std::array<std::size_t, 3>{0, 0, 0}));
  EXPECT_EQ(hc::split_sizes(7, {0.5, 0.25, 0.25}), (std::array<std::size_t, 3>{3, 2, 2}));
  EXPECT_EQ(kind_of([] { hc::split_sizes(10, {0.5, 0.5, 0.0}); }), hc::Errc::invalid_ratios);
  EXPECT_EQ(kind_of([] { hc::split_sizes(10, {0.5, 0.3, 0.3}); }), hc::Errc::invalid_ratios);
}

TEST(SplitProperty, DisjointExhaustiveAndSeeded) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> items(rng() % 60);
    std::iota(items.begin(), items.end(), 0);
    const double a = 0.1 + static_cast<double>(rng() % 70) / 100.0;
    const double b = (1.0 - a) * 0.5;
    const std::array<double, 3> ratios{a, b, 1.0 - a - b};
    const auto seed = rng();
    const auto s = hc::split_corpus<int>(items, ratios, seed);
    const auto again = hc::split_corpus<int>(items, ratios, seed);
    EXPECT_EQ(s.train, again.train);
    EXPECT_EQ(s.test, again.test);
    std::vector<int> all = s.train;
    all.insert(all.end(), s.validation.begin(), s.validation.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, items);
  }
}
