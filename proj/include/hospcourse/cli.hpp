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

// Command implementations behind the `hospcourse` executable. Each returns a
// process exit status and reports failures as one "<ErrorClass>: message"
// line on the error stream.
//
// Exit status: 0 success, 1 other failure, 2 configuration or parse error,
// 3 scorer failure, 4 corpus error, 5 metric precondition violation.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hospcourse/corpus.hpp"
#include "hospcourse/error.hpp"
#include "hospcourse/external_scorer.hpp"
#include "hospcourse/metrics.hpp"
#include "hospcourse/pipeline.hpp"
#include "hospcourse/scorer.hpp"
#include "hospcourse/vocab.hpp"

namespace hospcourse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kScorerError = 3,
  kCorpusError = 4,
  kMetricError = 5,
};

using ojson = nlohmann::ordered_json;

inline void report(std::ostream& err, std::string_view kind, std::string_view msg) {
  std::string line(msg);
  for (auto& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  err << kind << ": " << line << '\n';
}

inline void report(std::ostream& err, const Error& e) {
  report(err, errc_name(e.kind()), e.what());
}

struct RunConfig {
  std::string corpus_path;
  std::string vocab_path;
  // "builtin", "tcp://host:port" or "exec:<command>".
  std::string scorer = "builtin";
  std::size_t beam_width = 4;
  std::size_t max_len_hpi = 60;
  std::size_t max_len_daily = 30;
  bool constrain = true;
  std::string overrides_path;  // empty: built-in rules
  std::string out_path;
  std::uint64_t seed = 13;
  std::size_t jobs = 1;
  int ngram_order = 3;
  double ngram_alpha = 0.1;
  std::size_t scorer_timeout_ms = 30000;
  std::size_t scorer_top_k = 50;
};

/// Text used to train the built-in scorer: the reference hospital course
/// when one can be located, else the whole discharge summary.
inline std::string reference_course(const AdmissionRecord& r) {
  try {
    return extract_hospital_course(r.discharge_summary_text);
  } catch (const Error&) {
    return r.discharge_summary_text;
  }
}

inline ojson course_to_json(const AdmissionRecord& r, const HospitalCourse& hc) {
  ojson daily = ojson::array();
  for (const auto& d : hc.daily_entries)
    daily.push_back({{"day", format_day(d.day)}, {"text", d.text}});
  ojson out;
  out["admission_id"] = r.admission_id;
  out["hospital_course"] = hc.assembled_text;
  out["segments"] = {{"hpi", hc.hpi_summary}, {"daily", daily}, {"followups", hc.followups}};
  return out;
}

inline int cmd_summarize(const RunConfig& cfg, std::ostream& err) {
  namespace fs = std::filesystem;
  for (const auto& [flag, path] : {std::pair{"--corpus", cfg.corpus_path},
                                   std::pair{"--vocab", cfg.vocab_path}}) {
    if (path.empty() || !fs::is_regular_file(path)) {
      report(err, "InvalidConfig", std::string(flag) + " is not a readable file: " + path);
      return kConfigError;
    }
  }
  if (!cfg.overrides_path.empty() && !fs::is_regular_file(cfg.overrides_path)) {
    report(err, "InvalidConfig", "--overrides is not a readable file: " + cfg.overrides_path);
    return kConfigError;
  }
  if (cfg.out_path.empty()) {
    report(err, "InvalidConfig", "--out is required");
    return kConfigError;
  }
  if (cfg.beam_width < 1 || cfg.max_len_hpi < 1 || cfg.max_len_daily < 1 || cfg.jobs < 1) {
    report(err, "InvalidConfig", "--beam-width, --max-len and --jobs must be >= 1");
    return kConfigError;
  }

  MedicalVocabulary vocab;
  std::vector<OverrideRule> overrides;
  try {
    vocab = load_vocabulary(cfg.vocab_path);
    overrides = cfg.overrides_path.empty() ? default_override_rules()
                                           : load_override_rules(cfg.overrides_path);
  } catch (const Error& e) {
    report(err, e);
    return kConfigError;
  }

  std::vector<AdmissionRecord> records;
  try {
    records = load_corpus(cfg.corpus_path);
    if (records.empty()) throw Error(Errc::empty_corpus, "corpus has no records");
  } catch (const Error& e) {
    report(err, e);
    return kCorpusError;
  }

  std::unique_ptr<TokenScorer> scorer;
  try {
    if (cfg.scorer == "builtin") {
      const auto split = split_corpus<AdmissionRecord>(records, {0.8, 0.1, 0.1}, cfg.seed);
      std::vector<std::string> texts;
      for (const auto& r : split.train) texts.push_back(reference_course(r));
      scorer = std::make_unique<NgramScorer>(
          train_ngram_scorer(texts, cfg.ngram_order, cfg.ngram_alpha));
    } else {
      ExternalScorerOptions opts;
      opts.timeout = std::chrono::milliseconds(cfg.scorer_timeout_ms);
      opts.top_k = cfg.scorer_top_k;
      scorer = connect_external_scorer(cfg.scorer, opts);
    }
  } catch (const Error& e) {
    report(err, e);
    return e.kind() == Errc::invalid_config || e.kind() == Errc::invalid_order
               ? kConfigError
               : kScorerError;
  }

  const auto doc_classifier = baseline_document_classifier();
  const auto fu_classifier = baseline_followup_classifier();
  const Classifiers classifiers{doc_classifier, fu_classifier, overrides};
  SummarizeConfig scfg;
  scfg.hpi.beam_width = scfg.daily.beam_width = cfg.beam_width;
  scfg.hpi.max_len = cfg.max_len_hpi;
  scfg.daily.max_len = cfg.max_len_daily;
  scfg.constrain = cfg.constrain;

  std::vector<std::string> lines(records.size());
  std::vector<std::exception_ptr> failures(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      try {
        const auto hc = summarize_admission(records[i], *scorer, vocab, classifiers, scfg);
        lines[i] = course_to_json(records[i], hc).dump();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = scorer->concurrent() ? std::min(cfg.jobs, records.size()) : 1;
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      report(err, e.kind() == Errc::segment_failure ? errc_name(e.root_kind()) : errc_name(e.kind()),
             "admission " + records[i].admission_id + ": " + e.what());
      return is_scorer_failure(e.root_kind()) ? kScorerError : kFailure;
    } catch (const std::exception& e) {
      report(err, "InternalError", e.what());
      return kFailure;
    }
  }

  std::ofstream out(cfg.out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    report(err, "IoFailure", "cannot write " + cfg.out_path);
    return kConfigError;
  }
  for (const auto& l : lines) out << l << '\n';
  return out.good() ? kOk : kFailure;
}

// ---------------------------------------------------------------------------
// eval

namespace detail {

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.back().is_object())
      throw Error(Errc::parse_error, path + " line " + std::to_string(lineno) + ": not an object");
  }
  return out;
}

inline std::string id_of(const nlohmann::json& j) {
  for (const char* k : {"admission_id", "id"})
    if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
  throw Error(Errc::parse_error, "record has no \"admission_id\" or \"id\": " + j.dump());
}

/// Summary text of a record: "hospital_course", "text", or the hospital
/// course section of "discharge_summary_text".
inline std::string text_of(const nlohmann::json& j) {
  for (const char* k : {"hospital_course", "text"})
    if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
  if (j.contains("discharge_summary_text") && j["discharge_summary_text"].is_string())
    return extract_hospital_course(j["discharge_summary_text"].get<std::string>());
  throw Error(Errc::parse_error, "record has no summary text: " + j.dump());
}

inline ojson stats_json(const WordCountStats& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}};
}

inline std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open " + path);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) {
    if (tok != "0" && tok != "1")
      throw Error(Errc::parse_error, path + ": label must be 0 or 1, got \"" + tok + "\"");
    out.push_back(tok == "1");
  }
  return out;
}

inline int metric_exit(std::ostream& err, const Error& e) {
  report(err, e);
  return e.kind() == Errc::parse_error ? kConfigError : kMetricError;
}

}  // namespace detail

/// Mean ROUGE recall over candidate/reference pairs matched by id, plus
/// word-count statistics for both sides.
inline int cmd_eval_rouge(const std::string& candidates_path, const std::string& references_path,
                          const std::string& task, std::ostream& out, std::ostream& err) {
  std::vector<nlohmann::json> cands, refs;
  try {
    cands = detail::read_jsonl(candidates_path);
    refs = detail::read_jsonl(references_path);
  } catch (const Error& e) {
    return detail::metric_exit(err, e);
  }
  try {
    std::map<std::string, std::string> ref_by_id;
    for (const auto& r : refs) {
      const auto id = detail::id_of(r);
      try {
        ref_by_id[id] = detail::text_of(r);
      } catch (const Error& e) {
        if (e.kind() == Errc::section_not_found)
          throw Error(e.kind(), "reference " + id + ": " + e.what());
        throw;
      }
    }
    if (cands.empty()) throw Error(Errc::empty_input, "no candidates");

    std::vector<std::string> cand_texts, ref_texts;
    RougeScores mean;
    for (const auto& c : cands) {
      const auto id = detail::id_of(c);
      auto it = ref_by_id.find(id);
      if (it == ref_by_id.end()) throw Error(Errc::parse_error, "no reference for id " + id);
      cand_texts.push_back(detail::text_of(c));
      ref_texts.push_back(it->second);
      const auto s = rouge_recall(cand_texts.back(), ref_texts.back());
      mean.r1 += s.r1;
      mean.r2 += s.r2;
      mean.rl += s.rl;
    }
    const double n = static_cast<double>(cand_texts.size());
    ojson rep;
    rep["task"] = task;
    rep["pairs"] = cand_texts.size();
    rep["rouge"] = {{"r1", mean.r1 / n}, {"r2", mean.r2 / n}, {"rl", mean.rl / n}};
    rep["word_count"] = {{"candidate", detail::stats_json(word_count_stats(cand_texts))},
                         {"reference", detail::stats_json(word_count_stats(ref_texts))}};
    out << rep.dump(2) << '\n';
    return kOk;
  } catch (const Error& e) {
    return detail::metric_exit(err, e);
  }
}

inline int cmd_eval_report(const std::string& predictions_path, const std::string& golds_path,
                           const std::string& task, std::ostream& out, std::ostream& err) {
  try {
    const auto preds = detail::read_labels(predictions_path);
    const auto golds = detail::read_labels(golds_path);
    const auto m = classification_report(preds, golds);
    ojson rep;
    rep["task"] = task;
    rep["n"] = preds.size();
    rep["accuracy"] = m.accuracy;
    rep["precision"] = m.precision;
    rep["recall"] = m.recall;
    rep["f1"] = m.f1;
    rep["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
    out << rep.dump(2) << '\n';
    return kOk;
  } catch (const Error& e) {
    return detail::metric_exit(err, e);
  }
}

inline int cmd_eval_icc(const std::string& ratings_path, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(ratings_path);
    if (!in) throw Error(Errc::parse_error, "cannot open " + ratings_path);
    const auto r = icc_consistency(parse_ratings_csv(in));
    ojson rep;
    rep["subjects"] = r.subjects;
    rep["raters"] = r.raters;
    rep["icc_single"] = r.icc_single;
    rep["icc_average"] = r.icc_average;
    rep["ms_rows"] = r.ms_rows;
    rep["ms_error"] = r.ms_error;
    out << rep.dump(2) << '\n';
    return kOk;
  } catch (const Error& e) {
    return detail::metric_exit(err, e);
  }
}

// ---------------------------------------------------------------------------
// vocab build

/// Normalizes a raw term list (one per line) and a synonym list (one group
/// per line, members separated by '|') into the vocabulary file format.
/// Either input may be omitted.
inline int cmd_vocab_build(const std::string& terms_path, const std::string& synonyms_path,
                           const std::string& out_path, std::ostream& err) {
  try {
    TermSet terms;
    std::vector<TermSet> groups;
    if (!terms_path.empty()) {
      std::ifstream in(terms_path);
      if (!in) throw Error(Errc::io_failure, "cannot open " + terms_path);
      terms = parse_term_list(in);
    }
    if (!synonyms_path.empty()) {
      std::ifstream in(synonyms_path);
      if (!in) throw Error(Errc::io_failure, "cannot open " + synonyms_path);
      groups = parse_synonym_list(in);
    }
    const MedicalVocabulary vocab(std::move(terms), groups);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_failure, "cannot write " + out_path);
    write_vocabulary(out, vocab);
    return out.good() ? kOk : kFailure;
  } catch (const Error& e) {
    report(err, e);
    return kConfigError;
  }
}

}  // namespace hospcourse::cli
