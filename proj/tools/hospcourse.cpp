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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hospcourse/cli.hpp"

namespace cli = hospcourse::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hospital-course generation and evaluation"};
  app.require_subcommand(1);

  cli::RunConfig run;
  std::string constrain = "on";
  std::size_t max_len = 0;
  auto* summarize = app.add_subcommand("summarize", "Generate hospital courses for a corpus");
  summarize->add_option("--corpus", run.corpus_path, "Admission records (JSON lines)")->required();
  summarize->add_option("--vocab", run.vocab_path, "Medical vocabulary (JSON lines)")->required();
  summarize->add_option("--scorer", run.scorer,
                        "builtin | tcp://host:port | exec:<command>")
      ->capture_default_str();
  summarize->add_option("--beam-width", run.beam_width)->capture_default_str();
  summarize->add_option("--max-len", max_len, "Token limit for every segment");
  summarize->add_option("--max-len-hpi", run.max_len_hpi)->capture_default_str();
  summarize->add_option("--max-len-daily", run.max_len_daily)->capture_default_str();
  summarize->add_option("--constrain", constrain, "on | off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  summarize->add_option("--overrides", run.overrides_path, "Inclusion override rules (JSON lines)");
  summarize->add_option("--out", run.out_path, "Output file (JSON lines)")->required();
  summarize->add_option("--seed", run.seed)->capture_default_str();
  summarize->add_option("--jobs", run.jobs, "Admissions summarized in parallel")
      ->capture_default_str();
  summarize->add_option("--ngram-order", run.ngram_order)->capture_default_str();
  summarize->add_option("--ngram-alpha", run.ngram_alpha)->capture_default_str();
  summarize->add_option("--scorer-timeout-ms", run.scorer_timeout_ms)->capture_default_str();
  summarize->add_option("--scorer-top-k", run.scorer_top_k)->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluation metrics");
  eval->require_subcommand(1);
  std::string candidates, references, task, predictions, golds, ratings;
  auto* rouge = eval->add_subcommand("rouge", "ROUGE-1/2/L recall and word counts");
  rouge->add_option("--candidates", candidates)->required();
  rouge->add_option("--references", references)->required();
  rouge->add_option("--task", task);
  auto* report = eval->add_subcommand("report", "Classification metrics");
  report->add_option("--predictions", predictions)->required();
  report->add_option("--golds", golds)->required();
  report->add_option("--task", task);
  auto* icc = eval->add_subcommand("icc", "Consistency ICC from a ratings CSV");
  icc->add_option("--ratings", ratings)->required();

  auto* vocab = app.add_subcommand("vocab", "Vocabulary tools");
  vocab->require_subcommand(1);
  std::string terms, synonyms, vocab_out;
  auto* build = vocab->add_subcommand("build", "Normalize raw term and synonym lists");
  build->add_option("--terms", terms, "One term per line");
  build->add_option("--synonyms", synonyms, "One group per line, members separated by '|'");
  build->add_option("--out", vocab_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    cli::report(std::cerr, "InvalidConfig", e.what());
    return cli::kConfigError;
  }

  if (*summarize) {
    run.constrain = constrain == "on";
    if (max_len) run.max_len_hpi = run.max_len_daily = max_len;
    return cli::cmd_summarize(run, std::cerr);
  }
  if (*rouge) return cli::cmd_eval_rouge(candidates, references, task, std::cout, std::cerr);
  if (*report) return cli::cmd_eval_report(predictions, golds, task, std::cout, std::cerr);
  if (*icc) return cli::cmd_eval_icc(ratings, std::cout, std::cerr);
  if (*build) return cli::cmd_vocab_build(terms, synonyms, vocab_out, std::cerr);
  return cli::kFailure;
}
