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

// Decodes one admission note twice with a small n-gram model that has
// learned to write conditions the note never mentions. The constrained pass
// bans every vocabulary term absent from the note.

#include <iostream>
#include <string>
#include <vector>

#include "hospcourse/hospcourse.hpp"

namespace hc = hospcourse;

int main() {
  const std::string note =
      "55-year-old male with history of two vessel CAD, ischemic cardiomyopathy, EF 15%, mitral "
      "regurgitation, and diabetes on oral agents who presents from OSH s/p VT/VF cardiac arrest.";
  const std::string drifted =
      "55-year-old male with history of two vessel CAD, ischemic cardiomyopathy, EF 15%, altered "
      "mental status and hypotension, now s/p VT/VF cardiac arrest.";
  const std::string faithful =
      "55-year-old male with history of two vessel CAD, ischemic cardiomyopathy, EF 15%, mitral "
      "regurgitation, and diabetes who presents from OSH s/p VT/VF cardiac arrest.";
  const std::vector<std::string> training{drifted, drifted, drifted, faithful};
  const auto model = hc::train_ngram_scorer(training, 3, 0.01);

  const hc::MedicalVocabulary vocab(
      {hc::Term::parse("mitral regurgitation"), hc::Term::parse("diabetes"),
       hc::Term::parse("altered mental status"), hc::Term::parse("hypotension"),
       hc::Term::parse("cardiac arrest"), hc::Term::parse("stroke")},
      {});
  const auto banned = hc::banned_for_source(note, vocab);
  const hc::BeamConfig cfg{.beam_width = 4, .max_len = 40};

  std::cout << "source:\n  " << note << "\n\nbanned:";
  for (const auto& t : banned.terms()) std::cout << " [" << t.str() << "]";

  const auto free = hc::beam_search(model, note, cfg);
  const auto fixed = hc::constrained_beam_search(model, note, banned, cfg);
  std::cout << "\n\nunconstrained (" << free.score << "):\n  " << hc::detokenize(model, free.tokens)
            << "\n\nconstrained (" << fixed.score << "):\n  "
            << hc::detokenize(model, fixed.tokens) << "\n";
}
