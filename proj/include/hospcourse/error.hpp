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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hospcourse {

enum class Errc {
  io_failure,
  malformed_vocabulary,
  empty_corpus,
  invalid_order,
  unknown_token,
  scorer_unavailable,
  handshake_failure,
  protocol_violation,
  timeout,
  empty_vocabulary,
  invalid_config,
  all_beams_pruned,
  section_not_found,
  invalid_ratios,
  malformed_corpus,
  segment_failure,
  reference_too_short,
  empty_reference,
  length_mismatch,
  empty_input,
  degenerate_ratings,
  too_few_subjects,
  parse_error,
};

/// Stable class name used as the machine-readable prefix of CLI diagnostics.
constexpr std::string_view errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::io_failure: return "IoFailure";
    case Errc::malformed_vocabulary: return "MalformedVocabulary";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::invalid_order: return "InvalidOrder";
    case Errc::unknown_token: return "UnknownToken";
    case Errc::scorer_unavailable: return "ScorerUnavailable";
    case Errc::handshake_failure: return "HandshakeFailure";
    case Errc::protocol_violation: return "ProtocolViolation";
    case Errc::timeout: return "Timeout";
    case Errc::empty_vocabulary: return "EmptyVocabulary";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::all_beams_pruned: return "AllBeamsPruned";
    case Errc::section_not_found: return "SectionNotFound";
    case Errc::invalid_ratios: return "InvalidRatios";
    case Errc::malformed_corpus: return "MalformedCorpus";
    case Errc::segment_failure: return "SegmentFailure";
    case Errc::reference_too_short: return "ReferenceTooShort";
    case Errc::empty_reference: return "EmptyReference";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_input: return "EmptyInput";
    case Errc::degenerate_ratings: return "DegenerateRatings";
    case Errc::too_few_subjects: return "TooFewSubjects";
    case Errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

/// True for failures that originate in a token scorer (local or remote).
constexpr bool is_scorer_failure(Errc e) noexcept {
  return e == Errc::scorer_unavailable || e == Errc::handshake_failure ||
         e == Errc::protocol_violation || e == Errc::timeout;
}

class Error : public std::runtime_error {
 public:
  Error(Errc kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  // Wraps a failure raised while producing one part of a larger result.
  Error(Errc kind, const std::string& what, Errc cause)
      : std::runtime_error(what), kind_(kind), cause_(cause) {}

  Errc kind() const noexcept { return kind_; }
  std::optional<Errc> cause() const noexcept { return cause_; }

  /// The innermost known error class.
  Errc root_kind() const noexcept { return cause_.value_or(kind_); }

 private:
  Errc kind_;
  std::optional<Errc> cause_;
};

}  // namespace hospcourse
