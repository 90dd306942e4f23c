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

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "finesure/fraction.hpp"

namespace finesure {

// The nine-way fact-checking taxonomy: seven factuality error types, a
// catch-all for errors outside them, and the "factually correct" label.
enum class ErrorCategory {
  kOutOfContext,   // OutE, extrinsic
  kEntity,         // EntE
  kPredicate,      // PredE
  kCircumstance,   // CirE
  kGrammatical,    // GramE
  kDiscourseLink,  // LinkE
  kCoreference,    // CorefE
  kOther,          // OtherE
  kNoError,
};

inline constexpr std::array<ErrorCategory, 9> kAllCategories = {
    ErrorCategory::kOutOfContext, ErrorCategory::kEntity,        ErrorCategory::kPredicate,
    ErrorCategory::kCircumstance, ErrorCategory::kGrammatical,   ErrorCategory::kDiscourseLink,
    ErrorCategory::kCoreference,  ErrorCategory::kOther,         ErrorCategory::kNoError,
};

// The seven typed errors that take part in error localization.
inline constexpr std::array<ErrorCategory, 7> kLocalizableCategories = {
    ErrorCategory::kOutOfContext, ErrorCategory::kEntity,      ErrorCategory::kPredicate,
    ErrorCategory::kCircumstance, ErrorCategory::kGrammatical, ErrorCategory::kDiscourseLink,
    ErrorCategory::kCoreference,
};

// Canonical prompt wording, e.g. "out-of-context error".
std::string_view canonical_name(ErrorCategory category);
// Short code, e.g. "OutE".
std::string_view short_code(ErrorCategory category);
// One-line definition used inside categorization prompts.
std::string_view category_description(ErrorCategory category);

bool is_extrinsic(ErrorCategory category);
bool is_localizable(ErrorCategory category);

// Case-insensitive, whitespace-trimmed lookup over canonical names, short
// codes and known synonyms. Returns nullopt (the unknown marker) otherwise.
std::optional<ErrorCategory> normalize_category(std::string_view raw);

// NoError -> false, everything else -> true.
constexpr bool derive_binary(ErrorCategory category) { return category != ErrorCategory::kNoError; }

struct Document {
  std::string doc_id;
  std::string text;
};

// Sentences are 1-based in every external surface; sentences[0] is line 1.
struct SummaryRecord {
  std::string instance_id;
  std::string system_id;
  std::vector<std::string> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool degenerate() const noexcept { return sentences.empty(); }
};

enum class KeyfactOrigin { kHuman, kMachine };

inline constexpr std::size_t kMaxMachineKeyfacts = 16;

struct KeyfactList {
  std::string instance_id;
  std::vector<std::string> keyfacts;
  KeyfactOrigin origin = KeyfactOrigin::kHuman;

  std::size_t size() const noexcept { return keyfacts.size(); }
  bool operator==(const KeyfactList&) const = default;
};

std::string_view origin_name(KeyfactOrigin origin);
std::optional<KeyfactOrigin> parse_origin(std::string_view raw);

struct FactCheckVerdict {
  int sentence_index = 0;  // 1-based
  ErrorCategory category = ErrorCategory::kNoError;
  std::string reason;
  std::optional<std::string> evidence;

  bool has_error() const noexcept { return derive_binary(category); }
  bool operator==(const FactCheckVerdict&) const = default;
};

struct KeyfactAlignment {
  int keyfact_index = 0;  // 1-based
  bool matched = false;
  std::set<int> line_numbers;  // 1-based sentence indices, empty unless matched

  bool operator==(const KeyfactAlignment&) const = default;
};

// Bipartite keyfact -> sentence graph.
struct AlignmentGraph {
  std::vector<KeyfactAlignment> entries;

  std::set<std::pair<int, int>> edges() const;
  std::set<int> aligned_sentences() const;
  std::size_t matched_count() const;

  bool operator==(const AlignmentGraph&) const = default;
};

enum class ScoreProvenance { kComputed, kFailureDefault };

std::string_view provenance_name(ScoreProvenance provenance);

// Each component is absent when its task was not part of the run.
struct ScoreTriple {
  std::optional<Fraction> faithfulness;
  std::optional<Fraction> completeness;
  std::optional<Fraction> conciseness;
  ScoreProvenance provenance = ScoreProvenance::kComputed;

  static ScoreTriple failure_default() {
    return ScoreTriple{Fraction::whole(1), Fraction::whole(0), Fraction::whole(0),
                       ScoreProvenance::kFailureDefault};
  }

  bool operator==(const ScoreTriple&) const = default;
};

struct GoldSentenceLabel {
  int index = 0;
  bool has_error = false;
  std::optional<ErrorCategory> category;
  bool operator==(const GoldSentenceLabel&) const = default;
};

struct GoldKeyfactLabel {
  int index = 0;
  bool matched = false;
  std::optional<std::set<int>> line_numbers;
  bool operator==(const GoldKeyfactLabel&) const = default;
};

struct GoldAnnotations {
  std::optional<std::vector<GoldSentenceLabel>> sentence_labels;
  std::optional<std::vector<GoldKeyfactLabel>> keyfact_labels;
  bool operator==(const GoldAnnotations&) const = default;
};

// One unit of evaluation.
struct EvalInstance {
  std::string instance_id;
  std::string system_id;
  std::string document;
  std::optional<std::string> summary;
  bool presplit = false;  // sentences came from "summary_sentences"
  std::vector<std::string> sentences;
  std::optional<KeyfactList> keyfacts;
  std::optional<GoldAnnotations> gold;
  // Unrecognized string-valued fields (e.g. "reference"), kept for lookups.
  std::map<std::string, std::string> extra_text;

  SummaryRecord summary_record() const { return SummaryRecord{instance_id, system_id, sentences}; }
  bool operator==(const EvalInstance&) const = default;
};

}  // namespace finesure
