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

#include "finesure/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "finesure/text_util.hpp"

namespace finesure {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPrecondition: return "precondition-violation";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kSchema: return "schema-error";
    case ErrorCode::kJoin: return "join-error";
    case ErrorCode::kShape: return "shape-error";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kVariantMismatch: return "variant-mismatch";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kTransport: return "transport-error";
    case ErrorCode::kCoverage: return "coverage-error";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kDegenerateGold: return "degenerate-gold";
    case ErrorCode::kZeroVariance: return "zero-variance";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kTooFewSystems: return "too-few-systems";
    case ErrorCode::kNoPairableValues: return "no-pairable-values";
    case ErrorCode::kMismatchedInstances: return "mismatched-instances";
  }
  return "error";
}

std::string_view canonical_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kOutOfContext: return "out-of-context error";
    case ErrorCategory::kEntity: return "entity error";
    case ErrorCategory::kPredicate: return "predicate error";
    case ErrorCategory::kCircumstance: return "circumstantial error";
    case ErrorCategory::kGrammatical: return "grammatical error";
    case ErrorCategory::kDiscourseLink: return "linking error";
    case ErrorCategory::kCoreference: return "coreference error";
    case ErrorCategory::kOther: return "other error";
    case ErrorCategory::kNoError: return "no error";
  }
  return "other error";
}

std::string_view short_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kOutOfContext: return "OutE";
    case ErrorCategory::kEntity: return "EntE";
    case ErrorCategory::kPredicate: return "PredE";
    case ErrorCategory::kCircumstance: return "CirE";
    case ErrorCategory::kGrammatical: return "GramE";
    case ErrorCategory::kDiscourseLink: return "LinkE";
    case ErrorCategory::kCoreference: return "CorefE";
    case ErrorCategory::kOther: return "OtherE";
    case ErrorCategory::kNoError: return "NoError";
  }
  return "OtherE";
}

std::string_view category_description(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kOutOfContext:
      return "the statement contains information not present in the source article.";
    case ErrorCategory::kEntity:
      return "the primary arguments (or their attributes) of the predicate are wrong.";
    case ErrorCategory::kPredicate:
      return "the predicate in the summary statement is inconsistent with the source article.";
    case ErrorCategory::kCircumstance:
      return "the additional information (like location or time) specifying the circumstance "
             "around a predicate is wrong.";
    case ErrorCategory::kGrammatical:
      return "the grammar of the sentence is so wrong that it becomes meaningless.";
    case ErrorCategory::kDiscourseLink:
      return "error in how multiple statements are linked together in the discourse (for "
             "example temporal ordering or causal link).";
    case ErrorCategory::kCoreference:
      return "a pronoun or reference with wrong or non-existing antecedent.";
    case ErrorCategory::kOther:
      return "the statement contains any factuality error which is not defined here.";
    case ErrorCategory::kNoError:
      return "the statement aligns explicitly with the content of the source article and is "
             "factually consistent with it.";
  }
  return "";
}

bool is_extrinsic(ErrorCategory category) { return category == ErrorCategory::kOutOfContext; }

bool is_localizable(ErrorCategory category) {
  return std::find(kLocalizableCategories.begin(), kLocalizableCategories.end(), category) !=
         kLocalizableCategories.end();
}

namespace {

const std::unordered_map<std::string, ErrorCategory>& normalization_table() {
  static const auto* table = [] {
    auto* t = new std::unordered_map<std::string, ErrorCategory>();
    for (ErrorCategory c : kAllCategories) {
      (*t)[to_lower_ascii(canonical_name(c))] = c;
      (*t)[to_lower_ascii(short_code(c))] = c;
    }
    const std::pair<const char*, ErrorCategory> synonyms[] = {
        {"out of context error", ErrorCategory::kOutOfContext},
        {"out-of-context", ErrorCategory::kOutOfContext},
        {"out of context", ErrorCategory::kOutOfContext},
        {"entity", ErrorCategory::kEntity},
        {"predicate", ErrorCategory::kPredicate},
        {"circumstance error", ErrorCategory::kCircumstance},
        {"circumstance", ErrorCategory::kCircumstance},
        {"circumstantial", ErrorCategory::kCircumstance},
        {"grammatical", ErrorCategory::kGrammatical},
        {"grammar error", ErrorCategory::kGrammatical},
        {"discourse link error", ErrorCategory::kDiscourseLink},
        {"discourse link", ErrorCategory::kDiscourseLink},
        {"link error", ErrorCategory::kDiscourseLink},
        {"linking", ErrorCategory::kDiscourseLink},
        {"coreference", ErrorCategory::kCoreference},
        {"coref error", ErrorCategory::kCoreference},
        {"other", ErrorCategory::kOther},
        {"other errors", ErrorCategory::kOther},
        {"no errors", ErrorCategory::kNoError},
        {"no-error", ErrorCategory::kNoError},
        {"noerror", ErrorCategory::kNoError},
        {"none", ErrorCategory::kNoError},
    };
    for (const auto& [raw, c] : synonyms) (*t)[raw] = c;
    return t;
  }();
  return *table;
}

}  // namespace

std::optional<ErrorCategory> normalize_category(std::string_view raw) {
  std::string key = to_lower_ascii(trim(raw));
  // Collapse inner whitespace runs so "entity   error" matches.
  std::string collapsed;
  collapsed.reserve(key.size());
  for (char ch : key) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
    } else {
      collapsed.push_back(ch);
    }
  }
  const auto& table = normalization_table();
  const auto it = table.find(collapsed);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string_view origin_name(KeyfactOrigin origin) {
  return origin == KeyfactOrigin::kHuman ? "human" : "machine";
}

std::optional<KeyfactOrigin> parse_origin(std::string_view raw) {
  if (raw == "human") return KeyfactOrigin::kHuman;
  if (raw == "machine") return KeyfactOrigin::kMachine;
  return std::nullopt;
}

std::set<std::pair<int, int>> AlignmentGraph::edges() const {
  std::set<std::pair<int, int>> out;
  for (const auto& e : entries)
    for (int line : e.line_numbers) out.emplace(e.keyfact_index, line);
  return out;
}

std::set<int> AlignmentGraph::aligned_sentences() const {
  std::set<int> out;
  for (const auto& e : entries) out.insert(e.line_numbers.begin(), e.line_numbers.end());
  return out;
}

std::size_t AlignmentGraph::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.matched; }));
}

std::string_view provenance_name(ScoreProvenance provenance) {
  return provenance == ScoreProvenance::kComputed ? "computed" : "failure_default";
}

}  // namespace finesure
