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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "finesure/core_model.hpp"

namespace finesure::parse {

enum class FailureReason { kNotJson, kWrongSchema, kIncompleteCoverage, kEmptyOutput };

std::string_view failure_reason_name(FailureReason reason);
std::optional<FailureReason> parse_failure_reason(std::string_view name);

// Strict rejects unknown labels and over-long arrays; lenient maps unknown
// labels to a fallback and truncates. Missing items fail in both modes.
enum class ParseMode { kStrict, kLenient };

std::string_view mode_name(ParseMode mode);
std::optional<ParseMode> parse_mode(std::string_view name);

struct ParseWarning {
  std::string code;    // e.g. "line_out_of_range", "truncated"
  std::string detail;
  int item = 0;        // 1-based item the warning refers to, 0 for the whole reply

  bool operator==(const ParseWarning&) const = default;
};

// Status-only view of an outcome, for success-ratio accounting.
struct ParseStatus {
  std::optional<FailureReason> failure;  // nullopt means ok

  bool ok() const noexcept { return !failure.has_value(); }
  bool operator==(const ParseStatus&) const = default;
};

template <typename Payload>
struct ParseOutcome {
  std::optional<Payload> payload;        // present iff ok
  std::optional<FailureReason> failure;  // present iff failed
  std::string detail;
  std::vector<ParseWarning> warnings;

  bool ok() const noexcept { return payload.has_value(); }
  ParseStatus status() const { return ParseStatus{failure}; }

  static ParseOutcome success(Payload p, std::vector<ParseWarning> w = {}) {
    return ParseOutcome{std::move(p), std::nullopt, {}, std::move(w)};
  }
  static ParseOutcome failed(FailureReason reason, std::string why,
                             std::vector<ParseWarning> w = {}) {
    return ParseOutcome{std::nullopt, reason, std::move(why), std::move(w)};
  }

  bool operator==(const ParseOutcome&) const = default;
};

using FactCheckOutcome = ParseOutcome<std::vector<FactCheckVerdict>>;
using AlignmentOutcome = ParseOutcome<AlignmentGraph>;
using KeyfactOutcome = ParseOutcome<KeyfactList>;
using SummaryOutcome = ParseOutcome<std::string>;

// Finds the JSON payload inside free-form model output: code fences are
// stripped, then the earliest balanced array/object that parses is taken.
// Trailing commas are tolerated. nullopt means not_json.
std::optional<nlohmann::json> extract_json(std::string_view raw_text);

// Positional pairing: the i-th array element is the verdict for sentence i.
FactCheckOutcome parse_fact_check(std::string_view raw_text, std::size_t expected_count,
                                  ParseMode mode = ParseMode::kStrict);

AlignmentOutcome parse_alignment(std::string_view raw_text, std::size_t expected_keyfacts,
                                 std::size_t num_sentences, ParseMode mode = ParseMode::kStrict);

// Machine keyfacts, capped at 16. instance_id is left empty for the caller.
KeyfactOutcome parse_keyfacts(std::string_view raw_text);

// Plain-text summary; only a blank reply fails.
SummaryOutcome parse_summary(std::string_view raw_text);

// ok / total, exact. Throws kEmptyInput on an empty list.
Fraction success_ratio(std::span<const ParseStatus> outcomes);

}  // namespace finesure::parse
