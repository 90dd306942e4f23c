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
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "finesure/fraction.hpp"
#include "finesure/meta_eval.hpp"

namespace finesure::report {

enum class Format { kJson, kCsv, kMarkdown };
std::string_view format_name(Format f);
std::optional<Format> parse_format(std::string_view name);

// How a value is displayed: scores and correlations with 4 decimals,
// ratios and accuracies as percentages with 1 decimal.
enum class Kind { kScore, kPercent, kCount, kText };

struct Entry {
  std::string section;
  std::string metric;
  std::string dimension;  // may be empty
  Kind kind = Kind::kScore;
  std::optional<double> value;  // nullopt renders as n/a
  std::optional<Fraction> exact;
  std::string note;

  std::string display() const;
  bool operator==(const Entry&) const = default;
};

// Flat view of a report; every renderer works from this list.
std::vector<Entry> flatten(const meta::MetaReport& report);

nlohmann::json entries_to_json(const std::vector<Entry>& entries);
std::vector<Entry> entries_from_json(const nlohmann::json& doc);

// `metadata` is echoed into the JSON document and as a header elsewhere.
std::string render(const std::vector<Entry>& entries, Format format,
                   const nlohmann::json& metadata = nlohmann::json::object());

nlohmann::json options_to_json(const meta::BenchmarkOptions& options);

}  // namespace finesure::report
