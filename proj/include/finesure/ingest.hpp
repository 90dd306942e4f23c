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

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "finesure/core_model.hpp"

namespace finesure::ingest {

// Calls `row` for each non-blank line of a JSONL file with its 1-based line
// number. Throws kIo when unreadable and kSchema(line) on malformed JSON.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const nlohmann::json&)>& row);

// Writes one compact JSON object per line; throws kIo when unwritable.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

// Rule-based sentence splitter. Boundaries are ". ! ?" (plus trailing
// closing quotes/brackets) followed by whitespace and then an uppercase
// letter, a quote or a digit. Tokens in the abbreviation stop-list never end
// a sentence. Throws kDegenerateInput when nothing but whitespace is given.
std::vector<std::string> segment_sentences(std::string_view summary_text);

bool is_abbreviation(std::string_view token);

EvalInstance instance_from_json(const nlohmann::json& row, std::size_t line);
nlohmann::json instance_to_json(const EvalInstance& instance);

// Rows in file order. Errors: kIo, kSchema naming the line (and both lines
// for duplicate instance ids).
std::vector<EvalInstance> load_instances(const std::filesystem::path& path);
void write_instances(const std::filesystem::path& path, const std::vector<EvalInstance>& instances);

using GoldTable = std::map<std::string, GoldAnnotations>;

GoldAnnotations gold_from_json(const nlohmann::json& row, std::size_t line);
GoldTable load_gold(const std::filesystem::path& path);

// Throws kShape when the labels do not cover exactly 1..n.
void check_gold_sentence_coverage(const GoldAnnotations& gold, std::size_t n,
                                  std::string_view instance_id);
void check_gold_keyfact_coverage(const GoldAnnotations& gold, std::size_t m,
                                 std::string_view instance_id);

// Joins gold rows onto instances. kJoin when a gold row names an unknown
// instance; kShape listing every instance whose label counts disagree with
// its N sentences or M keyfacts.
std::vector<EvalInstance> attach_gold(std::vector<EvalInstance> instances, const GoldTable& gold);
std::vector<EvalInstance> attach_gold(std::vector<EvalInstance> instances,
                                      const std::filesystem::path& gold_path);

// Keyfact side files: {"instance_id", "keyfacts": [str], "origin"?}.
std::map<std::string, KeyfactList> load_keyfacts(const std::filesystem::path& path);
nlohmann::json keyfacts_to_json(const KeyfactList& list);

}  // namespace finesure::ingest
