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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "finesure/core_model.hpp"
#include "finesure/llm_gateway.hpp"
#include "finesure/prompt_forge.hpp"
#include "finesure/response_parser.hpp"
#include "finesure/scoring.hpp"

namespace finesure::pipeline {

enum class KeyfactSource { kProvided, kExtractFromReference };

struct RunConfig {
  scoring::TaskSet tasks;
  prompt::PromptVariant fact_check_variant = prompt::default_variant(prompt::Task::kFactCheck);
  prompt::PromptVariant alignment_variant = prompt::default_variant(prompt::Task::kKeyfactAlignment);
  parse::ParseMode mode = parse::ParseMode::kStrict;
  KeyfactSource keyfact_source = KeyfactSource::kProvided;
  std::string reference_field = "reference";
  // Extracted keyfacts are kept here keyed by instance_id and reused.
  std::optional<std::filesystem::path> keyfact_cache;
  bool include_raw = true;
  std::uint64_t seed = 0;
};

// Throws kConfig when alignment is requested but some instance has neither
// provided keyfacts nor an extraction route.
void validate(const RunConfig& config, const std::vector<EvalInstance>& instances);

struct InstanceError {
  std::string instance_id;
  std::string reason;
};

struct EvaluationRun {
  std::vector<scoring::ScoredInstance> results;  // input order
  std::vector<InstanceError> errors;
  nlohmann::json summary;  // config echo, template versions, success ratios
};

EvaluationRun run_evaluation(std::vector<EvalInstance> instances, const RunConfig& config,
                             const llm::Gateway& gateway);

struct KeyfactExtractionRun {
  std::vector<KeyfactList> rows;  // input order, failed instances omitted
  std::vector<InstanceError> errors;
  std::vector<InstanceError> warnings;
};

KeyfactExtractionRun run_keyfact_extraction(const std::vector<EvalInstance>& instances,
                                            const RunConfig& config, const llm::Gateway& gateway);

struct SummaryRow {
  std::string doc_id;
  std::string system_id;
  std::string document;
  std::string summary;
};

struct SummarizationRun {
  std::vector<SummaryRow> rows;
  std::vector<InstanceError> errors;
};

SummarizationRun run_summarize(const std::vector<Document>& documents, const llm::Gateway& gateway);

// Documents JSONL: {"doc_id", "text"|"document"}.
std::vector<Document> load_documents(const std::filesystem::path& path);
// Summary rows double as instances: instance_id = doc_id + "/" + system_id.
nlohmann::json summary_row_to_json(const SummaryRow& row);

// Results JSONL.
nlohmann::json scored_to_json(const scoring::ScoredInstance& scored, bool include_raw = true);
scoring::ScoredInstance scored_from_json(const nlohmann::json& row, std::size_t line);
void write_results(const std::filesystem::path& path, const std::vector<scoring::ScoredInstance>& results,
                   bool include_raw = true);
std::vector<scoring::ScoredInstance> load_results(const std::filesystem::path& path);

nlohmann::json fraction_to_json(const Fraction& f);
Fraction fraction_from_json(const nlohmann::json& j);

nlohmann::json errors_to_json(const std::vector<InstanceError>& errors);

}  // namespace finesure::pipeline
