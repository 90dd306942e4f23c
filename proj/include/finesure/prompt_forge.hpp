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

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace finesure::prompt {

enum class Task { kFactCheck, kKeyfactAlignment, kKeyfactExtraction, kSummarize };

enum class Feature { kInstruction, kCategorization, kReasoning, kEvidenceMapping };

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
std::string_view feature_name(Feature feature);

struct PromptVariant {
  Task task = Task::kFactCheck;
  std::set<Feature> features;

  // "instruction+categorization+reasoning", or "basic" for the empty set.
  std::string feature_key() const;
  // "fact_check.instruction+categorization+reasoning.txt"
  std::string template_key() const;
  bool allowed() const;

  bool operator==(const PromptVariant&) const = default;
};

// Recommended defaults: instruction + categorization + reasoning for fact
// checking, instruction only for keyfact alignment.
PromptVariant default_variant(Task task);

// Parses "instruction+categorization" (or "basic") into a variant of `task`.
// Throws kVariantMismatch for unknown feature names or disallowed sets.
PromptVariant parse_variant(Task task, std::string_view features);

// Every allowed variant, in a stable order.
std::vector<PromptVariant> all_variants();

enum class ExpectedSchema { kFactCheckArray, kAlignmentArray, kKeyfactObject, kPlainSummary };

std::string_view schema_name(ExpectedSchema schema);

struct RenderedPrompt {
  std::string text;
  ExpectedSchema expected_schema = ExpectedSchema::kPlainSummary;
  std::size_t expected_count = 0;  // N for fact checking, M for alignment
  PromptVariant variant;
  std::string template_version;
};

// Raw template text by key; throws kVariantMismatch for unknown keys.
const std::string& template_text(const std::string& key);
// First 12 hex digits of the template's SHA-256.
std::string template_version(const std::string& key);
// key -> version for every bundled template.
std::map<std::string, std::string> template_versions();

// "[1] first\n[2] second" numbering used inside prompts.
std::string numbered_lines(std::span<const std::string> items);

RenderedPrompt render_fact_check(std::string_view document, std::span<const std::string> sentences,
                                 const PromptVariant& variant = default_variant(Task::kFactCheck));

RenderedPrompt render_alignment(std::span<const std::string> keyfacts,
                                std::span<const std::string> sentences,
                                const PromptVariant& variant = default_variant(Task::kKeyfactAlignment));

RenderedPrompt render_keyfact_extraction(std::string_view reference_summary);

RenderedPrompt render_summarize(std::string_view document);

}  // namespace finesure::prompt
