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

#include "finesure/prompt_forge.hpp"

#include <array>

#include "finesure/error.hpp"
#include "finesure/text_util.hpp"

namespace finesure::prompt {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kFactCheck: return "fact_check";
    case Task::kKeyfactAlignment: return "keyfact_alignment";
    case Task::kKeyfactExtraction: return "keyfact_extraction";
    case Task::kSummarize: return "summarize";
  }
  return "";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : {Task::kFactCheck, Task::kKeyfactAlignment, Task::kKeyfactExtraction,
                 Task::kSummarize}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view feature_name(Feature feature) {
  switch (feature) {
    case Feature::kInstruction: return "instruction";
    case Feature::kCategorization: return "categorization";
    case Feature::kReasoning: return "reasoning";
    case Feature::kEvidenceMapping: return "evidence_mapping";
  }
  return "";
}

std::string PromptVariant::feature_key() const {
  if (features.empty()) return "basic";
  std::string key;
  // std::set<Feature> iterates in enum order, which is the canonical order.
  for (Feature f : features) {
    if (!key.empty()) key += '+';
    key += feature_name(f);
  }
  return key;
}

std::string PromptVariant::template_key() const {
  return std::string(task_name(task)) + "." + feature_key() + ".txt";
}

namespace {

using F = Feature;

const std::vector<std::set<Feature>>& allowed_sets(Task task) {
  static const std::vector<std::set<Feature>> kFactCheck = {
      {},
      {F::kInstruction, F::kCategorization},
      {F::kInstruction, F::kCategorization, F::kReasoning},
      {F::kInstruction, F::kCategorization, F::kEvidenceMapping},
      {F::kInstruction, F::kCategorization, F::kReasoning, F::kEvidenceMapping},
  };
  static const std::vector<std::set<Feature>> kAlignment = {
      {}, {F::kInstruction}, {F::kInstruction, F::kReasoning}};
  static const std::vector<std::set<Feature>> kFixed = {{}};
  switch (task) {
    case Task::kFactCheck: return kFactCheck;
    case Task::kKeyfactAlignment: return kAlignment;
    default: return kFixed;
  }
}

}  // namespace

bool PromptVariant::allowed() const {
  for (const auto& s : allowed_sets(task))
    if (s == features) return true;
  return false;
}

PromptVariant default_variant(Task task) {
  switch (task) {
    case Task::kFactCheck:
      return {task, {F::kInstruction, F::kCategorization, F::kReasoning}};
    case Task::kKeyfactAlignment:
      return {task, {F::kInstruction}};
    default:
      return {task, {}};
  }
}

PromptVariant parse_variant(Task task, std::string_view features) {
  PromptVariant v{task, {}};
  const std::string_view spec = trim(features);
  if (spec != "basic" && !spec.empty()) {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      const std::size_t plus = spec.find('+', pos);
      const std::string_view name =
          trim(spec.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos));
      bool found = false;
      for (Feature f : {F::kInstruction, F::kCategorization, F::kReasoning, F::kEvidenceMapping}) {
        if (feature_name(f) == name) {
          v.features.insert(f);
          found = true;
        }
      }
      if (!found) {
        throw Error(ErrorCode::kVariantMismatch, "unknown prompt feature \"" + std::string(name) + "\"");
      }
      if (plus == std::string_view::npos) break;
      pos = plus + 1;
    }
  }
  if (!v.allowed()) {
    throw Error(ErrorCode::kVariantMismatch, "feature set \"" + v.feature_key() +
                                                 "\" is not a supported variant of " +
                                                 std::string(task_name(task)));
  }
  return v;
}

std::vector<PromptVariant> all_variants() {
  std::vector<PromptVariant> out;
  for (Task t : {Task::kFactCheck, Task::kKeyfactAlignment, Task::kKeyfactExtraction,
                 Task::kSummarize}) {
    for (const auto& s : allowed_sets(t)) out.push_back({t, s});
  }
  return out;
}

std::string_view schema_name(ExpectedSchema schema) {
  switch (schema) {
    case ExpectedSchema::kFactCheckArray: return "fact_check_array";
    case ExpectedSchema::kAlignmentArray: return "alignment_array";
    case ExpectedSchema::kKeyfactObject: return "keyfact_object";
    case ExpectedSchema::kPlainSummary: return "plain_summary";
  }
  return "";
}

const std::string& template_text(const std::string& key) {
  const auto& all = detail::embedded_templates();
  const auto it = all.find(key);
  if (it == all.end()) throw Error(ErrorCode::kVariantMismatch, "no prompt template \"" + key + "\"");
  return it->second;
}

std::string template_version(const std::string& key) { return sha256_hex(template_text(key)).substr(0, 12); }

std::map<std::string, std::string> template_versions() {
  std::map<std::string, std::string> out;
  for (const auto& [key, _] : detail::embedded_templates()) out[key] = template_version(key);
  return out;
}

std::string numbered_lines(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += '[' + std::to_string(i + 1) + "] " + items[i];
  }
  return out;
}

namespace {

// Single left-to-right pass, so placeholder-like text inside substituted
// values is never expanded.
std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    const std::string name = tmpl.substr(open + 2, close - open - 2);
    const auto it = slots.find(name);
    if (it == slots.end()) {
      out.append(tmpl, open, close + 2 - open);
    } else {
      out += it->second;
    }
    pos = close + 2;
  }
  return out;
}

void require_variant(const PromptVariant& variant, Task task) {
  if (variant.task != task || !variant.allowed()) {
    throw Error(ErrorCode::kVariantMismatch,
                "variant " + variant.template_key() + " cannot render a " +
                    std::string(task_name(task)) + " prompt");
  }
}

RenderedPrompt finish(const PromptVariant& variant, ExpectedSchema schema, std::size_t count,
                      const std::map<std::string, std::string>& slots) {
  const std::string key = variant.template_key();
  return RenderedPrompt{fill(template_text(key), slots), schema, count, variant,
                        template_version(key)};
}

}  // namespace

RenderedPrompt render_fact_check(std::string_view document, std::span<const std::string> sentences,
                                 const PromptVariant& variant) {
  require_variant(variant, Task::kFactCheck);
  if (sentences.empty()) throw Error(ErrorCode::kPrecondition, "fact check needs at least one sentence");
  if (is_blank(document)) throw Error(ErrorCode::kPrecondition, "fact check needs a document");
  return finish(variant, ExpectedSchema::kFactCheckArray, sentences.size(),
                {{"DOCUMENT", std::string(document)},
                 {"NUM_SENTENCES", std::to_string(sentences.size())},
                 {"SENTENCES", numbered_lines(sentences)}});
}

RenderedPrompt render_alignment(std::span<const std::string> keyfacts,
                                std::span<const std::string> sentences,
                                const PromptVariant& variant) {
  require_variant(variant, Task::kKeyfactAlignment);
  if (keyfacts.empty()) throw Error(ErrorCode::kPrecondition, "alignment needs at least one keyfact");
  if (sentences.empty()) throw Error(ErrorCode::kPrecondition, "alignment needs at least one sentence");
  return finish(variant, ExpectedSchema::kAlignmentArray, keyfacts.size(),
                {{"SENTENCES", numbered_lines(sentences)},
                 {"NUM_SENTENCES", std::to_string(sentences.size())},
                 {"NUM_KEYFACTS", std::to_string(keyfacts.size())},
                 {"KEYFACTS", numbered_lines(keyfacts)}});
}

RenderedPrompt render_keyfact_extraction(std::string_view reference_summary) {
  if (is_blank(reference_summary))
    throw Error(ErrorCode::kPrecondition, "keyfact extraction needs a reference summary");
  return finish(default_variant(Task::kKeyfactExtraction), ExpectedSchema::kKeyfactObject, 0,
                {{"REFERENCE", std::string(reference_summary)}});
}

RenderedPrompt render_summarize(std::string_view document) {
  if (is_blank(document)) throw Error(ErrorCode::kPrecondition, "summarization needs a document");
  return finish(default_variant(Task::kSummarize), ExpectedSchema::kPlainSummary, 0,
                {{"DOCUMENT", std::string(document)}});
}

}  // namespace finesure::prompt
