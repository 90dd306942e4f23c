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

#include "finesure/response_parser.hpp"

#include <cmath>

#include "finesure/text_util.hpp"

namespace finesure::parse {

using nlohmann::json;

std::string_view failure_reason_name(FailureReason reason) {
  switch (reason) {
    case FailureReason::kNotJson: return "not_json";
    case FailureReason::kWrongSchema: return "wrong_schema";
    case FailureReason::kIncompleteCoverage: return "incomplete_coverage";
    case FailureReason::kEmptyOutput: return "empty_output";
  }
  return "";
}

std::optional<FailureReason> parse_failure_reason(std::string_view name) {
  for (FailureReason r : {FailureReason::kNotJson, FailureReason::kWrongSchema,
                          FailureReason::kIncompleteCoverage, FailureReason::kEmptyOutput}) {
    if (failure_reason_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view mode_name(ParseMode mode) { return mode == ParseMode::kStrict ? "strict" : "lenient"; }

std::optional<ParseMode> parse_mode(std::string_view name) {
  if (name == "strict") return ParseMode::kStrict;
  if (name == "lenient") return ParseMode::kLenient;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON extraction

namespace {

// Contents of every ``` fenced block, language tag line removed.
std::vector<std::string_view> fenced_blocks(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    std::size_t body = open + 3;
    const std::size_t eol = text.find('\n', body);
    const std::size_t close = text.find("```", body);
    if (close == std::string_view::npos) {
      // Unterminated fence: take the rest.
      if (eol != std::string_view::npos) out.push_back(text.substr(eol + 1));
      break;
    }
    if (eol != std::string_view::npos && eol < close) {
      const std::string_view tag = trim(text.substr(body, eol - body));
      if (tag.find_first_of("[{") == std::string_view::npos) body = eol + 1;
    }
    out.push_back(text.substr(body, close - body));
    pos = close + 3;
  }
  return out;
}

// End (inclusive) of the balanced bracket run starting at `start`, or npos.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::string expected;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t j = start; j < text.size(); ++j) {
    const char ch = text[j];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (ch == '\\') {
        escaped = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    switch (ch) {
      case '"': in_string = true; break;
      case '[': expected.push_back(']'); break;
      case '{': expected.push_back('}'); break;
      case ']':
      case '}':
        if (expected.empty() || expected.back() != ch) return std::string_view::npos;
        expected.pop_back();
        if (expected.empty()) return j;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

// Drops commas that directly precede a closing bracket (outside strings).
std::string strip_trailing_commas(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_string) {
      out.push_back(ch);
      if (escaped) escaped = false;
      else if (ch == '\\') escaped = true;
      else if (ch == '"') in_string = false;
      continue;
    }
    if (ch == '"') in_string = true;
    if (ch == ',') {
      std::size_t k = i + 1;
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (k < text.size() && (text[k] == ']' || text[k] == '}')) continue;
    }
    out.push_back(ch);
  }
  return out;
}

std::optional<json> try_parse(std::string_view candidate) {
  json value = json::parse(candidate, nullptr, /*allow_exceptions=*/false);
  if (!value.is_discarded()) return value;
  value = json::parse(strip_trailing_commas(candidate), nullptr, false);
  if (!value.is_discarded()) return value;
  return std::nullopt;
}

std::optional<json> scan(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[' && text[i] != '{') continue;
    const std::size_t end = balanced_end(text, i);
    if (end == std::string_view::npos) continue;
    if (auto value = try_parse(text.substr(i, end - i + 1))) return value;
  }
  return std::nullopt;
}

}  // namespace

std::optional<json> extract_json(std::string_view raw_text) {
  for (std::string_view block : fenced_blocks(raw_text)) {
    if (auto value = scan(block)) return value;
  }
  return scan(raw_text);
}

// ---------------------------------------------------------------------------
// Task parsers

namespace {

std::string item_label(std::size_t index) { return "item " + std::to_string(index + 1); }

const json* find_key(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const auto it = obj.find(k);
    if (it != obj.end()) return &*it;
  }
  return nullptr;
}

// Integer-valued JSON number or numeric string ("2"); nullopt otherwise.
std::optional<long long> as_line_number(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 1e9) return static_cast<long long>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s(trim(v.get<std::string>()));
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9)
      return std::nullopt;
    return std::stoll(s);
  }
  return std::nullopt;
}

}  // namespace

FactCheckOutcome parse_fact_check(std::string_view raw_text, std::size_t expected_count,
                                  ParseMode mode) {
  if (expected_count == 0) throw Error(ErrorCode::kPrecondition, "fact check expects N >= 1");
  if (is_blank(raw_text)) return FactCheckOutcome::failed(FailureReason::kEmptyOutput, "blank reply");
  const auto value = extract_json(raw_text);
  if (!value) return FactCheckOutcome::failed(FailureReason::kNotJson, "no JSON array found");
  if (!value->is_array())
    return FactCheckOutcome::failed(FailureReason::kWrongSchema, "expected a JSON array");

  std::vector<ParseWarning> warnings;
  std::size_t usable = value->size();
  if (usable > expected_count) {
    if (mode == ParseMode::kStrict) {
      return FactCheckOutcome::failed(FailureReason::kWrongSchema,
                                      std::to_string(usable) + " verdicts for " +
                                          std::to_string(expected_count) + " sentences");
    }
    warnings.push_back({"truncated",
                        "dropped " + std::to_string(usable - expected_count) + " extra verdicts", 0});
    usable = expected_count;
  }

  std::vector<FactCheckVerdict> verdicts;
  verdicts.reserve(usable);
  for (std::size_t i = 0; i < usable; ++i) {
    const json& item = (*value)[i];
    if (!item.is_object())
      return FactCheckOutcome::failed(FailureReason::kWrongSchema, item_label(i) + " is not an object",
                                      std::move(warnings));
    const json* cat = find_key(item, {"category"});
    if (!cat || !cat->is_string())
      return FactCheckOutcome::failed(FailureReason::kWrongSchema,
                                      item_label(i) + " lacks a \"category\" string",
                                      std::move(warnings));
    FactCheckVerdict verdict;
    verdict.sentence_index = static_cast<int>(i + 1);
    const std::string raw_cat = cat->get<std::string>();
    if (const auto normalized = normalize_category(raw_cat)) {
      verdict.category = *normalized;
    } else if (mode == ParseMode::kStrict) {
      return FactCheckOutcome::failed(FailureReason::kWrongSchema,
                                      item_label(i) + " has unknown category \"" + raw_cat + "\"",
                                      std::move(warnings));
    } else {
      verdict.category = ErrorCategory::kOther;
      warnings.push_back({"unknown_category", "\"" + raw_cat + "\" mapped to other error",
                          verdict.sentence_index});
    }
    if (const json* reason = find_key(item, {"reason"}); reason && reason->is_string())
      verdict.reason = reason->get<std::string>();
    if (const json* evidence = find_key(item, {"evidence"}); evidence && evidence->is_string())
      verdict.evidence = evidence->get<std::string>();
    verdicts.push_back(std::move(verdict));
  }
  if (verdicts.size() < expected_count) {
    return FactCheckOutcome::failed(FailureReason::kIncompleteCoverage,
                                    std::to_string(verdicts.size()) + " verdicts for " +
                                        std::to_string(expected_count) + " sentences",
                                    std::move(warnings));
  }
  return FactCheckOutcome::success(std::move(verdicts), std::move(warnings));
}

AlignmentOutcome parse_alignment(std::string_view raw_text, std::size_t expected_keyfacts,
                                 std::size_t num_sentences, ParseMode mode) {
  if (expected_keyfacts == 0 || num_sentences == 0)
    throw Error(ErrorCode::kPrecondition, "alignment expects M >= 1 and N >= 1");
  if (is_blank(raw_text)) return AlignmentOutcome::failed(FailureReason::kEmptyOutput, "blank reply");
  const auto value = extract_json(raw_text);
  if (!value) return AlignmentOutcome::failed(FailureReason::kNotJson, "no JSON array found");
  if (!value->is_array())
    return AlignmentOutcome::failed(FailureReason::kWrongSchema, "expected a JSON array");

  std::vector<ParseWarning> warnings;
  std::size_t usable = value->size();
  if (usable > expected_keyfacts) {
    if (mode == ParseMode::kStrict) {
      return AlignmentOutcome::failed(FailureReason::kWrongSchema,
                                      std::to_string(usable) + " entries for " +
                                          std::to_string(expected_keyfacts) + " keyfacts");
    }
    warnings.push_back(
        {"truncated", "dropped " + std::to_string(usable - expected_keyfacts) + " extra entries", 0});
    usable = expected_keyfacts;
  }

  AlignmentGraph graph;
  for (std::size_t i = 0; i < usable; ++i) {
    const json& item = (*value)[i];
    const int k = static_cast<int>(i + 1);
    if (!item.is_object())
      return AlignmentOutcome::failed(FailureReason::kWrongSchema, item_label(i) + " is not an object",
                                      std::move(warnings));
    const json* response = find_key(item, {"response"});
    if (!response || !response->is_string())
      return AlignmentOutcome::failed(FailureReason::kWrongSchema,
                                      item_label(i) + " lacks a \"response\" string",
                                      std::move(warnings));
    const std::string answer = to_lower_ascii(trim(response->get<std::string>()));
    KeyfactAlignment entry{k, false, {}};
    if (answer == "yes") {
      entry.matched = true;
    } else if (answer != "no") {
      if (mode == ParseMode::kStrict) {
        return AlignmentOutcome::failed(
            FailureReason::kWrongSchema,
            item_label(i) + " has response \"" + response->get<std::string>() + "\"",
            std::move(warnings));
      }
      warnings.push_back({"unknown_response",
                          "\"" + response->get<std::string>() + "\" treated as No", k});
    }

    const json* lines = find_key(item, {"line numbers", "line number", "line_numbers"});
    if (lines && !lines->is_null()) {
      const json list = lines->is_array() ? *lines : json::array({*lines});
      for (const json& line : list) {
        const auto number = as_line_number(line);
        if (!number) {
          if (mode == ParseMode::kStrict) {
            return AlignmentOutcome::failed(FailureReason::kWrongSchema,
                                            item_label(i) + " has a non-integer line number",
                                            std::move(warnings));
          }
          warnings.push_back({"bad_line_number", "dropped " + line.dump(), k});
          continue;
        }
        if (*number < 1 || *number > static_cast<long long>(num_sentences)) {
          warnings.push_back({"line_out_of_range",
                              "dropped line " + std::to_string(*number) + " (N=" +
                                  std::to_string(num_sentences) + ")",
                              k});
          continue;
        }
        if (entry.matched) entry.line_numbers.insert(static_cast<int>(*number));
      }
    }
    graph.entries.push_back(std::move(entry));
  }
  if (graph.entries.size() < expected_keyfacts) {
    return AlignmentOutcome::failed(FailureReason::kIncompleteCoverage,
                                    std::to_string(graph.entries.size()) + " entries for " +
                                        std::to_string(expected_keyfacts) + " keyfacts",
                                    std::move(warnings));
  }
  return AlignmentOutcome::success(std::move(graph), std::move(warnings));
}

KeyfactOutcome parse_keyfacts(std::string_view raw_text) {
  if (is_blank(raw_text)) return KeyfactOutcome::failed(FailureReason::kEmptyOutput, "blank reply");
  const auto value = extract_json(raw_text);
  if (!value) return KeyfactOutcome::failed(FailureReason::kNotJson, "no JSON object found");
  if (!value->is_object())
    return KeyfactOutcome::failed(FailureReason::kWrongSchema, "expected a JSON object");
  const json* list = find_key(*value, {"key facts"});
  if (!list || !list->is_array() || list->empty())
    return KeyfactOutcome::failed(FailureReason::kWrongSchema,
                                  "expected \"key facts\" to be a non-empty list");
  KeyfactList out;
  out.origin = KeyfactOrigin::kMachine;
  for (const json& item : *list) {
    if (!item.is_string() || is_blank(item.get<std::string>()))
      return KeyfactOutcome::failed(FailureReason::kWrongSchema, "keyfacts must be non-empty strings");
    out.keyfacts.emplace_back(trim(item.get<std::string>()));
  }
  std::vector<ParseWarning> warnings;
  if (out.keyfacts.size() > kMaxMachineKeyfacts) {
    warnings.push_back({"truncated",
                        "kept the first " + std::to_string(kMaxMachineKeyfacts) + " of " +
                            std::to_string(out.keyfacts.size()) + " keyfacts",
                        0});
    out.keyfacts.resize(kMaxMachineKeyfacts);
  }
  return KeyfactOutcome::success(std::move(out), std::move(warnings));
}

SummaryOutcome parse_summary(std::string_view raw_text) {
  if (is_blank(raw_text)) return SummaryOutcome::failed(FailureReason::kEmptyOutput, "blank reply");
  return SummaryOutcome::success(std::string(trim(raw_text)));
}

Fraction success_ratio(std::span<const ParseStatus> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::kEmptyInput, "success ratio of zero outcomes");
  std::int64_t ok = 0;
  for (const auto& o : outcomes) ok += o.ok() ? 1 : 0;
  return Fraction(ok, static_cast<std::int64_t>(outcomes.size()));
}

}  // namespace finesure::parse
