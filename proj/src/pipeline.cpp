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

#include "finesure/pipeline.hpp"

#include <map>

#include "finesure/ingest.hpp"
#include "finesure/text_util.hpp"

namespace finesure::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kFactCheckTask = "fact_check";
constexpr const char* kAlignmentTask = "alignment";
constexpr const char* kExtractionTask = "keyfact_extraction";
constexpr const char* kSummarizeTask = "summarize";

std::optional<std::string> reference_of(const EvalInstance& inst, const std::string& field) {
  const auto it = inst.extra_text.find(field);
  if (it == inst.extra_text.end() || is_blank(it->second)) return std::nullopt;
  return it->second;
}

scoring::TaskParseRecord record_of(const parse::ParseStatus& status, std::string detail,
                                   std::vector<parse::ParseWarning> warnings) {
  return scoring::TaskParseRecord{status, std::move(detail), std::move(warnings)};
}

template <typename Outcome>
scoring::TaskParseRecord record_of(const Outcome& outcome) {
  return record_of(outcome.status(), outcome.detail, outcome.warnings);
}

scoring::TaskParseRecord transport_failure(const llm::CompletionResult& result) {
  return record_of(parse::ParseStatus{parse::FailureReason::kEmptyOutput},
                   "transport error: " + result.error_detail, {});
}

json backend_echo(const llm::BackendConfig& b) {
  json j = {
      {"kind", b.kind == llm::BackendKind::kMockReplay ? "mock" : "openai"},
      {"model", b.model_name},
      {"temperature", b.temperature},
      {"max_output_tokens", b.max_output_tokens},
      {"max_retries", b.max_retries},
      {"parallelism", b.parallelism},
      {"request_timeout_ms", b.request_timeout.count()},
      {"cache", b.cache_dir.has_value()},
  };
  if (!b.endpoint_url.empty()) j["endpoint"] = b.endpoint_url;
  return j;
}

json config_echo(const RunConfig& c, const llm::BackendConfig& backend) {
  json tasks = json::array();
  if (c.tasks.fact_check) tasks.push_back(kFactCheckTask);
  if (c.tasks.alignment) tasks.push_back(kAlignmentTask);
  return json{
      {"tasks", tasks},
      {"fact_check_variant", c.fact_check_variant.template_key()},
      {"alignment_variant", c.alignment_variant.template_key()},
      {"mode", std::string(parse::mode_name(c.mode))},
      {"keyfact_source", c.keyfact_source == KeyfactSource::kProvided ? "provided" : "extract_from_reference"},
      {"reference_field", c.reference_field},
      {"include_raw", c.include_raw},
      {"seed", c.seed},
      {"backend", backend_echo(backend)},
  };
}

json ratio_json(const std::vector<parse::ParseStatus>& statuses) {
  if (statuses.empty()) return nullptr;
  return fraction_to_json(parse::success_ratio(statuses));
}

}  // namespace

void validate(const RunConfig& config, const std::vector<EvalInstance>& instances) {
  if (config.tasks.empty()) throw Error(ErrorCode::kConfig, "no tasks selected");
  if (!config.fact_check_variant.allowed() || config.fact_check_variant.task != prompt::Task::kFactCheck)
    throw Error(ErrorCode::kConfig, "invalid fact check variant " + config.fact_check_variant.template_key());
  if (!config.alignment_variant.allowed() ||
      config.alignment_variant.task != prompt::Task::kKeyfactAlignment)
    throw Error(ErrorCode::kConfig, "invalid alignment variant " + config.alignment_variant.template_key());
  if (!config.tasks.alignment || config.keyfact_source == KeyfactSource::kExtractFromReference) return;
  for (const auto& inst : instances) {
    if (!inst.keyfacts) {
      throw Error(ErrorCode::kConfig,
                  "alignment needs keyfacts but instance \"" + inst.instance_id +
                      "\" has none; pass --keyfacts <file> or --extract-keyfacts");
    }
  }
}

// ---------------------------------------------------------------------------
// Keyfact extraction

KeyfactExtractionRun run_keyfact_extraction(const std::vector<EvalInstance>& instances,
                                            const RunConfig& config, const llm::Gateway& gateway) {
  KeyfactExtractionRun run;
  std::vector<llm::CompletionRequest> requests;
  std::vector<std::size_t> owners;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto reference = reference_of(instances[i], config.reference_field);
    if (!reference) {
      run.errors.push_back({instances[i].instance_id,
                            "missing reference field \"" + config.reference_field + "\""});
      continue;
    }
    requests.push_back({instances[i].instance_id, kExtractionTask,
                        prompt::render_keyfact_extraction(*reference).text});
    owners.push_back(i);
  }
  const auto completions = gateway.complete_batch(requests);
  for (std::size_t r = 0; r < completions.size(); ++r) {
    const auto& inst = instances[owners[r]];
    if (!completions[r].ok()) {
      run.errors.push_back({inst.instance_id, "transport error: " + completions[r].error_detail});
      continue;
    }
    auto outcome = parse::parse_keyfacts(completions[r].raw_text);
    if (!outcome.ok()) {
      run.errors.push_back({inst.instance_id, std::string(parse::failure_reason_name(*outcome.failure)) +
                                                  ": " + outcome.detail});
      continue;
    }
    for (const auto& w : outcome.warnings) run.warnings.push_back({inst.instance_id, w.code + ": " + w.detail});
    KeyfactList list = std::move(*outcome.payload);
    list.instance_id = inst.instance_id;
    run.rows.push_back(std::move(list));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Evaluation

EvaluationRun run_evaluation(std::vector<EvalInstance> instances, const RunConfig& config,
                             const llm::Gateway& gateway) {
  validate(config, instances);
  EvaluationRun run;

  // Keyfacts for instances that came without them.
  std::map<std::string, std::string> extraction_failure;
  if (config.tasks.alignment && config.keyfact_source == KeyfactSource::kExtractFromReference) {
    std::map<std::string, KeyfactList> cached;
    if (config.keyfact_cache && std::filesystem::exists(*config.keyfact_cache))
      cached = ingest::load_keyfacts(*config.keyfact_cache);
    std::vector<EvalInstance> pending;
    for (auto& inst : instances) {
      if (inst.keyfacts) continue;
      if (const auto it = cached.find(inst.instance_id); it != cached.end()) {
        inst.keyfacts = it->second;
      } else {
        pending.push_back(inst);
      }
    }
    if (!pending.empty()) {
      const auto extracted = run_keyfact_extraction(pending, config, gateway);
      for (const auto& e : extracted.errors) {
        extraction_failure[e.instance_id] = e.reason;
        run.errors.push_back({e.instance_id, "keyfact extraction: " + e.reason});
      }
      for (const auto& list : extracted.rows) cached[list.instance_id] = list;
      for (auto& inst : instances) {
        if (!inst.keyfacts) {
          if (const auto it = cached.find(inst.instance_id); it != cached.end()) inst.keyfacts = it->second;
        }
      }
      if (config.keyfact_cache) {
        std::vector<json> rows;
        for (const auto& [_, list] : cached) rows.push_back(ingest::keyfacts_to_json(list));
        ingest::write_jsonl(*config.keyfact_cache, rows);
      }
    }
  }

  // One request per (instance, task); batching is invisible in the output.
  std::vector<llm::CompletionRequest> requests;
  struct Slot {
    std::optional<std::size_t> fact;
    std::optional<std::size_t> align;
  };
  std::vector<Slot> slots(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.sentences.empty()) continue;
    if (config.tasks.fact_check) {
      slots[i].fact = requests.size();
      requests.push_back({inst.instance_id, kFactCheckTask,
                          prompt::render_fact_check(inst.document, inst.sentences, config.fact_check_variant).text});
    }
    if (config.tasks.alignment && inst.keyfacts) {
      slots[i].align = requests.size();
      requests.push_back({inst.instance_id, kAlignmentTask,
                          prompt::render_alignment(inst.keyfacts->keyfacts, inst.sentences,
                                                   config.alignment_variant)
                              .text});
    }
  }
  const auto completions = gateway.complete_batch(requests);

  std::vector<parse::ParseStatus> fact_statuses;
  std::vector<parse::ParseStatus> align_statuses;
  std::vector<parse::ParseStatus> overall;
  std::size_t failure_defaults = 0;
  std::size_t long_prompts = 0;
  std::size_t transport_errors = 0;
  for (const auto& c : completions) {
    long_prompts += c.long_prompt ? 1 : 0;
    transport_errors += c.ok() ? 0 : 1;
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    scoring::ScoredInstance scored;
    scored.instance_id = inst.instance_id;
    scored.system_id = inst.system_id;
    scored.num_sentences = inst.sentences.size();
    scored.num_keyfacts = inst.keyfacts ? inst.keyfacts->size() : 0;

    std::optional<parse::FactCheckOutcome> fact;
    std::optional<parse::AlignmentOutcome> align;
    if (config.tasks.fact_check) {
      if (!slots[i].fact) {
        scored.fact_check = record_of(parse::ParseStatus{parse::FailureReason::kEmptyOutput},
                                      "summary has no sentences", {});
      } else {
        const auto& completion = completions[*slots[i].fact];
        if (config.include_raw) scored.raw[kFactCheckTask] = completion.raw_text;
        if (!completion.ok()) {
          scored.fact_check = transport_failure(completion);
        } else {
          fact = parse::parse_fact_check(completion.raw_text, inst.sentences.size(), config.mode);
          scored.fact_check = record_of(*fact);
          if (fact->ok()) scored.verdicts = fact->payload;
        }
      }
      fact_statuses.push_back(scored.fact_check->status);
    }
    if (config.tasks.alignment) {
      if (!slots[i].align) {
        std::string why = inst.sentences.empty() ? "summary has no sentences" : "no keyfacts available";
        if (const auto it = extraction_failure.find(inst.instance_id); it != extraction_failure.end())
          why = "keyfact extraction failed: " + it->second;
        scored.alignment_parse = record_of(parse::ParseStatus{parse::FailureReason::kEmptyOutput}, why, {});
      } else {
        const auto& completion = completions[*slots[i].align];
        if (config.include_raw) scored.raw[kAlignmentTask] = completion.raw_text;
        if (!completion.ok()) {
          scored.alignment_parse = transport_failure(completion);
        } else {
          align = parse::parse_alignment(completion.raw_text, inst.keyfacts->size(), inst.sentences.size(),
                                         config.mode);
          scored.alignment_parse = record_of(*align);
          if (align->ok()) scored.alignment = align->payload;
        }
      }
      align_statuses.push_back(scored.alignment_parse->status);
    }

    scored.scores = scoring::score_instance(fact ? &*fact : nullptr, align ? &*align : nullptr,
                                            scored.num_sentences, scored.num_keyfacts, config.tasks);
    if (scored.scores.provenance == ScoreProvenance::kFailureDefault) ++failure_defaults;
    overall.push_back(scored.parse_ok() ? parse::ParseStatus{}
                                        : parse::ParseStatus{parse::FailureReason::kWrongSchema});
    run.results.push_back(std::move(scored));
  }

  json templates = json::object();
  const auto versions = prompt::template_versions();
  if (config.tasks.fact_check) {
    const auto key = config.fact_check_variant.template_key();
    templates[key] = versions.at(key);
  }
  if (config.tasks.alignment) {
    const auto key = config.alignment_variant.template_key();
    templates[key] = versions.at(key);
    if (config.keyfact_source == KeyfactSource::kExtractFromReference) {
      const auto ek = prompt::default_variant(prompt::Task::kKeyfactExtraction).template_key();
      templates[ek] = versions.at(ek);
    }
  }
  run.summary = json{
      {"config", config_echo(config, gateway.config())},
      {"template_versions", templates},
      {"counts",
       {{"instances", instances.size()},
        {"requests", requests.size()},
        {"failure_default", failure_defaults},
        {"transport_errors", transport_errors},
        {"long_prompts", long_prompts}}},
      {"success_ratio",
       {{"overall", ratio_json(overall)},
        {kFactCheckTask, ratio_json(fact_statuses)},
        {kAlignmentTask, ratio_json(align_statuses)}}},
      {"errors", errors_to_json(run.errors)},
  };
  return run;
}

// ---------------------------------------------------------------------------
// Summarization

SummarizationRun run_summarize(const std::vector<Document>& documents, const llm::Gateway& gateway) {
  SummarizationRun run;
  std::vector<llm::CompletionRequest> requests;
  for (const auto& doc : documents)
    requests.push_back({doc.doc_id, kSummarizeTask, prompt::render_summarize(doc.text).text});
  const auto completions = gateway.complete_batch(requests);
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!completions[i].ok()) {
      run.errors.push_back({documents[i].doc_id, "transport error: " + completions[i].error_detail});
      continue;
    }
    const auto outcome = parse::parse_summary(completions[i].raw_text);
    if (!outcome.ok()) {
      run.errors.push_back({documents[i].doc_id, std::string(parse::failure_reason_name(*outcome.failure))});
      continue;
    }
    run.rows.push_back({documents[i].doc_id, gateway.config().model_name, documents[i].text, *outcome.payload});
  }
  return run;
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> out;
  std::map<std::string, std::size_t> seen;
  ingest::read_jsonl(path, [&](std::size_t line, const json& row) {
    const auto at = "line " + std::to_string(line);
    if (!row.contains("doc_id") || !row["doc_id"].is_string() || row["doc_id"].get<std::string>().empty())
      throw Error(ErrorCode::kSchema, at + ": missing field \"doc_id\"");
    const char* text_key = row.contains("text") ? "text" : "document";
    if (!row.contains(text_key) || !row[text_key].is_string() || is_blank(row[text_key].get<std::string>()))
      throw Error(ErrorCode::kSchema, at + ": missing or empty field \"text\"");
    Document doc{row["doc_id"].get<std::string>(), row[text_key].get<std::string>()};
    if (const auto [it, ok] = seen.emplace(doc.doc_id, line); !ok)
      throw Error(ErrorCode::kSchema, "duplicate doc_id \"" + doc.doc_id + "\" on line " +
                                          std::to_string(it->second) + " and " + at);
    out.push_back(std::move(doc));
  });
  return out;
}

json summary_row_to_json(const SummaryRow& row) {
  return json{{"instance_id", row.doc_id + "/" + row.system_id},
              {"doc_id", row.doc_id},
              {"system_id", row.system_id},
              {"document", row.document},
              {"summary", row.summary}};
}

// ---------------------------------------------------------------------------
// Results I/O

json fraction_to_json(const Fraction& f) {
  return json{{"num", f.numerator()}, {"den", f.denominator()}, {"value", f.value()}};
}

Fraction fraction_from_json(const json& j) {
  if (!j.is_object() || !j.contains("num") || !j.contains("den") || !j["num"].is_number_integer() ||
      !j["den"].is_number_integer()) {
    throw Error(ErrorCode::kSchema, "expected {\"num\", \"den\"} score object");
  }
  return Fraction(j["num"].get<std::int64_t>(), j["den"].get<std::int64_t>());
}

json errors_to_json(const std::vector<InstanceError>& errors) {
  json out = json::array();
  for (const auto& e : errors) out.push_back({{"instance_id", e.instance_id}, {"reason", e.reason}});
  return out;
}

namespace {

json record_to_json(const scoring::TaskParseRecord& r) {
  json warnings = json::array();
  for (const auto& w : r.warnings) warnings.push_back({{"code", w.code}, {"detail", w.detail}, {"item", w.item}});
  return json{{"status", r.status.ok() ? "ok" : "failed"},
              {"reason", r.status.ok() ? json(nullptr)
                                       : json(std::string(parse::failure_reason_name(*r.status.failure)))},
              {"detail", r.detail},
              {"warnings", warnings}};
}

scoring::TaskParseRecord record_from_json(const json& j, const std::string& at) {
  if (!j.is_object() || !j.contains("status"))
    throw Error(ErrorCode::kSchema, at + ": parse record needs \"status\"");
  scoring::TaskParseRecord r;
  if (j["status"] == "failed") {
    const auto reason = j.contains("reason") && j["reason"].is_string()
                            ? parse::parse_failure_reason(j["reason"].get<std::string>())
                            : std::nullopt;
    if (!reason) throw Error(ErrorCode::kSchema, at + ": failed parse record needs a known \"reason\"");
    r.status.failure = reason;
  } else if (j["status"] != "ok") {
    throw Error(ErrorCode::kSchema, at + ": parse status must be \"ok\" or \"failed\"");
  }
  r.detail = j.value("detail", "");
  if (j.contains("warnings") && j["warnings"].is_array()) {
    for (const auto& w : j["warnings"])
      r.warnings.push_back({w.value("code", ""), w.value("detail", ""), w.value("item", 0)});
  }
  return r;
}

}  // namespace

json scored_to_json(const scoring::ScoredInstance& s, bool include_raw) {
  auto score = [](const std::optional<Fraction>& f) { return f ? fraction_to_json(*f) : json(nullptr); };
  json row = {
      {"instance_id", s.instance_id},
      {"system_id", s.system_id},
      {"num_sentences", s.num_sentences},
      {"num_keyfacts", s.num_keyfacts},
      {"scores",
       {{"faithfulness", score(s.scores.faithfulness)},
        {"completeness", score(s.scores.completeness)},
        {"conciseness", score(s.scores.conciseness)},
        {"provenance", std::string(provenance_name(s.scores.provenance))}}},
  };
  if (s.verdicts) {
    json verdicts = json::array();
    for (const auto& v : *s.verdicts) {
      json item = {{"index", v.sentence_index},
                   {"category", std::string(canonical_name(v.category))},
                   {"reason", v.reason}};
      if (v.evidence) item["evidence"] = *v.evidence;
      verdicts.push_back(std::move(item));
    }
    row["verdicts"] = std::move(verdicts);
  } else {
    row["verdicts"] = nullptr;
  }
  if (s.alignment) {
    json entries = json::array();
    for (const auto& e : s.alignment->entries)
      entries.push_back({{"index", e.keyfact_index}, {"matched", e.matched}, {"line_numbers", e.line_numbers}});
    row["alignment"] = std::move(entries);
  } else {
    row["alignment"] = nullptr;
  }
  json parse_json = json::object();
  if (s.fact_check) parse_json[kFactCheckTask] = record_to_json(*s.fact_check);
  if (s.alignment_parse) parse_json[kAlignmentTask] = record_to_json(*s.alignment_parse);
  row["parse"] = std::move(parse_json);
  if (include_raw && !s.raw.empty()) row["raw"] = s.raw;
  return row;
}

scoring::ScoredInstance scored_from_json(const json& row, std::size_t line) {
  const std::string at = "line " + std::to_string(line);
  try {
    scoring::ScoredInstance s;
    s.instance_id = row.at("instance_id").get<std::string>();
    s.system_id = row.at("system_id").get<std::string>();
    s.num_sentences = row.value("num_sentences", std::size_t{0});
    s.num_keyfacts = row.value("num_keyfacts", std::size_t{0});
    const json& scores = row.at("scores");
    auto read = [&](const char* key) -> std::optional<Fraction> {
      if (!scores.contains(key) || scores[key].is_null()) return std::nullopt;
      return fraction_from_json(scores[key]);
    };
    s.scores.faithfulness = read("faithfulness");
    s.scores.completeness = read("completeness");
    s.scores.conciseness = read("conciseness");
    const std::string provenance = scores.value("provenance", "computed");
    if (provenance == "failure_default") {
      s.scores.provenance = ScoreProvenance::kFailureDefault;
    } else if (provenance != "computed") {
      throw Error(ErrorCode::kSchema, at + ": unknown provenance \"" + provenance + "\"");
    }
    if (row.contains("verdicts") && row["verdicts"].is_array()) {
      std::vector<FactCheckVerdict> verdicts;
      for (const auto& v : row["verdicts"]) {
        FactCheckVerdict verdict;
        verdict.sentence_index = v.at("index").get<int>();
        const auto category = normalize_category(v.at("category").get<std::string>());
        if (!category) throw Error(ErrorCode::kSchema, at + ": unknown verdict category");
        verdict.category = *category;
        verdict.reason = v.value("reason", "");
        if (v.contains("evidence") && v["evidence"].is_string()) verdict.evidence = v["evidence"].get<std::string>();
        verdicts.push_back(std::move(verdict));
      }
      s.verdicts = std::move(verdicts);
    }
    if (row.contains("alignment") && row["alignment"].is_array()) {
      AlignmentGraph graph;
      for (const auto& e : row["alignment"]) {
        KeyfactAlignment entry;
        entry.keyfact_index = e.at("index").get<int>();
        entry.matched = e.at("matched").get<bool>();
        for (const auto& line_no : e.value("line_numbers", json::array())) entry.line_numbers.insert(line_no.get<int>());
        graph.entries.push_back(std::move(entry));
      }
      s.alignment = std::move(graph);
    }
    if (row.contains("parse") && row["parse"].is_object()) {
      const json& p = row["parse"];
      if (p.contains(kFactCheckTask)) s.fact_check = record_from_json(p[kFactCheckTask], at);
      if (p.contains(kAlignmentTask)) s.alignment_parse = record_from_json(p[kAlignmentTask], at);
    }
    if (row.contains("raw") && row["raw"].is_object()) {
      for (const auto& [task, text] : row["raw"].items())
        if (text.is_string()) s.raw[task] = text.get<std::string>();
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, at + ": malformed results row (" + e.what() + ")");
  }
}

void write_results(const std::filesystem::path& path, const std::vector<scoring::ScoredInstance>& results,
                   bool include_raw) {
  std::vector<json> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(scored_to_json(r, include_raw));
  ingest::write_jsonl(path, rows);
}

std::vector<scoring::ScoredInstance> load_results(const std::filesystem::path& path) {
  std::vector<scoring::ScoredInstance> out;
  std::map<std::string, std::size_t> seen;
  ingest::read_jsonl(path, [&](std::size_t line, const json& row) {
    auto s = scored_from_json(row, line);
    if (const auto [it, ok] = seen.emplace(s.instance_id, line); !ok) {
      throw Error(ErrorCode::kSchema, "duplicate instance_id \"" + s.instance_id + "\" on line " +
                                          std::to_string(it->second) + " and line " + std::to_string(line));
    }
    out.push_back(std::move(s));
  });
  return out;
}

}  // namespace finesure::pipeline
