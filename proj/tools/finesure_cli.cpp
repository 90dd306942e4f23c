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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "finesure/error.hpp"
#include "finesure/ingest.hpp"
#include "finesure/llm_gateway.hpp"
#include "finesure/meta_eval.hpp"
#include "finesure/pipeline.hpp"
#include "finesure/prompt_forge.hpp"
#include "finesure/report.hpp"
#include "finesure/text_util.hpp"

namespace {

using nlohmann::json;
using namespace finesure;

struct BackendFlags {
  std::string backend = "mock";
  std::string model;
  std::string endpoint;
  std::string mock_fixtures;
  double temperature = 0.0;
  int max_tokens = 2048;
  double timeout_s = 120.0;
  int retries = 2;
  int parallelism = 1;
  std::string cache_dir;
  bool no_cache = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--backend", backend, "openai or mock")->check(CLI::IsMember({"openai", "mock"}));
    cmd->add_option("--model", model, "model name sent to the endpoint");
    cmd->add_option("--endpoint", endpoint, "OpenAI-compatible base URL, e.g. https://api.openai.com/v1");
    cmd->add_option("--mock-fixtures", mock_fixtures, "JSONL of canned replies for the mock backend");
    cmd->add_option("--temperature", temperature);
    cmd->add_option("--max-tokens", max_tokens)->check(CLI::PositiveNumber);
    cmd->add_option("--timeout", timeout_s, "per-request timeout in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--retries", retries)->check(CLI::NonNegativeNumber);
    cmd->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", cache_dir, "reuse replies stored here");
    cmd->add_flag("--no-cache", no_cache);
  }

  llm::Gateway gateway() const {
    llm::BackendConfig c;
    if (backend == "openai") {
      c.kind = llm::BackendKind::kOpenAiCompatibleHttp;
      const char* key = std::getenv(llm::kApiKeyEnvVar);
      if (!key || !*key)
        throw Error(ErrorCode::kConfig,
                    std::string("the openai backend needs an API key in the ") + llm::kApiKeyEnvVar +
                        " environment variable");
      c.api_key = key;
      if (endpoint.empty()) throw Error(ErrorCode::kConfig, "the openai backend needs --endpoint");
      if (model.empty()) throw Error(ErrorCode::kConfig, "the openai backend needs --model");
    } else {
      c.kind = llm::BackendKind::kMockReplay;
      if (mock_fixtures.empty()) throw Error(ErrorCode::kConfig, "the mock backend needs --mock-fixtures");
      c.mock_fixtures = mock_fixtures;
    }
    c.endpoint_url = endpoint;
    if (!model.empty()) c.model_name = model;
    c.temperature = temperature;
    c.max_output_tokens = max_tokens;
    c.request_timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
    c.max_retries = retries;
    c.parallelism = parallelism;
    if (!cache_dir.empty() && !no_cache) c.cache_dir = cache_dir;
    return llm::Gateway(std::move(c));
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!trim(cur).empty()) out.emplace_back(trim(cur));
  return out;
}

// Rows missing the field are skipped with an error record later; an input
// where no row has it is almost certainly the wrong field name.
void require_reference_field(const std::vector<EvalInstance>& instances, const std::string& field) {
  for (const auto& inst : instances)
    if (!inst.keyfacts && inst.extra_text.count(field)) return;
  for (const auto& inst : instances)
    if (!inst.keyfacts)
      throw Error(ErrorCode::kConfig, "no input row has a \"" + field + "\" field to extract keyfacts from; set --reference-field");
}

// ---------------------------------------------------------------------------
// eval

struct EvalFlags {
  std::string input;
  std::string tasks = "both";
  std::string keyfacts;
  bool extract = false;
  std::string reference_field = "reference";
  std::string keyfact_cache;
  std::string mode = "strict";
  std::vector<std::string> variants;
  std::string out;
  std::string summary_out;
  std::uint64_t seed = 0;
  bool elide_raw = false;
};

int cmd_eval(const EvalFlags& f, const BackendFlags& b) {
  pipeline::RunConfig config;
  if (f.tasks == "fact-check") {
    config.tasks = {true, false};
  } else if (f.tasks == "alignment") {
    config.tasks = {false, true};
  } else {
    config.tasks = {true, true};
  }
  config.mode = *parse::parse_mode(f.mode);
  config.seed = f.seed;
  config.include_raw = !f.elide_raw;
  config.reference_field = f.reference_field;
  if (f.extract) config.keyfact_source = pipeline::KeyfactSource::kExtractFromReference;
  if (!f.keyfact_cache.empty()) config.keyfact_cache = f.keyfact_cache;
  for (const auto& v : f.variants) {
    const auto eq = v.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kConfig, "--variant expects task=features, got \"" + v + "\"");
    const auto task = prompt::parse_task(trim(std::string_view(v).substr(0, eq)));
    if (!task) throw Error(ErrorCode::kConfig, "unknown task in --variant \"" + v + "\"");
    const auto variant = prompt::parse_variant(*task, trim(std::string_view(v).substr(eq + 1)));
    if (*task == prompt::Task::kFactCheck) {
      config.fact_check_variant = variant;
    } else if (*task == prompt::Task::kKeyfactAlignment) {
      config.alignment_variant = variant;
    } else {
      throw Error(ErrorCode::kConfig, "--variant applies to fact_check and keyfact_alignment only");
    }
  }

  auto instances = ingest::load_instances(f.input);
  if (!f.keyfacts.empty()) {
    const auto lists = ingest::load_keyfacts(f.keyfacts);
    for (auto& inst : instances)
      if (const auto it = lists.find(inst.instance_id); it != lists.end()) inst.keyfacts = it->second;
  }
  pipeline::validate(config, instances);
  if (config.tasks.alignment && f.extract && !config.keyfact_cache) require_reference_field(instances, f.reference_field);
  const auto gateway = b.gateway();
  const auto run = pipeline::run_evaluation(std::move(instances), config, gateway);

  std::vector<json> rows;
  for (const auto& r : run.results) rows.push_back(pipeline::scored_to_json(r, config.include_raw));
  if (f.out.empty()) {
    for (const auto& r : rows) std::cout << r.dump() << '\n';
  } else {
    ingest::write_jsonl(f.out, rows);
  }
  const auto summary = run.summary.dump(2) + "\n";
  if (!f.summary_out.empty()) {
    write_text(f.summary_out, summary);
  } else if (!f.out.empty()) {
    std::cout << summary;
  }
  std::cerr << "evaluated " << run.results.size() << " instances, success ratio "
            << run.summary["success_ratio"]["overall"].dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchFlags {
  std::string pred;
  std::string gold;
  std::string levels = "sentence,summary,system,localization,agreement";
  int permutations = 1000;
  std::uint64_t seed = 0;
  std::string format = "json";
  bool include_failures = false;
  std::string out;
};

int cmd_benchmark(const BenchFlags& f) {
  meta::BenchmarkOptions options;
  options.levels.clear();
  for (const auto& name : split(f.levels, ',')) {
    const auto level = meta::parse_level(name);
    if (!level) throw Error(ErrorCode::kConfig, "unknown level \"" + name + "\"");
    options.levels.insert(*level);
  }
  if (f.permutations != 0 && f.permutations < meta::kMinPermutations)
    throw Error(ErrorCode::kConfig, "--permutations must be 0 or at least " + std::to_string(meta::kMinPermutations));
  options.permutations = f.permutations;
  options.seed = f.seed;
  options.include_failures = f.include_failures;
  const auto format = report::parse_format(f.format);
  if (!format) throw Error(ErrorCode::kConfig, "unknown --format \"" + f.format + "\"");

  const auto pred = pipeline::load_results(f.pred);
  const auto gold = ingest::load_gold(f.gold);
  const auto meta_report = meta::build_meta_report(pred, gold, options);
  json metadata = {{"pred", f.pred}, {"gold", f.gold}, {"options", report::options_to_json(options)}};
  write_text(f.out, report::render(report::flatten(meta_report), *format, metadata));
  return 0;
}

// ---------------------------------------------------------------------------
// report: re-render a JSON report

int cmd_report(const std::string& input, const std::string& format_name, const std::string& out) {
  const auto format = report::parse_format(format_name);
  if (!format) throw Error(ErrorCode::kConfig, "unknown --format \"" + format_name + "\"");
  json doc;
  try {
    doc = json::parse(read_text(input));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, input + ": not a JSON report (" + e.what() + ")");
  }
  const json metadata = doc.is_object() && doc.contains("metadata") ? doc["metadata"] : json::object();
  write_text(out, report::render(report::entries_from_json(doc), *format, metadata));
  return 0;
}

// ---------------------------------------------------------------------------
// extract-keyfacts / summarize

int cmd_extract(const std::string& input, const std::string& reference_field, const std::string& out,
                const BackendFlags& b) {
  const auto instances = ingest::load_instances(input);
  pipeline::RunConfig config;
  config.reference_field = reference_field;
  config.keyfact_source = pipeline::KeyfactSource::kExtractFromReference;
  require_reference_field(instances, reference_field);
  const auto gateway = b.gateway();
  const auto run = pipeline::run_keyfact_extraction(instances, config, gateway);
  std::vector<json> rows;
  for (const auto& list : run.rows) rows.push_back(ingest::keyfacts_to_json(list));
  if (out.empty()) {
    for (const auto& r : rows) std::cout << r.dump() << '\n';
  } else {
    ingest::write_jsonl(out, rows);
  }
  for (const auto& w : run.warnings) std::cerr << "warning: " << w.instance_id << ": " << w.reason << '\n';
  for (const auto& e : run.errors) std::cerr << "failed: " << e.instance_id << ": " << e.reason << '\n';
  return 0;
}

int cmd_summarize(const std::string& input, const std::string& out, const BackendFlags& b) {
  const auto docs = pipeline::load_documents(input);
  const auto gateway = b.gateway();
  const auto run = pipeline::run_summarize(docs, gateway);
  std::vector<json> rows;
  for (const auto& r : run.rows) rows.push_back(pipeline::summary_row_to_json(r));
  if (out.empty()) {
    for (const auto& r : rows) std::cout << r.dump() << '\n';
  } else {
    ingest::write_jsonl(out, rows);
  }
  for (const auto& e : run.errors) std::cerr << "failed: " << e.instance_id << ": " << e.reason << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-grained summary evaluation with LLM judges"};
  app.require_subcommand(1);

  EvalFlags ef;
  BackendFlags eval_backend;
  auto* eval = app.add_subcommand("eval", "score summaries for faithfulness, completeness and conciseness");
  eval->add_option("--input", ef.input, "instances JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--tasks", ef.tasks)->check(CLI::IsMember({"fact-check", "alignment", "both"}));
  auto* kf = eval->add_option("--keyfacts", ef.keyfacts, "keyfacts JSONL joined by instance_id")->check(CLI::ExistingFile);
  auto* ex = eval->add_flag("--extract-keyfacts", ef.extract, "extract keyfacts from the reference field");
  kf->excludes(ex);
  eval->add_option("--reference-field", ef.reference_field);
  eval->add_option("--keyfact-cache", ef.keyfact_cache, "JSONL cache for extracted keyfacts");
  eval->add_option("--mode", ef.mode)->check(CLI::IsMember({"strict", "lenient"}));
  eval->add_option("--variant", ef.variants, "task=feature+feature, e.g. fact_check=instruction+categorization");
  eval->add_option("--out", ef.out, "results JSONL (stdout when omitted)");
  eval->add_option("--summary-out", ef.summary_out, "run summary JSON");
  eval->add_option("--seed", ef.seed);
  eval->add_flag("--elide-raw", ef.elide_raw, "drop raw replies from the results");
  eval_backend.attach(eval);

  BenchFlags bf;
  auto* bench = app.add_subcommand("benchmark", "compare predicted scores with gold annotations");
  bench->add_option("--pred", bf.pred, "results JSONL from eval")->required()->check(CLI::ExistingFile);
  bench->add_option("--gold", bf.gold, "gold JSONL")->required()->check(CLI::ExistingFile);
  bench->add_option("--levels", bf.levels, "comma list of sentence,summary,system,localization,agreement");
  bench->add_option("--permutations", bf.permutations, "permutation-test draws, 0 disables p-values");
  bench->add_option("--seed", bf.seed);
  bench->add_option("--format", bf.format)->check(CLI::IsMember({"json", "csv", "markdown"}));
  bench->add_flag("--include-failures", bf.include_failures, "keep failure-default rows in the statistics");
  bench->add_option("--out", bf.out);

  std::string ek_input, ek_ref = "reference", ek_out;
  BackendFlags ek_backend;
  auto* extract = app.add_subcommand("extract-keyfacts", "extract keyfacts from reference summaries");
  extract->add_option("--input", ek_input)->required()->check(CLI::ExistingFile);
  extract->add_option("--reference-field", ek_ref);
  extract->add_option("--out", ek_out);
  ek_backend.attach(extract);

  std::string sum_input, sum_out;
  BackendFlags sum_backend;
  auto* summarize = app.add_subcommand("summarize", "generate summaries for documents");
  summarize->add_option("--input", sum_input, "documents JSONL {doc_id, text}")->required()->check(CLI::ExistingFile);
  summarize->add_option("--out", sum_out);
  sum_backend.attach(summarize);

  std::string rep_input, rep_format = "markdown", rep_out;
  auto* rep = app.add_subcommand("report", "re-render a JSON benchmark report");
  rep->add_option("--input", rep_input)->required()->check(CLI::ExistingFile);
  rep->add_option("--format", rep_format)->check(CLI::IsMember({"json", "csv", "markdown"}));
  rep->add_option("--out", rep_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors count as configuration errors
  }

  try {
    if (*eval) return cmd_eval(ef, eval_backend);
    if (*bench) return cmd_benchmark(bf);
    if (*extract) return cmd_extract(ek_input, ek_ref, ek_out, ek_backend);
    if (*summarize) return cmd_summarize(sum_input, sum_out, sum_backend);
    if (*rep) return cmd_report(rep_input, rep_format, rep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
