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

#include <doctest.h>

#include "finesure/error.hpp"
#include "finesure/ingest.hpp"
#include "finesure/pipeline.hpp"
#include "test_support.hpp"

using namespace finesure;
using namespace finesure::pipeline;
using nlohmann::json;

namespace {

const char* kFigureFact =
    R"([{"sentence": "s1", "reason": "fine", "category": "no error"},
        {"sentence": "s2", "reason": "wrong name", "category": "entity error"},
        {"sentence": "s3", "reason": "not stated", "category": "out-of-context error"}])";
const char* kFigureAlign =
    R"([{"key fact": "k1", "response": "Yes", "line numbers": [1]},
        {"key fact": "k2", "response": "Yes", "line numbers": [1]},
        {"key fact": "k3", "response": "Yes", "line numbers": [3]},
        {"key fact": "k4", "response": "No", "line numbers": []}])";

EvalInstance figure_instance(const std::string& id = "fig") {
  return ingest::instance_from_json(
      json{{"instance_id", id},
           {"system_id", "sysA"},
           {"document", "A long document about the event."},
           {"summary", "The mayor opened the bridge. It cost ten million. Crowds cheered loudly."},
           {"keyfacts", {"k one", "k two", "k three", "k four"}}},
      1);
}

llm::Gateway mock_gateway(std::shared_ptr<llm::MockReplayBackend> backend, int parallelism = 1,
                          std::optional<std::filesystem::path> cache = std::nullopt) {
  llm::BackendConfig cfg;
  cfg.parallelism = parallelism;
  cfg.cache_dir = cache;
  cfg.max_retries = 0;
  return llm::Gateway(cfg, backend);
}

std::string results_text(const EvaluationRun& run) {
  std::string out;
  for (const auto& r : run.results) out += scored_to_json(r).dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("worked figure end to end through the mock backend") {
  auto backend = std::make_shared<llm::MockReplayBackend>();
  backend->add_for_instance("fig", "fact_check", kFigureFact);
  backend->add_for_instance("fig", "alignment", kFigureAlign);
  const auto run = run_evaluation({figure_instance()}, RunConfig{}, mock_gateway(backend));
  REQUIRE(run.results.size() == 1);
  const auto& r = run.results[0];
  CHECK(r.scores.provenance == ScoreProvenance::kComputed);
  CHECK(*r.scores.faithfulness == Fraction(1, 3));
  CHECK(*r.scores.completeness == Fraction(3, 4));
  CHECK(*r.scores.conciseness == Fraction(2, 3));
  CHECK(r.num_sentences == 3);
  CHECK(r.num_keyfacts == 4);
  CHECK(r.raw.at("fact_check") == kFigureFact);
  CHECK(run.errors.empty());
  CHECK(run.summary["counts"]["requests"] == 2);
  CHECK(run.summary["success_ratio"]["overall"]["value"] == 1.0);
  CHECK(run.summary["template_versions"].size() == 2);
  CHECK(run.summary["config"]["backend"]["kind"].is_string());
}

TEST_CASE("a non-JSON reply yields the failure default and lowers the success ratio") {
  auto backend = std::make_shared<llm::MockReplayBackend>();
  std::vector<EvalInstance> instances;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "i" + std::to_string(i);
    instances.push_back(figure_instance(id));
    backend->add_for_instance(id, "fact_check", i == 2 ? "I am unable to comply." : kFigureFact);
    backend->add_for_instance(id, "alignment", kFigureAlign);
  }
  const auto run = run_evaluation(instances, RunConfig{}, mock_gateway(backend));
  CHECK(run.results[2].scores == ScoreTriple::failure_default());
  CHECK(run.results[2].fact_check->status.failure == parse::FailureReason::kNotJson);
  CHECK(run.results[1].scores.provenance == ScoreProvenance::kComputed);
  CHECK(run.summary["counts"]["failure_default"] == 1);
  CHECK(run.summary["success_ratio"]["overall"]["num"] == 3);
  CHECK(run.summary["success_ratio"]["overall"]["den"] == 4);
  CHECK(run.summary["success_ratio"]["fact_check"]["num"] == 3);
  CHECK(run.summary["success_ratio"]["alignment"]["num"] == 4);
}

TEST_CASE("transport failures are recorded per instance, never abort the run") {
  auto backend = std::make_shared<llm::MockReplayBackend>();
  backend->add_for_instance("a", "fact_check", kFigureFact);
  backend->add_error_for_instance("b", "fact_check", "connection reset");
  RunConfig cfg;
  cfg.tasks = {true, false};
  const auto run = run_evaluation({figure_instance("a"), figure_instance("b")}, cfg, mock_gateway(backend));
  CHECK(run.results[0].scores.provenance == ScoreProvenance::kComputed);
  CHECK(run.results[1].scores == ScoreTriple::failure_default());
  CHECK(run.results[1].fact_check->status.failure == parse::FailureReason::kEmptyOutput);
  CHECK(run.results[1].fact_check->detail.find("transport error") != std::string::npos);
  CHECK(run.summary["counts"]["transport_errors"] == 1);
}

TEST_CASE("reruns over a warm cache are byte identical") {
  testing::TempDir dir;
  auto backend = std::make_shared<llm::MockReplayBackend>();
  std::vector<EvalInstance> instances;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "c" + std::to_string(i);
    instances.push_back(figure_instance(id));
    backend->add_for_instance(id, "fact_check", kFigureFact);
    backend->add_for_instance(id, "alignment", kFigureAlign);
  }
  const auto first = run_evaluation(instances, RunConfig{}, mock_gateway(backend, 3, dir / "cache"));
  // An empty backend proves the second run is served from the cache.
  auto empty = std::make_shared<llm::MockReplayBackend>();
  const auto second = run_evaluation(instances, RunConfig{}, mock_gateway(empty, 1, dir / "cache"));
  CHECK(results_text(first) == results_text(second));
  write_results(dir / "a.jsonl", first.results);
  write_results(dir / "b.jsonl", second.results);
  CHECK(testing::read_file(dir / "a.jsonl") == testing::read_file(dir / "b.jsonl"));
}

TEST_CASE("keyfact extraction, including the cap at sixteen") {
  auto backend = std::make_shared<llm::MockReplayBackend>();
  json five = {{"key facts", json::array()}};
  for (int i = 1; i <= 5; ++i) five["key facts"].push_back("fact " + std::to_string(i));
  json twenty = {{"key facts", json::array()}};
  for (int i = 1; i <= 20; ++i) twenty["key facts"].push_back("fact " + std::to_string(i));
  backend->add_for_instance("five", "keyfact_extraction", five.dump());
  backend->add_for_instance("twenty", "keyfact_extraction", twenty.dump());

  auto make = [](const std::string& id, bool with_ref) {
    json row = {{"instance_id", id}, {"system_id", "s"}, {"document", "doc"}, {"summary", "One. Two."}};
    if (with_ref) row["reference"] = "A reference summary.";
    return ingest::instance_from_json(row, 1);
  };
  const auto run = run_keyfact_extraction({make("five", true), make("twenty", true), make("noref", false)},
                                          RunConfig{}, mock_gateway(backend));
  REQUIRE(run.rows.size() == 2);
  CHECK(run.rows[0].instance_id == "five");
  CHECK(run.rows[0].size() == 5);
  CHECK(run.rows[0].origin == KeyfactOrigin::kMachine);
  CHECK(run.rows[1].size() == 16);
  REQUIRE(run.warnings.size() == 1);
  CHECK(run.warnings[0].instance_id == "twenty");
  REQUIRE(run.errors.size() == 1);
  CHECK(run.errors[0].instance_id == "noref");
  CHECK(run.errors[0].reason.find("reference") != std::string::npos);
}

TEST_CASE("evaluation with extracted keyfacts fills and reuses the keyfact cache") {
  testing::TempDir dir;
  auto backend = std::make_shared<llm::MockReplayBackend>();
  backend->add_for_instance("x", "keyfact_extraction", R"({"key facts": ["a", "b", "c", "d"]})");
  backend->add_for_instance("x", "fact_check", kFigureFact);
  backend->add_for_instance("x", "alignment", kFigureAlign);
  backend->add_for_instance("y", "fact_check", kFigureFact);

  auto x = figure_instance("x");
  x.keyfacts.reset();
  x.extra_text["reference"] = "Reference text.";
  auto y = figure_instance("y");
  y.keyfacts.reset();

  RunConfig cfg;
  cfg.keyfact_source = KeyfactSource::kExtractFromReference;
  cfg.keyfact_cache = dir / "kf.jsonl";
  const auto run = run_evaluation({x, y}, cfg, mock_gateway(backend));
  CHECK(*run.results[0].scores.completeness == Fraction(3, 4));
  CHECK(run.results[1].scores == ScoreTriple::failure_default());
  CHECK(run.results[1].alignment_parse->detail.find("keyfact extraction failed") != std::string::npos);
  REQUIRE(run.errors.size() == 1);
  CHECK(run.errors[0].instance_id == "y");

  const auto cached = ingest::load_keyfacts(dir / "kf.jsonl");
  REQUIRE(cached.count("x") == 1);
  CHECK(cached.at("x").keyfacts.size() == 4);

  // Second run: extraction must come from the cache file.
  auto no_extract = std::make_shared<llm::MockReplayBackend>();
  no_extract->add_for_instance("x", "fact_check", kFigureFact);
  no_extract->add_for_instance("x", "alignment", kFigureAlign);
  const auto again = run_evaluation({x}, cfg, mock_gateway(no_extract));
  CHECK(*again.results[0].scores.completeness == Fraction(3, 4));
  CHECK(again.errors.empty());
}

TEST_CASE("config validation") {
  auto inst = figure_instance();
  inst.keyfacts.reset();
  CHECK_THROWS_AS(validate(RunConfig{}, {inst}), Error);
  try {
    validate(RunConfig{}, {inst});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
  RunConfig fact_only;
  fact_only.tasks = {true, false};
  CHECK_NOTHROW(validate(fact_only, {inst}));
  RunConfig extract;
  extract.keyfact_source = KeyfactSource::kExtractFromReference;
  CHECK_NOTHROW(validate(extract, {inst}));
  RunConfig none;
  none.tasks = {false, false};
  CHECK_THROWS_AS(validate(none, {figure_instance()}), Error);
  RunConfig swapped;
  swapped.fact_check_variant = prompt::default_variant(prompt::Task::kKeyfactAlignment);
  CHECK_THROWS_AS(validate(swapped, {figure_instance()}), Error);
}

TEST_CASE("summary with no sentences never reaches the backend") {
  auto backend = std::make_shared<llm::MockReplayBackend>();
  auto inst = ingest::instance_from_json(
      json{{"instance_id", "blank"}, {"system_id", "s"}, {"document", "d"}, {"summary", "   "}, {"keyfacts", {"k"}}}, 1);
  const auto run = run_evaluation({inst}, RunConfig{}, mock_gateway(backend));
  CHECK(run.summary["counts"]["requests"] == 0);
  CHECK(run.results[0].scores == ScoreTriple::failure_default());
  CHECK(run.results[0].fact_check->detail == "summary has no sentences");
}

TEST_CASE("summarize") {
  testing::TempDir dir;
  testing::write_file(dir / "docs.jsonl",
                      R"({"doc_id": "d1", "text": "First document."})"
                      "\n"
                      R"({"doc_id": "d2", "document": "Second document."})"
                      "\n"
                      R"({"doc_id": "d3", "text": "Third document."})"
                      "\n");
  const auto docs = load_documents(dir / "docs.jsonl");
  REQUIRE(docs.size() == 3);
  CHECK(docs[1].text == "Second document.");

  auto backend = std::make_shared<llm::MockReplayBackend>();
  backend->add_for_instance("d1", "summarize", "Summary one.");
  backend->add_for_instance("d2", "summarize", "Summary two.");
  backend->add_error_for_instance("d3", "summarize", "timeout");
  const auto run = run_summarize(docs, mock_gateway(backend, 2));
  REQUIRE(run.rows.size() == 2);
  CHECK(run.rows[0].summary == "Summary one.");
  CHECK(run.rows[1].doc_id == "d2");
  REQUIRE(run.errors.size() == 1);
  CHECK(run.errors[0].instance_id == "d3");

  const auto row = summary_row_to_json(run.rows[0]);
  CHECK(row["instance_id"] == "d1/mock");
  const auto as_instance = ingest::instance_from_json(row, 1);
  CHECK(as_instance.sentences == std::vector<std::string>{"Summary one."});

  testing::write_file(dir / "dup.jsonl", R"({"doc_id": "d", "text": "a"})"
                                         "\n"
                                         R"({"doc_id": "d", "text": "b"})"
                                         "\n");
  CHECK_THROWS_AS(load_documents(dir / "dup.jsonl"), Error);
}

TEST_CASE("results round trip and stay self-consistent") {
  testing::TempDir dir;
  auto backend = std::make_shared<llm::MockReplayBackend>();
  std::vector<EvalInstance> instances;
  for (int i = 0; i < 5; ++i) {
    const std::string id = "r" + std::to_string(i);
    instances.push_back(figure_instance(id));
    backend->add_for_instance(id, "fact_check", i == 3 ? "{broken" : kFigureFact);
    backend->add_for_instance(
        id, "alignment",
        i == 1 ? R"([{"response": "maybe", "line numbers": [1]}, {"response": "No"}, {"response": "No"},
                    {"response": "No"}])"
               : kFigureAlign);
  }
  RunConfig cfg;
  cfg.mode = parse::ParseMode::kLenient;
  const auto run = run_evaluation(instances, cfg, mock_gateway(backend));
  write_results(dir / "out.jsonl", run.results);
  const auto back = load_results(dir / "out.jsonl");
  REQUIRE(back.size() == run.results.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == run.results[i]);

  // Every stored score agrees with its stored verdicts and alignment.
  for (const auto& r : back) {
    if (r.scores.provenance == ScoreProvenance::kFailureDefault) {
      CHECK_FALSE(r.parse_ok());
      continue;
    }
    CHECK(*r.scores.faithfulness == scoring::faithfulness(*r.verdicts, r.num_sentences));
    CHECK(*r.scores.completeness == scoring::completeness(*r.alignment, r.num_keyfacts));
    CHECK(*r.scores.conciseness == scoring::conciseness(*r.alignment, r.num_sentences));
  }
  CHECK(back[1].alignment_parse->warnings.size() == 1);

  write_results(dir / "lean.jsonl", run.results, false);
  CHECK(load_results(dir / "lean.jsonl")[0].raw.empty());

  testing::write_file(dir / "dup.jsonl", testing::read_file(dir / "out.jsonl") +
                                             scored_to_json(run.results[0]).dump() + "\n");
  CHECK_THROWS_AS(load_results(dir / "dup.jsonl"), Error);
}

TEST_CASE("fractions serialize exactly") {
  const auto j = fraction_to_json(Fraction(2, 4));
  CHECK(j["num"] == 2);
  CHECK(j["den"] == 4);
  CHECK(j["value"] == 0.5);
  const auto f = fraction_from_json(j);
  CHECK(f.numerator() == 2);
  CHECK(f.denominator() == 4);
}
