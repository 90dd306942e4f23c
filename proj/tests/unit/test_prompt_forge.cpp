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

#include <random>

#include "finesure/core_model.hpp"
#include "finesure/error.hpp"
#include "finesure/prompt_forge.hpp"

using namespace finesure;
using namespace finesure::prompt;

namespace {

const std::vector<std::string> kSentences = {"The cat sat on the mat.", "It was raining.", "The dog barked."};
const std::vector<std::string> kKeyfacts = {"A cat sat.", "A mat existed.", "Rain fell.", "A bird sang."};

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

bool mentions_category_list(const std::string& text) {
  int hits = 0;
  for (auto c : kLocalizableCategories) hits += text.find(canonical_name(c)) != std::string::npos ? 1 : 0;
  return hits >= 3;
}

}  // namespace

TEST_CASE("fact check rendering") {
  const auto p = render_fact_check("Doc body.", kSentences);
  CHECK(p.expected_schema == ExpectedSchema::kFactCheckArray);
  CHECK(p.expected_count == 3);
  CHECK(p.variant == default_variant(Task::kFactCheck));
  CHECK(p.template_version.size() == 12);
  CHECK(p.text.find("Doc body.") != std::string::npos);
  CHECK(p.text.find("[1] The cat sat on the mat.\n[2] It was raining.\n[3] The dog barked.") != std::string::npos);
  CHECK(mentions_category_list(p.text));
  CHECK(p.text.find("\"reason\"") != std::string::npos);
  CHECK(p.text.find("\"category\"") != std::string::npos);
  CHECK(p.text.find("\"evidence\"") == std::string::npos);
  CHECK(p.text.find("{{") == std::string::npos);
}

TEST_CASE("fact check variants follow their features") {
  const auto basic = render_fact_check("Doc.", kSentences, parse_variant(Task::kFactCheck, "basic"));
  CHECK_FALSE(mentions_category_list(basic.text));
  CHECK(basic.text.find("\"category\"") != std::string::npos);

  const auto no_reason = render_fact_check("Doc.", kSentences, parse_variant(Task::kFactCheck, "instruction+categorization"));
  CHECK(mentions_category_list(no_reason.text));
  CHECK(no_reason.text.find("\"reason\"") == std::string::npos);

  const auto evidence = render_fact_check("Doc.", kSentences,
                                          parse_variant(Task::kFactCheck, "instruction+categorization+evidence_mapping"));
  CHECK(evidence.text.find("\"evidence\"") != std::string::npos);
  CHECK(evidence.text.find("\"reason\"") == std::string::npos);

  const auto full = render_fact_check(
      "Doc.", kSentences, parse_variant(Task::kFactCheck, "instruction+categorization+reasoning+evidence_mapping"));
  CHECK(full.text.find("\"evidence\"") != std::string::npos);
  CHECK(full.text.find("\"reason\"") != std::string::npos);
}

TEST_CASE("variant validation") {
  CHECK_THROWS_AS(parse_variant(Task::kFactCheck, "instruction"), Error);
  try {
    parse_variant(Task::kFactCheck, "instruction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kVariantMismatch);
  }
  CHECK_THROWS_AS(parse_variant(Task::kKeyfactAlignment, "categorization"), Error);
  CHECK_THROWS_AS(parse_variant(Task::kFactCheck, "instruction+sarcasm"), Error);
  CHECK(parse_variant(Task::kFactCheck, "reasoning+categorization+instruction") ==
        default_variant(Task::kFactCheck));
  const PromptVariant wrong_task{Task::kKeyfactAlignment, {Feature::kInstruction}};
  CHECK_THROWS_AS(render_fact_check("Doc.", kSentences, wrong_task), Error);
  const PromptVariant lone{Task::kFactCheck, {Feature::kInstruction}};
  CHECK_THROWS_AS(render_fact_check("Doc.", kSentences, lone), Error);
  CHECK(default_variant(Task::kKeyfactAlignment).features == std::set<Feature>{Feature::kInstruction});
}

TEST_CASE("every allowed variant has a bundled template") {
  const auto versions = template_versions();
  CHECK(all_variants().size() == 10);
  for (const auto& v : all_variants()) {
    CHECK(v.allowed());
    CHECK(versions.count(v.template_key()) == 1);
  }
  CHECK(default_variant(Task::kFactCheck).template_key() == "fact_check.instruction+categorization+reasoning.txt");
}

TEST_CASE("alignment rendering") {
  const auto p = render_alignment(kKeyfacts, kSentences, parse_variant(Task::kKeyfactAlignment, "instruction"));
  CHECK(p.expected_schema == ExpectedSchema::kAlignmentArray);
  CHECK(p.expected_count == 4);
  CHECK(p.text.find("\"line numbers\"") != std::string::npos);
  CHECK(p.text.find("\"response\"") != std::string::npos);
  CHECK(p.text.find("\"key fact\"") != std::string::npos);
  CHECK(p.text.find("Instruction:") != std::string::npos);

  const auto basic = render_alignment(kKeyfacts, kSentences, parse_variant(Task::kKeyfactAlignment, "basic"));
  CHECK(basic.text.find("Instruction:") == std::string::npos);

  const auto reasoning =
      render_alignment(kKeyfacts, kSentences, parse_variant(Task::kKeyfactAlignment, "instruction+reasoning"));
  CHECK(reasoning.text.find("\"reason\"") != std::string::npos);

  CHECK_THROWS_AS(render_alignment({}, kSentences), Error);
  CHECK_THROWS_AS(render_alignment(kKeyfacts, {}), Error);
}

TEST_CASE("keyfact extraction and summarization prompts") {
  const auto k = render_keyfact_extraction("The reference summary.");
  CHECK(k.expected_schema == ExpectedSchema::kKeyfactObject);
  CHECK(k.expected_count == 0);
  CHECK(k.text.find("16") != std::string::npos);
  CHECK(k.text.find("\"key facts\"") != std::string::npos);
  CHECK(k.text.find("The reference summary.") != std::string::npos);
  CHECK_THROWS_AS(render_keyfact_extraction(""), Error);

  const auto s1 = render_summarize("Some document.");
  const auto s2 = render_summarize("Some document.");
  CHECK(s1.expected_schema == ExpectedSchema::kPlainSummary);
  CHECK(s1.text == s2.text);
  CHECK_THROWS_AS(render_summarize("  "), Error);
}

TEST_CASE("rendering is pure and numbers every item exactly once in order") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    const std::size_t m = 1 + rng() % 8;
    std::vector<std::string> sentences;
    std::vector<std::string> keyfacts;
    for (std::size_t i = 0; i < n; ++i) sentences.push_back("sentence token" + std::to_string(rng()) + ".");
    for (std::size_t i = 0; i < m; ++i) keyfacts.push_back("keyfact token" + std::to_string(rng()) + ".");
    for (const auto& v : all_variants()) {
      if (v.task == Task::kFactCheck) {
        const auto a = render_fact_check("Doc {{SENTENCES}} text.", sentences, v);
        CHECK(a.text == render_fact_check("Doc {{SENTENCES}} text.", sentences, v).text);
        std::size_t last = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::string line = "[" + std::to_string(i + 1) + "] " + sentences[i];
          CHECK(count_of(a.text, sentences[i]) == 1);
          const auto pos = a.text.find(line);
          REQUIRE(pos != std::string::npos);
          CHECK(pos >= last);
          last = pos;
        }
        // Placeholder-looking text inside inputs is left alone.
        CHECK(a.text.find("Doc {{SENTENCES}} text.") != std::string::npos);
      } else if (v.task == Task::kKeyfactAlignment) {
        const auto a = render_alignment(keyfacts, sentences, v);
        CHECK(a.text == render_alignment(keyfacts, sentences, v).text);
        std::size_t last = 0;
        for (std::size_t i = 0; i < m; ++i) {
          CHECK(count_of(a.text, keyfacts[i]) == 1);
          const auto pos = a.text.find("[" + std::to_string(i + 1) + "] " + keyfacts[i]);
          REQUIRE(pos != std::string::npos);
          CHECK(pos >= last);
          last = pos;
        }
        for (std::size_t i = 0; i < n; ++i) CHECK(count_of(a.text, sentences[i]) == 1);
      }
    }
  }
}
