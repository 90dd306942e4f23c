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

#include <algorithm>
#include <random>

#include "../oracles.hpp"
#include "finesure/error.hpp"
#include "finesure/scoring.hpp"

using namespace finesure;
using namespace finesure::scoring;

namespace {

std::vector<FactCheckVerdict> verdicts_of(const std::vector<ErrorCategory>& cats) {
  std::vector<FactCheckVerdict> out;
  for (std::size_t i = 0; i < cats.size(); ++i) out.push_back({static_cast<int>(i + 1), cats[i], "", {}});
  return out;
}

AlignmentGraph figure_graph() {
  AlignmentGraph g;
  g.entries = {{1, true, {1}}, {2, true, {1}}, {3, true, {3}}, {4, false, {}}};
  return g;
}

// Matched iff the keyfact has an edge, as in the edge-set definition.
AlignmentGraph graph_from_mask(unsigned mask, int n, int m, std::set<std::pair<int, int>>& edges) {
  AlignmentGraph g;
  edges.clear();
  for (int k = 1; k <= m; ++k) {
    KeyfactAlignment e{k, false, {}};
    for (int s = 1; s <= n; ++s) {
      if (mask & (1u << ((k - 1) * n + (s - 1)))) {
        e.line_numbers.insert(s);
        edges.insert({k, s});
      }
    }
    e.matched = !e.line_numbers.empty();
    g.entries.push_back(std::move(e));
  }
  return g;
}

bool equals(const Fraction& f, const oracle::Ratio& r) {
  return f.numerator() * r.den == r.num * f.denominator() && f.denominator() == r.den;
}

}  // namespace

TEST_CASE("worked figure scores") {
  const auto v = verdicts_of({ErrorCategory::kNoError, ErrorCategory::kEntity, ErrorCategory::kOutOfContext});
  CHECK(faithfulness(v, 3) == Fraction(1, 3));
  CHECK(completeness(figure_graph(), 4) == Fraction(3, 4));
  CHECK(conciseness(figure_graph(), 3) == Fraction(2, 3));
  CHECK(faithfulness(v, 3).denominator() == 3);
  CHECK(completeness(figure_graph(), 4).denominator() == 4);
}

TEST_CASE("edge cases of each score") {
  CHECK(faithfulness(verdicts_of({ErrorCategory::kNoError, ErrorCategory::kNoError}), 2) == Fraction::whole(1));
  CHECK(faithfulness(verdicts_of({ErrorCategory::kOther, ErrorCategory::kEntity}), 2) == Fraction::whole(0));
  AlignmentGraph none;
  none.entries = {{1, false, {}}, {2, false, {}}};
  CHECK(completeness(none, 2) == Fraction::whole(0));
  CHECK(conciseness(none, 3) == Fraction::whole(0));
  AlignmentGraph all;
  all.entries = {{1, true, {1}}, {2, true, {1}}};
  CHECK(completeness(all, 2) == Fraction::whole(1));
  CHECK(conciseness(all, 2) == Fraction(1, 2));
  AlignmentGraph lineless;
  lineless.entries = {{1, true, {}}, {2, false, {}}};
  CHECK(completeness(lineless, 2) == Fraction(1, 2));
  CHECK(conciseness(lineless, 2) == Fraction::whole(0));
}

TEST_CASE("coverage errors") {
  auto v = verdicts_of({ErrorCategory::kNoError, ErrorCategory::kNoError});
  CHECK_THROWS_AS(faithfulness(v, 3), Error);
  v[1].sentence_index = 1;
  CHECK_THROWS_AS(faithfulness(v, 2), Error);
  try {
    faithfulness(v, 2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCoverage);
  }
  AlignmentGraph g = figure_graph();
  CHECK_THROWS_AS(completeness(g, 5), Error);
  CHECK_THROWS_AS(faithfulness({}, 0), Error);
}

TEST_CASE("score_instance") {
  const auto fact = parse::FactCheckOutcome::success(
      verdicts_of({ErrorCategory::kNoError, ErrorCategory::kEntity, ErrorCategory::kOutOfContext}));
  const auto align = parse::AlignmentOutcome::success(figure_graph());
  const auto both = score_instance(&fact, &align, 3, 4, {true, true});
  CHECK(both.provenance == ScoreProvenance::kComputed);
  CHECK(*both.faithfulness == Fraction(1, 3));
  CHECK(*both.completeness == Fraction(3, 4));
  CHECK(*both.conciseness == Fraction(2, 3));

  const auto failed = parse::AlignmentOutcome::failed(parse::FailureReason::kNotJson, "prose");
  CHECK(score_instance(&fact, &failed, 3, 4, {true, true}) == ScoreTriple::failure_default());

  const auto only_fact = score_instance(&fact, nullptr, 3, 0, {true, false});
  CHECK(only_fact.faithfulness.has_value());
  CHECK_FALSE(only_fact.completeness.has_value());
  CHECK_FALSE(only_fact.conciseness.has_value());

  // Failures outside the task set do not matter.
  CHECK(score_instance(&fact, &failed, 3, 4, {true, false}).provenance == ScoreProvenance::kComputed);
  CHECK(score_instance(&fact, &align, 0, 4, {true, true}) == ScoreTriple::failure_default());
  CHECK_THROWS_AS(score_instance(&fact, &align, 3, 4, {false, false}), Error);
}

TEST_CASE("every failure reason yields the failure default") {
  for (auto reason : {parse::FailureReason::kNotJson, parse::FailureReason::kWrongSchema,
                      parse::FailureReason::kIncompleteCoverage, parse::FailureReason::kEmptyOutput}) {
    const auto bad_fact = parse::FactCheckOutcome::failed(reason, "x");
    const auto bad_align = parse::AlignmentOutcome::failed(reason, "x");
    const auto ok_align = parse::AlignmentOutcome::success(figure_graph());
    CHECK(score_instance(&bad_fact, &ok_align, 3, 4, {true, true}) == ScoreTriple::failure_default());
    CHECK(score_instance(&bad_fact, nullptr, 3, 4, {true, false}) == ScoreTriple::failure_default());
    CHECK(score_instance(nullptr, &bad_align, 3, 4, {false, true}) == ScoreTriple::failure_default());
  }
}

TEST_CASE("alignment scores match brute-force counts over every edge set, N, M <= 4") {
  std::size_t checked = 0;
  std::set<std::pair<int, int>> edges;
  for (int n = 1; n <= 4; ++n) {
    for (int m = 1; m <= 4; ++m) {
      const unsigned limit = 1u << (n * m);
      for (unsigned mask = 0; mask < limit; ++mask) {
        const auto g = graph_from_mask(mask, n, m, edges);
        const auto c = completeness(g, m);
        const auto z = conciseness(g, n);
        if (!equals(c, oracle::completeness_from_edges(edges, m)) ||
            !equals(z, oracle::conciseness_from_edges(edges, n))) {
          FAIL("mismatch at n=" << n << " m=" << m << " mask=" << mask);
        }
        ++checked;
      }
    }
  }
  CHECK(checked == 74954);  // sum of 2^(n*m)
}

TEST_CASE("faithfulness matches brute-force counts over every verdict vector, N <= 6") {
  std::size_t checked = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> digits(n, 0);
    while (true) {
      std::vector<ErrorCategory> cats;
      std::int64_t clean = 0;
      for (int d : digits) {
        cats.push_back(kAllCategories[d]);
        clean += kAllCategories[d] == ErrorCategory::kNoError ? 1 : 0;
      }
      const auto f = faithfulness(verdicts_of(cats), n);
      if (!(f.numerator() == clean && f.denominator() == n)) FAIL("mismatch at n=" << n);
      ++checked;
      int i = 0;
      while (i < n && ++digits[i] == 9) digits[i++] = 0;
      if (i == n) break;
    }
  }
  CHECK(checked == 9 + 81 + 729 + 6561 + 59049 + 531441);
}

TEST_CASE("permutation invariance and monotonicity") {
  std::mt19937_64 rng(3);
  std::set<std::pair<int, int>> edges;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 4);
    const auto g = graph_from_mask(static_cast<unsigned>(rng()) & ((1u << (n * m)) - 1), n, m, edges);
    auto shuffled = g;
    std::shuffle(shuffled.entries.begin(), shuffled.entries.end(), rng);
    CHECK(completeness(shuffled, m) == completeness(g, m));
    CHECK(conciseness(shuffled, n) == conciseness(g, n));

    // Matching a previously unmatched keyfact.
    for (auto& e : shuffled.entries) {
      if (e.matched) continue;
      auto more = shuffled;
      for (auto& x : more.entries)
        if (x.keyfact_index == e.keyfact_index) {
          x.matched = true;
          x.line_numbers = {1 + static_cast<int>(rng() % n)};
        }
      CHECK(completeness(more, m) == completeness(shuffled, m) + Fraction(1, m));
      CHECK(conciseness(more, n) >= conciseness(shuffled, n));
      break;
    }

    std::vector<ErrorCategory> cats;
    for (int i = 0; i < n; ++i) cats.push_back(kAllCategories[rng() % 9]);
    auto v = verdicts_of(cats);
    const auto base = faithfulness(v, n);
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(faithfulness(v, n) == base);
    for (auto& x : v) {
      if (!x.has_error()) continue;
      x.category = ErrorCategory::kNoError;
      CHECK(faithfulness(v, n) == base + Fraction(1, n));
      break;
    }
  }
}
