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

#include "finesure/scoring.hpp"

#include <vector>

namespace finesure::scoring {

namespace {

template <typename Range, typename IndexOf>
void require_exact_cover(const Range& items, std::size_t n, IndexOf index_of, const char* what) {
  if (items.size() != n) {
    throw Error(ErrorCode::kCoverage, std::string(what) + ": " + std::to_string(items.size()) +
                                          " entries for " + std::to_string(n));
  }
  std::vector<bool> seen(n + 1, false);
  for (const auto& item : items) {
    const int idx = index_of(item);
    if (idx < 1 || static_cast<std::size_t>(idx) > n || seen[idx]) {
      throw Error(ErrorCode::kCoverage,
                  std::string(what) + ": index " + std::to_string(idx) + " outside 1.." +
                      std::to_string(n) + " or repeated");
    }
    seen[idx] = true;
  }
}

}  // namespace

bool ScoredInstance::parse_ok() const {
  return (!fact_check || fact_check->status.ok()) && (!alignment_parse || alignment_parse->status.ok());
}

Fraction faithfulness(std::span<const FactCheckVerdict> verdicts, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kPrecondition, "faithfulness needs N >= 1");
  require_exact_cover(verdicts, n, [](const FactCheckVerdict& v) { return v.sentence_index; },
                      "verdicts");
  std::int64_t clean = 0;
  for (const auto& v : verdicts) clean += v.has_error() ? 0 : 1;
  return Fraction(clean, static_cast<std::int64_t>(n));
}

Fraction completeness(const AlignmentGraph& alignment, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::kPrecondition, "completeness needs M >= 1");
  require_exact_cover(alignment.entries, m,
                      [](const KeyfactAlignment& e) { return e.keyfact_index; }, "alignment");
  return Fraction(static_cast<std::int64_t>(alignment.matched_count()), static_cast<std::int64_t>(m));
}

Fraction conciseness(const AlignmentGraph& alignment, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kPrecondition, "conciseness needs N >= 1");
  const auto aligned = alignment.aligned_sentences();
  for (int line : aligned) {
    if (line < 1 || static_cast<std::size_t>(line) > n)
      throw Error(ErrorCode::kPrecondition, "line number " + std::to_string(line) + " outside 1..N");
  }
  return Fraction(static_cast<std::int64_t>(aligned.size()), static_cast<std::int64_t>(n));
}

ScoreTriple score_instance(const parse::FactCheckOutcome* fact_outcome,
                           const parse::AlignmentOutcome* align_outcome, std::size_t n,
                           std::size_t m, TaskSet tasks) {
  if (tasks.empty()) throw Error(ErrorCode::kPrecondition, "empty task set");
  if (n == 0) return ScoreTriple::failure_default();
  if (tasks.fact_check && (!fact_outcome || !fact_outcome->ok())) return ScoreTriple::failure_default();
  if (tasks.alignment && (!align_outcome || !align_outcome->ok() || m == 0))
    return ScoreTriple::failure_default();

  ScoreTriple triple;
  if (tasks.fact_check) triple.faithfulness = faithfulness(*fact_outcome->payload, n);
  if (tasks.alignment) {
    triple.completeness = completeness(*align_outcome->payload, m);
    triple.conciseness = conciseness(*align_outcome->payload, n);
  }
  return triple;
}

}  // namespace finesure::scoring
