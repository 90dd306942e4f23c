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
#include <span>
#include <string>
#include <vector>

#include "finesure/core_model.hpp"
#include "finesure/response_parser.hpp"

namespace finesure::scoring {

struct TaskSet {
  bool fact_check = true;
  bool alignment = true;

  bool empty() const noexcept { return !fact_check && !alignment; }
  bool operator==(const TaskSet&) const = default;
};

// Per-task parse record kept with a scored instance.
struct TaskParseRecord {
  parse::ParseStatus status;
  std::string detail;
  std::vector<parse::ParseWarning> warnings;

  bool operator==(const TaskParseRecord&) const = default;
};

struct ScoredInstance {
  std::string instance_id;
  std::string system_id;
  ScoreTriple scores;
  std::size_t num_sentences = 0;
  std::size_t num_keyfacts = 0;
  std::optional<std::vector<FactCheckVerdict>> verdicts;
  std::optional<AlignmentGraph> alignment;
  std::optional<TaskParseRecord> fact_check;  // absent when the task was not run
  std::optional<TaskParseRecord> alignment_parse;
  std::map<std::string, std::string> raw;  // task -> raw reply, may be elided

  // Every task that ran parsed successfully.
  bool parse_ok() const;
  bool operator==(const ScoredInstance&) const = default;
};

// Sentences labelled "no error" over N. Verdict indices must be exactly
// 1..N in any order, else kCoverage.
Fraction faithfulness(std::span<const FactCheckVerdict> verdicts, std::size_t n);

// Keyfacts carrying the "matched" label over M. Entries must cover 1..M.
Fraction completeness(const AlignmentGraph& alignment, std::size_t m);

// Distinct aligned sentence indices over N.
Fraction conciseness(const AlignmentGraph& alignment, std::size_t n);

// Failure of any required task, or N = 0, gives the failure-default triple.
// Components for tasks outside `tasks` stay absent on success.
ScoreTriple score_instance(const parse::FactCheckOutcome* fact_outcome,
                           const parse::AlignmentOutcome* align_outcome, std::size_t n,
                           std::size_t m, TaskSet tasks);

}  // namespace finesure::scoring
