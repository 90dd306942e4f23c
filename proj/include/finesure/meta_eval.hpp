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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "finesure/core_model.hpp"
#include "finesure/ingest.hpp"
#include "finesure/scoring.hpp"

namespace finesure::meta {

// ---------------------------------------------------------------------------
// Sentence level

struct BinaryClassificationCounts {
  std::int64_t true_positives = 0;
  std::int64_t false_negatives = 0;
  std::int64_t true_negatives = 0;
  std::int64_t false_positives = 0;

  // nullopt when the class is absent from gold.
  std::optional<Fraction> sensitivity() const;
  std::optional<Fraction> specificity() const;
  bool operator==(const BinaryClassificationCounts&) const = default;
};

struct BalancedAccuracy {
  Fraction value;
  BinaryClassificationCounts counts;
};

// (sensitivity + specificity) / 2, exact. "true" is the error class.
// kPrecondition on length mismatch/empty; kDegenerateGold when gold lacks
// either class.
BalancedAccuracy balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& gold);

// ---------------------------------------------------------------------------
// Correlation

// Sample Pearson r. kPrecondition unless equal lengths >= 3; kZeroVariance
// when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Average (fractional) ranks, 1-based, ascending.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson over average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

enum class Statistic { kPearson, kSpearman };

inline constexpr int kMinPermutations = 100;

// Two-sided (1 + #{|perm stat| >= |observed|}) / (1 + permutations) with y
// shuffled by a seeded Fisher-Yates over mt19937_64.
double permutation_p_value(std::span<const double> x, std::span<const double> y, Statistic statistic,
                           int permutations, std::uint64_t seed);

// ---------------------------------------------------------------------------
// System level

struct SystemScore {
  std::string system_id;
  double predicted = 0.0;
  double gold = 0.0;
};

struct SystemRanking {
  std::string system_id;
  std::size_t instances = 0;
  double predicted_mean = 0.0;
  double gold_mean = 0.0;
  double predicted_rank = 0.0;  // 1 = highest mean, ties averaged
  double gold_rank = 0.0;
};

struct SystemRankResult {
  double rank_correlation = 0.0;
  std::vector<SystemRanking> systems;  // sorted by system_id
};

// kTooFewSystems below three systems.
SystemRankResult system_rank_correlation(std::span<const SystemScore> per_instance);

// ---------------------------------------------------------------------------
// Error localization

struct LocalizationReport {
  // Rows follow kLocalizableCategories; columns follow kAllCategories.
  std::array<std::array<std::int64_t, 9>, 7> confusion{};
  std::array<std::optional<double>, 7> accuracy{};  // nullopt for empty rows
  std::optional<double> mean_accuracy;              // unweighted over non-empty rows
  std::int64_t sentences = 0;
};

// Only rows whose gold label is one of the seven typed errors count.
LocalizationReport error_localization_accuracy(std::span<const ErrorCategory> pred,
                                               std::span<const ErrorCategory> gold);

// ---------------------------------------------------------------------------
// Agreement

// (p_o - p_e) / (1 - p_e); kUndefined when p_e == 1.
double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

// ratings[rater][item]; nullopt marks a missing rating.
using NominalRatings = std::vector<std::vector<std::optional<std::string>>>;
using IntervalRatings = std::vector<std::vector<std::optional<double>>>;

// Coincidence-matrix alpha with the nominal metric. Items with fewer than
// two ratings are dropped; kNoPairableValues when nothing remains.
double krippendorff_alpha_nominal(const NominalRatings& ratings);

// Alpha with the interval metric, squared differences scaled by the value
// range (the scale cancels in the ratio).
double krippendorff_alpha_interval(const IntervalRatings& ratings);

enum class Dimension { kFaithfulness, kCompleteness, kConciseness };
inline constexpr std::array<Dimension, 3> kDimensions = {Dimension::kFaithfulness, Dimension::kCompleteness,
                                                         Dimension::kConciseness};
std::string_view dimension_name(Dimension d);
std::optional<Fraction> component(const ScoreTriple& scores, Dimension d);

struct DimensionStability {
  std::optional<double> alpha;  // nullopt when the dimension was never scored
  double max_pairwise_delta = 0.0;
  std::size_t instances = 0;
};

using RunScores = std::map<std::string, ScoreTriple>;  // instance_id -> scores

// Each run is a rater over instances. kPrecondition below two runs;
// kMismatchedInstances when the runs cover different instance sets.
std::map<Dimension, DimensionStability> stability_report(std::span<const RunScores> runs);

// ---------------------------------------------------------------------------
// Benchmark report

enum class Level { kSentence, kSummary, kSystem, kLocalization, kAgreement };
std::string_view level_name(Level level);
std::optional<Level> parse_level(std::string_view name);

struct BenchmarkOptions {
  std::set<Level> levels = {Level::kSentence, Level::kSummary, Level::kSystem, Level::kLocalization,
                            Level::kAgreement};
  int permutations = 1000;
  std::uint64_t seed = 0;
  // Keep parse failures in the statistics with their failure-default scores.
  bool include_failures = false;
};

struct ExcludedInstance {
  std::string instance_id;
  std::string reason;
};

struct CorrelationResult {
  std::size_t n = 0;
  std::optional<double> pearson;
  std::optional<double> pearson_p;
  std::optional<double> spearman;
  std::optional<double> spearman_p;
  std::string note;
};

struct MetaReport {
  BenchmarkOptions options;
  std::size_t total_instances = 0;
  std::size_t included_instances = 0;
  Fraction success_ratio;
  std::map<std::string, Fraction> task_success_ratio;  // "fact_check", "alignment"
  std::vector<ExcludedInstance> excluded;

  std::optional<BalancedAccuracy> sentence_level;
  std::size_t sentence_count = 0;
  std::string sentence_note;

  std::map<Dimension, CorrelationResult> summary_level;

  std::map<Dimension, SystemRankResult> system_level;
  std::map<Dimension, std::string> system_notes;

  std::optional<LocalizationReport> localization;
  std::string localization_note;

  std::optional<double> sentence_kappa;
  std::string kappa_note;
  std::optional<double> keyfact_alpha;
  std::string alpha_note;
};

// Joins predictions with gold by instance_id, applies strict-mode inclusion
// and computes the requested levels. Join/shape errors propagate.
MetaReport build_meta_report(std::span<const scoring::ScoredInstance> predictions,
                             const ingest::GoldTable& gold, const BenchmarkOptions& options);

}  // namespace finesure::meta
