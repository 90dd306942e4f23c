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

#include "finesure/meta_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace finesure::meta {

// ---------------------------------------------------------------------------
// Sentence level

std::optional<Fraction> BinaryClassificationCounts::sensitivity() const {
  if (true_positives + false_negatives == 0) return std::nullopt;
  return Fraction(true_positives, true_positives + false_negatives);
}

std::optional<Fraction> BinaryClassificationCounts::specificity() const {
  if (true_negatives + false_positives == 0) return std::nullopt;
  return Fraction(true_negatives, true_negatives + false_positives);
}

BalancedAccuracy balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& gold) {
  if (pred.size() != gold.size() || pred.empty())
    throw Error(ErrorCode::kPrecondition, "balanced accuracy needs equal non-empty label lists");
  BinaryClassificationCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gold[i]) {
      (pred[i] ? c.true_positives : c.false_negatives)++;
    } else {
      (pred[i] ? c.false_positives : c.true_negatives)++;
    }
  }
  const auto sens = c.sensitivity();
  const auto spec = c.specificity();
  if (!sens || !spec) {
    throw Error(ErrorCode::kDegenerateGold,
                std::string("gold labels contain no ") + (sens ? "negative" : "positive") + " examples");
  }
  return BalancedAccuracy{(*sens + *spec) * Fraction(1, 2), c};
}

// ---------------------------------------------------------------------------
// Correlation

namespace {

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kPrecondition, "correlation inputs differ in length");
  if (x.size() < 3) throw Error(ErrorCode::kPrecondition, "correlation needs at least 3 pairs");
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kZeroVariance, "correlation input is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Unbiased draw from [0, bound] by rejection; independent of the standard
// library's distribution implementation, so results are portable.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t range = bound + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % range;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  return pearson_unchecked(x, y);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_unchecked(rx, ry);
}

double permutation_p_value(std::span<const double> x, std::span<const double> y, Statistic statistic,
                           int permutations, std::uint64_t seed) {
  if (permutations < kMinPermutations) {
    throw Error(ErrorCode::kPrecondition,
                "permutation test needs at least " + std::to_string(kMinPermutations) + " permutations");
  }
  require_pairs(x, y);
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  if (statistic == Statistic::kSpearman) {
    a = average_ranks(x);
    b = average_ranks(y);
  }
  const double observed = std::abs(pearson_unchecked(a, b));
  // Relative slack so permutations that reproduce the observed statistic
  // count as extreme despite summation-order rounding.
  const double threshold = observed - 1e-12;

  std::mt19937_64 rng(seed);
  std::vector<double> shuffled = b;
  std::int64_t extreme = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[bounded(rng, i)]);
    if (std::abs(pearson_unchecked(a, shuffled)) >= threshold) ++extreme;
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(1 + permutations);
}

// ---------------------------------------------------------------------------
// System level

SystemRankResult system_rank_correlation(std::span<const SystemScore> per_instance) {
  struct Acc {
    double pred = 0.0;
    double gold = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> by_system;
  for (const auto& s : per_instance) {
    Acc& acc = by_system[s.system_id];
    acc.pred += s.predicted;
    acc.gold += s.gold;
    ++acc.n;
  }
  if (by_system.size() < 3) {
    throw Error(ErrorCode::kTooFewSystems,
                "system-level correlation needs at least 3 systems, got " + std::to_string(by_system.size()));
  }
  SystemRankResult result;
  std::vector<double> pred_means;
  std::vector<double> gold_means;
  for (const auto& [id, acc] : by_system) {
    SystemRanking r;
    r.system_id = id;
    r.instances = acc.n;
    r.predicted_mean = acc.pred / static_cast<double>(acc.n);
    r.gold_mean = acc.gold / static_cast<double>(acc.n);
    // Negated so rank 1 is the best system.
    pred_means.push_back(-r.predicted_mean);
    gold_means.push_back(-r.gold_mean);
    result.systems.push_back(r);
  }
  const auto pred_ranks = average_ranks(pred_means);
  const auto gold_ranks = average_ranks(gold_means);
  for (std::size_t i = 0; i < result.systems.size(); ++i) {
    result.systems[i].predicted_rank = pred_ranks[i];
    result.systems[i].gold_rank = gold_ranks[i];
  }
  result.rank_correlation = pearson_unchecked(pred_ranks, gold_ranks);
  return result;
}

// ---------------------------------------------------------------------------
// Error localization

LocalizationReport error_localization_accuracy(std::span<const ErrorCategory> pred,
                                               std::span<const ErrorCategory> gold) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::kPrecondition, "localization inputs differ in length");
  auto row_of = [](ErrorCategory c) {
    return static_cast<std::size_t>(
        std::find(kLocalizableCategories.begin(), kLocalizableCategories.end(), c) -
        kLocalizableCategories.begin());
  };
  auto col_of = [](ErrorCategory c) {
    return static_cast<std::size_t>(std::find(kAllCategories.begin(), kAllCategories.end(), c) -
                                    kAllCategories.begin());
  };
  LocalizationReport report;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!is_localizable(gold[i])) continue;
    ++report.confusion[row_of(gold[i])][col_of(pred[i])];
    ++report.sentences;
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t r = 0; r < kLocalizableCategories.size(); ++r) {
    const auto& row = report.confusion[r];
    const std::int64_t total = std::accumulate(row.begin(), row.end(), std::int64_t{0});
    if (total == 0) continue;
    const double acc = static_cast<double>(row[col_of(kLocalizableCategories[r])]) / static_cast<double>(total);
    report.accuracy[r] = acc;
    sum += acc;
    ++present;
  }
  if (present > 0) report.mean_accuracy = sum / present;
  return report;
}

// ---------------------------------------------------------------------------
// Agreement

double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw Error(ErrorCode::kPrecondition, "kappa needs two equal-length label lists of length >= 2");
  std::map<std::string, std::int64_t> ma;
  std::map<std::string, std::int64_t> mb;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ma[a[i]];
    ++mb[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  const auto n = static_cast<std::int64_t>(a.size());
  const Fraction p_o(agree, n);
  Fraction p_e(0, 1);
  for (const auto& [label, count] : ma) {
    if (const auto it = mb.find(label); it != mb.end()) p_e = p_e + Fraction(count * it->second, n * n);
  }
  if (p_e == Fraction(1, 1)) throw Error(ErrorCode::kUndefined, "kappa is undefined when chance agreement is 1");
  return ((p_o - p_e) / (Fraction(1, 1) - p_e)).value();
}

double krippendorff_alpha_nominal(const NominalRatings& ratings) {
  if (ratings.size() < 2) throw Error(ErrorCode::kNoPairableValues, "alpha needs at least two raters");
  std::size_t items = 0;
  for (const auto& r : ratings) items = std::max(items, r.size());

  // Coincidence matrix o[c][k] = sum over units of pairs(c,k) / (m_u - 1).
  std::map<std::string, std::map<std::string, double>> o;
  for (std::size_t u = 0; u < items; ++u) {
    std::map<std::string, int> counts;
    int m = 0;
    for (const auto& rater : ratings) {
      if (u < rater.size() && rater[u]) {
        ++counts[*rater[u]];
        ++m;
      }
    }
    if (m < 2) continue;
    for (const auto& [c, nc] : counts) {
      for (const auto& [k, nk] : counts) {
        const double pairs = c == k ? static_cast<double>(nc) * (nc - 1) : static_cast<double>(nc) * nk;
        o[c][k] += pairs / (m - 1);
      }
    }
  }
  std::map<std::string, double> marginal;
  double n = 0.0;
  for (const auto& [c, row] : o) {
    for (const auto& [k, v] : row) {
      marginal[c] += v;
      n += v;
    }
  }
  if (n < 2.0) throw Error(ErrorCode::kNoPairableValues, "no item has two or more ratings");

  double observed = 0.0;
  for (const auto& [c, row] : o)
    for (const auto& [k, v] : row)
      if (c != k) observed += v;
  if (observed == 0.0) return 1.0;
  double expected = 0.0;
  for (const auto& [c, nc] : marginal)
    for (const auto& [k, nk] : marginal)
      if (c != k) expected += nc * nk;
  return 1.0 - (n - 1.0) * observed / expected;
}

double krippendorff_alpha_interval(const IntervalRatings& ratings) {
  if (ratings.size() < 2) throw Error(ErrorCode::kNoPairableValues, "alpha needs at least two raters");
  std::size_t items = 0;
  for (const auto& r : ratings) items = std::max(items, r.size());

  std::vector<std::vector<double>> units;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < items; ++u) {
    std::vector<double> values;
    for (const auto& rater : ratings)
      if (u < rater.size() && rater[u]) values.push_back(*rater[u]);
    if (values.size() < 2) continue;
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    units.push_back(std::move(values));
  }
  if (units.empty()) throw Error(ErrorCode::kNoPairableValues, "no item has two or more ratings");
  const double scale = hi > lo ? hi - lo : 1.0;

  // D_o = (1/n) sum_u 1/(m_u-1) sum_{i!=j in u} d^2
  // D_e = 1/(n(n-1)) sum_{i!=j over all pairable values} d^2
  double n = 0.0;
  double within = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& values : units) {
    const double m = static_cast<double>(values.size());
    double s = 0.0;
    double ss = 0.0;
    for (double v : values) {
      const double z = (v - lo) / scale;
      s += z;
      ss += z * z;
    }
    // sum over ordered pairs i != j of (z_i - z_j)^2 = 2 m ss - 2 s^2
    within += (2.0 * m * ss - 2.0 * s * s) / (m - 1.0);
    n += m;
    sum += s;
    sum_sq += ss;
  }
  const double observed = within / n;
  if (observed <= 1e-15) return 1.0;
  const double expected = (2.0 * n * sum_sq - 2.0 * sum * sum) / (n * (n - 1.0));
  return 1.0 - observed / expected;
}

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::kFaithfulness: return "faithfulness";
    case Dimension::kCompleteness: return "completeness";
    case Dimension::kConciseness: return "conciseness";
  }
  return "";
}

std::optional<Fraction> component(const ScoreTriple& scores, Dimension d) {
  switch (d) {
    case Dimension::kFaithfulness: return scores.faithfulness;
    case Dimension::kCompleteness: return scores.completeness;
    case Dimension::kConciseness: return scores.conciseness;
  }
  return std::nullopt;
}

std::map<Dimension, DimensionStability> stability_report(std::span<const RunScores> runs) {
  if (runs.size() < 2) throw Error(ErrorCode::kPrecondition, "stability needs at least two runs");
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const bool same = runs[r].size() == runs[0].size() &&
                      std::equal(runs[r].begin(), runs[r].end(), runs[0].begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) {
      throw Error(ErrorCode::kMismatchedInstances,
                  "run " + std::to_string(r + 1) + " covers a different instance set than run 1");
    }
  }
  std::map<Dimension, DimensionStability> out;
  for (Dimension d : kDimensions) {
    IntervalRatings ratings(runs.size());
    DimensionStability stab;
    bool any = false;
    for (const auto& [id, _] : runs[0]) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto value = component(runs[r].at(id), d);
        ratings[r].push_back(value ? std::optional<double>(value->value()) : std::nullopt);
        if (value) {
          any = true;
          lo = std::min(lo, value->value());
          hi = std::max(hi, value->value());
        }
      }
      if (hi >= lo) stab.max_pairwise_delta = std::max(stab.max_pairwise_delta, hi - lo);
    }
    stab.instances = runs[0].size();
    if (any) {
      try {
        stab.alpha = krippendorff_alpha_interval(ratings);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoPairableValues) throw;
      }
    }
    out[d] = stab;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark report

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kSentence: return "sentence";
    case Level::kSummary: return "summary";
    case Level::kSystem: return "system";
    case Level::kLocalization: return "localization";
    case Level::kAgreement: return "agreement";
  }
  return "";
}

std::optional<Level> parse_level(std::string_view name) {
  for (Level l : {Level::kSentence, Level::kSummary, Level::kSystem, Level::kLocalization, Level::kAgreement})
    if (level_name(l) == name) return l;
  return std::nullopt;
}

namespace {

std::optional<Fraction> gold_score(const GoldAnnotations& gold, Dimension d, std::size_t num_sentences) {
  switch (d) {
    case Dimension::kFaithfulness: {
      if (!gold.sentence_labels || gold.sentence_labels->empty()) return std::nullopt;
      std::int64_t clean = 0;
      for (const auto& l : *gold.sentence_labels) clean += l.has_error ? 0 : 1;
      return Fraction(clean, static_cast<std::int64_t>(gold.sentence_labels->size()));
    }
    case Dimension::kCompleteness: {
      if (!gold.keyfact_labels || gold.keyfact_labels->empty()) return std::nullopt;
      std::int64_t matched = 0;
      for (const auto& l : *gold.keyfact_labels) matched += l.matched ? 1 : 0;
      return Fraction(matched, static_cast<std::int64_t>(gold.keyfact_labels->size()));
    }
    case Dimension::kConciseness: {
      if (!gold.keyfact_labels || num_sentences == 0) return std::nullopt;
      std::set<int> lines;
      for (const auto& l : *gold.keyfact_labels) {
        if (!l.matched) continue;
        if (!l.line_numbers) return std::nullopt;  // gold alignment not annotated
        for (int line : *l.line_numbers)
          if (line >= 1 && static_cast<std::size_t>(line) <= num_sentences) lines.insert(line);
      }
      return Fraction(static_cast<std::int64_t>(lines.size()), static_cast<std::int64_t>(num_sentences));
    }
  }
  return std::nullopt;
}

std::string failure_summary(const scoring::ScoredInstance& row) {
  std::string out = "parse failed:";
  auto add = [&](const char* task, const std::optional<scoring::TaskParseRecord>& rec) {
    if (rec && !rec->status.ok()) out += std::string(" ") + task + "=" +
                                         std::string(parse::failure_reason_name(*rec->status.failure));
  };
  add("fact_check", row.fact_check);
  add("alignment", row.alignment_parse);
  if (out == "parse failed:") out += " degenerate summary";
  return out;
}

}  // namespace

MetaReport build_meta_report(std::span<const scoring::ScoredInstance> predictions,
                             const ingest::GoldTable& gold, const BenchmarkOptions& options) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions to benchmark");
  MetaReport report;
  report.options = options;
  report.total_instances = predictions.size();

  std::map<std::string, const scoring::ScoredInstance*> by_id;
  for (const auto& p : predictions) by_id[p.instance_id] = &p;
  for (const auto& [id, _] : gold) {
    if (!by_id.count(id)) throw Error(ErrorCode::kJoin, "gold row for unknown instance \"" + id + "\"");
  }

  // Success accounting covers every prediction, joined or not.
  std::vector<parse::ParseStatus> overall;
  std::map<std::string, std::vector<parse::ParseStatus>> per_task;
  for (const auto& p : predictions) {
    overall.push_back(p.parse_ok() ? parse::ParseStatus{}
                                   : parse::ParseStatus{parse::FailureReason::kWrongSchema});
    if (p.fact_check) per_task["fact_check"].push_back(p.fact_check->status);
    if (p.alignment_parse) per_task["alignment"].push_back(p.alignment_parse->status);
  }
  report.success_ratio = parse::success_ratio(overall);
  for (const auto& [task, statuses] : per_task) report.task_success_ratio[task] = parse::success_ratio(statuses);

  struct Joined {
    const scoring::ScoredInstance* pred;
    const GoldAnnotations* gold;
  };
  std::vector<Joined> included;
  for (const auto& p : predictions) {
    const auto g = gold.find(p.instance_id);
    if (g == gold.end()) {
      report.excluded.push_back({p.instance_id, "no gold annotations"});
      continue;
    }
    ingest::check_gold_sentence_coverage(g->second, p.num_sentences, p.instance_id);
    if (p.num_keyfacts > 0) ingest::check_gold_keyfact_coverage(g->second, p.num_keyfacts, p.instance_id);
    const bool failed = p.scores.provenance == ScoreProvenance::kFailureDefault;
    if (failed && !options.include_failures) {
      report.excluded.push_back({p.instance_id, failure_summary(p)});
      continue;
    }
    included.push_back({&p, &g->second});
  }
  report.included_instances = included.size();

  const auto wants = [&](Level l) { return options.levels.count(l) > 0; };

  // Pooled sentence labels.
  std::vector<bool> pred_bin;
  std::vector<bool> gold_bin;
  std::vector<ErrorCategory> pred_cat;
  std::vector<ErrorCategory> gold_cat;
  for (const auto& j : included) {
    if (!j.pred->verdicts || !j.gold->sentence_labels) continue;
    std::map<int, const FactCheckVerdict*> verdict_at;
    for (const auto& v : *j.pred->verdicts) verdict_at[v.sentence_index] = &v;
    for (const auto& label : *j.gold->sentence_labels) {
      const auto it = verdict_at.find(label.index);
      if (it == verdict_at.end()) continue;
      pred_bin.push_back(it->second->has_error());
      gold_bin.push_back(label.has_error);
      if (label.category) {
        pred_cat.push_back(it->second->category);
        gold_cat.push_back(*label.category);
      }
    }
  }
  report.sentence_count = pred_bin.size();

  if (wants(Level::kSentence)) {
    if (pred_bin.empty()) {
      report.sentence_note = "no sentences with both predicted verdicts and gold labels";
    } else {
      try {
        report.sentence_level = balanced_accuracy(pred_bin, gold_bin);
      } catch (const Error& e) {
        report.sentence_note = e.what();
      }
    }
  }

  if (wants(Level::kLocalization)) {
    report.localization = error_localization_accuracy(pred_cat, gold_cat);
    if (report.localization->sentences == 0) {
      report.localization.reset();
      report.localization_note = "no gold sentences carry one of the seven error types";
    }
  }

  if (wants(Level::kAgreement)) {
    std::vector<std::string> a;
    std::vector<std::string> b;
    for (std::size_t i = 0; i < pred_bin.size(); ++i) {
      a.push_back(pred_bin[i] ? "1" : "0");
      b.push_back(gold_bin[i] ? "1" : "0");
    }
    try {
      report.sentence_kappa = cohen_kappa(a, b);
    } catch (const Error& e) {
      report.kappa_note = e.what();
    }
    NominalRatings ratings(2);
    for (const auto& j : included) {
      if (!j.pred->alignment || !j.gold->keyfact_labels) continue;
      std::map<int, bool> pred_matched;
      for (const auto& e : j.pred->alignment->entries) pred_matched[e.keyfact_index] = e.matched;
      for (const auto& label : *j.gold->keyfact_labels) {
        const auto it = pred_matched.find(label.index);
        if (it == pred_matched.end()) continue;
        ratings[0].push_back(std::string(it->second ? "yes" : "no"));
        ratings[1].push_back(std::string(label.matched ? "yes" : "no"));
      }
    }
    try {
      report.keyfact_alpha = krippendorff_alpha_nominal(ratings);
    } catch (const Error& e) {
      report.alpha_note = e.what();
    }
  }

  for (Dimension d : kDimensions) {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<SystemScore> systems;
    for (const auto& j : included) {
      const auto p = component(j.pred->scores, d);
      const auto g = gold_score(*j.gold, d, j.pred->num_sentences);
      if (!p || !g) continue;
      x.push_back(p->value());
      y.push_back(g->value());
      systems.push_back({j.pred->system_id, p->value(), g->value()});
    }
    if (x.empty()) continue;
    if (wants(Level::kSummary)) {
      CorrelationResult c;
      c.n = x.size();
      try {
        c.pearson = pearson(x, y);
        if (options.permutations > 0)
          c.pearson_p = permutation_p_value(x, y, Statistic::kPearson, options.permutations, options.seed);
      } catch (const Error& e) {
        c.note = e.what();
      }
      try {
        c.spearman = spearman(x, y);
        if (options.permutations > 0)
          c.spearman_p = permutation_p_value(x, y, Statistic::kSpearman, options.permutations, options.seed);
      } catch (const Error& e) {
        if (c.note.empty()) c.note = e.what();
      }
      report.summary_level[d] = c;
    }
    if (wants(Level::kSystem)) {
      try {
        report.system_level[d] = system_rank_correlation(systems);
      } catch (const Error& e) {
        report.system_notes[d] = e.what();
      }
    }
  }
  return report;
}

}  // namespace finesure::meta
