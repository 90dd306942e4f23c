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

// Slow, obviously-correct reference computations for the tests. Nothing
// here calls into the library's statistics code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Ratio {
  std::int64_t num;
  std::int64_t den;
};

// Keyfacts with at least one edge over M; distinct sentences over N.
inline Ratio completeness_from_edges(const std::set<std::pair<int, int>>& edges, int m) {
  std::set<int> ks;
  for (const auto& [k, s] : edges) ks.insert(k);
  return {static_cast<std::int64_t>(ks.size()), m};
}

inline Ratio conciseness_from_edges(const std::set<std::pair<int, int>>& edges, int n) {
  std::set<int> ss;
  for (const auto& [k, s] : edges) ss.insert(s);
  return {static_cast<std::int64_t>(ss.size()), n};
}

// Long-double textbook formula, one pass over the deviations.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Rank of v = 1 + #smaller + (#equal - 1) / 2, counted directly.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out;
  for (double a : v) {
    int less = 0, equal = 0;
    for (double b : v) {
      if (b < a) ++less;
      if (b == a) ++equal;
    }
    out.push_back(1.0 + less + (equal - 1) / 2.0);
  }
  return out;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// Sensitivity and specificity as exact counts; returns numerator and
// denominator of their mean.
inline Ratio balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& gold) {
  std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gold[i]) (pred[i] ? tp : fn)++;
    else (pred[i] ? fp : tn)++;
  }
  const std::int64_t p = tp + fn, q = tn + fp;
  return {tp * q + tn * p, 2 * p * q};
}

inline double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, double> ca, cb;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    if (a[i] == b[i]) agree += 1;
  }
  const double n = static_cast<double>(a.size());
  double pe = 0;
  for (const auto& [label, count] : ca) pe += (count / n) * (cb.count(label) ? cb[label] / n : 0.0);
  const double po = agree / n;
  return (po - pe) / (1 - pe);
}

// Alpha from its pairwise definition: D_o averages the difference over
// ordered pairs inside each unit (weighted 1/(m_u - 1)), D_e over all
// ordered pairs of pairable values.
template <typename T, typename Delta>
double alpha_pairwise(const std::vector<std::vector<std::optional<T>>>& ratings, Delta delta) {
  const std::size_t items = ratings.empty() ? 0 : ratings[0].size();
  std::vector<std::vector<T>> units;
  for (std::size_t u = 0; u < items; ++u) {
    std::vector<T> vals;
    for (const auto& rater : ratings)
      if (rater[u]) vals.push_back(*rater[u]);
    if (vals.size() >= 2) units.push_back(vals);
  }
  std::vector<T> all;
  long double d_o = 0;
  for (const auto& vals : units) {
    long double s = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = 0; j < vals.size(); ++j)
        if (i != j) s += delta(vals[i], vals[j]);
    d_o += s / static_cast<long double>(vals.size() - 1);
    all.insert(all.end(), vals.begin(), vals.end());
  }
  const long double n = static_cast<long double>(all.size());
  d_o /= n;
  long double d_e = 0;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      if (i != j) d_e += delta(all[i], all[j]);
  d_e /= n * (n - 1);
  if (d_o == 0) return 1.0;
  return static_cast<double>(1 - d_o / d_e);
}

inline double alpha_nominal(const std::vector<std::vector<std::optional<std::string>>>& ratings) {
  return alpha_pairwise(ratings, [](const std::string& a, const std::string& b) { return a == b ? 0.0L : 1.0L; });
}

inline double alpha_interval(const std::vector<std::vector<std::optional<double>>>& ratings) {
  return alpha_pairwise(ratings, [](double a, double b) {
    const long double d = static_cast<long double>(a) - b;
    return d * d;
  });
}

}  // namespace oracle
