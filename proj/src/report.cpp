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

#include "finesure/report.hpp"

#include <sstream>

#include "finesure/error.hpp"
#include "finesure/text_util.hpp"

namespace finesure::report {

using nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"score", "percent", "count", "text"};

std::string_view kind_name(Kind k) { return kKindNames[static_cast<int>(k)]; }

Kind parse_kind(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (kKindNames[i] == s) return static_cast<Kind>(i);
  throw Error(ErrorCode::kSchema, "unknown entry kind \"" + std::string(s) + "\"");
}

Entry make(std::string section, std::string metric, std::string dimension, Kind kind,
           std::optional<double> value, std::optional<Fraction> exact = std::nullopt, std::string note = {}) {
  return Entry{std::move(section), std::move(metric), std::move(dimension), kind, value, exact, std::move(note)};
}

Entry fraction_entry(std::string section, std::string metric, std::string dimension, Kind kind, const Fraction& f) {
  return make(std::move(section), std::move(metric), std::move(dimension), kind, f.value(), f);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

std::string_view format_name(Format f) {
  switch (f) {
    case Format::kJson: return "json";
    case Format::kCsv: return "csv";
    case Format::kMarkdown: return "markdown";
  }
  return "json";
}

std::optional<Format> parse_format(std::string_view name) {
  const auto n = to_lower_ascii(trim(name));
  if (n == "json") return Format::kJson;
  if (n == "csv") return Format::kCsv;
  if (n == "markdown" || n == "md") return Format::kMarkdown;
  return std::nullopt;
}

std::string Entry::display() const {
  if (kind == Kind::kText) return {};
  if (!value) return "n/a";
  switch (kind) {
    case Kind::kScore: return format_fixed(*value, 4);
    case Kind::kPercent: return format_percent(*value);
    case Kind::kCount: return std::to_string(static_cast<long long>(*value));
    case Kind::kText: break;
  }
  return {};
}

json options_to_json(const meta::BenchmarkOptions& options) {
  json levels = json::array();
  for (auto l : options.levels) levels.push_back(std::string(meta::level_name(l)));
  return json{{"levels", levels},
              {"permutations", options.permutations},
              {"seed", options.seed},
              {"inclusion", options.include_failures ? "all" : "strict"}};
}

std::vector<Entry> flatten(const meta::MetaReport& r) {
  std::vector<Entry> out;
  const auto count = [](std::size_t n) { return std::optional<double>(static_cast<double>(n)); };

  out.push_back(make("run", "total_instances", "", Kind::kCount, count(r.total_instances)));
  out.push_back(make("run", "included_instances", "", Kind::kCount, count(r.included_instances)));
  out.push_back(fraction_entry("run", "success_ratio", "", Kind::kPercent, r.success_ratio));
  for (const auto& [task, ratio] : r.task_success_ratio)
    out.push_back(fraction_entry("run", "success_ratio", task, Kind::kPercent, ratio));

  const auto& levels = r.options.levels;
  if (levels.count(meta::Level::kSentence)) {
    out.push_back(make("sentence", "sentences", "", Kind::kCount, count(r.sentence_count)));
    if (r.sentence_level) {
      const auto& b = *r.sentence_level;
      out.push_back(fraction_entry("sentence", "balanced_accuracy", "", Kind::kPercent, b.value));
      if (const auto s = b.counts.sensitivity()) out.push_back(fraction_entry("sentence", "sensitivity", "", Kind::kPercent, *s));
      if (const auto s = b.counts.specificity()) out.push_back(fraction_entry("sentence", "specificity", "", Kind::kPercent, *s));
    } else {
      out.push_back(make("sentence", "balanced_accuracy", "", Kind::kPercent, std::nullopt, std::nullopt, r.sentence_note));
    }
  }

  if (levels.count(meta::Level::kSummary)) {
    for (const auto& [d, c] : r.summary_level) {
      const std::string dim(meta::dimension_name(d));
      out.push_back(make("summary", "n", dim, Kind::kCount, count(c.n)));
      out.push_back(make("summary", "pearson", dim, Kind::kScore, c.pearson, std::nullopt, c.note));
      out.push_back(make("summary", "pearson_p", dim, Kind::kScore, c.pearson_p));
      out.push_back(make("summary", "spearman", dim, Kind::kScore, c.spearman, std::nullopt, c.note));
      out.push_back(make("summary", "spearman_p", dim, Kind::kScore, c.spearman_p));
    }
  }

  if (levels.count(meta::Level::kSystem)) {
    for (meta::Dimension d : meta::kDimensions) {
      const std::string dim(meta::dimension_name(d));
      if (const auto it = r.system_level.find(d); it != r.system_level.end()) {
        out.push_back(make("system", "rank_correlation", dim, Kind::kScore, it->second.rank_correlation));
        for (const auto& s : it->second.systems) {
          out.push_back(make("system", "predicted_mean:" + s.system_id, dim, Kind::kScore, s.predicted_mean));
          out.push_back(make("system", "gold_mean:" + s.system_id, dim, Kind::kScore, s.gold_mean));
        }
      } else if (const auto n = r.system_notes.find(d); n != r.system_notes.end()) {
        out.push_back(make("system", "rank_correlation", dim, Kind::kScore, std::nullopt, std::nullopt, n->second));
      }
    }
  }

  if (levels.count(meta::Level::kLocalization)) {
    if (r.localization) {
      const auto& loc = *r.localization;
      out.push_back(make("localization", "sentences", "", Kind::kCount, static_cast<double>(loc.sentences)));
      for (std::size_t i = 0; i < kLocalizableCategories.size(); ++i) {
        const std::string cat(canonical_name(kLocalizableCategories[i]));
        out.push_back(make("localization", "accuracy", cat, Kind::kPercent, loc.accuracy[i], std::nullopt,
                           loc.accuracy[i] ? "" : "no gold sentences"));
      }
      out.push_back(make("localization", "mean_accuracy", "", Kind::kPercent, loc.mean_accuracy));
      for (std::size_t i = 0; i < kLocalizableCategories.size(); ++i) {
        for (std::size_t j = 0; j < kAllCategories.size(); ++j) {
          if (loc.confusion[i][j] == 0) continue;
          out.push_back(make("confusion", std::string(canonical_name(kLocalizableCategories[i])),
                             std::string(canonical_name(kAllCategories[j])), Kind::kCount,
                             static_cast<double>(loc.confusion[i][j])));
        }
      }
    } else {
      out.push_back(make("localization", "mean_accuracy", "", Kind::kPercent, std::nullopt, std::nullopt,
                         r.localization_note));
    }
  }

  if (levels.count(meta::Level::kAgreement)) {
    out.push_back(make("agreement", "cohen_kappa", "sentence", Kind::kScore, r.sentence_kappa, std::nullopt,
                       r.kappa_note));
    out.push_back(make("agreement", "krippendorff_alpha", "keyfact", Kind::kScore, r.keyfact_alpha, std::nullopt,
                       r.alpha_note));
  }

  for (const auto& e : r.excluded) out.push_back(make("excluded", e.instance_id, "", Kind::kText, std::nullopt, std::nullopt, e.reason));
  return out;
}

json entries_to_json(const std::vector<Entry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    json j = {{"section", e.section}, {"metric", e.metric}, {"dimension", e.dimension},
              {"kind", std::string(kind_name(e.kind))}};
    j["value"] = e.value ? json(*e.value) : json(nullptr);
    j["display"] = e.display();
    if (e.exact) j["exact"] = {{"num", e.exact->numerator()}, {"den", e.exact->denominator()}};
    if (!e.note.empty()) j["note"] = e.note;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<Entry> entries_from_json(const json& doc) {
  const json& list = doc.is_object() ? doc.at("entries") : doc;
  if (!list.is_array()) throw Error(ErrorCode::kSchema, "report \"entries\" must be an array");
  std::vector<Entry> out;
  try {
    for (const auto& j : list) {
      Entry e;
      e.section = j.at("section").get<std::string>();
      e.metric = j.at("metric").get<std::string>();
      e.dimension = j.value("dimension", "");
      e.kind = parse_kind(j.value("kind", "score"));
      if (j.contains("value") && !j["value"].is_null()) e.value = j["value"].get<double>();
      if (j.contains("exact")) e.exact = Fraction(j["exact"].at("num").get<std::int64_t>(), j["exact"].at("den").get<std::int64_t>());
      e.note = j.value("note", "");
      out.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchema, std::string("malformed report entry: ") + ex.what());
  }
  return out;
}

std::string render(const std::vector<Entry>& entries, Format format, const json& metadata) {
  std::ostringstream os;
  switch (format) {
    case Format::kJson: {
      json doc = {{"metadata", metadata}, {"entries", entries_to_json(entries)}};
      os << doc.dump(2) << '\n';
      break;
    }
    case Format::kCsv: {
      os << "section,metric,dimension,value,exact,note\n";
      for (const auto& e : entries) {
        os << csv_field(e.section) << ',' << csv_field(e.metric) << ',' << csv_field(e.dimension) << ','
           << csv_field(e.display()) << ',' << (e.exact ? e.exact->to_string() : "") << ',' << csv_field(e.note)
           << '\n';
      }
      break;
    }
    case Format::kMarkdown: {
      os << "# Benchmark report\n\n";
      if (metadata.is_object()) {
        for (const auto& [k, v] : metadata.items())
          os << "- " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        if (!metadata.empty()) os << '\n';
      }
      std::string section;
      for (const auto& e : entries) {
        if (e.section != section) {
          if (!section.empty()) os << '\n';
          section = e.section;
          os << "## " << section << "\n\n| metric | dimension | value | note |\n|---|---|---|---|\n";
        }
        os << "| " << md_cell(e.metric) << " | " << md_cell(e.dimension) << " | " << md_cell(e.display()) << " | "
           << md_cell(e.note) << " |\n";
      }
      break;
    }
  }
  return os.str();
}

}  // namespace finesure::report
