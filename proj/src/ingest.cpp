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

#include "finesure/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "finesure/text_util.hpp"

namespace finesure::ingest {

using nlohmann::json;

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const json&)>& row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kSchema, path.string() + " line " + std::to_string(line_no) +
                                          ": invalid JSON (" + e.what() + ")");
    }
    if (!value.is_object()) {
      throw Error(ErrorCode::kSchema,
                  path.string() + " line " + std::to_string(line_no) + ": expected a JSON object");
    }
    row(line_no, value);
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "read failure on " + path.string());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kSet = {
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "vs",   "etc",  "e.g",
      "i.e",  "u.s",  "u.k",  "u.n",  "inc",  "ltd",  "co",   "corp", "jan",  "feb",  "mar",
      "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",  "nov",  "dec",  "no",   "gen",
      "gov",  "sen",  "rep",  "lt",   "col",  "capt", "sgt",  "mt",   "ft",   "a.m",  "p.m",
      "approx", "dept", "est", "fig", "jr", "rev", "hon", "messrs", "cf", "al",
  };
  return kSet;
}

bool is_closing(std::string_view text, std::size_t pos, std::size_t* width) {
  const char ch = text[pos];
  if (ch == '"' || ch == '\'' || ch == ')' || ch == ']') {
    *width = 1;
    return true;
  }
  // U+201D and U+2019 closing quotes.
  if (text.substr(pos, 3) == "\xE2\x80\x9D" || text.substr(pos, 3) == "\xE2\x80\x99") {
    *width = 3;
    return true;
  }
  return false;
}

bool starts_sentence(std::string_view text, std::size_t pos) {
  const auto ch = static_cast<unsigned char>(text[pos]);
  if (std::isupper(ch) || std::isdigit(ch) || ch == '"' || ch == '\'' || ch == '(' || ch == '[')
    return true;
  // U+201C and U+2018 opening quotes.
  return text.substr(pos, 3) == "\xE2\x80\x9C" || text.substr(pos, 3) == "\xE2\x80\x98";
}

bool is_terminal(char ch) { return ch == '.' || ch == '!' || ch == '?'; }

}  // namespace

bool is_abbreviation(std::string_view token) {
  std::string t = to_lower_ascii(token);
  while (!t.empty() && !std::isalnum(static_cast<unsigned char>(t.front()))) t.erase(0, 1);
  while (!t.empty() && t.back() == '.') t.pop_back();
  if (t.empty()) return false;
  if (abbreviations().count(t)) return true;
  // Dotted initialisms such as "U.S" or "p.h.d".
  if (t.find('.') != std::string::npos) {
    bool letters_and_dots = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const bool letter = std::isalpha(static_cast<unsigned char>(t[i])) != 0;
      const bool dot = t[i] == '.';
      if (!(letter || dot) || (dot && (i == 0 || t[i - 1] == '.'))) letters_and_dots = false;
    }
    if (letters_and_dots) return true;
  }
  return false;
}

std::vector<std::string> segment_sentences(std::string_view summary_text) {
  std::vector<std::string> out;
  const std::string_view text = summary_text;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    const std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t mark = i;
    std::size_t j = i;
    while (j < n && is_terminal(text[j])) ++j;
    std::size_t width = 0;
    while (j < n && is_closing(text, j, &width)) j += width;
    if (j >= n || !std::isspace(static_cast<unsigned char>(text[j]))) {
      i = j > i ? j : i + 1;
      continue;
    }
    std::size_t k = j;
    while (k < n && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k >= n || !starts_sentence(text, k)) {
      i = k;
      continue;
    }
    if (text[mark] == '.' && j - mark == 1) {
      std::size_t b = mark;
      while (b > start && !std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
      if (is_abbreviation(text.substr(b, mark - b))) {
        i = k;
        continue;
      }
    }
    emit(j);
    i = k;
  }
  emit(n);
  if (out.empty()) throw Error(ErrorCode::kDegenerateInput, "summary is empty after trimming");
  return out;
}

// ---------------------------------------------------------------------------
// Instances

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line); }

const json* find_field(const json& row, const char* key) {
  const auto it = row.find(key);
  if (it == row.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string required_string(const json& row, const char* key, std::size_t line) {
  const json* v = find_field(row, key);
  if (!v) throw Error(ErrorCode::kSchema, at_line(line) + ": missing field \"" + key + "\"");
  if (!v->is_string())
    throw Error(ErrorCode::kSchema, at_line(line) + ": field \"" + key + "\" must be a string");
  return v->get<std::string>();
}

std::vector<std::string> string_list(const json& v, const char* key, std::size_t line) {
  if (!v.is_array())
    throw Error(ErrorCode::kSchema,
                at_line(line) + ": field \"" + key + "\" must be a list of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string())
      throw Error(ErrorCode::kSchema,
                  at_line(line) + ": field \"" + key + "\" must be a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::optional<std::set<int>> int_set(const json& v, const char* key, std::size_t line) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_array())
    throw Error(ErrorCode::kSchema, at_line(line) + ": \"" + key + "\" must be a list of ints");
  std::set<int> out;
  for (const auto& item : v) {
    if (!item.is_number_integer())
      throw Error(ErrorCode::kSchema, at_line(line) + ": \"" + key + "\" must be a list of ints");
    out.insert(item.get<int>());
  }
  return out;
}

const std::set<std::string>& known_instance_fields() {
  static const std::set<std::string> kFields = {"instance_id", "system_id",          "document",
                                                "summary",     "summary_sentences", "keyfacts"};
  return kFields;
}

}  // namespace

EvalInstance instance_from_json(const json& row, std::size_t line) {
  EvalInstance inst;
  inst.instance_id = required_string(row, "instance_id", line);
  if (inst.instance_id.empty())
    throw Error(ErrorCode::kSchema, at_line(line) + ": \"instance_id\" is empty");
  inst.system_id = required_string(row, "system_id", line);
  inst.document = required_string(row, "document", line);
  if (is_blank(inst.document))
    throw Error(ErrorCode::kSchema, at_line(line) + ": \"document\" is empty");

  const json* summary = find_field(row, "summary");
  const json* presplit = find_field(row, "summary_sentences");
  if (!summary && !presplit) {
    throw Error(ErrorCode::kSchema,
                at_line(line) + ": missing field \"summary\" or \"summary_sentences\"");
  }
  if (summary) {
    if (!summary->is_string())
      throw Error(ErrorCode::kSchema, at_line(line) + ": field \"summary\" must be a string");
    inst.summary = summary->get<std::string>();
  }
  if (presplit) {
    inst.presplit = true;
    inst.sentences = string_list(*presplit, "summary_sentences", line);
  } else if (!is_blank(*inst.summary)) {
    inst.sentences = segment_sentences(*inst.summary);
  }
  // A blank summary leaves N = 0; the pipeline scores it as a failure.

  if (const json* kf = find_field(row, "keyfacts")) {
    KeyfactList list{inst.instance_id, string_list(*kf, "keyfacts", line), KeyfactOrigin::kHuman};
    if (list.keyfacts.empty())
      throw Error(ErrorCode::kSchema, at_line(line) + ": \"keyfacts\" is present but empty");
    for (const auto& k : list.keyfacts)
      if (is_blank(k)) throw Error(ErrorCode::kSchema, at_line(line) + ": blank keyfact");
    inst.keyfacts = std::move(list);
  }

  for (const auto& [key, value] : row.items()) {
    if (!known_instance_fields().count(key) && value.is_string())
      inst.extra_text[key] = value.get<std::string>();
  }
  return inst;
}

json instance_to_json(const EvalInstance& instance) {
  json row = json::object();
  row["instance_id"] = instance.instance_id;
  row["system_id"] = instance.system_id;
  row["document"] = instance.document;
  if (instance.summary) row["summary"] = *instance.summary;
  if (instance.presplit || !instance.summary) row["summary_sentences"] = instance.sentences;
  if (instance.keyfacts) row["keyfacts"] = instance.keyfacts->keyfacts;
  for (const auto& [key, value] : instance.extra_text) row[key] = value;
  return row;
}

std::vector<EvalInstance> load_instances(const std::filesystem::path& path) {
  std::vector<EvalInstance> out;
  std::map<std::string, std::size_t> seen;
  read_jsonl(path, [&](std::size_t line, const json& row) {
    EvalInstance inst = instance_from_json(row, line);
    const auto [it, inserted] = seen.emplace(inst.instance_id, line);
    if (!inserted) {
      throw Error(ErrorCode::kSchema, "duplicate instance_id \"" + inst.instance_id + "\" on " +
                                          at_line(it->second) + " and " + at_line(line));
    }
    out.push_back(std::move(inst));
  });
  return out;
}

void write_instances(const std::filesystem::path& path, const std::vector<EvalInstance>& instances) {
  std::vector<json> rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) rows.push_back(instance_to_json(inst));
  write_jsonl(path, rows);
}

// ---------------------------------------------------------------------------
// Gold

GoldAnnotations gold_from_json(const json& row, std::size_t line) {
  GoldAnnotations gold;
  if (const json* labels = find_field(row, "sentence_labels")) {
    if (!labels->is_array())
      throw Error(ErrorCode::kSchema, at_line(line) + ": \"sentence_labels\" must be a list");
    std::vector<GoldSentenceLabel> out;
    for (const auto& item : *labels) {
      if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
          !item.contains("has_error") || !item["has_error"].is_boolean()) {
        throw Error(ErrorCode::kSchema,
                    at_line(line) + ": sentence label needs integer \"index\" and bool \"has_error\"");
      }
      GoldSentenceLabel label{item["index"].get<int>(), item["has_error"].get<bool>(), {}};
      if (const json* cat = find_field(item, "category")) {
        if (!cat->is_string())
          throw Error(ErrorCode::kSchema, at_line(line) + ": \"category\" must be a string");
        label.category = normalize_category(cat->get<std::string>());
        if (!label.category) {
          throw Error(ErrorCode::kSchema,
                      at_line(line) + ": unknown gold category \"" + cat->get<std::string>() + "\"");
        }
      }
      out.push_back(label);
    }
    gold.sentence_labels = std::move(out);
  }
  if (const json* labels = find_field(row, "keyfact_labels")) {
    if (!labels->is_array())
      throw Error(ErrorCode::kSchema, at_line(line) + ": \"keyfact_labels\" must be a list");
    std::vector<GoldKeyfactLabel> out;
    for (const auto& item : *labels) {
      if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
          !item.contains("matched") || !item["matched"].is_boolean()) {
        throw Error(ErrorCode::kSchema,
                    at_line(line) + ": keyfact label needs integer \"index\" and bool \"matched\"");
      }
      GoldKeyfactLabel label{item["index"].get<int>(), item["matched"].get<bool>(), {}};
      if (const json* lines = find_field(item, "line_numbers"))
        label.line_numbers = int_set(*lines, "line_numbers", line);
      out.push_back(label);
    }
    gold.keyfact_labels = std::move(out);
  }
  return gold;
}

GoldTable load_gold(const std::filesystem::path& path) {
  GoldTable table;
  std::map<std::string, std::size_t> seen;
  read_jsonl(path, [&](std::size_t line, const json& row) {
    const std::string id = required_string(row, "instance_id", line);
    const auto [it, inserted] = seen.emplace(id, line);
    if (!inserted) {
      throw Error(ErrorCode::kSchema, "duplicate gold instance_id \"" + id + "\" on " +
                                          at_line(it->second) + " and " + at_line(line));
    }
    table.emplace(id, gold_from_json(row, line));
  });
  return table;
}

namespace {

template <typename Label>
bool covers_exactly(const std::vector<Label>& labels, std::size_t n) {
  if (labels.size() != n) return false;
  std::vector<bool> hit(n + 1, false);
  for (const auto& l : labels) {
    if (l.index < 1 || static_cast<std::size_t>(l.index) > n || hit[l.index]) return false;
    hit[l.index] = true;
  }
  return true;
}

}  // namespace

void check_gold_sentence_coverage(const GoldAnnotations& gold, std::size_t n,
                                  std::string_view instance_id) {
  if (gold.sentence_labels && !covers_exactly(*gold.sentence_labels, n)) {
    throw Error(ErrorCode::kShape, "instance \"" + std::string(instance_id) + "\": " +
                                       std::to_string(gold.sentence_labels->size()) +
                                       " gold sentence labels for " + std::to_string(n) +
                                       " sentences (indices must be exactly 1.." +
                                       std::to_string(n) + ")");
  }
}

void check_gold_keyfact_coverage(const GoldAnnotations& gold, std::size_t m,
                                 std::string_view instance_id) {
  if (gold.keyfact_labels && !covers_exactly(*gold.keyfact_labels, m)) {
    throw Error(ErrorCode::kShape, "instance \"" + std::string(instance_id) + "\": " +
                                       std::to_string(gold.keyfact_labels->size()) +
                                       " gold keyfact labels for " + std::to_string(m) +
                                       " keyfacts (indices must be exactly 1.." +
                                       std::to_string(m) + ")");
  }
}

std::vector<EvalInstance> attach_gold(std::vector<EvalInstance> instances, const GoldTable& gold) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < instances.size(); ++i) by_id[instances[i].instance_id] = i;

  for (const auto& [id, _] : gold) {
    if (!by_id.count(id)) throw Error(ErrorCode::kJoin, "gold row for unknown instance \"" + id + "\"");
  }
  std::vector<std::string> problems;
  for (const auto& [id, annotations] : gold) {
    EvalInstance& inst = instances[by_id.at(id)];
    try {
      check_gold_sentence_coverage(annotations, inst.sentences.size(), id);
      check_gold_keyfact_coverage(annotations, inst.keyfacts ? inst.keyfacts->size() : 0, id);
    } catch (const Error& e) {
      problems.emplace_back(e.what());
      continue;
    }
    inst.gold = annotations;
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << problems.size() << " instance(s) with mismatched gold counts";
    for (const auto& p : problems) msg << "\n  " << p;
    throw Error(ErrorCode::kShape, msg.str());
  }
  return instances;
}

std::vector<EvalInstance> attach_gold(std::vector<EvalInstance> instances,
                                      const std::filesystem::path& gold_path) {
  return attach_gold(std::move(instances), load_gold(gold_path));
}

std::map<std::string, KeyfactList> load_keyfacts(const std::filesystem::path& path) {
  std::map<std::string, KeyfactList> out;
  read_jsonl(path, [&](std::size_t line, const json& row) {
    KeyfactList list;
    list.instance_id = required_string(row, "instance_id", line);
    const json* kf = find_field(row, "keyfacts");
    if (!kf) throw Error(ErrorCode::kSchema, at_line(line) + ": missing field \"keyfacts\"");
    list.keyfacts = string_list(*kf, "keyfacts", line);
    if (list.keyfacts.empty())
      throw Error(ErrorCode::kSchema, at_line(line) + ": \"keyfacts\" is empty");
    if (const json* origin = find_field(row, "origin")) {
      const auto parsed = origin->is_string() ? parse_origin(origin->get<std::string>()) : std::nullopt;
      if (!parsed) throw Error(ErrorCode::kSchema, at_line(line) + ": bad \"origin\"");
      list.origin = *parsed;
    }
    out[list.instance_id] = std::move(list);
  });
  return out;
}

json keyfacts_to_json(const KeyfactList& list) {
  return json{{"instance_id", list.instance_id},
              {"keyfacts", list.keyfacts},
              {"origin", std::string(origin_name(list.origin))}};
}

}  // namespace finesure::ingest
