// src/evalkit.cpp

// Copyright 2026 The convalign authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "convalign/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "convalign/textalign.hpp"
#include "json.hpp"

namespace convalign {

namespace {

using nlohmann::json;

std::string pair_key(const Segment& s) {
  return s.conversation_id + "\t" + std::to_string(s.turn_index);
}

// Matches ref and hyp segments by (conversation_id, turn_index); throws
// listing the ids of anything unpaired.
std::vector<std::pair<const Segment*, const Segment*>> pair_segments(
    std::span<const Segment> ref, std::span<const Segment> hyp) {
  std::unordered_map<std::string, const Segment*> hyp_by_key;
  for (const Segment& s : hyp) {
    if (!hyp_by_key.emplace(pair_key(s), &s).second) {
      throw std::runtime_error("eval: duplicate hyp segment " + pair_key(s));
    }
  }
  std::vector<std::pair<const Segment*, const Segment*>> pairs;
  pairs.reserve(ref.size());
  std::string missing;
  std::unordered_map<std::string, bool> ref_seen;
  for (const Segment& s : ref) {
    const std::string key = pair_key(s);
    if (!ref_seen.emplace(key, true).second) {
      throw std::runtime_error("eval: duplicate ref segment " + key);
    }
    const auto it = hyp_by_key.find(key);
    if (it == hyp_by_key.end()) {
      missing += " ref-only:" + key;
      continue;
    }
    pairs.emplace_back(&s, it->second);
    hyp_by_key.erase(it);
  }
  for (const auto& [key, seg] : hyp_by_key) {
    (void)seg;
    missing += " hyp-only:" + key;
  }
  if (!missing.empty()) {
    throw std::runtime_error("eval: unpaired segments:" + missing);
  }
  return pairs;
}

WerResult score_pair(const Segment& ref, const Segment& hyp) {
  WerResult r;
  r.n_ref_words = static_cast<long long>(ref.tokens.size());
  const EditPath path = edit_align(ref.tokens, hyp.tokens);
  for (const EditOp& op : path.ops) {
    switch (op.kind) {
      case EditKind::kMatch: break;
      case EditKind::kSub: ++r.substitutions; break;
      case EditKind::kDel: ++r.deletions; break;
      case EditKind::kIns: ++r.insertions; break;
    }
  }
  return r;
}

void accumulate(WerResult& total, const WerResult& part) {
  total.n_ref_words += part.n_ref_words;
  total.substitutions += part.substitutions;
  total.deletions += part.deletions;
  total.insertions += part.insertions;
}

// Greedy non-overlapping left-to-right scan.
long long count_occurrences(const std::vector<std::string>& tokens,
                            const std::vector<std::string>& phrase) {
  long long count = 0;
  std::size_t i = 0;
  while (i + phrase.size() <= tokens.size()) {
    bool hit = true;
    for (std::size_t k = 0; k < phrase.size(); ++k) {
      if (tokens[i + k] != phrase[k]) {
        hit = false;
        break;
      }
    }
    if (hit) {
      ++count;
      i += phrase.size();
    } else {
      ++i;
    }
  }
  return count;
}

json wer_to_json(const WerResult& r) {
  json j;
  j["n_ref_words"] = r.n_ref_words;
  j["substitutions"] = r.substitutions;
  j["deletions"] = r.deletions;
  j["insertions"] = r.insertions;
  const double w = r.wer();
  if (std::isnan(w)) {
    j["wer"] = nullptr;
  } else {
    j["wer"] = w;
  }
  return j;
}

const char* category_name(BreakdownCategory c) {
  switch (c) {
    case BreakdownCategory::kAll: return "all";
    case BreakdownCategory::kSpeaker: return "speaker";
    case BreakdownCategory::kGender: return "gender";
    case BreakdownCategory::kDiseaseArea: return "disease_area";
  }
  return "all";
}

}  // namespace

double WerResult::wer() const {
  if (n_ref_words == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(errors()) / static_cast<double>(n_ref_words);
}

WerResult wer(std::span<const Segment> ref, std::span<const Segment> hyp) {
  const auto pairs = pair_segments(ref, hyp);
  const int n = static_cast<int>(pairs.size());
  long long nw = 0, s = 0, d = 0, ins = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : nw, s, d, ins)
  for (int i = 0; i < n; ++i) {
    const WerResult r = score_pair(*pairs[i].first, *pairs[i].second);
    nw += r.n_ref_words;
    s += r.substitutions;
    d += r.deletions;
    ins += r.insertions;
  }
  return {nw, s, d, ins};
}

WerResult wer_serial(std::span<const Segment> ref,
                     std::span<const Segment> hyp) {
  WerResult total;
  for (const auto& [r, h] : pair_segments(ref, hyp)) {
    accumulate(total, score_pair(*r, *h));
  }
  return total;
}

BreakdownReport breakdown(std::span<const Segment> ref,
                          std::span<const Segment> hyp,
                          std::span<const Conversation> conversations) {
  std::unordered_map<std::string, const Conversation*> convs;
  for (const Conversation& c : conversations) {
    convs.emplace(c.conversation_id, &c);
  }

  WerResult all;
  WerResult doctor, patient;
  WerResult male, female;
  std::map<std::string, WerResult> by_area;

  for (const auto& [r, h] : pair_segments(ref, hyp)) {
    const auto it = convs.find(r->conversation_id);
    if (it == convs.end()) {
      throw std::runtime_error("breakdown: no metadata for conversation " +
                               r->conversation_id);
    }
    const Conversation& conv = *it->second;
    const WerResult part = score_pair(*r, *h);
    accumulate(all, part);
    if (r->speaker == Speaker::kDoctor) accumulate(doctor, part);
    if (r->speaker == Speaker::kPatient) accumulate(patient, part);
    if (conv.metadata.doctor_gender == Gender::kMale) {
      accumulate(male, part);
    } else {
      accumulate(female, part);
    }
    if (conv.metadata.disease_area) {
      accumulate(by_area[*conv.metadata.disease_area], part);
    }
  }

  BreakdownReport report;
  report.rows.push_back({BreakdownCategory::kAll, "All", all});
  report.rows.push_back({BreakdownCategory::kSpeaker, "Doctor", doctor});
  report.rows.push_back({BreakdownCategory::kSpeaker, "Patient", patient});
  report.rows.push_back({BreakdownCategory::kGender, "Male", male});
  report.rows.push_back({BreakdownCategory::kGender, "Female", female});
  for (const auto& [area, result] : by_area) {
    report.rows.push_back({BreakdownCategory::kDiseaseArea, area, result});
  }
  return report;
}

double PhraseMetrics::precision() const {
  if (hyp_occurrences == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(matched) / static_cast<double>(hyp_occurrences);
}

double PhraseMetrics::recall() const {
  if (ref_occurrences == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(matched) / static_cast<double>(ref_occurrences);
}

PhraseMetrics phrase_metrics(std::span<const std::vector<std::string>> phrases,
                             std::span<const Segment> ref,
                             std::span<const Segment> hyp) {
  for (const auto& p : phrases) {
    if (p.empty()) throw std::invalid_argument("phrase_metrics: empty phrase");
  }
  const auto pairs = pair_segments(ref, hyp);

  PhraseMetrics metrics;
  metrics.per_phrase.resize(phrases.size());
  for (std::size_t pi = 0; pi < phrases.size(); ++pi) {
    PhraseStat& stat = metrics.per_phrase[pi];
    stat.phrase = phrases[pi];
    for (const auto& [r, h] : pairs) {
      const long long rc = count_occurrences(r->tokens, phrases[pi]);
      const long long hc = count_occurrences(h->tokens, phrases[pi]);
      stat.ref_occurrences += rc;
      stat.hyp_occurrences += hc;
      stat.matched += std::min(rc, hc);
    }
    metrics.ref_occurrences += stat.ref_occurrences;
    metrics.hyp_occurrences += stat.hyp_occurrences;
    metrics.matched += stat.matched;
  }
  return metrics;
}

double lexicon_recall(std::span<const std::vector<std::string>> lexicon,
                      std::span<const Segment> ref,
                      std::span<const Segment> hyp) {
  if (lexicon.empty()) {
    throw std::invalid_argument("lexicon_recall: empty lexicon");
  }
  const PhraseMetrics pm = phrase_metrics(lexicon, ref, hyp);
  if (pm.ref_occurrences == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return static_cast<double>(pm.matched) /
         static_cast<double>(pm.ref_occurrences);
}

std::vector<std::vector<std::string>> parse_phrase_file(
    const std::string& text) {
  std::vector<std::vector<std::string>> phrases;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> phrase;
    std::string raw;
    while (ls >> raw) {
      const std::string tok = normalize_token(raw);
      if (!tok.empty()) phrase.push_back(tok);
    }
    if (!phrase.empty()) phrases.push_back(std::move(phrase));
  }
  return phrases;
}

std::string render_breakdown_table(const BreakdownReport& report) {
  const char* kCategoryLabels[] = {"All", "Speaker", "Gender",
                                   "Target disease area"};
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-22s %-16s %10s %8s\n", "Category",
                "Segments", "Words", "WER");
  out += buf;
  out += std::string(58, '-') + "\n";
  BreakdownCategory last = BreakdownCategory::kAll;
  bool first = true;
  for (const BreakdownRow& row : report.rows) {
    const bool show_category = first || row.category != last;
    const double w = row.result.wer();
    char wer_buf[32];
    if (std::isnan(w)) {
      std::snprintf(wer_buf, sizeof(wer_buf), "%8s", "-");
    } else {
      std::snprintf(wer_buf, sizeof(wer_buf), "%8.1f", 100.0 * w);
    }
    std::snprintf(buf, sizeof(buf), "%-22s %-16s %10lld %s\n",
                  show_category
                      ? kCategoryLabels[static_cast<int>(row.category)]
                      : "",
                  row.label.c_str(), row.result.n_ref_words, wer_buf);
    out += buf;
    last = row.category;
    first = false;
  }
  return out;
}

std::string report_to_json(const BreakdownReport& report,
                           const PhraseMetrics* phrases,
                           const double* lexicon_recall_value) {
  json j;
  j["breakdown"] = json::array();
  for (const BreakdownRow& row : report.rows) {
    json r = wer_to_json(row.result);
    r["category"] = category_name(row.category);
    r["label"] = row.label;
    j["breakdown"].push_back(std::move(r));
  }
  if (phrases != nullptr) {
    json p;
    p["ref_occurrences"] = phrases->ref_occurrences;
    p["hyp_occurrences"] = phrases->hyp_occurrences;
    p["matched"] = phrases->matched;
    p["precision"] = std::isnan(phrases->precision())
                         ? json(nullptr)
                         : json(phrases->precision());
    p["recall"] = std::isnan(phrases->recall()) ? json(nullptr)
                                                : json(phrases->recall());
    p["per_phrase"] = json::array();
    for (const PhraseStat& s : phrases->per_phrase) {
      json ps;
      ps["phrase"] = s.phrase;
      ps["ref_occurrences"] = s.ref_occurrences;
      ps["hyp_occurrences"] = s.hyp_occurrences;
      ps["matched"] = s.matched;
      p["per_phrase"].push_back(std::move(ps));
    }
    j["phrases"] = std::move(p);
  }
  if (lexicon_recall_value != nullptr) {
    j["lexicon_recall"] = std::isnan(*lexicon_recall_value)
                              ? json(nullptr)
                              : json(*lexicon_recall_value);
  }
  return j.dump(2) + "\n";
}

}  // namespace convalign
