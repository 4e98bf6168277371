// src/corpus.cpp

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

#include "convalign/corpus.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace convalign {

namespace {

using nlohmann::json;

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_deid_marker(const std::string& lowered) {
  return lowered == "<deid>" || lowered == "[deid]";
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

bool has_whitespace(const std::string& s) {
  for (unsigned char c : s) {
    if (std::isspace(c)) return true;
  }
  return false;
}

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("conversation: " + msg);
}

}  // namespace

std::string normalize_token(const std::string& raw) {
  const std::string lowered = ascii_lower(raw);
  if (is_deid_marker(lowered)) return kDeidToken;
  std::size_t b = 0;
  std::size_t e = lowered.size();
  // Non-ASCII bytes are treated as word characters and kept.
  while (b < e && static_cast<unsigned char>(lowered[b]) < 0x80 &&
         !is_ascii_alnum(lowered[b])) {
    ++b;
  }
  while (e > b && static_cast<unsigned char>(lowered[e - 1]) < 0x80 &&
         !is_ascii_alnum(lowered[e - 1])) {
    --e;
  }
  return lowered.substr(b, e - b);
}

const char* speaker_code(Speaker s) {
  switch (s) {
    case Speaker::kDoctor: return "DR";
    case Speaker::kPatient: return "PT";
    case Speaker::kCaregiver: return "CG";
    case Speaker::kOther: return "OT";
  }
  return "OT";
}

Speaker speaker_from_code(const std::string& c) {
  if (c == "DR") return Speaker::kDoctor;
  if (c == "PT") return Speaker::kPatient;
  if (c == "CG") return Speaker::kCaregiver;
  if (c == "OT") return Speaker::kOther;
  throw std::runtime_error("unknown speaker code: " + c);
}

const char* gender_code(Gender g) {
  return g == Gender::kMale ? "M" : "F";
}

Gender gender_from_code(const std::string& c) {
  if (c == "M") return Gender::kMale;
  if (c == "F") return Gender::kFemale;
  throw std::runtime_error("unknown gender code: " + c);
}

const char* provenance_code(Provenance p) {
  switch (p) {
    case Provenance::kIsland: return "ISLAND";
    case Provenance::kForced: return "FORCED";
    case Provenance::kInterpolated: return "INTERP";
  }
  return "INTERP";
}

Provenance provenance_from_code(const std::string& c) {
  if (c == "ISLAND") return Provenance::kIsland;
  if (c == "FORCED") return Provenance::kForced;
  if (c == "INTERP") return Provenance::kInterpolated;
  throw std::runtime_error("unknown provenance code: " + c);
}

void validate(const Conversation& conv) {
  if (conv.conversation_id.empty()) fail("conversation_id is empty");
  if (has_whitespace(conv.conversation_id)) {
    fail("conversation_id contains whitespace: '" + conv.conversation_id + "'");
  }
  if (!std::isfinite(conv.audio_duration_sec) || conv.audio_duration_sec < 0) {
    fail("audio_duration_sec must be finite and non-negative");
  }
  if (conv.metadata.doctor_id.empty()) fail("doctor_id is empty");

  double prev_start = -1.0;
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const Turn& t = conv.turns[i];
    const std::string where = "turn " + std::to_string(i);
    if (!std::isfinite(t.ann_start_sec) || !std::isfinite(t.ann_end_sec)) {
      fail(where + ": non-finite annotated time");
    }
    if (t.ann_start_sec > t.ann_end_sec) {
      fail(where + ": ann_start_sec > ann_end_sec");
    }
    if (t.ann_start_sec < 0 || t.ann_end_sec > conv.audio_duration_sec) {
      fail(where + ": annotated times outside [0, audio_duration_sec]");
    }
    if (t.ann_start_sec < prev_start) {
      fail(where + ": turns not ordered by annotated start time");
    }
    prev_start = t.ann_start_sec;

    bool saw_deid = false;
    for (const std::string& w : t.words) {
      if (w.empty()) fail(where + ": empty token");
      if (has_whitespace(w)) fail(where + ": token contains whitespace");
      if (w == kDeidToken) saw_deid = true;
    }
    if (saw_deid && !t.has_deid) {
      fail(where + ": contains the de-id tag but has_deid is false");
    }
    if (t.words.empty() && !t.has_deid) fail(where + ": turn has no words");
  }
}

Conversation parse_conversation(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }

  Conversation conv;
  try {
    conv.conversation_id = j.at("conversation_id").get<std::string>();
    conv.audio_duration_sec = j.at("audio_duration_sec").get<double>();

    const json& m = j.at("metadata");
    conv.metadata.doctor_id = m.at("doctor_id").get<std::string>();
    conv.metadata.doctor_gender =
        gender_from_code(m.at("doctor_gender").get<std::string>());
    conv.metadata.interaction_type =
        m.at("interaction_type").get<std::string>();
    const json& area = m.at("disease_area");
    if (area.is_null()) {
      conv.metadata.disease_area = std::nullopt;
    } else {
      conv.metadata.disease_area = area.get<std::string>();
    }

    for (const json& jt : j.at("turns")) {
      Turn t;
      t.speaker = speaker_from_code(jt.at("speaker").get<std::string>());
      t.ann_start_sec = jt.at("start_sec").get<double>();
      t.ann_end_sec = jt.at("end_sec").get<double>();
      for (const json& jw : jt.at("words")) {
        const std::string tok = normalize_token(jw.get<std::string>());
        if (tok.empty()) continue;  // non-lexical, dropped
        if (tok == kDeidToken) t.has_deid = true;
        t.words.push_back(tok);
      }
      conv.turns.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(std::string("missing or mistyped field: ") + e.what());
  }

  validate(conv);
  return conv;
}

std::string serialize_conversation(const Conversation& conv) {
  json m;
  m["doctor_id"] = conv.metadata.doctor_id;
  m["doctor_gender"] = gender_code(conv.metadata.doctor_gender);
  m["interaction_type"] = conv.metadata.interaction_type;
  if (conv.metadata.disease_area) {
    m["disease_area"] = *conv.metadata.disease_area;
  } else {
    m["disease_area"] = nullptr;
  }

  json turns = json::array();
  for (const Turn& t : conv.turns) {
    json jt;
    jt["speaker"] = speaker_code(t.speaker);
    jt["start_sec"] = t.ann_start_sec;
    jt["end_sec"] = t.ann_end_sec;
    jt["words"] = t.words;
    turns.push_back(std::move(jt));
  }

  json j;
  j["conversation_id"] = conv.conversation_id;
  j["audio_duration_sec"] = conv.audio_duration_sec;
  j["metadata"] = std::move(m);
  j["turns"] = std::move(turns);
  return j.dump(2) + "\n";
}

std::vector<StreamWord> word_stream(const Conversation& conv) {
  std::vector<StreamWord> out;
  int gi = 0;
  for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
    for (const std::string& w : conv.turns[ti].words) {
      out.push_back({gi++, static_cast<int>(ti), w});
    }
  }
  return out;
}

std::string format_alignment(const std::string& conversation_id,
                             std::span<const AlignedWord> words) {
  std::string out;
  for (const AlignedWord& w : words) {
    out += conversation_id;
    out += ' ';
    out += std::to_string(w.global_index);
    out += ' ';
    out += fmt3(w.start_sec);
    out += ' ';
    out += fmt3(w.end_sec);
    out += ' ';
    out += w.token;
    out += ' ';
    out += provenance_code(w.provenance);
    out += '\n';
  }
  return out;
}

std::vector<AlignedWord> parse_alignment(const std::string& text,
                                         std::string* conversation_id) {
  std::vector<AlignedWord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string conv_id;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, token, prov;
    AlignedWord w;
    if (!(ls >> id >> w.global_index >> w.start_sec >> w.end_sec >> token >>
          prov)) {
      throw std::runtime_error("alignment line " + std::to_string(lineno) +
                               ": expected 6 fields");
    }
    std::string extra;
    if (ls >> extra) {
      throw std::runtime_error("alignment line " + std::to_string(lineno) +
                               ": trailing fields");
    }
    if (conv_id.empty()) {
      conv_id = id;
    } else if (conv_id != id) {
      throw std::runtime_error("alignment line " + std::to_string(lineno) +
                               ": mixed conversation ids");
    }
    w.token = token;
    w.provenance = provenance_from_code(prov);
    out.push_back(std::move(w));
  }
  if (conversation_id != nullptr) *conversation_id = conv_id;
  return out;
}

}  // namespace convalign
