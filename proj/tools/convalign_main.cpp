// tools/convalign_main.cpp

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

// Command-line entry point: simulate / align / segment / split / eval.
// Every command is deterministic given --seed; files are written atomically
// (temp + rename) so parallel runs are crash-safe.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "convalign/acoustic_sim.hpp"
#include "convalign/corpus.hpp"
#include "convalign/evalkit.hpp"
#include "convalign/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace convalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::uint64_t seed = 1;
  // simulate
  int n_conversations = 20;
  int vocab_size = 60;
  double mean_turn_words = 8.0;
  double mean_conversation_min = 10.0;
  double turn_jitter_sec = 2.0;
  double deid_rate = 0.02;
  int doctor_pool = 100;
  double gender_ratio = 0.5;
  std::vector<std::string> disease_areas = SimCorpusConfig{}.disease_areas;
  // pipeline
  double chunk_sec = 10.0;
  int min_island_len = 5;
  double buffer_sec = 1.0;
  double tail_fraction = 0.10;
  double gap_pad_sec = 0.1;
  // acoustic channel
  double gain = 1.0;
  double noise_sd = 3.0;
  int frame_rate_hz = 100;
  double p_sub = 0.10;
  double p_del = 0.03;
  double p_ins = 0.02;
  double time_jitter_sd = 0.05;
  // split
  int k_test = 100;
  int n_target_test = 64;
  int n_nontarget_test = 36;
  std::vector<std::string> target_areas = SplitSpec{}.target_disease_areas;
  bool gender_balance = true;
  int jobs = 1;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.good()) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Conversation files in a corpus directory, sorted by filename so every run
// sees the same order.
std::vector<fs::path> corpus_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("corpus directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no conversation files in " + dir.string());
  }
  return files;
}

std::vector<CorpusInput> load_corpus(const fs::path& dir) {
  std::vector<CorpusInput> inputs;
  for (const fs::path& f : corpus_files(dir)) {
    CorpusInput input;
    input.conv = parse_conversation(read_file(f));
    fs::path truth = f;
    truth.replace_extension(".truth");
    if (fs::exists(truth)) input.truth = parse_truth(read_file(truth));
    inputs.push_back(std::move(input));
  }
  return inputs;
}

// Config file (JSON, keys matching the kebab-case flags) provides defaults;
// flags given on the command line win.
class ConfigBinder {
 public:
  template <typename T>
  void bind(const std::string& key, T* field) {
    appliers_.push_back([key, field](const json& j, const CLI::App& cmd) {
      const CLI::Option* opt = cmd.get_option_no_throw("--" + key);
      if (opt != nullptr && opt->count() > 0) return;
      if (!j.contains(key)) return;
      *field = j.at(key).get<T>();
    });
  }

  void apply(const CLI::App& cmd, const std::string& config_path) const {
    if (config_path.empty()) return;
    json j;
    try {
      j = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      throw std::runtime_error("bad config file: " + std::string(e.what()));
    }
    for (const auto& apply_one : appliers_) apply_one(j, cmd);
  }

 private:
  std::vector<std::function<void(const json&, const CLI::App&)>> appliers_;
};

void log_line(const std::string& msg) {
  std::cerr << "[convalign] " << msg << "\n";
}

// --- simulate ---------------------------------------------------------------

int run_simulate(const RunConfig& cfg, const std::string& out_dir) {
  SimCorpusConfig sim;
  sim.n_conversations = cfg.n_conversations;
  sim.vocab_size = cfg.vocab_size;
  sim.mean_turn_words = cfg.mean_turn_words;
  sim.mean_conversation_min = cfg.mean_conversation_min;
  sim.turn_jitter_sec = cfg.turn_jitter_sec;
  sim.deid_rate = cfg.deid_rate;
  sim.doctor_pool = cfg.doctor_pool;
  sim.gender_ratio = cfg.gender_ratio;
  sim.disease_areas = cfg.disease_areas;
  sim.seed = cfg.seed;

  const std::vector<SimConversation> corpus = generate_corpus(sim);
  fs::create_directories(out_dir);
  for (const SimConversation& sc : corpus) {
    const fs::path base = fs::path(out_dir) / sc.conversation.conversation_id;
    write_file_atomic(base.string() + ".json",
                      serialize_conversation(sc.conversation));
    write_file_atomic(base.string() + ".truth", format_truth(sc.truth));
  }
  log_line("simulate: wrote " + std::to_string(corpus.size()) +
           " conversations to " + out_dir);
  return kExitOk;
}

// --- align ------------------------------------------------------------------

Strategy strategy_from_name(const std::string& name) {
  if (name == "original") return Strategy::kOriginal;
  if (name == "buffered") return Strategy::kBuffered;
  if (name == "two-pass") return Strategy::kTwoPass;
  throw std::runtime_error("unknown strategy: " + name);
}

int run_align(const RunConfig& cfg, const std::string& corpus_dir,
              const std::string& out_dir, const std::string& strategy_name) {
  const Strategy strategy = strategy_from_name(strategy_name);
  const std::vector<CorpusInput> inputs = load_corpus(corpus_dir);

  PipelineConfig pcfg;
  pcfg.chunk_sec = cfg.chunk_sec;
  pcfg.min_island_len = cfg.min_island_len;
  pcfg.buffer_sec = cfg.buffer_sec;
  pcfg.tail_fraction = cfg.tail_fraction;
  pcfg.gap_pad_sec = cfg.gap_pad_sec;

  AcousticConfig acfg;
  acfg.gain = cfg.gain;
  acfg.noise_sd = cfg.noise_sd;
  acfg.frame_rate_hz = cfg.frame_rate_hz;
  acfg.em.p_sub = cfg.p_sub;
  acfg.em.p_del = cfg.p_del;
  acfg.em.p_ins = cfg.p_ins;
  acfg.em.jitter_sd_sec = cfg.time_jitter_sd;

  const std::vector<ConversationAlignment> results =
      align_corpus(inputs, strategy, pcfg, acfg, cfg.seed, cfg.jobs);

  fs::create_directories(out_dir);
  int n_failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string& id = inputs[i].conv.conversation_id;
    if (results[i].failed) {
      ++n_failed;
      log_line("align: " + id + " failed: " + results[i].error);
      continue;
    }
    const fs::path base = fs::path(out_dir) / id;
    write_file_atomic(base.string() + ".align",
                      format_alignment(id, results[i].transcript.words));
    write_file_atomic(base.string() + ".segments",
                      format_segments(results[i].segments));
    if (results[i].chunks_failed > 0) {
      log_line("align: " + id + ": " +
               std::to_string(results[i].chunks_failed) + " chunk(s) failed");
    }
  }

  const CoverageReport cov = total_coverage(results);
  json jcov;
  jcov["words_total"] = cov.words_total;
  jcov["pass1"] = cov.words_pass1;
  jcov["pass2"] = cov.words_pass2;
  jcov["interpolated"] = cov.words_interpolated;
  write_file_atomic(fs::path(out_dir) / "coverage.json", jcov.dump(2) + "\n");

  bool any_truth = false;
  for (const CorpusInput& in : inputs) {
    if (!in.truth.empty()) any_truth = true;
  }
  if (any_truth) {
    const BoundaryStats stats = boundary_error_stats(inputs, results);
    json jb;
    jb["strategy"] = strategy_name;
    jb["n_conversations"] = inputs.size();
    jb["n_failed"] = n_failed;
    jb["n_boundaries"] = stats.n_boundaries;
    jb["median_abs_err_sec"] = stats.median_abs_err;
    jb["mean_abs_err_sec"] = stats.mean_abs_err;
    jb["p90_abs_err_sec"] = stats.p90_abs_err;
    write_file_atomic(fs::path(out_dir) / "boundary_report.json",
                      jb.dump(2) + "\n");
    log_line("align: median turn-boundary error " +
             std::to_string(stats.median_abs_err) + " s over " +
             std::to_string(stats.n_boundaries) + " boundaries");
  }

  log_line("align: coverage pass1=" + std::to_string(cov.coverage_pass1()) +
           " pass1+2=" + std::to_string(cov.coverage_pass2()));
  return n_failed > 0 ? kExitPartial : kExitOk;
}

// --- segment ----------------------------------------------------------------

int run_segment(const RunConfig& cfg, const std::string& corpus_dir,
                const std::string& align_dir, const std::string& out_dir,
                const std::string& role_name) {
  (void)cfg;
  const SegmentRole role =
      role_name == "test" ? SegmentRole::kTest : SegmentRole::kTrain;
  const std::vector<CorpusInput> inputs = load_corpus(corpus_dir);

  std::vector<Segment> all;
  int n_missing = 0;
  for (const CorpusInput& input : inputs) {
    const fs::path af =
        fs::path(align_dir) / (input.conv.conversation_id + ".align");
    if (!fs::exists(af)) {
      log_line("segment: no alignment for " + input.conv.conversation_id);
      ++n_missing;
      continue;
    }
    std::string aligned_id;
    AlignedTranscript at;
    at.words = parse_alignment(read_file(af), &aligned_id);
    at.conversation_id = aligned_id;
    if (aligned_id != input.conv.conversation_id) {
      throw std::runtime_error("segment: alignment id mismatch in " +
                               af.string());
    }
    const std::vector<Segment> segs = cut_turns(at, input.conv);
    all.insert(all.end(), segs.begin(), segs.end());
  }

  const std::size_t total = all.size();
  std::size_t n_deid = 0;
  for (const Segment& s : all) {
    if (std::find(s.tokens.begin(), s.tokens.end(), kDeidToken) !=
        s.tokens.end()) {
      ++n_deid;
    }
  }
  std::vector<Segment> kept = filter_segments(std::move(all), role);
  const std::size_t n_short = total - n_deid - kept.size();

  fs::create_directories(out_dir);
  write_file_atomic(fs::path(out_dir) / "segments.tsv", format_segments(kept));
  log_line("segment: total=" + std::to_string(total) +
           " kept=" + std::to_string(kept.size()) +
           " dropped_deid=" + std::to_string(n_deid) +
           " dropped_short=" + std::to_string(n_short));
  return n_missing > 0 ? kExitPartial : kExitOk;
}

// --- split ------------------------------------------------------------------

int run_split(const RunConfig& cfg, const std::string& corpus_dir,
              const std::string& out_dir) {
  const std::vector<CorpusInput> inputs = load_corpus(corpus_dir);
  std::vector<Conversation> convs;
  convs.reserve(inputs.size());
  for (const CorpusInput& in : inputs) convs.push_back(in.conv);

  SplitSpec spec;
  spec.k_test = cfg.k_test;
  spec.n_target_test = cfg.n_target_test;
  spec.n_nontarget_test = cfg.n_nontarget_test;
  spec.target_disease_areas = cfg.target_areas;
  spec.require_gender_balance = cfg.gender_balance;

  const SplitResult result = split_corpus(convs, spec, cfg.seed);

  fs::create_directories(out_dir);
  std::string train, test;
  for (const std::string& id : result.train_ids) train += id + "\n";
  for (const std::string& id : result.test_ids) test += id + "\n";
  write_file_atomic(fs::path(out_dir) / "train.ids", train);
  write_file_atomic(fs::path(out_dir) / "test.ids", test);

  const std::size_t excluded =
      convs.size() - result.train_ids.size() - result.test_ids.size();
  log_line("split: test=" + std::to_string(result.test_ids.size()) +
           " train=" + std::to_string(result.train_ids.size()) +
           " excluded=" + std::to_string(excluded));
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

int run_eval(const std::string& ref_path, const std::string& hyp_path,
             const std::string& corpus_dir, const std::string& phrases_path,
             const std::string& lexicon_path, const std::string& out_dir) {
  const std::vector<Segment> ref = parse_segments(read_file(ref_path));
  const std::vector<Segment> hyp = parse_segments(read_file(hyp_path));
  const std::vector<CorpusInput> inputs = load_corpus(corpus_dir);
  std::vector<Conversation> convs;
  convs.reserve(inputs.size());
  for (const CorpusInput& in : inputs) convs.push_back(in.conv);

  const BreakdownReport report = breakdown(ref, hyp, convs);

  PhraseMetrics phrase_result;
  bool have_phrases = false;
  if (!phrases_path.empty()) {
    const auto phrases = parse_phrase_file(read_file(phrases_path));
    phrase_result = phrase_metrics(phrases, ref, hyp);
    have_phrases = true;
  }
  double lex_recall = 0.0;
  bool have_lexicon = false;
  if (!lexicon_path.empty()) {
    const auto lexicon = parse_phrase_file(read_file(lexicon_path));
    lex_recall = lexicon_recall(lexicon, ref, hyp);
    have_lexicon = true;
  }

  const std::string table = render_breakdown_table(report);
  std::cout << table;
  if (have_phrases) {
    std::cout << "phrase precision: "
              << (std::isnan(phrase_result.precision())
                      ? std::string("-")
                      : std::to_string(phrase_result.precision()))
              << "  recall: "
              << (std::isnan(phrase_result.recall())
                      ? std::string("-")
                      : std::to_string(phrase_result.recall()))
              << "\n";
  }
  if (have_lexicon) {
    std::cout << "lexicon recall: "
              << (std::isnan(lex_recall) ? std::string("-")
                                         : std::to_string(lex_recall))
              << "\n";
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(
        fs::path(out_dir) / "report.json",
        report_to_json(report, have_phrases ? &phrase_result : nullptr,
                       have_lexicon ? &lex_recall : nullptr));
    write_file_atomic(fs::path(out_dir) / "table.txt", table);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convalign: long-form conversation alignment and corpus "
               "preparation toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::string corpus_dir, out_dir, align_dir, strategy, role;
  std::string ref_path, hyp_path, phrases_path, lexicon_path;

  const auto add_common = [&](CLI::App* cmd, ConfigBinder& binder) {
    cmd->add_option("--config", config_path,
                    "JSON config file (flags override its values)");
    cmd->add_option("--seed", cfg.seed, "random seed");
    binder.bind("seed", &cfg.seed);
  };

  // simulate
  ConfigBinder sim_binder;
  CLI::App* sim = app.add_subcommand("simulate",
                                     "generate a synthetic conversation corpus");
  add_common(sim, sim_binder);
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--n-conversations", cfg.n_conversations);
  sim->add_option("--vocab-size", cfg.vocab_size);
  sim->add_option("--mean-turn-words", cfg.mean_turn_words);
  sim->add_option("--mean-conversation-min", cfg.mean_conversation_min);
  sim->add_option("--turn-jitter-sec", cfg.turn_jitter_sec);
  sim->add_option("--deid-rate", cfg.deid_rate);
  sim->add_option("--doctor-pool", cfg.doctor_pool);
  sim->add_option("--gender-ratio", cfg.gender_ratio);
  sim->add_option("--disease-areas", cfg.disease_areas)->delimiter(',');
  sim_binder.bind("n-conversations", &cfg.n_conversations);
  sim_binder.bind("vocab-size", &cfg.vocab_size);
  sim_binder.bind("mean-turn-words", &cfg.mean_turn_words);
  sim_binder.bind("mean-conversation-min", &cfg.mean_conversation_min);
  sim_binder.bind("turn-jitter-sec", &cfg.turn_jitter_sec);
  sim_binder.bind("deid-rate", &cfg.deid_rate);
  sim_binder.bind("doctor-pool", &cfg.doctor_pool);
  sim_binder.bind("gender-ratio", &cfg.gender_ratio);
  sim_binder.bind("disease-areas", &cfg.disease_areas);

  // align
  ConfigBinder align_binder;
  CLI::App* align = app.add_subcommand("align",
                                       "align conversations to their audio");
  add_common(align, align_binder);
  align->add_option("--corpus", corpus_dir, "corpus directory")->required();
  align->add_option("--out", out_dir, "output directory")->required();
  align->add_option("--strategy", strategy, "alignment strategy")
      ->required()
      ->check(CLI::IsMember({"original", "buffered", "two-pass"}));
  align->add_option("--jobs", cfg.jobs, "parallel conversations");
  align->add_option("--chunk-sec", cfg.chunk_sec);
  align->add_option("--min-island-len", cfg.min_island_len);
  align->add_option("--buffer-sec", cfg.buffer_sec);
  align->add_option("--tail-fraction", cfg.tail_fraction);
  align->add_option("--gap-pad-sec", cfg.gap_pad_sec);
  align->add_option("--gain", cfg.gain);
  align->add_option("--noise-sd", cfg.noise_sd);
  align->add_option("--frame-rate-hz", cfg.frame_rate_hz);
  align->add_option("--p-sub", cfg.p_sub);
  align->add_option("--p-del", cfg.p_del);
  align->add_option("--p-ins", cfg.p_ins);
  align->add_option("--time-jitter-sd", cfg.time_jitter_sd);
  align_binder.bind("jobs", &cfg.jobs);
  align_binder.bind("chunk-sec", &cfg.chunk_sec);
  align_binder.bind("min-island-len", &cfg.min_island_len);
  align_binder.bind("buffer-sec", &cfg.buffer_sec);
  align_binder.bind("tail-fraction", &cfg.tail_fraction);
  align_binder.bind("gap-pad-sec", &cfg.gap_pad_sec);
  align_binder.bind("gain", &cfg.gain);
  align_binder.bind("noise-sd", &cfg.noise_sd);
  align_binder.bind("frame-rate-hz", &cfg.frame_rate_hz);
  align_binder.bind("p-sub", &cfg.p_sub);
  align_binder.bind("p-del", &cfg.p_del);
  align_binder.bind("p-ins", &cfg.p_ins);
  align_binder.bind("time-jitter-sd", &cfg.time_jitter_sd);

  // segment
  ConfigBinder seg_binder;
  CLI::App* seg = app.add_subcommand("segment",
                                     "cut aligned conversations into "
                                     "filtered speaker-turn segments");
  add_common(seg, seg_binder);
  seg->add_option("--corpus", corpus_dir, "corpus directory")->required();
  seg->add_option("--alignments", align_dir, "alignment directory")->required();
  seg->add_option("--out", out_dir, "output directory")->required();
  seg->add_option("--role", role, "filtering role")
      ->required()
      ->check(CLI::IsMember({"train", "test"}));

  // split
  ConfigBinder split_binder;
  CLI::App* split = app.add_subcommand("split",
                                       "doctor-disjoint train/test split");
  add_common(split, split_binder);
  split->add_option("--corpus", corpus_dir, "corpus directory")->required();
  split->add_option("--out", out_dir, "output directory")->required();
  split->add_option("--k-test", cfg.k_test);
  split->add_option("--n-target-test", cfg.n_target_test);
  split->add_option("--n-nontarget-test", cfg.n_nontarget_test);
  split->add_option("--target-areas", cfg.target_areas)->delimiter(',');
  split->add_flag("--gender-balance,!--no-gender-balance", cfg.gender_balance,
                  "require an equal split of male and female doctors");
  split_binder.bind("k-test", &cfg.k_test);
  split_binder.bind("n-target-test", &cfg.n_target_test);
  split_binder.bind("n-nontarget-test", &cfg.n_nontarget_test);
  split_binder.bind("target-areas", &cfg.target_areas);
  split_binder.bind("gender-balance", &cfg.gender_balance);

  // eval
  ConfigBinder eval_binder;
  CLI::App* eval = app.add_subcommand("eval",
                                      "score hypothesis segments against "
                                      "reference segments");
  add_common(eval, eval_binder);
  eval->add_option("--ref", ref_path, "reference segments.tsv")->required();
  eval->add_option("--hyp", hyp_path, "hypothesis segments.tsv")->required();
  eval->add_option("--corpus", corpus_dir, "corpus directory (metadata)")
      ->required();
  eval->add_option("--phrases", phrases_path, "phrase list file");
  eval->add_option("--lexicon", lexicon_path, "lexicon file");
  eval->add_option("--out", out_dir, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      sim_binder.apply(*sim, config_path);
      return run_simulate(cfg, out_dir);
    }
    if (align->parsed()) {
      align_binder.apply(*align, config_path);
      return run_align(cfg, corpus_dir, out_dir, strategy);
    }
    if (seg->parsed()) {
      seg_binder.apply(*seg, config_path);
      return run_segment(cfg, corpus_dir, align_dir, out_dir, role);
    }
    if (split->parsed()) {
      split_binder.apply(*split, config_path);
      return run_split(cfg, corpus_dir, out_dir);
    }
    if (eval->parsed()) {
      eval_binder.apply(*eval, config_path);
      return run_eval(ref_path, hyp_path, corpus_dir, phrases_path,
                      lexicon_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
