#include "rltrack/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rltrack/checkpoint.hpp"
#include "rltrack/errors.hpp"
#include "rltrack/eval.hpp"

namespace rltrack {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad_epoch(int epoch) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", epoch);
  return buf;
}

ReturnMode parse_return_mode(const std::string& s) {
  if (s == "per_step") return ReturnMode::kPerStep;
  if (s == "reward_to_go") return ReturnMode::kRewardToGo;
  if (s == "total") return ReturnMode::kTotal;
  throw ConfigError("config field 'trainer.return_mode' must be one of "
                    "per_step|reward_to_go|total, got '" + s + "'");
}

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("unknown config field '" +
                        (section.empty() ? it.key() : section + "." + it.key()) +
                        "'");
  }
}

template <typename T>
void read_field(const json& j, const std::string& section, const char* key,
                T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError("config field '" +
                      (section.empty() ? key : section + "." + key) +
                      "' has the wrong type");
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }

  RunConfig cfg;
  check_keys(j, "",
             {"seed", "out_dir", "synth", "trainer", "checkpoint_every", "resume",
              "data", "heldout_eval", "exclude_first_frame", "checkpoint",
              "results", "timing", "gradcheck"});
  read_field(j, "", "seed", cfg.seed);
  read_field(j, "", "out_dir", cfg.out_dir);
  read_field(j, "", "checkpoint_every", cfg.checkpoint_every);
  read_field(j, "", "resume", cfg.resume);
  read_field(j, "", "heldout_eval", cfg.heldout_eval);
  read_field(j, "", "exclude_first_frame", cfg.exclude_first_frame);
  read_field(j, "", "checkpoint", cfg.checkpoint);
  read_field(j, "", "results", cfg.results_files);
  read_field(j, "", "timing", cfg.timing_file);

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s, "synth",
               {"grid", "seq_len", "count", "speed_min", "speed_max", "size_min",
                "size_max", "size_drift", "noise_std", "distractors", "img_w",
                "img_h"});
    read_field(s, "synth", "grid", cfg.synth.grid);
    read_field(s, "synth", "seq_len", cfg.synth.seq_len);
    read_field(s, "synth", "count", cfg.synth_count);
    read_field(s, "synth", "speed_min", cfg.synth.speed_min);
    read_field(s, "synth", "speed_max", cfg.synth.speed_max);
    read_field(s, "synth", "size_min", cfg.synth.size_min);
    read_field(s, "synth", "size_max", cfg.synth.size_max);
    read_field(s, "synth", "size_drift", cfg.synth.size_drift);
    read_field(s, "synth", "noise_std", cfg.synth.noise_std);
    read_field(s, "synth", "distractors", cfg.synth.distractors);
    read_field(s, "synth", "img_w", cfg.synth.img_w);
    read_field(s, "synth", "img_h", cfg.synth.img_h);
  }

  if (j.contains("trainer")) {
    const json& t = j.at("trainer");
    check_keys(t, "trainer",
               {"chunk_len", "episodes", "sigma", "lr_initial", "lr_final",
                "max_epochs", "reward_switch_epoch", "adam_beta1", "adam_beta2",
                "adam_eps", "return_mode", "state_carryover", "patience",
                "encode_dim", "hidden_dim"});
    read_field(t, "trainer", "chunk_len", cfg.trainer.chunk_len);
    read_field(t, "trainer", "episodes", cfg.trainer.episodes);
    read_field(t, "trainer", "sigma", cfg.trainer.sigma);
    read_field(t, "trainer", "lr_initial", cfg.trainer.lr_initial);
    read_field(t, "trainer", "lr_final", cfg.trainer.lr_final);
    read_field(t, "trainer", "max_epochs", cfg.trainer.max_epochs);
    read_field(t, "trainer", "reward_switch_epoch", cfg.trainer.reward_switch_epoch);
    read_field(t, "trainer", "adam_beta1", cfg.trainer.adam_beta1);
    read_field(t, "trainer", "adam_beta2", cfg.trainer.adam_beta2);
    read_field(t, "trainer", "adam_eps", cfg.trainer.adam_eps);
    if (t.contains("return_mode")) {
      std::string mode;
      read_field(t, "trainer", "return_mode", mode);
      cfg.trainer.return_mode = parse_return_mode(mode);
    }
    read_field(t, "trainer", "state_carryover", cfg.trainer.state_carryover);
    read_field(t, "trainer", "patience", cfg.trainer.patience);
    read_field(t, "trainer", "encode_dim", cfg.trainer.encode_dim);
    read_field(t, "trainer", "hidden_dim", cfg.trainer.hidden_dim);
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    if (!d.is_array()) throw ConfigError("config field 'data' must be an array");
    for (const json& e : d) {
      check_keys(e, "data[]", {"features", "ground_truth", "img_w", "img_h"});
      DataFileEntry entry;
      read_field(e, "data[]", "features", entry.features);
      read_field(e, "data[]", "ground_truth", entry.ground_truth);
      read_field(e, "data[]", "img_w", entry.img_w);
      read_field(e, "data[]", "img_h", entry.img_h);
      cfg.data_files.push_back(std::move(entry));
    }
  }

  if (j.contains("gradcheck")) {
    const json& g = j.at("gradcheck");
    check_keys(g, "gradcheck",
               {"feature_dim", "encode_dim", "hidden_dim", "chunk_len",
                "fd_epsilon", "tolerance", "policy_tolerance", "policy_cases",
                "inject_fault"});
    read_field(g, "gradcheck", "feature_dim", cfg.gradcheck.dims.feature);
    read_field(g, "gradcheck", "encode_dim", cfg.gradcheck.dims.encode);
    read_field(g, "gradcheck", "hidden_dim", cfg.gradcheck.dims.hidden);
    read_field(g, "gradcheck", "chunk_len", cfg.gradcheck.chunk_len);
    read_field(g, "gradcheck", "fd_epsilon", cfg.gradcheck.fd_epsilon);
    read_field(g, "gradcheck", "tolerance", cfg.gradcheck.tolerance);
    read_field(g, "gradcheck", "policy_tolerance", cfg.gradcheck.policy_tolerance);
    read_field(g, "gradcheck", "policy_cases", cfg.gradcheck.policy_cases);
    read_field(g, "gradcheck", "inject_fault", cfg.gradcheck.inject_fault);
  }
  return cfg;
}

namespace {

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["synth"] = {{"grid", cfg.synth.grid},
                {"seq_len", cfg.synth.seq_len},
                {"count", cfg.synth_count},
                {"speed_min", cfg.synth.speed_min},
                {"speed_max", cfg.synth.speed_max},
                {"size_min", cfg.synth.size_min},
                {"size_max", cfg.synth.size_max},
                {"size_drift", cfg.synth.size_drift},
                {"noise_std", cfg.synth.noise_std},
                {"distractors", cfg.synth.distractors},
                {"img_w", cfg.synth.img_w},
                {"img_h", cfg.synth.img_h}};
  j["trainer"] = {{"chunk_len", cfg.trainer.chunk_len},
                  {"episodes", cfg.trainer.episodes},
                  {"sigma", cfg.trainer.sigma},
                  {"lr_initial", cfg.trainer.lr_initial},
                  {"lr_final", cfg.trainer.lr_final},
                  {"max_epochs", cfg.trainer.max_epochs},
                  {"reward_switch_epoch", cfg.trainer.reward_switch_epoch},
                  {"adam_beta1", cfg.trainer.adam_beta1},
                  {"adam_beta2", cfg.trainer.adam_beta2},
                  {"adam_eps", cfg.trainer.adam_eps},
                  {"return_mode", to_string(cfg.trainer.return_mode)},
                  {"state_carryover", cfg.trainer.state_carryover},
                  {"patience", cfg.trainer.patience},
                  {"encode_dim", cfg.trainer.encode_dim},
                  {"hidden_dim", cfg.trainer.hidden_dim}};
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["resume"] = cfg.resume;
  json data = json::array();
  for (const auto& e : cfg.data_files)
    data.push_back({{"features", e.features},
                    {"ground_truth", e.ground_truth},
                    {"img_w", e.img_w},
                    {"img_h", e.img_h}});
  j["data"] = data;
  j["heldout_eval"] = cfg.heldout_eval;
  j["exclude_first_frame"] = cfg.exclude_first_frame;
  j["checkpoint"] = cfg.checkpoint;
  j["results"] = cfg.results_files;
  j["timing"] = cfg.timing_file;
  j["gradcheck"] = {{"feature_dim", cfg.gradcheck.dims.feature},
                    {"encode_dim", cfg.gradcheck.dims.encode},
                    {"hidden_dim", cfg.gradcheck.dims.hidden},
                    {"chunk_len", cfg.gradcheck.chunk_len},
                    {"fd_epsilon", cfg.gradcheck.fd_epsilon},
                    {"tolerance", cfg.gradcheck.tolerance},
                    {"policy_tolerance", cfg.gradcheck.policy_tolerance},
                    {"policy_cases", cfg.gradcheck.policy_cases},
                    {"inject_fault", cfg.gradcheck.inject_fault}};
  return j;
}

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + cfg.out_dir +
                      "': " + ec.message());
}

std::string sequence_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "seq_%03d", index);
  return buf;
}

std::vector<SequenceData> load_dataset(const RunConfig& cfg) {
  std::vector<SequenceData> out;
  if (!cfg.data_files.empty()) {
    for (const auto& e : cfg.data_files) {
      if (e.features.empty() || e.ground_truth.empty())
        throw ConfigError("data entry needs both 'features' and 'ground_truth'");
      out.push_back(load_sequence(e.features, e.ground_truth, e.img_w, e.img_h));
    }
  } else {
    validate(cfg.synth);
    if (cfg.synth_count < 1) throw ConfigError("synth.count must be >= 1");
    for (int i = 0; i < cfg.synth_count; ++i) {
      SequenceData seq = generate_sequence(cfg.synth, mix_seed(cfg.seed, i));
      seq.name = sequence_name(i);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

Checkpoint make_train_checkpoint(const TrainState& st, std::uint64_t seed) {
  Checkpoint ck;
  ck.seed = seed;
  ck.params = st.params;
  ck.has_trainer_state = true;
  ck.adam_m = st.adam.m;
  ck.adam_v = st.adam.v;
  ck.adam_step = st.adam.step;
  ck.next_epoch = st.next_epoch;
  ck.best_reward = st.best_reward;
  ck.epochs_since_best = st.epochs_since_best;
  ck.history = st.history;
  return ck;
}

}  // namespace

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write resolved config: " + path);
  os << to_json(cfg).dump(2) << "\n";
}

int cmd_synth(const RunConfig& cfg) {
  validate(cfg.synth);
  if (cfg.synth_count < 1) throw ConfigError("synth.count must be >= 1");
  prepare_out_dir(cfg);
  write_resolved_config(cfg, cfg.out_dir + "/resolved_config.json");

  json manifest;
  manifest["dim"] = cfg.synth.grid * cfg.synth.grid;
  manifest["grid"] = cfg.synth.grid;
  manifest["count"] = cfg.synth_count;
  manifest["img_w"] = cfg.synth.img_w;
  manifest["img_h"] = cfg.synth.img_h;
  json entries = json::array();
  for (int i = 0; i < cfg.synth_count; ++i) {
    SequenceData seq = generate_sequence(cfg.synth, mix_seed(cfg.seed, i));
    seq.name = sequence_name(i);
    const std::string features = seq.name + ".features.txt";
    const std::string gt = seq.name + ".gt.txt";
    save_sequence(seq, fs::path(cfg.out_dir) / features, fs::path(cfg.out_dir) / gt);
    entries.push_back({{"name", seq.name},
                       {"features", features},
                       {"ground_truth", gt},
                       {"frames", seq.length()}});
  }
  manifest["sequences"] = std::move(entries);
  std::ofstream ms(fs::path(cfg.out_dir) / "manifest.json");
  if (!ms) throw DataError("cannot write manifest.json in " + cfg.out_dir);
  ms << manifest.dump(2) << "\n";

  std::cout << "synth: wrote " << cfg.synth_count << " sequences ("
            << cfg.synth.seq_len << " frames, dim "
            << cfg.synth.grid * cfg.synth.grid << ") to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  TrainerConfig tc = cfg.trainer;
  tc.seed = cfg.seed;
  validate(tc);

  const auto full = load_dataset(cfg);
  std::vector<SequenceData> train_set;
  train_set.reserve(full.size());
  for (const auto& seq : full) train_set.push_back(split_train_eval(seq).train);

  prepare_out_dir(cfg);
  write_resolved_config(cfg, cfg.out_dir + "/resolved_config.json");

  std::ofstream log(fs::path(cfg.out_dir) / "training_log.csv");
  if (!log) throw DataError("cannot write training_log.csv in " + cfg.out_dir);
  log << "epoch,lr,reward,mean_reward,max_param_delta,wall_clock_s\n";

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochInfo& info, const TrainState& st) {
    log << info.epoch << ',' << fmt17(info.lr) << ',' << to_string(info.reward)
        << ',' << fmt17(info.mean_reward) << ',' << fmt17(info.max_param_delta)
        << ',' << fmt3(info.seconds) << "\n";
    if (cfg.checkpoint_every > 0 && (info.epoch + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(fs::path(cfg.out_dir) /
                          ("checkpoint_epoch_" + pad_epoch(info.epoch) + ".bin"),
                      make_train_checkpoint(st, cfg.seed));
    if (info.is_best)
      save_checkpoint(fs::path(cfg.out_dir) / "checkpoint_best.bin",
                      make_train_checkpoint(st, cfg.seed));
  };

  TrainState st;
  if (!cfg.resume.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume);
    if (!ck.has_trainer_state)
      throw DataError("checkpoint " + cfg.resume +
                      " has no trainer state; cannot resume");
    if (ck.params.dims.hidden != tc.hidden_dim ||
        ck.params.dims.encode != effective_encode_dim(tc))
      throw ConfigError("resume: checkpoint was trained with encode/hidden " +
                        std::to_string(ck.params.dims.encode) + "/" +
                        std::to_string(ck.params.dims.hidden) +
                        " but the config says " +
                        std::to_string(effective_encode_dim(tc)) + "/" +
                        std::to_string(tc.hidden_dim));
    st.params = std::move(ck.params);
    st.adam.m = std::move(ck.adam_m);
    st.adam.v = std::move(ck.adam_v);
    st.adam.step = ck.adam_step;
    st.next_epoch = ck.next_epoch;
    st.best_reward = ck.best_reward;
    st.epochs_since_best = ck.epochs_since_best;
    st.history = std::move(ck.history);
    st = train_resume(std::move(st), train_set, tc, hooks);
  } else {
    st = train(train_set, tc, hooks);
  }

  save_checkpoint(fs::path(cfg.out_dir) / "checkpoint_final.bin",
                  make_train_checkpoint(st, cfg.seed));

  std::cout << "train: " << st.next_epoch << " epochs, best mean reward "
            << fmt17(st.best_reward) << ", final checkpoint in " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_track(const RunConfig& cfg) {
  if (cfg.checkpoint.empty())
    throw ConfigError("track requires a checkpoint (--checkpoint PATH)");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const auto dataset = load_dataset(cfg);

  prepare_out_dir(cfg);
  write_resolved_config(cfg, cfg.out_dir + "/resolved_config.json");

  std::ofstream timing(fs::path(cfg.out_dir) / "timing.csv");
  if (!timing) throw DataError("cannot write timing.csv in " + cfg.out_dir);
  timing << "sequence,fps\n";

  for (const auto& seq : dataset) {
    const TrackResult result = track_sequence(ck.params, seq);
    const fs::path out = fs::path(cfg.out_dir) / (seq.name + ".results.csv");
    std::ofstream os(out);
    if (!os) throw DataError("cannot write " + out.string());
    os << "# sequence=" << seq.name << " img_w=" << fmt17(seq.img_w)
       << " img_h=" << fmt17(seq.img_h) << " frames=" << seq.length() << "\n";
    os << "frame,cx,cy,w,h,iou,center_error_px\n";
    for (int t = 0; t < seq.length(); ++t) {
      const BBox& p = result.predictions[t];
      const BBox& g = seq.ground_truth[t];
      os << t << ',' << fmt17(p.cx) << ',' << fmt17(p.cy) << ',' << fmt17(p.w)
         << ',' << fmt17(p.h) << ',' << fmt17(iou(p, g)) << ','
         << fmt17(center_error_px(p, g, seq.img_w, seq.img_h)) << "\n";
    }
    timing << seq.name << ',' << fmt3(result.fps) << "\n";
    std::cout << "track: " << seq.name << " (" << seq.length() << " frames, "
              << fmt3(result.fps) << " fps)\n";
  }
  return 0;
}

namespace {

struct ResultsFile {
  std::string name;
  double img_w = 0, img_h = 0;
  std::vector<BBox> predictions;
  std::vector<double> ious;
  std::vector<double> center_errors;
};

ResultsFile parse_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open results file: " + path);
  ResultsFile rf;
  std::string line;
  long line_no = 0;

  if (!std::getline(is, line))
    throw DataError("results file is empty: " + path);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("# ", 0) != 0)
    throw DataError("results file " + path + ": missing '# sequence=...' header");
  {
    std::istringstream hs(line.substr(1));
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("sequence=", 0) == 0) rf.name = tok.substr(9);
      else if (tok.rfind("img_w=", 0) == 0) rf.img_w = std::atof(tok.c_str() + 6);
      else if (tok.rfind("img_h=", 0) == 0) rf.img_h = std::atof(tok.c_str() + 6);
    }
  }
  if (rf.name.empty() || rf.img_w <= 0 || rf.img_h <= 0)
    throw DataError("results file " + path + ": malformed header");

  if (!std::getline(is, line))
    throw DataError("results file " + path + ": missing column header");
  ++line_no;

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double f[7];
    std::istringstream ls(line);
    std::string field;
    int i = 0;
    while (std::getline(ls, field, ',') && i < 7) f[i++] = std::atof(field.c_str());
    if (i != 7)
      throw DataError("results file " + path + " line " + std::to_string(line_no) +
                      ": expected 7 comma-separated values");
    rf.predictions.push_back(BBox{f[1], f[2], f[3], f[4]});
    rf.ious.push_back(f[5]);
    rf.center_errors.push_back(f[6]);
  }
  if (rf.predictions.empty())
    throw DataError("results file " + path + ": no frames");
  return rf;
}

double mean_fps_from_timing(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open timing file: " + path);
  std::string line;
  std::getline(is, line);  // header
  double sum = 0;
  long n = 0;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    sum += std::atof(line.c_str() + comma + 1);
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

}  // namespace

int cmd_eval(const RunConfig& cfg) {
  if (cfg.results_files.empty())
    throw ConfigError("eval requires at least one results file (--results PATH)");

  std::vector<ResultsFile> results;
  results.reserve(cfg.results_files.size());
  for (const auto& p : cfg.results_files) results.push_back(parse_results_csv(p));

  // With ground-truth files the per-frame scores are recomputed from the
  // predictions; otherwise the stored columns are trusted.
  if (!cfg.data_files.empty()) {
    if (cfg.data_files.size() != results.size())
      throw DataError("eval: " + std::to_string(cfg.results_files.size()) +
                      " results files vs " + std::to_string(cfg.data_files.size()) +
                      " ground-truth entries");
    for (std::size_t i = 0; i < results.size(); ++i) {
      ResultsFile& rf = results[i];
      const auto& entry = cfg.data_files[i];
      if (entry.ground_truth.empty())
        throw ConfigError("eval data entry " + std::to_string(i) +
                          " needs 'ground_truth'");
      const double w = entry.img_w > 0 ? entry.img_w : rf.img_w;
      const double h = entry.img_h > 0 ? entry.img_h : rf.img_h;
      const auto gt = load_ground_truth(entry.ground_truth, w, h);
      if (gt.size() != rf.predictions.size())
        throw DataError("eval: '" + rf.name + "' has " +
                        std::to_string(rf.predictions.size()) +
                        " predictions vs " + std::to_string(gt.size()) +
                        " ground-truth rows");
      for (std::size_t t = 0; t < gt.size(); ++t) {
        rf.ious[t] = iou(rf.predictions[t], gt[t]);
        rf.center_errors[t] = center_error_px(rf.predictions[t], gt[t], w, h);
      }
    }
  }

  prepare_out_dir(cfg);
  write_resolved_config(cfg, cfg.out_dir + "/resolved_config.json");

  const auto overlap_thresholds = default_overlap_thresholds();
  const auto precision_thresholds = default_precision_thresholds();
  auto write_curve = [&](const Curve& c, const std::string& file) {
    std::ofstream os(fs::path(cfg.out_dir) / file);
    if (!os) throw DataError("cannot write " + file + " in " + cfg.out_dir);
    os << "threshold,value\n";
    for (std::size_t i = 0; i < c.thresholds.size(); ++i)
      os << fmt17(c.thresholds[i]) << ',' << fmt17(c.values[i]) << "\n";
  };

  std::vector<double> pooled_iou, pooled_err;
  json per_sequence = json::array();
  for (const ResultsFile& rf : results) {
    const int len = static_cast<int>(rf.predictions.size());
    int start = cfg.heldout_eval ? split_point(len) : 0;
    if (cfg.exclude_first_frame) start = std::max(start, 1);
    if (start >= len)
      throw DataError("eval: no frames left to score in '" + rf.name + "'");
    std::vector<double> seq_iou, seq_err;
    double sum = 0;
    for (int t = start; t < len; ++t) {
      seq_iou.push_back(rf.ious[t]);
      seq_err.push_back(rf.center_errors[t]);
      pooled_iou.push_back(rf.ious[t]);
      pooled_err.push_back(rf.center_errors[t]);
      sum += rf.ious[t];
    }
    per_sequence.push_back(
        {{"name", rf.name}, {"mean_overlap", sum / (len - start)}});
    write_curve(fraction_at_least(seq_iou, overlap_thresholds),
                rf.name + ".success_curve.csv");
    write_curve(fraction_at_most(seq_err, precision_thresholds),
                rf.name + ".precision_curve.csv");
  }

  const Curve success = fraction_at_least(pooled_iou, overlap_thresholds);
  const Curve precision = fraction_at_most(pooled_err, precision_thresholds);
  write_curve(success, "success_curve.csv");
  write_curve(precision, "precision_curve.csv");

  json summary;
  summary["auc"] = auc(success);
  summary["precision_at_20"] = precision_at(precision, 20.0);
  summary["fps"] =
      cfg.timing_file.empty() ? 0.0 : mean_fps_from_timing(cfg.timing_file);
  summary["frames_scored"] = pooled_iou.size();
  summary["sequences"] = std::move(per_sequence);
  std::ofstream ss(fs::path(cfg.out_dir) / "summary.json");
  if (!ss) throw DataError("cannot write summary.json in " + cfg.out_dir);
  ss << summary.dump(2) << "\n";

  std::cout << "eval: auc " << fmt17(summary["auc"].get<double>())
            << ", precision@20 " << fmt17(summary["precision_at_20"].get<double>())
            << ", " << pooled_iou.size() << " frames\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  GradCheckConfig gc = cfg.gradcheck;
  gc.seed = cfg.seed;
  const GradCheckReport report = run_gradcheck(gc);

  std::ostringstream out;
  for (const auto& t : report.tensors) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "tensor %-10s max_rel_err %.6e\n",
                  t.name.c_str(), t.max_rel_err);
    out << buf;
  }
  {
    char buf[128];
    std::snprintf(buf, sizeof buf, "policy            max_rel_err %.6e\n",
                  report.policy_worst);
    out << buf;
  }
  out << "gradcheck: " << (report.pass ? "PASS" : "FAIL") << " (network tol "
      << fmt17(gc.tolerance) << ", policy tol " << fmt17(gc.policy_tolerance)
      << ")\n";

  prepare_out_dir(cfg);
  write_resolved_config(cfg, cfg.out_dir + "/resolved_config.json");
  std::ofstream rs(fs::path(cfg.out_dir) / "gradcheck_report.txt");
  if (!rs) throw DataError("cannot write gradcheck_report.txt in " + cfg.out_dir);
  rs << out.str();

  std::cout << out.str();
  return report.pass ? 0 : 3;
}

namespace {

// Flag overrides are deferred so that --config loads first.
struct PendingOverrides {
  std::vector<std::function<void()>> items;

  void apply() const {
    for (const auto& f : items) f();
  }
};

template <typename T>
void add_override(CLI::App* cmd, PendingOverrides& pending, const std::string& name,
                  const std::string& desc, std::function<void(T)> apply) {
  cmd->add_option_function<T>(
      name,
      [&pending, apply](const T& v) {
        pending.items.push_back([apply, v] { apply(v); });
      },
      desc);
}

void add_flag_override(CLI::App* cmd, PendingOverrides& pending,
                       const std::string& name, const std::string& desc,
                       std::function<void()> apply) {
  cmd->add_flag_function(
      name,
      [&pending, apply](std::int64_t) { pending.items.push_back(apply); },
      desc);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"rltrack: recurrent Gaussian-policy object tracker"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  PendingOverrides pending;
  int rc = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    add_override<std::uint64_t>(cmd, pending, "--seed", "master RNG seed",
                                [&cfg](std::uint64_t v) { cfg.seed = v; });
    add_override<std::string>(cmd, pending, "--out", "output directory",
                              [&cfg](std::string v) { cfg.out_dir = std::move(v); });
  };

  auto add_synth_options = [&](CLI::App* cmd) {
    add_override<int>(cmd, pending, "--count", "number of sequences",
                      [&cfg](int v) { cfg.synth_count = v; });
    add_override<int>(cmd, pending, "--grid", "raster grid resolution",
                      [&cfg](int v) { cfg.synth.grid = v; });
    add_override<int>(cmd, pending, "--seq-len", "frames per sequence",
                      [&cfg](int v) { cfg.synth.seq_len = v; });
    add_override<double>(cmd, pending, "--speed-min", "min speed per frame",
                         [&cfg](double v) { cfg.synth.speed_min = v; });
    add_override<double>(cmd, pending, "--speed-max", "max speed per frame",
                         [&cfg](double v) { cfg.synth.speed_max = v; });
    add_override<double>(cmd, pending, "--size-min", "min box side",
                         [&cfg](double v) { cfg.synth.size_min = v; });
    add_override<double>(cmd, pending, "--size-max", "max box side",
                         [&cfg](double v) { cfg.synth.size_max = v; });
    add_override<double>(cmd, pending, "--size-drift", "size drift per frame",
                         [&cfg](double v) { cfg.synth.size_drift = v; });
    add_override<double>(cmd, pending, "--noise-std", "raster noise std",
                         [&cfg](double v) { cfg.synth.noise_std = v; });
    add_override<int>(cmd, pending, "--distractors", "distractor count",
                      [&cfg](int v) { cfg.synth.distractors = v; });
    add_override<double>(cmd, pending, "--img-w", "image width in pixels",
                         [&cfg](double v) { cfg.synth.img_w = v; });
    add_override<double>(cmd, pending, "--img-h", "image height in pixels",
                         [&cfg](double v) { cfg.synth.img_h = v; });
  };

  // Parallel lists; entry i pairs --features[i] with --gt[i].
  struct DataArgs {
    std::vector<std::string> features, gts;
    double img_w = 0, img_h = 0;
  } data_args;

  auto add_data_options = [&](CLI::App* cmd) {
    cmd->add_option("--features", data_args.features, "feature file(s)");
    cmd->add_option("--gt", data_args.gts, "ground-truth file(s)");
    cmd->add_option("--data-img-w", data_args.img_w, "image width for loaded files");
    cmd->add_option("--data-img-h", data_args.img_h, "image height for loaded files");
    cmd->parse_complete_callback([&pending, &cfg, &data_args]() {
      if (data_args.features.empty() && data_args.gts.empty()) return;
      pending.items.push_back([&cfg, &data_args]() {
        if (!data_args.features.empty() &&
            data_args.features.size() != data_args.gts.size())
          throw ConfigError("--features and --gt must pair up (" +
                            std::to_string(data_args.features.size()) + " vs " +
                            std::to_string(data_args.gts.size()) + ")");
        cfg.data_files.clear();
        const std::size_t n =
            std::max(data_args.features.size(), data_args.gts.size());
        for (std::size_t i = 0; i < n; ++i) {
          DataFileEntry e;
          if (i < data_args.features.size()) e.features = data_args.features[i];
          if (i < data_args.gts.size()) e.ground_truth = data_args.gts[i];
          e.img_w = data_args.img_w;
          e.img_h = data_args.img_h;
          cfg.data_files.push_back(std::move(e));
        }
      });
    });
  };

  std::string command;

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic sequences");
  add_common(synth);
  add_synth_options(synth);
  synth->callback([&] { command = "synth"; });

  CLI::App* train = app.add_subcommand("train", "train on the configured dataset");
  add_common(train);
  add_synth_options(train);
  add_data_options(train);
  add_override<int>(train, pending, "--chunk-len,-T", "frames per update",
                    [&cfg](int v) { cfg.trainer.chunk_len = v; });
  add_override<int>(train, pending, "--episodes,-N", "rollouts per chunk",
                    [&cfg](int v) { cfg.trainer.episodes = v; });
  add_override<double>(train, pending, "--sigma", "policy std",
                       [&cfg](double v) { cfg.trainer.sigma = v; });
  add_override<double>(train, pending, "--lr-initial", "initial learning rate",
                       [&cfg](double v) { cfg.trainer.lr_initial = v; });
  add_override<double>(train, pending, "--lr-final", "final learning rate",
                       [&cfg](double v) { cfg.trainer.lr_final = v; });
  add_override<int>(train, pending, "--max-epochs", "epoch budget",
                    [&cfg](int v) { cfg.trainer.max_epochs = v; });
  add_override<int>(train, pending, "--switch-epoch",
                    "epoch at which the reward switches to overlap",
                    [&cfg](int v) { cfg.trainer.reward_switch_epoch = v; });
  add_override<int>(train, pending, "--hidden-dim", "LSTM hidden units",
                    [&cfg](int v) { cfg.trainer.hidden_dim = v; });
  add_override<int>(train, pending, "--encode-dim", "encoder units (0 = hidden)",
                    [&cfg](int v) { cfg.trainer.encode_dim = v; });
  add_override<int>(train, pending, "--patience", "early-stop patience epochs",
                    [&cfg](int v) { cfg.trainer.patience = v; });
  add_override<std::string>(train, pending, "--return-mode",
                            "per_step|reward_to_go|total", [&cfg](std::string v) {
                              cfg.trainer.return_mode = parse_return_mode(v);
                            });
  add_flag_override(train, pending, "--no-carryover",
                    "reset the hidden state at every chunk",
                    [&cfg] { cfg.trainer.state_carryover = false; });
  add_override<int>(train, pending, "--checkpoint-every", "epochs between checkpoints",
                    [&cfg](int v) { cfg.checkpoint_every = v; });
  add_override<std::string>(train, pending, "--resume", "training checkpoint to resume",
                            [&cfg](std::string v) { cfg.resume = std::move(v); });
  train->callback([&] { command = "train"; });

  CLI::App* track = app.add_subcommand("track", "run inference over sequences");
  add_common(track);
  add_synth_options(track);
  add_data_options(track);
  add_override<std::string>(track, pending, "--checkpoint", "parameters to load",
                            [&cfg](std::string v) { cfg.checkpoint = std::move(v); });
  track->callback([&] { command = "track"; });

  CLI::App* eval = app.add_subcommand("eval", "compute benchmark metrics");
  add_common(eval);
  add_data_options(eval);
  add_override<std::vector<std::string>>(
      eval, pending, "--results", "per-frame results CSV(s) from track",
      [&cfg](std::vector<std::string> v) { cfg.results_files = std::move(v); });
  add_override<std::string>(eval, pending, "--timing", "timing.csv from track",
                            [&cfg](std::string v) { cfg.timing_file = std::move(v); });
  add_flag_override(eval, pending, "--heldout",
                    "score only frames past the train split",
                    [&cfg] { cfg.heldout_eval = true; });
  add_flag_override(eval, pending, "--exclude-first-frame",
                    "drop the supervised frame 0 from metrics",
                    [&cfg] { cfg.exclude_first_frame = true; });
  eval->callback([&] { command = "eval"; });

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "verify gradients");
  add_common(gradcheck);
  add_override<int>(gradcheck, pending, "--feature-dim", "feature dimension D",
                    [&cfg](int v) { cfg.gradcheck.dims.feature = v; });
  add_override<int>(gradcheck, pending, "--encode-dim", "encoder dimension E",
                    [&cfg](int v) { cfg.gradcheck.dims.encode = v; });
  add_override<int>(gradcheck, pending, "--hidden-dim", "hidden dimension H",
                    [&cfg](int v) { cfg.gradcheck.dims.hidden = v; });
  add_override<int>(gradcheck, pending, "--chunk-len,-T", "steps to unroll",
                    [&cfg](int v) { cfg.gradcheck.chunk_len = v; });
  add_override<double>(gradcheck, pending, "--fd-eps", "finite-difference step",
                       [&cfg](double v) { cfg.gradcheck.fd_epsilon = v; });
  add_override<double>(gradcheck, pending, "--tol", "network tolerance",
                       [&cfg](double v) { cfg.gradcheck.tolerance = v; });
  add_flag_override(gradcheck, pending, "--inject-fault",
                    "corrupt one analytic gradient entry (must fail)",
                    [&cfg] { cfg.gradcheck.inject_fault = true; });
  gradcheck->callback([&] { command = "gradcheck"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!config_path.empty()) cfg = load_run_config(config_path);
    pending.apply();
    if (command == "synth") rc = cmd_synth(cfg);
    else if (command == "train") rc = cmd_train(cfg);
    else if (command == "track") rc = cmd_track(cfg);
    else if (command == "eval") rc = cmd_eval(cfg);
    else if (command == "gradcheck") rc = cmd_gradcheck(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const VerifyError& e) {
    std::cerr << "verification error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}

}  // namespace rltrack
