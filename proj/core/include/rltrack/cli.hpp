#ifndef RLTRACK_CLI_HPP
#define RLTRACK_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rltrack/env.hpp"
#include "rltrack/gradcheck.hpp"
#include "rltrack/trainer.hpp"

namespace rltrack {

struct DataFileEntry {
  std::string features;
  std::string ground_truth;
  double img_w = 0.0;
  double img_h = 0.0;
};

// Union of every knob a run needs. Loaded from a JSON config file, with
// command-line flags layered on top; each command writes the fully resolved
// config next to its outputs.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  SynthConfig synth;
  int synth_count = 20;

  TrainerConfig trainer;
  int checkpoint_every = 100;
  std::string resume;  // train: checkpoint to continue from

  std::vector<DataFileEntry> data_files;  // when non-empty, load these
                                          // instead of generating sequences

  bool heldout_eval = false;         // score only frames past the train split
  bool exclude_first_frame = false;  // drop the supervised frame 0

  std::string checkpoint;                  // track: parameters to load
  std::vector<std::string> results_files;  // eval: per-frame CSVs from track
  std::string timing_file;                 // eval: optional fps table

  GradCheckConfig gradcheck;
};

RunConfig load_run_config(const std::string& path);
void write_resolved_config(const RunConfig& cfg, const std::string& path);

// Commands return a process exit code (0 on success) and throw
// ConfigError/DataError/VerifyError on failure.
int cmd_synth(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_track(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_gradcheck(const RunConfig& cfg);

// Full argv entry point used by the rltrack binary and by tests.
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 verification failure.
int cli_main(int argc, const char* const* argv);

}  // namespace rltrack

#endif
