#ifndef RLTRACK_ENV_HPP
#define RLTRACK_ENV_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rltrack/geometry.hpp"

namespace rltrack {

// Per-frame input to the network: the precomputed feature vector plus the
// location hint, which holds the ground-truth box at frame 0 of a sequence
// and is all zeros afterwards.
struct FrameObservation {
  Eigen::VectorXd features;
  Eigen::Vector4d location_hint = Eigen::Vector4d::Zero();
};

struct SequenceData {
  std::string name;
  std::vector<FrameObservation> frames;
  std::vector<BBox> ground_truth;
  double img_w = 0.0;
  double img_h = 0.0;

  int length() const { return static_cast<int>(frames.size()); }
  int feature_dim() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().features.size());
  }
};

// Synthetic moving-target generator knobs. Features are the target (and any
// distractors) rasterized onto a grid x grid raster, so the feature
// dimension is grid^2.
struct SynthConfig {
  int grid = 8;
  int seq_len = 30;
  double speed_min = 0.0;    // center displacement per frame, normalized units
  double speed_max = 0.02;
  double size_min = 0.15;    // box side, fraction of the image
  double size_max = 0.35;
  double size_drift = 0.005; // max relative side change per frame
  double noise_std = 0.0;    // additive Gaussian noise on raster cells
  int distractors = 0;
  double img_w = 640.0;
  double img_h = 480.0;
  std::uint64_t seed = 0;
};

// Throws ConfigError naming the offending field.
void validate(const SynthConfig& cfg);

// Deterministic given (cfg, seed). The target follows linear motion with
// reflection at the image borders and a smooth size drift; every
// ground-truth box stays fully inside the image.
SequenceData generate_sequence(const SynthConfig& cfg, std::uint64_t seed);

// Reads an OTB-style ground-truth file ("x,y,w,h" in pixels, top-left
// corner, comma or tab separated) into normalized center-format boxes.
std::vector<BBox> load_ground_truth(const std::filesystem::path& gt_path,
                                    double img_w, double img_h);

// Reads a feature file ("# dim=D frames=N" header, one frame of D floats
// per line) and the matching ground-truth file.
SequenceData load_sequence(const std::filesystem::path& features_path,
                           const std::filesystem::path& gt_path,
                           double img_w, double img_h);

// Inverse of load_sequence; writes both files for one sequence.
void save_sequence(const SequenceData& seq,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& gt_path);

// First floor(len/3) frames train, the whole sequence evaluates. The
// held-out portion for strict evaluation starts at split_point(len).
struct TrainEvalSplit {
  SequenceData train;
  SequenceData eval;
};

int split_point(int length);
TrainEvalSplit split_train_eval(const SequenceData& seq);

}  // namespace rltrack

#endif
