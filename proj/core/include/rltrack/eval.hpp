#ifndef RLTRACK_EVAL_HPP
#define RLTRACK_EVAL_HPP

#include <span>
#include <string>
#include <vector>

#include "rltrack/network.hpp"

namespace rltrack {

struct TrackResult {
  std::string name;
  std::vector<BBox> predictions;  // one per frame; frame 0 is the given truth
  double fps = 0.0;               // measured over the inference loop
};

// One forward pass with MAP predictions (sigma = 0). Needs ground truth
// only at frame 0, which seeds the location hint and the frame-0 output.
TrackResult track_sequence(const ParamStore& params, const SequenceData& seq);

struct Curve {
  std::vector<double> thresholds;  // ascending
  std::vector<double> values;      // fraction of frames, each in [0, 1]
};

std::vector<double> default_overlap_thresholds();    // 0.00 .. 1.00 step 0.01
std::vector<double> default_precision_thresholds();  // 0 .. 50 px step 1

// Frame filters shared by the pooled metrics.
struct EvalOptions {
  bool include_first_frame = true;  // frame 0 is supervised, included by default
  bool heldout_only = false;        // score only frames >= split_point(len)
};

// Curve primitives over pooled per-frame scalars.
Curve fraction_at_least(std::span<const double> values,
                        std::span<const double> thresholds);
Curve fraction_at_most(std::span<const double> values,
                       std::span<const double> thresholds);

// Fraction of frames with iou >= threshold, pooled over all sequences.
Curve success_plot(std::span<const TrackResult> results,
                   std::span<const SequenceData> seqs,
                   std::span<const double> thresholds,
                   const EvalOptions& opt = {});

// Fraction of frames with center error <= threshold (pixels), pooled.
Curve precision_plot(std::span<const TrackResult> results,
                     std::span<const SequenceData> seqs,
                     std::span<const double> thresholds,
                     const EvalOptions& opt = {});

// Trapezoidal area under the curve, normalized by the threshold span.
double auc(const Curve& curve);

// Curve value at the given threshold (linear interpolation between grid
// points, clamped at the ends).
double value_at(const Curve& curve, double threshold);
double precision_at(const Curve& curve, double threshold_px = 20.0);

// Mean iou over the frames of one sequence.
double avg_overlap(const TrackResult& result, std::span<const BBox> gt,
                   const EvalOptions& opt = {});

}  // namespace rltrack

#endif
