#include "rltrack/eval.hpp"

#include <chrono>
#include <cmath>

#include "rltrack/errors.hpp"
#include "rltrack/policy.hpp"

namespace rltrack {

TrackResult track_sequence(const ParamStore& params, const SequenceData& seq) {
  if (seq.frames.empty()) throw DataError("track_sequence: empty sequence");
  if (seq.ground_truth.empty())
    throw DataError("track_sequence: ground truth missing for frame 0");

  TrackResult out;
  out.name = seq.name;
  out.predictions.reserve(seq.frames.size());

  const auto t0 = std::chrono::steady_clock::now();
  RecurrentState state = RecurrentState::zeros(params.dims.hidden);
  for (const FrameObservation& frame : seq.frames) {
    const Eigen::VectorXd encoded = encode_observation(frame, params);
    state = lstm_step(state, encoded, params);
    out.predictions.push_back(map_estimate({state.h.tail<4>(), 0.0}));
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out.predictions.front() = seq.ground_truth.front();  // supervised first frame
  out.fps = seconds > 0.0 ? static_cast<double>(seq.frames.size()) / seconds : 0.0;
  return out;
}

std::vector<double> default_overlap_thresholds() {
  std::vector<double> t;
  t.reserve(101);
  for (int i = 0; i <= 100; ++i) t.push_back(i / 100.0);
  return t;
}

std::vector<double> default_precision_thresholds() {
  std::vector<double> t;
  t.reserve(51);
  for (int i = 0; i <= 50; ++i) t.push_back(static_cast<double>(i));
  return t;
}

namespace {

int first_scored_frame(int length, const EvalOptions& opt) {
  int start = opt.heldout_only ? split_point(length) : 0;
  if (!opt.include_first_frame) start = std::max(start, 1);
  return start;
}

// Pools one scalar per scored frame over all sequences.
template <typename PerFrame>
std::vector<double> pool_frames(std::span<const TrackResult> results,
                                std::span<const SequenceData> seqs,
                                const EvalOptions& opt, PerFrame&& per_frame) {
  if (results.size() != seqs.size())
    throw DataError("metrics: " + std::to_string(results.size()) +
                    " results vs " + std::to_string(seqs.size()) + " sequences");
  std::vector<double> pooled;
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& r = results[s];
    const auto& seq = seqs[s];
    if (r.predictions.size() != seq.ground_truth.size())
      throw DataError("metrics: sequence '" + seq.name + "' has " +
                      std::to_string(seq.ground_truth.size()) +
                      " ground-truth boxes vs " +
                      std::to_string(r.predictions.size()) + " predictions");
    const int len = static_cast<int>(r.predictions.size());
    for (int t = first_scored_frame(len, opt); t < len; ++t)
      pooled.push_back(per_frame(r.predictions[t], seq, t));
  }
  if (pooled.empty()) throw DataError("metrics: no frames to score");
  return pooled;
}

}  // namespace

Curve fraction_at_least(std::span<const double> values,
                        std::span<const double> thresholds) {
  if (values.empty()) throw DataError("curve: no frames to score");
  Curve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  curve.values.reserve(thresholds.size());
  for (double tau : thresholds) {
    long hits = 0;
    for (double v : values)
      if (v >= tau) ++hits;
    curve.values.push_back(static_cast<double>(hits) / values.size());
  }
  return curve;
}

Curve fraction_at_most(std::span<const double> values,
                       std::span<const double> thresholds) {
  if (values.empty()) throw DataError("curve: no frames to score");
  Curve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  curve.values.reserve(thresholds.size());
  for (double tau : thresholds) {
    long hits = 0;
    for (double v : values)
      if (v <= tau) ++hits;
    curve.values.push_back(static_cast<double>(hits) / values.size());
  }
  return curve;
}

Curve success_plot(std::span<const TrackResult> results,
                   std::span<const SequenceData> seqs,
                   std::span<const double> thresholds, const EvalOptions& opt) {
  const auto ious = pool_frames(results, seqs, opt,
                                [](const BBox& pred, const SequenceData& seq, int t) {
                                  return iou(pred, seq.ground_truth[t]);
                                });
  return fraction_at_least(ious, thresholds);
}

Curve precision_plot(std::span<const TrackResult> results,
                     std::span<const SequenceData> seqs,
                     std::span<const double> thresholds, const EvalOptions& opt) {
  const auto errors =
      pool_frames(results, seqs, opt,
                  [](const BBox& pred, const SequenceData& seq, int t) {
                    return center_error_px(pred, seq.ground_truth[t], seq.img_w,
                                           seq.img_h);
                  });
  return fraction_at_most(errors, thresholds);
}

double auc(const Curve& curve) {
  const auto& t = curve.thresholds;
  const auto& v = curve.values;
  if (t.size() != v.size() || t.size() < 2)
    throw DataError("auc: need at least two matched (threshold, value) pairs");
  double area = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] <= t[i - 1]) throw DataError("auc: thresholds must be ascending");
    area += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  }
  return area / (t.back() - t.front());
}

double value_at(const Curve& curve, double threshold) {
  const auto& t = curve.thresholds;
  const auto& v = curve.values;
  if (t.empty() || t.size() != v.size())
    throw DataError("value_at: malformed curve");
  if (threshold <= t.front()) return v.front();
  if (threshold >= t.back()) return v.back();
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (threshold <= t[i]) {
      const double w = (threshold - t[i - 1]) / (t[i] - t[i - 1]);
      return v[i - 1] + w * (v[i] - v[i - 1]);
    }
  }
  return v.back();
}

double precision_at(const Curve& curve, double threshold_px) {
  return value_at(curve, threshold_px);
}

double avg_overlap(const TrackResult& result, std::span<const BBox> gt,
                   const EvalOptions& opt) {
  if (result.predictions.size() != gt.size())
    throw DataError("avg_overlap: " + std::to_string(result.predictions.size()) +
                    " predictions vs " + std::to_string(gt.size()) +
                    " ground-truth boxes");
  const int len = static_cast<int>(gt.size());
  const int start = first_scored_frame(len, opt);
  if (start >= len) throw DataError("avg_overlap: no frames to score");
  double sum = 0.0;
  for (int t = start; t < len; ++t) sum += iou(result.predictions[t], gt[t]);
  return sum / (len - start);
}

}  // namespace rltrack
