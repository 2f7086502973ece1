#ifndef RLTRACK_TRAINER_HPP
#define RLTRACK_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rltrack/network.hpp"
#include "rltrack/policy.hpp"

namespace rltrack {

// How per-step returns R_t are formed from episode rewards. The baseline
// always matches the chosen mode.
enum class ReturnMode { kPerStep, kRewardToGo, kTotal };

enum class RewardKind { kEarly, kLate };
const char* to_string(RewardKind kind);
const char* to_string(ReturnMode mode);

struct TrainerConfig {
  int chunk_len = 10;                // T, frames per update
  int episodes = 5;                  // N, rollouts per chunk
  double sigma = 1e-2;               // policy std during training
  double lr_initial = 1e-5;
  double lr_final = 1e-6;
  int max_epochs = 500;
  int reward_switch_epoch = 300;     // distance reward before, overlap after
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  ReturnMode return_mode = ReturnMode::kPerStep;
  bool state_carryover = true;       // keep hidden state across chunks
  int patience = 25;                 // epochs without improvement; <= 0 disables
  int encode_dim = 0;                // E; 0 means "same as hidden_dim"
  int hidden_dim = 16;               // H
};

void validate(const TrainerConfig& cfg);
int effective_encode_dim(const TrainerConfig& cfg);

// One sampled rollout over a chunk. All episodes of a chunk share the same
// mus because sampled locations never feed back into the network input.
struct Episode {
  std::vector<BBox> locations;
  std::vector<double> rewards;
  std::vector<Eigen::Vector4d> mus;
};

RewardKind select_reward(int epoch, const TrainerConfig& cfg);
double reward_value(RewardKind kind, const BBox& l, const BBox& g);

// lr_initial * (lr_final/lr_initial)^(epoch/max_epochs)
double anneal_lr(int epoch, const TrainerConfig& cfg);

struct ChunkRollout {
  std::vector<Episode> episodes;
  ForwardResult forward;
};

// One shared forward pass, then N sampling passes scored with the
// epoch-appropriate reward.
ChunkRollout run_episodes(std::span<const FrameObservation> frames,
                          std::span<const BBox> gts, const ParamStore& params,
                          const RecurrentState& init_state,
                          const TrainerConfig& cfg, int epoch, Rng& rng);

// b_t = mean over episodes of the per-step return at t.
std::vector<double> compute_baseline(const std::vector<Episode>& episodes,
                                     const TrainerConfig& cfg);

// grad_mu[t] = (1/N) sum_i (R_t^i - b_t) * (l_t^i - mu_t)/sigma^2.
// This is the ascent direction on the expected return.
std::vector<Eigen::Vector4d> policy_gradient(const std::vector<Episode>& episodes,
                                             const std::vector<double>& baseline,
                                             const TrainerConfig& cfg);

struct AdamState {
  ParamStore m, v;
  std::int64_t step = 0;

  static AdamState zeros(const Dims& dims);
};

// Bias-corrected Adam ascent step; returns the largest |parameter change|.
// Non-finite gradients abort the update with params untouched.
double adam_update(ParamStore& params, const ParamStore& grads, AdamState& state,
                   double lr, const TrainerConfig& cfg);

struct UpdateInfo {
  long update = 0;             // global update counter, starting at 1
  int epoch = 0;
  RewardKind reward = RewardKind::kEarly;
  int chunk_len = 0;
  double mean_step_reward = 0; // sampled reward, averaged over steps and episodes
  double mean_map_iou = 0;     // overlap of the deterministic mu prediction
};

struct EpochInfo {
  int epoch = 0;
  double lr = 0;
  RewardKind reward = RewardKind::kEarly;
  double mean_reward = 0;      // mean cumulative reward R over all episodes
  double max_param_delta = 0;
  double seconds = 0;
  bool is_best = false;
};

// Everything needed to continue a run. train() returns the final state;
// train_resume() picks up where a checkpointed state left off.
struct TrainState {
  ParamStore params;
  AdamState adam;
  int next_epoch = 0;
  double best_reward = -std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  std::vector<double> history;  // one mean cumulative reward per epoch
};

struct TrainHooks {
  std::function<void(const UpdateInfo&)> on_update;
  std::function<void(const EpochInfo&, const TrainState&)> on_epoch;
};

TrainState train(const std::vector<SequenceData>& dataset, const TrainerConfig& cfg,
                 const TrainHooks& hooks = {});
TrainState train_resume(TrainState state, const std::vector<SequenceData>& dataset,
                        const TrainerConfig& cfg, const TrainHooks& hooks = {});

}  // namespace rltrack

#endif
