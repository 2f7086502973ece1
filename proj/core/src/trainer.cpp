#include "rltrack/trainer.hpp"

#include <chrono>
#include <cmath>

#include "rltrack/errors.hpp"

namespace rltrack {

const char* to_string(RewardKind kind) {
  return kind == RewardKind::kEarly ? "early" : "late";
}

const char* to_string(ReturnMode mode) {
  switch (mode) {
    case ReturnMode::kPerStep: return "per_step";
    case ReturnMode::kRewardToGo: return "reward_to_go";
    case ReturnMode::kTotal: return "total";
  }
  return "?";
}

void validate(const TrainerConfig& cfg) {
  if (cfg.chunk_len < 1) throw ConfigError("trainer.chunk_len must be >= 1");
  if (cfg.episodes < 1) throw ConfigError("trainer.episodes must be >= 1");
  if (!(cfg.sigma > 0.0)) throw ConfigError("trainer.sigma must be > 0");
  if (!(cfg.lr_final > 0.0) || cfg.lr_final > cfg.lr_initial)
    throw ConfigError("trainer.lr_final must satisfy 0 < lr_final <= lr_initial");
  if (cfg.max_epochs < 1) throw ConfigError("trainer.max_epochs must be >= 1");
  if (cfg.reward_switch_epoch < 0 || cfg.reward_switch_epoch > cfg.max_epochs)
    throw ConfigError(
        "trainer.reward_switch_epoch must lie in [0, max_epochs]");
  if (cfg.hidden_dim < 4) throw ConfigError("trainer.hidden_dim must be >= 4");
  if (cfg.encode_dim < 0) throw ConfigError("trainer.encode_dim must be >= 0");
}

int effective_encode_dim(const TrainerConfig& cfg) {
  return cfg.encode_dim > 0 ? cfg.encode_dim : cfg.hidden_dim;
}

RewardKind select_reward(int epoch, const TrainerConfig& cfg) {
  return epoch < cfg.reward_switch_epoch ? RewardKind::kEarly : RewardKind::kLate;
}

double reward_value(RewardKind kind, const BBox& l, const BBox& g) {
  return kind == RewardKind::kEarly ? reward_early(l, g) : reward_late(l, g);
}

double anneal_lr(int epoch, const TrainerConfig& cfg) {
  if (epoch <= 0) return cfg.lr_initial;
  if (epoch >= cfg.max_epochs) return cfg.lr_final;
  const double frac = static_cast<double>(epoch) / cfg.max_epochs;
  return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);
}

ChunkRollout run_episodes(std::span<const FrameObservation> frames,
                          std::span<const BBox> gts, const ParamStore& params,
                          const RecurrentState& init_state,
                          const TrainerConfig& cfg, int epoch, Rng& rng) {
  if (frames.size() != gts.size())
    throw DataError("run_episodes: " + std::to_string(frames.size()) +
                    " frames vs " + std::to_string(gts.size()) + " ground truths");

  ChunkRollout out;
  out.forward = forward_chunk(frames, params, init_state);

  const RewardKind kind = select_reward(epoch, cfg);
  const int steps = static_cast<int>(frames.size());
  out.episodes.resize(cfg.episodes);
  for (Episode& ep : out.episodes) {
    ep.mus = out.forward.mus;
    ep.locations.reserve(steps);
    ep.rewards.reserve(steps);
    for (int t = 0; t < steps; ++t) {
      const BBox l = sample_location({out.forward.mus[t], cfg.sigma}, rng);
      ep.locations.push_back(l);
      ep.rewards.push_back(reward_value(kind, l, gts[t]));
    }
  }
  return out;
}

namespace {

// Per-step returns for one episode under the configured mode.
std::vector<double> episode_returns(const Episode& ep, ReturnMode mode) {
  const int steps = static_cast<int>(ep.rewards.size());
  std::vector<double> out(steps);
  switch (mode) {
    case ReturnMode::kPerStep:
      out = ep.rewards;
      break;
    case ReturnMode::kRewardToGo: {
      double acc = 0.0;
      for (int t = steps - 1; t >= 0; --t) {
        acc += ep.rewards[t];
        out[t] = acc;
      }
      break;
    }
    case ReturnMode::kTotal: {
      double total = 0.0;
      for (double r : ep.rewards) total += r;
      for (int t = 0; t < steps; ++t) out[t] = total;
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<double> compute_baseline(const std::vector<Episode>& episodes,
                                     const TrainerConfig& cfg) {
  if (episodes.empty()) throw DataError("compute_baseline: no episodes");
  const int steps = static_cast<int>(episodes.front().rewards.size());
  std::vector<double> baseline(steps, 0.0);
  for (const Episode& ep : episodes) {
    if (static_cast<int>(ep.rewards.size()) != steps)
      throw DataError("compute_baseline: episodes of unequal length");
    const auto returns = episode_returns(ep, cfg.return_mode);
    for (int t = 0; t < steps; ++t) baseline[t] += returns[t];
  }
  for (double& b : baseline) b /= static_cast<double>(episodes.size());
  return baseline;
}

std::vector<Eigen::Vector4d> policy_gradient(const std::vector<Episode>& episodes,
                                             const std::vector<double>& baseline,
                                             const TrainerConfig& cfg) {
  if (episodes.empty()) throw DataError("policy_gradient: no episodes");
  const int steps = static_cast<int>(episodes.front().rewards.size());
  if (static_cast<int>(baseline.size()) != steps)
    throw DataError("policy_gradient: baseline length " +
                    std::to_string(baseline.size()) + " vs chunk length " +
                    std::to_string(steps));

  std::vector<Eigen::Vector4d> grad_mus(steps, Eigen::Vector4d::Zero());
  for (const Episode& ep : episodes) {
    if (static_cast<int>(ep.rewards.size()) != steps ||
        static_cast<int>(ep.locations.size()) != steps ||
        static_cast<int>(ep.mus.size()) != steps)
      throw DataError("policy_gradient: inconsistent episode lengths");
    const auto returns = episode_returns(ep, cfg.return_mode);
    for (int t = 0; t < steps; ++t) {
      const double advantage = returns[t] - baseline[t];
      grad_mus[t] += advantage *
                     log_prob_grad(ep.locations[t], {ep.mus[t], cfg.sigma});
    }
  }
  for (auto& g : grad_mus) g /= static_cast<double>(episodes.size());
  return grad_mus;
}

AdamState AdamState::zeros(const Dims& dims) {
  AdamState s;
  s.m = ParamStore::zeros(dims);
  s.v = ParamStore::zeros(dims);
  return s;
}

double adam_update(ParamStore& params, const ParamStore& grads, AdamState& state,
                   double lr, const TrainerConfig& cfg) {
  if (!grads.all_finite())
    throw VerifyError("adam_update: non-finite gradient, update aborted");

  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  auto pv = tensor_views(params);
  const auto gv = tensor_views(grads);
  auto mv = tensor_views(state.m);
  auto vv = tensor_views(state.v);

  double max_delta = 0.0;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    double* p = pv[k].data;
    const double* g = gv[k].data;
    double* m = mv[k].data;
    double* v = vv[k].data;
    for (std::ptrdiff_t i = 0; i < pv[k].size; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      const double delta = lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
      p[i] += delta;  // ascent on the expected return
      max_delta = std::max(max_delta, std::abs(delta));
    }
  }
  return max_delta;
}

namespace {

struct ChunkSpan {
  std::span<const FrameObservation> frames;
  std::span<const BBox> gts;
};

// Non-overlapping sequential windows; a trailing partial chunk is kept.
std::vector<ChunkSpan> chunk_sequence(const SequenceData& seq, int chunk_len) {
  std::vector<ChunkSpan> out;
  const int len = seq.length();
  for (int start = 0; start < len; start += chunk_len) {
    const int n = std::min(chunk_len, len - start);
    out.push_back({std::span(seq.frames).subspan(start, n),
                   std::span(seq.ground_truth).subspan(start, n)});
  }
  return out;
}

}  // namespace

TrainState train_resume(TrainState state, const std::vector<SequenceData>& dataset,
                        const TrainerConfig& cfg, const TrainHooks& hooks) {
  validate(cfg);
  if (dataset.empty()) throw DataError("train: empty dataset");
  const int feature_dim = dataset.front().feature_dim();
  for (const auto& seq : dataset) {
    if (seq.length() < 1) throw DataError("train: sequence '" + seq.name + "' is empty");
    if (seq.feature_dim() != feature_dim)
      throw DataError("train: sequence '" + seq.name + "' has feature dimension " +
                      std::to_string(seq.feature_dim()) + ", expected " +
                      std::to_string(feature_dim));
  }
  if (state.params.dims.feature != feature_dim)
    throw DataError("train: parameters built for feature dimension " +
                    std::to_string(state.params.dims.feature) + ", dataset has " +
                    std::to_string(feature_dim));

  long update_counter = 0;
  for (const auto& seq : dataset)
    update_counter += static_cast<long>(chunk_sequence(seq, cfg.chunk_len).size());
  update_counter *= state.next_epoch;  // resumed runs continue the count

  for (int epoch = state.next_epoch; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = anneal_lr(epoch, cfg);
    const RewardKind kind = select_reward(epoch, cfg);
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));

    double reward_sum = 0.0;
    long episode_count = 0;
    double max_delta = 0.0;

    for (const auto& seq : dataset) {
      RecurrentState rec = RecurrentState::zeros(state.params.dims.hidden);
      for (const ChunkSpan& chunk : chunk_sequence(seq, cfg.chunk_len)) {
        ChunkRollout rollout =
            run_episodes(chunk.frames, chunk.gts, state.params, rec, cfg, epoch, rng);

        const auto baseline = compute_baseline(rollout.episodes, cfg);
        const auto grad_mus = policy_gradient(rollout.episodes, baseline, cfg);
        const ParamStore grads =
            backward_chunk(rollout.forward.cache, grad_mus, state.params);
        max_delta = std::max(
            max_delta, adam_update(state.params, grads, state.adam, lr, cfg));

        const int steps = static_cast<int>(chunk.frames.size());
        double chunk_step_reward = 0.0;
        for (const Episode& ep : rollout.episodes) {
          double total = 0.0;
          for (double r : ep.rewards) total += r;
          reward_sum += total;
          chunk_step_reward += total / steps;
        }
        episode_count += cfg.episodes;

        ++update_counter;
        if (hooks.on_update) {
          UpdateInfo info;
          info.update = update_counter;
          info.epoch = epoch;
          info.reward = kind;
          info.chunk_len = steps;
          info.mean_step_reward = chunk_step_reward / cfg.episodes;
          double map_iou = 0.0;
          for (int t = 0; t < steps; ++t)
            map_iou += iou(map_estimate({rollout.forward.mus[t], 0.0}), chunk.gts[t]);
          info.mean_map_iou = map_iou / steps;
          hooks.on_update(info);
        }

        rec = cfg.state_carryover ? rollout.forward.final_state
                                  : RecurrentState::zeros(state.params.dims.hidden);
      }
    }

    const double mean_reward = reward_sum / static_cast<double>(episode_count);
    state.history.push_back(mean_reward);

    bool is_best = false;
    if (mean_reward > state.best_reward) {
      state.best_reward = mean_reward;
      state.epochs_since_best = 0;
      is_best = true;
    } else {
      state.epochs_since_best += 1;
    }
    state.next_epoch = epoch + 1;

    if (hooks.on_epoch) {
      EpochInfo info;
      info.epoch = epoch;
      info.lr = lr;
      info.reward = kind;
      info.mean_reward = mean_reward;
      info.max_param_delta = max_delta;
      info.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      info.is_best = is_best;
      hooks.on_epoch(info, state);
    }

    if (cfg.patience > 0 && state.epochs_since_best >= cfg.patience) break;
  }
  return state;
}

TrainState train(const std::vector<SequenceData>& dataset, const TrainerConfig& cfg,
                 const TrainHooks& hooks) {
  validate(cfg);
  if (dataset.empty()) throw DataError("train: empty dataset");

  Dims dims;
  dims.feature = dataset.front().feature_dim();
  dims.encode = effective_encode_dim(cfg);
  dims.hidden = cfg.hidden_dim;

  TrainState state;
  state.params = init_params(dims, cfg.seed);
  state.adam = AdamState::zeros(dims);
  return train_resume(std::move(state), dataset, cfg, hooks);
}

}  // namespace rltrack
