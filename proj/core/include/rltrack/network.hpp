#ifndef RLTRACK_NETWORK_HPP
#define RLTRACK_NETWORK_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "rltrack/env.hpp"

namespace rltrack {

struct Dims {
  int feature = 0;  // D, per-frame feature vector size
  int encode = 0;   // E, encoder output size
  int hidden = 0;   // H, LSTM state size; the last 4 units are the location

  int input() const { return feature + 4; }     // features + location hint
  int gate_input() const { return encode + hidden; }
};

// Throws ConfigError; the hidden size must fit the 4-component location.
void validate(const Dims& dims);

// Every trainable tensor: the observation encoder plus the four LSTM gates.
// The same shape doubles as the gradient and optimizer-moment container.
struct ParamStore {
  Dims dims;
  Eigen::MatrixXd enc_w;     // E x (D+4)
  Eigen::VectorXd enc_b;     // E
  Eigen::MatrixXd w_input, w_forget, w_output, w_cand;  // H x (E+H)
  Eigen::VectorXd b_input, b_forget, b_output, b_cand;  // H

  static ParamStore zeros(const Dims& dims);
  bool all_finite() const;
};

// Flat double views over every tensor in a fixed order; the shared access
// path for the optimizer, checkpointing and finite differences.
struct TensorView {
  const char* name;
  double* data;
  std::ptrdiff_t size;
};
struct ConstTensorView {
  const char* name;
  const double* data;
  std::ptrdiff_t size;
};
std::vector<TensorView> tensor_views(ParamStore& p);
std::vector<ConstTensorView> tensor_views(const ParamStore& p);

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor, biases
// zero except the forget gate at 1. Deterministic given the seed.
ParamStore init_params(const Dims& dims, std::uint64_t seed);

struct RecurrentState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static RecurrentState zeros(int hidden);
};

// Stored activations for one timestep, enough for exact BPTT.
struct StepCache {
  Eigen::VectorXd input;     // concat(features, hint), D+4
  Eigen::VectorXd gate_in;   // concat(encoded, h_prev), E+H
  Eigen::VectorXd gi, gf, go, gc;  // gate activations (gc = tanh candidate)
  Eigen::VectorXd c_prev;
  Eigen::VectorXd tanh_c;
};
struct ChunkCache {
  std::vector<StepCache> steps;
  int length() const { return static_cast<int>(steps.size()); }
};

// o = tanh(enc_w * concat(features, hint) + enc_b)
Eigen::VectorXd encode_observation(const FrameObservation& obs, const ParamStore& p);

// Standard LSTM cell update.
RecurrentState lstm_step(const RecurrentState& state, const Eigen::VectorXd& encoded,
                         const ParamStore& p);

struct ForwardResult {
  std::vector<Eigen::Vector4d> mus;  // last 4 components of h_t per step
  RecurrentState final_state;
  ChunkCache cache;
};

ForwardResult forward_chunk(std::span<const FrameObservation> frames,
                            const ParamStore& p, const RecurrentState& init_state);

// Exact reverse-mode gradients of sum_t grad_mus[t] . mu_t over all
// parameters. The initial state is treated as a constant, so no gradient
// crosses chunk boundaries.
ParamStore backward_chunk(const ChunkCache& cache,
                          std::span<const Eigen::Vector4d> grad_mus,
                          const ParamStore& p);

}  // namespace rltrack

#endif
