#include "rltrack/network.hpp"

#include <cmath>
#include <string>

#include "rltrack/errors.hpp"
#include "rltrack/rng.hpp"

namespace rltrack {

void validate(const Dims& dims) {
  if (dims.feature <= 0) throw ConfigError("dims.feature must be > 0");
  if (dims.encode <= 0) throw ConfigError("dims.encode must be > 0");
  if (dims.hidden < 4)
    throw ConfigError("dims.hidden must be >= 4 (the last 4 units are the location)");
}

ParamStore ParamStore::zeros(const Dims& dims) {
  validate(dims);
  ParamStore p;
  p.dims = dims;
  p.enc_w = Eigen::MatrixXd::Zero(dims.encode, dims.input());
  p.enc_b = Eigen::VectorXd::Zero(dims.encode);
  const int gi = dims.gate_input();
  for (auto* w : {&p.w_input, &p.w_forget, &p.w_output, &p.w_cand})
    *w = Eigen::MatrixXd::Zero(dims.hidden, gi);
  for (auto* b : {&p.b_input, &p.b_forget, &p.b_output, &p.b_cand})
    *b = Eigen::VectorXd::Zero(dims.hidden);
  return p;
}

std::vector<TensorView> tensor_views(ParamStore& p) {
  return {
      {"enc_w", p.enc_w.data(), p.enc_w.size()},
      {"enc_b", p.enc_b.data(), p.enc_b.size()},
      {"w_input", p.w_input.data(), p.w_input.size()},
      {"w_forget", p.w_forget.data(), p.w_forget.size()},
      {"w_output", p.w_output.data(), p.w_output.size()},
      {"w_cand", p.w_cand.data(), p.w_cand.size()},
      {"b_input", p.b_input.data(), p.b_input.size()},
      {"b_forget", p.b_forget.data(), p.b_forget.size()},
      {"b_output", p.b_output.data(), p.b_output.size()},
      {"b_cand", p.b_cand.data(), p.b_cand.size()},
  };
}

std::vector<ConstTensorView> tensor_views(const ParamStore& p) {
  std::vector<ConstTensorView> out;
  for (const auto& v : tensor_views(const_cast<ParamStore&>(p)))
    out.push_back({v.name, v.data, v.size});
  return out;
}

bool ParamStore::all_finite() const {
  for (const auto& v : tensor_views(*this))
    for (std::ptrdiff_t i = 0; i < v.size; ++i)
      if (!std::isfinite(v.data[i])) return false;
  return true;
}

ParamStore init_params(const Dims& dims, std::uint64_t seed) {
  ParamStore p = ParamStore::zeros(dims);
  Rng rng(seed);
  auto fill_uniform = [&rng](Eigen::MatrixXd& m, int fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  };
  fill_uniform(p.enc_w, dims.input());
  fill_uniform(p.w_input, dims.gate_input());
  fill_uniform(p.w_forget, dims.gate_input());
  fill_uniform(p.w_output, dims.gate_input());
  fill_uniform(p.w_cand, dims.gate_input());
  p.b_forget.setOnes();
  return p;
}

RecurrentState RecurrentState::zeros(int hidden) {
  RecurrentState s;
  s.h = Eigen::VectorXd::Zero(hidden);
  s.c = Eigen::VectorXd::Zero(hidden);
  return s;
}

namespace {

Eigen::ArrayXd sigmoid(const Eigen::VectorXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

Eigen::VectorXd encode_impl(const FrameObservation& obs, const ParamStore& p,
                            StepCache* cache) {
  const Dims& d = p.dims;
  if (obs.features.size() != d.feature)
    throw DataError("encode_observation: feature dimension " +
                    std::to_string(obs.features.size()) + ", parameters expect " +
                    std::to_string(d.feature));
  Eigen::VectorXd x(d.input());
  x << obs.features, obs.location_hint;
  Eigen::VectorXd o = (p.enc_w * x + p.enc_b).array().tanh();
  if (cache) cache->input = std::move(x);
  return o;
}

RecurrentState step_impl(const RecurrentState& state, const Eigen::VectorXd& encoded,
                         const ParamStore& p, StepCache* cache) {
  const Dims& d = p.dims;
  if (encoded.size() != d.encode)
    throw DataError("lstm_step: encoded input size " + std::to_string(encoded.size()) +
                    ", parameters expect " + std::to_string(d.encode));
  if (state.h.size() != d.hidden || state.c.size() != d.hidden)
    throw DataError("lstm_step: state size " + std::to_string(state.h.size()) +
                    ", parameters expect " + std::to_string(d.hidden));

  Eigen::VectorXd z(d.gate_input());
  z << encoded, state.h;

  Eigen::VectorXd gi = sigmoid(p.w_input * z + p.b_input);
  Eigen::VectorXd gf = sigmoid(p.w_forget * z + p.b_forget);
  Eigen::VectorXd go = sigmoid(p.w_output * z + p.b_output);
  Eigen::VectorXd gc = (p.w_cand * z + p.b_cand).array().tanh();

  RecurrentState next;
  next.c = gf.cwiseProduct(state.c) + gi.cwiseProduct(gc);
  Eigen::VectorXd tanh_c = next.c.array().tanh();
  next.h = go.cwiseProduct(tanh_c);

  if (cache) {
    cache->gate_in = std::move(z);
    cache->gi = std::move(gi);
    cache->gf = std::move(gf);
    cache->go = std::move(go);
    cache->gc = std::move(gc);
    cache->c_prev = state.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

}  // namespace

Eigen::VectorXd encode_observation(const FrameObservation& obs, const ParamStore& p) {
  return encode_impl(obs, p, nullptr);
}

RecurrentState lstm_step(const RecurrentState& state, const Eigen::VectorXd& encoded,
                         const ParamStore& p) {
  return step_impl(state, encoded, p, nullptr);
}

ForwardResult forward_chunk(std::span<const FrameObservation> frames,
                            const ParamStore& p, const RecurrentState& init_state) {
  if (frames.empty()) throw DataError("forward_chunk: empty chunk");
  ForwardResult out;
  out.cache.steps.resize(frames.size());
  out.mus.reserve(frames.size());

  RecurrentState state = init_state;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    StepCache& cache = out.cache.steps[t];
    const Eigen::VectorXd encoded = encode_impl(frames[t], p, &cache);
    state = step_impl(state, encoded, p, &cache);
    out.mus.push_back(state.h.tail<4>());
  }
  out.final_state = std::move(state);
  return out;
}

ParamStore backward_chunk(const ChunkCache& cache,
                          std::span<const Eigen::Vector4d> grad_mus,
                          const ParamStore& p) {
  if (grad_mus.size() != cache.steps.size())
    throw DataError("backward_chunk: " + std::to_string(grad_mus.size()) +
                    " gradients vs " + std::to_string(cache.steps.size()) +
                    " cached steps");

  const Dims& d = p.dims;
  ParamStore g = ParamStore::zeros(d);
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(d.hidden);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(d.hidden);

  for (int t = cache.length() - 1; t >= 0; --t) {
    const StepCache& s = cache.steps[t];
    dh.tail<4>() += grad_mus[t];

    // h = go . tanh(c)
    const Eigen::VectorXd d_go = dh.cwiseProduct(s.tanh_c);
    dc += dh.cwiseProduct(s.go).cwiseProduct(
        (1.0 - s.tanh_c.array().square()).matrix());

    // c = gf . c_prev + gi . gc
    const Eigen::VectorXd d_gf = dc.cwiseProduct(s.c_prev);
    const Eigen::VectorXd d_gi = dc.cwiseProduct(s.gc);
    const Eigen::VectorXd d_gc = dc.cwiseProduct(s.gi);

    // through the gate nonlinearities
    const Eigen::VectorXd a_i = d_gi.cwiseProduct(
        s.gi.cwiseProduct((1.0 - s.gi.array()).matrix()));
    const Eigen::VectorXd a_f = d_gf.cwiseProduct(
        s.gf.cwiseProduct((1.0 - s.gf.array()).matrix()));
    const Eigen::VectorXd a_o = d_go.cwiseProduct(
        s.go.cwiseProduct((1.0 - s.go.array()).matrix()));
    const Eigen::VectorXd a_c = d_gc.cwiseProduct(
        (1.0 - s.gc.array().square()).matrix());

    g.w_input.noalias() += a_i * s.gate_in.transpose();
    g.w_forget.noalias() += a_f * s.gate_in.transpose();
    g.w_output.noalias() += a_o * s.gate_in.transpose();
    g.w_cand.noalias() += a_c * s.gate_in.transpose();
    g.b_input += a_i;
    g.b_forget += a_f;
    g.b_output += a_o;
    g.b_cand += a_c;

    Eigen::VectorXd dz = p.w_input.transpose() * a_i;
    dz.noalias() += p.w_forget.transpose() * a_f;
    dz.noalias() += p.w_output.transpose() * a_o;
    dz.noalias() += p.w_cand.transpose() * a_c;

    // encoder: o = tanh(enc_w * x + enc_b), o being gate_in.head(E)
    const Eigen::VectorXd d_enc_pre =
        dz.head(d.encode).cwiseProduct(
            (1.0 - s.gate_in.head(d.encode).array().square()).matrix());
    g.enc_w.noalias() += d_enc_pre * s.input.transpose();
    g.enc_b += d_enc_pre;

    dh = dz.tail(d.hidden);
    dc = dc.cwiseProduct(s.gf);
  }
  // dh/dc now hold gradients into the initial state; dropped by design.
  return g;
}

}  // namespace rltrack
