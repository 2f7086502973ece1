#include "rltrack/gradcheck.hpp"

#include <cmath>
#include <utility>

#include "rltrack/policy.hpp"
#include "rltrack/rng.hpp"

namespace rltrack {

namespace {

// Guarded relative error: below the guard the comparison degrades to an
// absolute one, so finite-difference roundoff on near-zero gradients does
// not register as disagreement.
double rel_err(double a, double b, double guard = 1e-5) {
  const double scale = std::max({std::abs(a), std::abs(b), guard});
  return std::abs(a - b) / scale;
}

std::vector<FrameObservation> random_frames(const Dims& dims, int steps, Rng& rng) {
  std::vector<FrameObservation> frames(steps);
  for (int t = 0; t < steps; ++t) {
    frames[t].features = Eigen::VectorXd::NullaryExpr(
        dims.feature, [&rng](Eigen::Index) { return rng.uniform(); });
    if (t == 0)
      frames[t].location_hint = Eigen::Vector4d(rng.uniform(0.2, 0.8),
                                                rng.uniform(0.2, 0.8),
                                                rng.uniform(0.1, 0.4),
                                                rng.uniform(0.1, 0.4));
  }
  return frames;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckConfig& cfg) {
  validate(cfg.dims);
  GradCheckReport report;
  Rng rng(cfg.seed);

  // Network part: BPTT vs central finite differences.
  ParamStore params = init_params(cfg.dims, mix_seed(cfg.seed, 1));
  const auto frames = random_frames(cfg.dims, cfg.chunk_len, rng);
  std::vector<Eigen::Vector4d> grad_mus(cfg.chunk_len);
  for (auto& g : grad_mus)
    for (int i = 0; i < 4; ++i) g[i] = rng.normal();

  const RecurrentState init = RecurrentState::zeros(cfg.dims.hidden);
  auto objective = [&]() {
    const ForwardResult fwd = forward_chunk(frames, params, init);
    double loss = 0.0;
    for (int t = 0; t < cfg.chunk_len; ++t) loss += grad_mus[t].dot(fwd.mus[t]);
    return loss;
  };

  ParamStore analytic = backward_chunk(
      forward_chunk(frames, params, init).cache, grad_mus, params);
  if (cfg.inject_fault) {
    analytic.enc_w(0, 0) = analytic.enc_w(0, 0) * 10.0 + 1.0;
  }

  auto param_views = tensor_views(params);
  const auto grad_views = tensor_views(std::as_const(analytic));
  for (std::size_t k = 0; k < param_views.size(); ++k) {
    double worst = 0.0;
    for (std::ptrdiff_t i = 0; i < param_views[k].size; ++i) {
      double& w = param_views[k].data[i];
      const double saved = w;
      w = saved + cfg.fd_epsilon;
      const double up = objective();
      w = saved - cfg.fd_epsilon;
      const double down = objective();
      w = saved;
      const double numeric = (up - down) / (2.0 * cfg.fd_epsilon);
      worst = std::max(worst, rel_err(grad_views[k].data[i], numeric));
    }
    report.tensors.push_back({grad_views[k].name, worst});
    report.network_worst = std::max(report.network_worst, worst);
  }
  report.network_pass = report.network_worst <= cfg.tolerance;

  // Policy part: (l - mu)/sigma^2 vs finite differences of the log-density.
  const double policy_eps = 1e-6;
  for (int c = 0; c < cfg.policy_cases; ++c) {
    PolicyOutput out;
    for (int i = 0; i < 4; ++i) out.mu[i] = rng.uniform(-1.0, 1.0);
    out.sigma = rng.uniform(5e-3, 5e-2);
    BBox l;
    {
      Eigen::Vector4d lv;
      for (int i = 0; i < 4; ++i) {
        const double offset = rng.uniform(0.2 * out.sigma, 3.0 * out.sigma);
        lv[i] = out.mu[i] + (rng.uniform() < 0.5 ? -offset : offset);
      }
      l = vec_to_box(lv);
    }
    const Eigen::Vector4d analytic_grad = log_prob_grad(l, out);
    for (int i = 0; i < 4; ++i) {
      PolicyOutput up = out, down = out;
      up.mu[i] += policy_eps;
      down.mu[i] -= policy_eps;
      const double numeric =
          (log_density(l, up) - log_density(l, down)) / (2.0 * policy_eps);
      report.policy_worst =
          std::max(report.policy_worst, rel_err(analytic_grad[i], numeric));
    }
  }
  report.policy_pass = report.policy_worst <= cfg.policy_tolerance;

  report.pass = report.network_pass && report.policy_pass;
  return report;
}

}  // namespace rltrack
