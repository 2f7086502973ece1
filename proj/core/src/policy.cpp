#include "rltrack/policy.hpp"

#include <cmath>

#include "rltrack/errors.hpp"

namespace rltrack {

namespace {

void require_positive_sigma(const PolicyOutput& out, const char* where) {
  if (!(out.sigma > 0.0))
    throw ConfigError(std::string(where) + ": sigma must be > 0, got " +
                      std::to_string(out.sigma));
}

}  // namespace

BBox sample_location(const PolicyOutput& out, Rng& rng) {
  require_positive_sigma(out, "sample_location");
  Eigen::Vector4d l;
  for (int i = 0; i < 4; ++i) l[i] = rng.normal(out.mu[i], out.sigma);
  return vec_to_box(l);
}

Eigen::Vector4d log_prob_grad(const BBox& l, const PolicyOutput& out) {
  require_positive_sigma(out, "log_prob_grad");
  return (box_to_vec(l) - out.mu) / (out.sigma * out.sigma);
}

double log_density(const BBox& l, const PolicyOutput& out) {
  require_positive_sigma(out, "log_density");
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2*pi)
  const Eigen::Vector4d d = box_to_vec(l) - out.mu;
  return -4.0 * (kLogSqrt2Pi + std::log(out.sigma)) -
         d.squaredNorm() / (2.0 * out.sigma * out.sigma);
}

BBox map_estimate(const PolicyOutput& out) { return vec_to_box(out.mu); }

}  // namespace rltrack
