#ifndef RLTRACK_POLICY_HPP
#define RLTRACK_POLICY_HPP

#include <Eigen/Core>

#include "rltrack/geometry.hpp"
#include "rltrack/rng.hpp"

namespace rltrack {

// Gaussian location policy over the four box coordinates with isotropic
// covariance sigma^2 I. sigma is a standard deviation; during training it
// must be positive, sigma = 0 is meaningful only for MAP inference.
struct PolicyOutput {
  Eigen::Vector4d mu = Eigen::Vector4d::Zero();
  double sigma = 0.0;
};

// Draws each coordinate from Normal(mu_i, sigma^2). No clamping: rewards
// and metrics tolerate out-of-range boxes, and clamping would bias the
// score-function estimator.
BBox sample_location(const PolicyOutput& out, Rng& rng);

// Gradient of the Gaussian log-density with respect to mu: (l - mu)/sigma^2.
Eigen::Vector4d log_prob_grad(const BBox& l, const PolicyOutput& out);

// Log-density of l under the policy (sum over the four coordinates).
double log_density(const BBox& l, const PolicyOutput& out);

// MAP prediction: the mean, independent of sigma.
BBox map_estimate(const PolicyOutput& out);

}  // namespace rltrack

#endif
