#ifndef RLTRACK_GRADCHECK_HPP
#define RLTRACK_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rltrack/network.hpp"

namespace rltrack {

struct GradCheckConfig {
  Dims dims{4, 6, 8};
  int chunk_len = 3;
  std::uint64_t seed = 1;
  double fd_epsilon = 1e-5;       // central-difference step for the network
  double tolerance = 1e-4;        // max relative error per parameter tensor
  double policy_tolerance = 1e-6; // max relative error for the policy gradient
  int policy_cases = 100;
  bool inject_fault = false;      // corrupt one analytic entry; must then fail
};

struct GradCheckReport {
  struct TensorError {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<TensorError> tensors;  // one row per parameter tensor
  double network_worst = 0.0;
  double policy_worst = 0.0;
  bool network_pass = false;
  bool policy_pass = false;
  bool pass = false;
};

// Checks backpropagation-through-time against central finite differences of
// the scalar sum_t grad_mus[t] . mu_t, and the analytic Gaussian log-density
// gradient against finite differences of the log-density.
GradCheckReport run_gradcheck(const GradCheckConfig& cfg);

}  // namespace rltrack

#endif
