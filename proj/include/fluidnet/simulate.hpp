#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "fluidnet/network.hpp"
#include "fluidnet/path.hpp"

namespace fluidnet {

// Counter-based substream: a deterministic generator keyed by
// (seed, n, replication index), so parallel and serial runs agree bit-for-bit.
class RepStream {
 public:
  RepStream(std::uint64_t seed, std::uint64_t n, std::uint64_t rep);

  // Uniform on (0, 1), implementation-stable.
  double uniform();

 private:
  std::uint64_t state_;
};

struct McConfig {
  std::vector<long> n_values;
  long reps = 1;
  std::uint64_t seed = 0;
  Eigen::VectorXd weights;  // b
  double threshold = 0.0;   // y
  double horizon = 1.0;     // T
};

struct McEstimate {
  long n = 0;
  long reps = 0;
  long hits = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;  // Wilson 95% interval
  double ci_hi = 0.0;
  double decay = 0.0;  // -log(p_hat) / (L(n) n^alpha)
  bool decay_is_lower_bound = false;  // zero hits: decay bounded from below
};

// Inverse-transform draw from the tail exp(-c L(x) x^alpha).
double sample_jump(double c, double alpha, const TailLaw& law, double u);

// Mean of the jump law exp(-c L(x) x^alpha): Gamma(1 + 1/alpha) c^{-1/alpha}
// for constant L, numeric otherwise.
double jump_mean(double c, double alpha, const TailLaw& law);

// Compound Poisson inputs (unit rate) on [0, T_scaled]. Exogenous coordinates
// get sampled jumps plus drift (mu - Qcal r)_i - E[J_1^{(i)}], so the path
// mean stays (mu - Qcal r)_i while the jump tail keeps c_i; the rest carry
// drift (mu - Qcal r)_i alone.
VectorPath sample_input_path(const FluidNetwork& net,
                             const ReflectionMatrix& refl, double t_scaled,
                             RepStream& rng);

// Z_n(T): build X on [0, nT], reflect, rescale by 1/n.
Eigen::VectorXd simulate_content(const FluidNetwork& net,
                                 const ReflectionMatrix& refl, long n,
                                 double horizon, RepStream& rng);

// Crude Monte Carlo estimate of P(b^T Z_n(T) >= y) per scaling n.
std::vector<McEstimate> estimate_overflow(const FluidNetwork& net,
                                          const McConfig& mc,
                                          int threads = 0);

}  // namespace fluidnet
