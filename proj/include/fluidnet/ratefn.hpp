#pragma once

#include <Eigen/Dense>

#include <string>

#include "fluidnet/network.hpp"
#include "fluidnet/path.hpp"
#include "fluidnet/reflection.hpp"

namespace fluidnet {

// Minimize sum_i c_i x_i^alpha over one-jump-per-node perturbations whose
// reflected terminal functional b^T Z(T) reaches the threshold y.
struct OverflowProblem {
  FluidNetwork net;
  Eigen::VectorXd weights;  // b >= 0
  double threshold = 0.0;   // y > 0

  void check() const;  // throws on invalid b, y or empty J cap I+
};

struct RateSolution {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd jump_size;  // x*, zero off the exogenous set
  Eigen::VectorXd jump_time;  // u*
  bool feasible = false;
  std::string method;  // "grid+refine" | "tandem-analytic"
  int regime = 0;      // tandem regimes 1..3, 0 otherwise
};

// Drifts of the one-jump candidate paths: (mu - (I - Q^T) r)_i.
Eigen::VectorXd candidate_drifts(const FluidNetwork& net);

// Path with coordinate drifts (mu - Qcal r)_i and jump x_i at u_i.
VectorPath one_jump_path(const FluidNetwork& net, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u);

// b^T phi(path)(T) for a one-jump candidate.
double overflow_functional(const ReflectionMatrix& refl,
                           const OverflowProblem& p, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u);

// Rate of a step-drift perturbation: sum_{j in J} c_j sum_k (jump size)^alpha;
// infinity off the effective domain (wrong drift, jumps off J, content off J).
double rate_of_path(const FluidNetwork& net, const VectorPath& x);

// Grid search over (x_i, u_i)_{i in J} with extreme-point candidates and
// local refinement; every reported witness is re-verified through reflect.
RateSolution solve_overflow(const OverflowProblem& p, int grid_pts = 41);

// Closed form for the two-node tandem with b = (0, 1): three regimes.
RateSolution tandem_rate(const OverflowProblem& p);

bool is_tandem(const FluidNetwork& net);

// Holder continuity bound max_{i: b_i > 0} (c_i / b_i^alpha) |y1 - y2|^alpha.
double holder_bound(const OverflowProblem& p, double y1, double y2);

}  // namespace fluidnet
