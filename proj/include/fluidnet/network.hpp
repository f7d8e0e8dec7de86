#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fluidnet {

// Slowly varying multiplier in the jump tail exp(-c L(x) x^alpha).
struct TailLaw {
  enum class Kind { Constant, LogGamma } kind = Kind::Constant;
  double gamma = 0.0;  // exponent for (log(e + x))^gamma

  double operator()(double x) const;
  std::string describe() const;
};

// Open fluid network: substochastic routing Q, service rates r, compound
// Poisson inputs with mean mu_i on the exogenous set, Weibull-type jump tails.
struct FluidNetwork {
  Eigen::MatrixXd routing;     // Q, row i col j = fraction routed i -> j
  Eigen::VectorXd service;     // r
  Eigen::VectorXd mean_input;  // mu (0 off the exogenous set)
  Eigen::VectorXd tail_coeff;  // c (0 off the exogenous set)
  std::vector<int> exogenous;  // sorted node indices with external input
  double alpha = 0.5;
  double horizon = 1.0;  // T
  TailLaw tail_law;

  int dimension() const { return static_cast<int>(service.size()); }
  bool is_exogenous(int i) const;
};

// Qcal = I - Q^T and its inverse I + Q^T + (Q^T)^2 + ...
struct ReflectionMatrix {
  Eigen::MatrixXd routing;   // Q
  Eigen::MatrixXd qcal;      // I - Q^T
  Eigen::MatrixXd qcal_inv;  // entrywise >= 0

  static ReflectionMatrix from_routing(const Eigen::MatrixXd& q);
  int dimension() const { return static_cast<int>(qcal.rows()); }
};

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  bool ok() const;
};

// Spectral radius via power iteration (1e-12 tolerance, 10k cap).
double spectral_radius(const Eigen::MatrixXd& m);

// Per-invariant pass/fail report; warns (does not fail) when only the
// throughput stability condition holds.
ValidationReport validate(const FluidNetwork& net);

// (I - Q^T) r - mu; stable in the Kella sense iff all coordinates > 0.
Eigen::VectorXd stability_kella(const FluidNetwork& net);

// r - (I - Q^T)^{-1} mu; stable iff all coordinates > 0.
Eigen::VectorXd stability_throughput(const FluidNetwork& net);

}  // namespace fluidnet
