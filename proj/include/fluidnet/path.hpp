#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace fluidnet {

struct Jump {
  double time = 0.0;
  double size = 0.0;
};

// Smallest jump kept at construction; anything below is normalized away.
inline constexpr double kJumpEps = 1e-12;

// Linear drift plus finitely many nonnegative jumps on [0, T].
// Right-continuous with left limits; immutable after construction.
class StepDriftPath {
 public:
  StepDriftPath(double horizon, double drift, std::vector<Jump> jumps = {},
                double origin = 0.0);

  double horizon() const { return horizon_; }
  double drift() const { return drift_; }
  double origin() const { return origin_; }
  const std::vector<Jump>& jumps() const { return jumps_; }

  // value(t), right-continuous.
  double value(double t) const;
  // value(t-); equals origin at t = 0.
  double left_limit(double t) const;

  double terminal() const { return value(horizon_); }
  double jump_mass() const;

  bool operator==(const StepDriftPath& other) const;

 private:
  double horizon_;
  double drift_;
  double origin_;
  std::vector<Jump> jumps_;  // strictly increasing times, sizes > kJumpEps
};

// d coordinates sharing a horizon.
class VectorPath {
 public:
  explicit VectorPath(std::vector<StepDriftPath> coords);

  int dimension() const { return static_cast<int>(coords_.size()); }
  double horizon() const { return coords_.front().horizon(); }
  const StepDriftPath& coord(int i) const { return coords_.at(i); }
  const std::vector<StepDriftPath>& coords() const { return coords_; }

  Eigen::VectorXd value(double t) const;
  Eigen::VectorXd left_limit(double t) const;

 private:
  std::vector<StepDriftPath> coords_;
};

// Piecewise-linear strictly increasing homeomorphism of [0, T] fixing 0 and T.
class TimeDeformation {
 public:
  // knots: ordered (s, lambda(s)) pairs; (0,0) and (T,T) appended if missing.
  TimeDeformation(double horizon, std::vector<std::pair<double, double>> knots);

  static TimeDeformation identity(double horizon);

  double horizon() const { return horizon_; }
  double operator()(double s) const;
  double inverse(double t) const;
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  // sup |lambda - e|, exact from the knots.
  double max_deviation() const;

 private:
  double horizon_;
  std::vector<std::pair<double, double>> knots_;
};

// Upsilon_kappa: subtract kappa_i * t from coordinate i. Jumps untouched.
VectorPath drift_shift(const VectorPath& p, const Eigen::VectorXd& kappa);

// Coordinate-wise value at the horizon (jump at T included).
Eigen::VectorXd terminal(const VectorPath& p);

// Exact sup-norm distance, max over coordinates.
double uniform_distance(const StepDriftPath& a, const StepDriftPath& b);
double uniform_distance(const VectorPath& a, const VectorPath& b);

// sup_t |a(lambda(t)) - b(t)|, exact over the merged breakpoint grid.
double deformed_uniform_distance(const StepDriftPath& a, const StepDriftPath& b,
                                 const TimeDeformation& lambda);

// Certified upper bound on the J1 distance: min over a finite deformation
// family (identity plus order-preserving jump matchings, both directions) of
// ||a o lambda - b||_inf v ||lambda - e||_inf.
double j1_distance_upper(const StepDriftPath& a, const StepDriftPath& b);

// Sum of per-coordinate J1 upper bounds (product metric d_p).
double product_j1_upper(const VectorPath& a, const VectorPath& b);

// Plain-text serialization:
//   T=<v>
//   drift=<v>; origin=<v>; jumps=(u1,x1),(u2,x2),...
std::string format_path(const VectorPath& p);
VectorPath parse_path(std::istream& in);
VectorPath parse_path_string(const std::string& text);

}  // namespace fluidnet
