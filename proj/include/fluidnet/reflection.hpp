#pragma once

#include <Eigen/Dense>

#include <vector>

#include "fluidnet/network.hpp"
#include "fluidnet/path.hpp"

namespace fluidnet {

// Exact event-driven solution of the Skorokhod problem
//   Z = X + (I - Q^T) Y,  Z >= 0,  Y nondecreasing, Y(0) = 0,
//   Y_i increases only while Z_i = 0.
// Events are the input jump epochs plus every time a coordinate of Z hits
// zero; both Y and Z are linear between consecutive events.
struct ReflectionSolution {
  std::vector<double> times;  // event times, times.front() == 0, back() == T
  Eigen::MatrixXd regulator;        // d x k, Y at event times (continuous)
  Eigen::MatrixXd content;          // d x k, Z at event times (post-jump)
  Eigen::MatrixXd content_pre;      // d x k, Z left limits
  Eigen::MatrixXd regulator_slope;  // d x (k-1), per segment
  Eigen::MatrixXd content_slope;    // d x (k-1)
  std::vector<std::vector<int>> empty_set;  // per segment

  int dimension() const { return static_cast<int>(regulator.rows()); }
  double horizon() const { return times.back(); }

  double y_at(int coord, double t) const;
  double z_at(int coord, double t) const;        // right-continuous
  double z_left_at(int coord, double t) const;   // left limit
  Eigen::VectorXd terminal_content() const { return content.col(content.cols() - 1); }
  Eigen::VectorXd terminal_regulator() const { return regulator.col(regulator.cols() - 1); }
};

ReflectionSolution reflect(const ReflectionMatrix& net, const VectorPath& x);

// Grid discretization of the fixed-point construction Y = lim rho^n(0) with
// rho(eta)(t) = 0 v sup_{s<=t} {Q^T eta(s) - x(s)}. Verification oracle only.
struct GridSolution {
  std::vector<double> times;
  Eigen::MatrixXd regulator;  // d x m
  Eigen::MatrixXd content;    // d x m
};

GridSolution reflect_fixedpoint_oracle(const ReflectionMatrix& net,
                                       const VectorPath& x, int grid_n);

// Terminal content of the second tandem node for one-jump-per-node inputs,
// via the nested-infimum formula evaluated exactly on breakpoints:
//   z2(T) = g(T) - inf_{u<=T} g(u) ^ 0,  g(u) = xi2(u) + m1(u),
//   m1(u) = inf_{s<=u} xi1(s) ^ 0,
// with xi1 drift mu1 - r1 and xi2 drift mu2 + r1 - r2 (potential content);
// -m1 is the node-1 idleness, which subtracts from the transfer to node 2.
double tandem_z2_terminal(double r1, double r2, double mu1, double mu2,
                          double x1, double u1, double x2, double u2,
                          double T);

// Move each coordinate's total jump mass onto its latest jump epoch.
VectorPath consolidate_jumps(const VectorPath& x);

// Add jump a_i at time T to coordinate i (merged with an existing jump at T).
VectorPath append_terminal_jump(const VectorPath& x, const Eigen::VectorXd& a);

// Exact sup-norm distance between two reflection contents (piecewise linear
// with jumps; the sup is attained on the merged event grid).
double content_uniform_distance(const ReflectionSolution& a,
                                const ReflectionSolution& b);

// sup_t |z_a(lambda(t)) - z_b(t)| over the merged critical times; combined
// with lambda's deviation this certifies a J1 upper bound per coordinate.
double content_j1_upper(const ReflectionSolution& a,
                        const ReflectionSolution& b,
                        const std::vector<TimeDeformation>& candidates);

}  // namespace fluidnet
