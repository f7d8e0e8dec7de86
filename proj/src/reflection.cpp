#include "fluidnet/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace fluidnet {

namespace {

constexpr double kZeroTol = 1e-12;     // "buffer is empty" classification
constexpr double kSlopeTol = 1e-14;    // fixed-point convergence on slopes
constexpr int kMaxEvents = 1000000;

// Minimal y >= 0 with x0 + (I - Q^T) y >= 0, via y <- max(0, Q^T y - x0).
Eigen::VectorXd initial_regulator(const ReflectionMatrix& net,
                                  const Eigen::VectorXd& x0) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x0.size());
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd yn =
        (net.routing.transpose() * y - x0).cwiseMax(0.0);
    double diff = (yn - y).cwiseAbs().maxCoeff();
    y = yn;
    if (diff < kSlopeTol) return y;
  }
  throw std::runtime_error("reflect: initial complementarity did not converge");
}

// Regulator slopes on a segment: y' >= 0 supported on the empty set E with
// z' = beta + (I - Q^T) y' and z'_i = 0 wherever y'_i > 0. Fixed point
// y' <- max(0, Q^T y' - beta) restricted to E; geometric since rho(Q) < 1.
Eigen::VectorXd segment_slopes(const ReflectionMatrix& net,
                               const std::vector<bool>& empty,
                               const Eigen::VectorXd& beta) {
  const int d = static_cast<int>(beta.size());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd yn = net.routing.transpose() * y - beta;
    for (int i = 0; i < d; ++i) {
      yn(i) = empty[i] ? std::max(0.0, yn(i)) : 0.0;
    }
    double diff = (yn - y).cwiseAbs().maxCoeff();
    y = yn;
    if (diff < kSlopeTol) return y;
  }
  throw std::runtime_error("reflect: segment complementarity did not converge");
}

}  // namespace

double ReflectionSolution::y_at(int coord, double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  int k = static_cast<int>(it - times.begin()) - 1;
  if (k < 0 || t > times.back()) {
    throw std::domain_error("ReflectionSolution: t outside [0, T]");
  }
  if (k >= static_cast<int>(times.size()) - 1) {
    return regulator(coord, regulator.cols() - 1);
  }
  return regulator(coord, k) + regulator_slope(coord, k) * (t - times[k]);
}

double ReflectionSolution::z_at(int coord, double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  int k = static_cast<int>(it - times.begin()) - 1;
  if (k < 0 || t > times.back()) {
    throw std::domain_error("ReflectionSolution: t outside [0, T]");
  }
  if (k >= static_cast<int>(times.size()) - 1) {
    return content(coord, content.cols() - 1);
  }
  return content(coord, k) + content_slope(coord, k) * (t - times[k]);
}

double ReflectionSolution::z_left_at(int coord, double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it != times.end() && *it == t) {
    return content_pre(coord, it - times.begin());
  }
  return z_at(coord, t);
}

ReflectionSolution reflect(const ReflectionMatrix& net, const VectorPath& x) {
  const int d = x.dimension();
  if (net.dimension() != d) {
    throw std::invalid_argument("reflect: network/path dimension mismatch");
  }
  const double T = x.horizon();

  // epoch -> per-coordinate jump sizes
  std::map<double, Eigen::VectorXd> epochs;
  for (int i = 0; i < d; ++i) {
    for (const Jump& j : x.coord(i).jumps()) {
      auto [it, fresh] =
          epochs.try_emplace(j.time, Eigen::VectorXd::Zero(d));
      it->second(i) += j.size;
    }
  }

  Eigen::VectorXd drifts(d);
  for (int i = 0; i < d; ++i) drifts(i) = x.coord(i).drift();

  std::vector<double> times;
  std::vector<Eigen::VectorXd> ys, zs, zpres, yslopes, zslopes;
  std::vector<std::vector<int>> empties;

  Eigen::VectorXd x0 = x.value(0.0);
  Eigen::VectorXd y = initial_regulator(net, x0);
  Eigen::VectorXd z = x0 + net.qcal * y;
  for (int i = 0; i < d; ++i) {
    if (z(i) < kZeroTol) z(i) = 0.0;
  }

  times.push_back(0.0);
  ys.push_back(y);
  zpres.push_back(x.left_limit(0.0).cwiseMax(0.0));
  zs.push_back(z);

  auto next_epoch = epochs.upper_bound(0.0);
  double t = 0.0;
  int guard = 0;
  while (t < T) {
    if (++guard > kMaxEvents) {
      throw std::runtime_error("reflect: event cap exceeded");
    }
    std::vector<bool> empty(d);
    std::vector<int> empty_idx;
    for (int i = 0; i < d; ++i) {
      empty[i] = z(i) <= kZeroTol;
      if (empty[i]) empty_idx.push_back(i);
    }
    Eigen::VectorXd ys_seg = segment_slopes(net, empty, drifts);
    Eigen::VectorXd zs_seg = drifts + net.qcal * ys_seg;

    double t_jump = next_epoch != epochs.end() ? next_epoch->first : T;
    double t_next = std::min(t_jump, T);
    for (int i = 0; i < d; ++i) {
      if (!empty[i] && zs_seg(i) < -kSlopeTol) {
        t_next = std::min(t_next, t + z(i) / -zs_seg(i));
      }
    }
    t_next = std::min(std::max(t_next, t), T);
    double dt = t_next - t;

    yslopes.push_back(ys_seg);
    zslopes.push_back(zs_seg);
    empties.push_back(empty_idx);

    y += ys_seg * dt;
    Eigen::VectorXd zpre = z + zs_seg * dt;
    for (int i = 0; i < d; ++i) {
      if (zpre(i) < kZeroTol) zpre(i) = 0.0;
    }
    z = zpre;
    if (next_epoch != epochs.end() && next_epoch->first == t_next) {
      z = zpre + next_epoch->second;
      ++next_epoch;
    }
    t = t_next;
    times.push_back(t);
    ys.push_back(y);
    zpres.push_back(zpre);
    zs.push_back(z);
  }

  ReflectionSolution sol;
  const int k = static_cast<int>(times.size());
  sol.times = std::move(times);
  sol.regulator.resize(d, k);
  sol.content.resize(d, k);
  sol.content_pre.resize(d, k);
  sol.regulator_slope.resize(d, k - 1);
  sol.content_slope.resize(d, k - 1);
  for (int c = 0; c < k; ++c) {
    sol.regulator.col(c) = ys[c];
    sol.content.col(c) = zs[c];
    sol.content_pre.col(c) = zpres[c];
  }
  for (int c = 0; c < k - 1; ++c) {
    sol.regulator_slope.col(c) = yslopes[c];
    sol.content_slope.col(c) = zslopes[c];
  }
  sol.empty_set = std::move(empties);
  return sol;
}

GridSolution reflect_fixedpoint_oracle(const ReflectionMatrix& net,
                                       const VectorPath& x, int grid_n) {
  if (grid_n < 2) {
    throw std::invalid_argument("reflect_fixedpoint_oracle: grid_n >= 2");
  }
  const int d = x.dimension();
  const double T = x.horizon();
  std::vector<double> ts;
  ts.reserve(grid_n + 1);
  for (int k = 0; k <= grid_n; ++k) {
    ts.push_back(T * static_cast<double>(k) / grid_n);
  }
  for (int i = 0; i < d; ++i) {
    for (const Jump& j : x.coord(i).jumps()) ts.push_back(j.time);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  const int m = static_cast<int>(ts.size());

  Eigen::MatrixXd xs(d, m);
  for (int k = 0; k < m; ++k) xs.col(k) = x.value(ts[k]);

  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(d, m);
  for (long it = 0; it < 1000000; ++it) {
    Eigen::MatrixXd w = net.routing.transpose() * eta - xs;
    Eigen::VectorXd run =
        Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    Eigen::MatrixXd next(d, m);
    for (int k = 0; k < m; ++k) {
      run = run.cwiseMax(w.col(k));
      next.col(k) = run.cwiseMax(0.0);
    }
    double diff = (next - eta).cwiseAbs().maxCoeff();
    eta = std::move(next);
    if (diff < 1e-10) break;
    if (it == 999999) {
      throw std::runtime_error("reflect_fixedpoint_oracle: iteration cap");
    }
  }

  GridSolution sol;
  sol.times = std::move(ts);
  sol.regulator = eta;
  sol.content = xs + net.qcal * eta;
  return sol;
}

namespace {

// Continuous running minimum of a drift-plus-up-jumps path, floored at 0
// (paths conceptually start from 0 just before time 0). Returns knots of a
// piecewise-linear nonincreasing function.
std::vector<std::pair<double, double>> running_min_knots(
    const StepDriftPath& p) {
  std::vector<std::pair<double, double>> knots;
  double M = std::min(0.0, std::min(p.origin(), p.value(0.0)));
  knots.emplace_back(0.0, M);
  double t = 0.0;
  double v = p.value(0.0);
  auto jump_it = p.jumps().begin();
  if (jump_it != p.jumps().end() && jump_it->time == 0.0) ++jump_it;
  const double beta = p.drift();
  while (t < p.horizon()) {
    double t_end =
        jump_it != p.jumps().end() ? jump_it->time : p.horizon();
    if (beta < 0.0) {
      if (v > M) {
        double t_cross = t + (v - M) / -beta;
        if (t_cross < t_end) {
          knots.emplace_back(t_cross, M);
          v += beta * (t_end - t);
          M = v;
          knots.emplace_back(t_end, M);
        } else {
          v += beta * (t_end - t);
          knots.emplace_back(t_end, M);
        }
      } else {
        v += beta * (t_end - t);
        M = std::min(M, v);
        knots.emplace_back(t_end, M);
      }
    } else {
      v += beta * (t_end - t);
      knots.emplace_back(t_end, M);
    }
    t = t_end;
    if (jump_it != p.jumps().end() && jump_it->time == t) {
      v += jump_it->size;
      ++jump_it;
    }
  }
  return knots;
}

double eval_knots(const std::vector<std::pair<double, double>>& knots,
                  double t) {
  if (t <= knots.front().first) return knots.front().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].first) {
      double w = (t - knots[i - 1].first) /
                 (knots[i].first - knots[i - 1].first);
      return knots[i - 1].second +
             w * (knots[i].second - knots[i - 1].second);
    }
  }
  return knots.back().second;
}

}  // namespace

double tandem_z2_terminal(double r1, double r2, double mu1, double mu2,
                          double x1, double u1, double x2, double u2,
                          double T) {
  if (x1 < 0.0 || x2 < 0.0 || u1 < 0.0 || u1 > T || u2 < 0.0 || u2 > T) {
    throw std::invalid_argument("tandem_z2_terminal: invalid jump data");
  }
  std::vector<Jump> j1, j2;
  if (x1 > 0.0) j1.push_back({u1, x1});
  if (x2 > 0.0) j2.push_back({u2, x2});
  StepDriftPath xi1(T, mu1 - r1, j1);
  StepDriftPath xi2(T, mu2 + r1 - r2, j2);

  auto m1 = running_min_knots(xi1);

  // Node-1 idleness y1 = -m1 subtracts from the transfer, so the free content
  // of node 2 is g(u) = xi2(u) + m1(u) and z2(T) = g(T) - (inf g ^ 0). g is
  // piecewise linear between the critical times below, so checking values and
  // left limits there is exact.
  std::vector<double> crit{0.0, T};
  for (const auto& [s, v] : m1) crit.push_back(s);
  for (const Jump& j : xi2.jumps()) crit.push_back(j.time);
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end()), crit.end());

  double inner = 0.0;
  for (double u : crit) {
    inner = std::min(inner, xi2.value(u) + eval_knots(m1, u));
    inner = std::min(inner, xi2.left_limit(u) + eval_knots(m1, u));
  }
  return xi2.value(T) + eval_knots(m1, T) - inner;
}

VectorPath consolidate_jumps(const VectorPath& x) {
  std::vector<StepDriftPath> out;
  out.reserve(x.dimension());
  for (int i = 0; i < x.dimension(); ++i) {
    const StepDriftPath& c = x.coord(i);
    std::vector<Jump> js;
    if (!c.jumps().empty()) {
      js.push_back({c.jumps().back().time, c.jump_mass()});
    }
    out.emplace_back(c.horizon(), c.drift(), std::move(js), c.origin());
  }
  return VectorPath(std::move(out));
}

VectorPath append_terminal_jump(const VectorPath& x, const Eigen::VectorXd& a) {
  if (a.size() != x.dimension()) {
    throw std::invalid_argument("append_terminal_jump: dimension mismatch");
  }
  if (a.minCoeff() < 0.0) {
    throw std::invalid_argument("append_terminal_jump: negative jump");
  }
  std::vector<StepDriftPath> out;
  out.reserve(x.dimension());
  for (int i = 0; i < x.dimension(); ++i) {
    const StepDriftPath& c = x.coord(i);
    if (c.jumps().size() > 1) {
      throw std::invalid_argument(
          "append_terminal_jump: coordinates must have at most one jump");
    }
    std::vector<Jump> js = c.jumps();
    if (a(i) > 0.0) js.push_back({c.horizon(), a(i)});
    out.emplace_back(c.horizon(), c.drift(), std::move(js), c.origin());
  }
  return VectorPath(std::move(out));
}

double content_uniform_distance(const ReflectionSolution& a,
                                const ReflectionSolution& b) {
  if (a.dimension() != b.dimension() || a.horizon() != b.horizon()) {
    throw std::invalid_argument("content_uniform_distance: mismatch");
  }
  std::vector<double> ts = a.times;
  ts.insert(ts.end(), b.times.begin(), b.times.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  double sup = 0.0;
  for (int i = 0; i < a.dimension(); ++i) {
    for (double t : ts) {
      sup = std::max(sup, std::abs(a.z_at(i, t) - b.z_at(i, t)));
      sup = std::max(sup, std::abs(a.z_left_at(i, t) - b.z_left_at(i, t)));
    }
  }
  return sup;
}

double content_j1_upper(const ReflectionSolution& a,
                        const ReflectionSolution& b,
                        const std::vector<TimeDeformation>& candidates) {
  const double T = a.horizon();
  std::vector<TimeDeformation> cands = candidates;
  cands.push_back(TimeDeformation::identity(T));
  // Snap deformed times onto event times they were meant to hit, so a jump
  // matched by lambda is compared value-to-value instead of across the jump.
  auto snap = [&](double s) {
    auto it = std::lower_bound(a.times.begin(), a.times.end(), s - 1e-9);
    if (it != a.times.end() && std::abs(*it - s) <= 1e-9) return *it;
    return s;
  };
  double total = 0.0;
  for (int i = 0; i < a.dimension(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const TimeDeformation& lam : cands) {
      std::vector<double> ts{0.0, T};
      for (double t : b.times) ts.push_back(t);
      for (double t : a.times) ts.push_back(lam.inverse(t));
      for (const auto& [s, v] : lam.knots()) ts.push_back(s);
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
      double sup = 0.0;
      for (double t : ts) {
        double lt = std::min(T, std::max(0.0, snap(lam(t))));
        sup = std::max(sup, std::abs(a.z_at(i, lt) - b.z_at(i, t)));
        sup = std::max(sup,
                       std::abs(a.z_left_at(i, lt) - b.z_left_at(i, t)));
      }
      best = std::min(best, std::max(sup, lam.max_deviation()));
    }
    total += best;
  }
  return total;
}

}  // namespace fluidnet
