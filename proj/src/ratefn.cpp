#include "fluidnet/ratefn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace fluidnet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasSlack = 1e-9;     // B >= y - slack during the search
constexpr double kRefineTol = 1e-8;     // target witness precision
constexpr double kDomainTol = 1e-9;     // drift membership in rate_of_path

int thread_count() {
  if (const char* env = std::getenv("FLUIDNET_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}
}  // namespace

void OverflowProblem::check() const {
  const int d = net.dimension();
  if (weights.size() != d) {
    throw std::invalid_argument("OverflowProblem: b has wrong dimension");
  }
  if (weights.minCoeff() < 0.0) {
    throw std::invalid_argument("OverflowProblem: b must be nonnegative");
  }
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("OverflowProblem: threshold y must be > 0");
  }
  if (net.exogenous.empty()) {
    throw std::invalid_argument("OverflowProblem: no exogenous nodes");
  }
  // Some jump must be able to influence some weighted node; (I - Q^T)^{-1}
  // has a positive (i, j) entry exactly when node j routes into node i.
  const ReflectionMatrix refl = ReflectionMatrix::from_routing(net.routing);
  bool reachable = false;
  for (int j : net.exogenous) {
    for (int i = 0; i < d; ++i) {
      if (weights(i) > 0.0 && refl.qcal_inv(i, j) > 0.0) reachable = true;
    }
  }
  if (!reachable) {
    throw std::invalid_argument(
        "OverflowProblem: no exogenous jump can reach a node with positive "
        "weight");
  }
}

Eigen::VectorXd candidate_drifts(const FluidNetwork& net) {
  const ReflectionMatrix refl = ReflectionMatrix::from_routing(net.routing);
  return net.mean_input - refl.qcal * net.service;
}

VectorPath one_jump_path(const FluidNetwork& net, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  const Eigen::VectorXd drifts = candidate_drifts(net);
  std::vector<StepDriftPath> coords;
  coords.reserve(net.dimension());
  for (int i = 0; i < net.dimension(); ++i) {
    std::vector<Jump> js;
    if (x(i) > 0.0) js.push_back({u(i), x(i)});
    coords.emplace_back(net.horizon, drifts(i), std::move(js));
  }
  return VectorPath(std::move(coords));
}

double overflow_functional(const ReflectionMatrix& refl,
                           const OverflowProblem& p, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) {
  ReflectionSolution sol = reflect(refl, one_jump_path(p.net, x, u));
  return p.weights.dot(sol.terminal_content());
}

double rate_of_path(const FluidNetwork& net, const VectorPath& x) {
  if (x.dimension() != net.dimension()) {
    throw std::invalid_argument("rate_of_path: dimension mismatch");
  }
  const Eigen::VectorXd drifts = candidate_drifts(net);
  double cost = 0.0;
  for (int j = 0; j < net.dimension(); ++j) {
    const StepDriftPath& c = x.coord(j);
    if (c.origin() != 0.0) return kInf;
    if (std::abs(c.drift() - drifts(j)) > kDomainTol) return kInf;
    if (net.is_exogenous(j)) {
      for (const Jump& jm : c.jumps()) {
        cost += net.tail_coeff(j) * std::pow(jm.size, net.alpha);
      }
    } else if (!c.jumps().empty()) {
      return kInf;
    }
  }
  return cost;
}

namespace {

struct Searcher {
  const OverflowProblem& p;
  ReflectionMatrix refl;
  std::vector<int> exo;
  double alpha, T, y;

  explicit Searcher(const OverflowProblem& prob)
      : p(prob),
        refl(ReflectionMatrix::from_routing(prob.net.routing)),
        exo(prob.net.exogenous),
        alpha(prob.net.alpha),
        T(prob.net.horizon),
        y(prob.threshold) {}

  double cost(const Eigen::VectorXd& x) const {
    double c = 0.0;
    for (int j : exo) c += p.net.tail_coeff(j) * std::pow(x(j), alpha);
    return c;
  }

  bool feasible(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return overflow_functional(refl, p, x, u) >= y - kFeasSlack;
  }

  // Minimal feasible x_i with everything else fixed; hi must be feasible.
  double shrink_coord(Eigen::VectorXd x, const Eigen::VectorXd& u, int i,
                      double hi) const {
    Eigen::VectorXd probe = x;
    probe(i) = 0.0;
    if (feasible(probe, u)) return 0.0;
    double lo = 0.0;
    for (int it = 0; it < 60 && hi - lo > kRefineTol * 0.01; ++it) {
      double mid = 0.5 * (lo + hi);
      probe(i) = mid;
      (feasible(probe, u) ? hi : lo) = mid;
    }
    return hi;
  }

  // Best jump epoch for coordinate i at the current sizes: coarse scan plus
  // golden-section polish of the overflow functional.
  double best_epoch(const Eigen::VectorXd& x, Eigen::VectorXd u, int i) const {
    double best_u = u(i);
    double best_v = -kInf;
    const int scan = 33;
    for (int k = 0; k <= scan; ++k) {
      u(i) = T * k / scan;
      double v = overflow_functional(refl, p, x, u);
      if (v > best_v) {
        best_v = v;
        best_u = u(i);
      }
    }
    double lo = std::max(0.0, best_u - T / scan);
    double hi = std::min(T, best_u + T / scan);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    u(i) = a;
    double fa = overflow_functional(refl, p, x, u);
    u(i) = b;
    double fb = overflow_functional(refl, p, x, u);
    for (int it = 0; it < 60 && hi - lo > kRefineTol * 0.01; ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + gr * (hi - lo);
        u(i) = b;
        fb = overflow_functional(refl, p, x, u);
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - gr * (hi - lo);
        u(i) = a;
        fa = overflow_functional(refl, p, x, u);
      }
    }
    double mid = 0.5 * (lo + hi);
    u(i) = mid;
    if (overflow_functional(refl, p, x, u) >= best_v) return mid;
    return best_u;
  }

  // Coordinate descent: re-time each jump to maximize content, then shrink
  // its size to the feasibility boundary.
  void refine(Eigen::VectorXd& x, Eigen::VectorXd& u) const {
    double prev = cost(x);
    for (int pass = 0; pass < 100; ++pass) {
      for (int i : exo) {
        if (x(i) > 0.0) u(i) = best_epoch(x, u, i);
        x(i) = shrink_coord(x, u, i, x(i));
      }
      double now = cost(x);
      if (prev - now < 1e-10) break;
      prev = now;
    }
  }
};

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return false;
}

int support_size(const Eigen::VectorXd& x) {
  int n = 0;
  for (int i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) ++n;
  }
  return n;
}

}  // namespace

RateSolution solve_overflow(const OverflowProblem& p, int grid_pts) {
  p.check();
  const int d = p.net.dimension();
  Searcher s(p);
  const int m = static_cast<int>(s.exo.size());
  const double T = s.T, y = s.y;

  // Certified cover: any single jump larger than this is cost-dominated.
  double inv_b = 0.0;
  for (int j : s.exo) {
    if (p.weights(j) > 0.0) inv_b = std::max(inv_b, 1.0 / p.weights(j));
  }
  const Eigen::VectorXd drain =
      s.refl.qcal * p.net.service - p.net.mean_input;
  double xmax = y * inv_b + drain.cwiseMax(0.0).sum() * T;

  struct Candidate {
    Eigen::VectorXd x, u;
    double cost;
  };
  std::vector<Candidate> seeds;

  // Extreme-point candidates: each exogenous node alone, sized by bisection
  // at its best epoch.
  for (int i : s.exo) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    u(i) = T;
    x(i) = xmax;
    if (!s.feasible(x, u)) u(i) = s.best_epoch(x, u, i);
    if (s.feasible(x, u)) {
      x(i) = s.shrink_coord(x, u, i, xmax);
      u(i) = s.best_epoch(x, u, i);
      x(i) = s.shrink_coord(x, u, i, x(i));
      seeds.push_back({x, u, s.cost(x)});
    }
  }
  // Binding-drain candidates x_i = drain_i (T - u_i) at grid epochs, paired
  // with a topping-up jump at each weighted node.
  for (int i : s.exo) {
    for (int j : s.exo) {
      if (j == i || p.weights(j) <= 0.0) continue;
      for (int k = 0; k <= 8; ++k) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
        u(i) = T * k / 8.0;
        x(i) = std::min(xmax, std::max(0.0, drain(i) * (T - u(i))));
        u(j) = T;
        x(j) = xmax;
        if (!s.feasible(x, u)) continue;
        x(j) = s.shrink_coord(x, u, j, xmax);
        seeds.push_back({x, u, s.cost(x)});
      }
    }
  }

  double best_cost = kInf;
  for (const Candidate& c : seeds) best_cost = std::min(best_cost, c.cost);

  // Coarse grid, scanned in ascending cost order (cost depends only on x),
  // with early exit per size tuple once any epoch tuple is feasible.
  int pts = grid_pts;
  if (m > 2) {
    pts = std::max(
        5, static_cast<int>(std::pow(2e6, 1.0 / (2.0 * m))));
  }
  std::vector<double> xgrid(pts), ugrid(pts);
  for (int k = 0; k < pts; ++k) {
    xgrid[k] = xmax * k / (pts - 1);
    ugrid[k] = T * k / (pts - 1);
  }
  long n_xtuples = 1;
  for (int i = 0; i < m; ++i) n_xtuples *= pts;

  std::vector<std::pair<double, long>> ordered;  // (cost, x-tuple index)
  ordered.reserve(n_xtuples);
  for (long idx = 0; idx < n_xtuples; ++idx) {
    long rem = idx;
    double c = 0.0;
    for (int i = 0; i < m; ++i) {
      c += p.net.tail_coeff(s.exo[i]) * std::pow(xgrid[rem % pts], s.alpha);
      rem /= pts;
    }
    ordered.emplace_back(c, idx);
  }
  std::sort(ordered.begin(), ordered.end());

  long n_utuples = 1;
  for (int i = 0; i < m; ++i) n_utuples *= pts;

  const int workers = std::min(thread_count(), 8);
  for (const auto& [c, idx] : ordered) {
    if (c >= best_cost) break;  // everything after costs at least as much
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    long rem = idx;
    for (int i = 0; i < m; ++i) {
      x(s.exo[i]) = xgrid[rem % pts];
      rem /= pts;
    }
    // Smallest feasible epoch tuple (deterministic across thread counts).
    std::atomic<long> found{n_utuples};
    std::atomic<long> counter{0};
    auto scan = [&]() {
      long uidx;
      while ((uidx = counter.fetch_add(1)) < n_utuples) {
        if (uidx > found.load()) return;
        Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
        long r = uidx;
        for (int i = 0; i < m; ++i) {
          u(s.exo[i]) = ugrid[r % pts];
          r /= pts;
        }
        if (s.feasible(x, u)) {
          long cur = found.load();
          while (uidx < cur && !found.compare_exchange_weak(cur, uidx)) {
          }
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(scan);
    scan();
    for (auto& th : pool) th.join();
    if (found.load() < n_utuples) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
      long r = found.load();
      for (int i = 0; i < m; ++i) {
        u(s.exo[i]) = ugrid[r % pts];
        r /= pts;
      }
      seeds.push_back({x, u, c});
      best_cost = std::min(best_cost, c);
    }
  }

  // Refine the best few seeds.
  std::sort(seeds.begin(), seeds.end(),
            [](const Candidate& a, const Candidate& b) {
              return a.cost < b.cost;
            });
  if (seeds.size() > 16) seeds.resize(16);

  RateSolution out;
  out.method = "grid+refine";
  out.jump_size = Eigen::VectorXd::Zero(d);
  out.jump_time = Eigen::VectorXd::Zero(d);
  for (Candidate& c : seeds) {
    s.refine(c.x, c.u);
    double cost = s.cost(c.x);
    bool better =
        cost < out.value - 1e-12 ||
        (std::abs(cost - out.value) <= 1e-12 &&
         (support_size(c.x) < support_size(out.jump_size) ||
          (support_size(c.x) == support_size(out.jump_size) &&
           lex_less(c.x, out.jump_size))));
    if (better && s.feasible(c.x, c.u)) {
      out.value = cost;
      out.jump_size = c.x;
      out.jump_time = c.u;
      out.feasible = true;
    }
  }
  if (!out.feasible) {
    out.value = kInf;
  }
  return out;
}

bool is_tandem(const FluidNetwork& net) {
  if (net.dimension() != 2) return false;
  return net.routing(0, 0) == 0.0 && net.routing(0, 1) == 1.0 &&
         net.routing(1, 0) == 0.0 && net.routing(1, 1) == 0.0;
}

RateSolution tandem_rate(const OverflowProblem& p) {
  p.check();
  if (!is_tandem(p.net)) {
    throw std::invalid_argument("tandem_rate: not a two-node tandem");
  }
  if (p.weights(0) != 0.0 || p.weights(1) != 1.0) {
    throw std::invalid_argument("tandem_rate: requires b = (0, 1)");
  }
  if (p.net.exogenous != std::vector<int>{0, 1}) {
    throw std::invalid_argument(
        "tandem_rate: both nodes must carry exogenous input");
  }
  const double r1 = p.net.service(0), r2 = p.net.service(1);
  const double mu1 = p.net.mean_input(0), mu2 = p.net.mean_input(1);
  const double c1 = p.net.tail_coeff(0), c2 = p.net.tail_coeff(1);
  const double a = p.net.alpha, T = p.net.horizon, y = p.threshold;

  RateSolution out;
  out.method = "tandem-analytic";
  out.feasible = true;
  out.jump_size = Eigen::VectorXd::Zero(2);
  out.jump_time = Eigen::VectorXd::Zero(2);

  auto node2_only = [&]() {
    out.value = c2 * std::pow(y, a);
    out.jump_size << 0.0, y;
    out.jump_time << 0.0, T;
  };

  if (r2 >= r1 + mu2) {
    out.regime = 1;
    node2_only();
    return out;
  }
  if (!(r1 > mu1)) {
    throw std::invalid_argument(
        "tandem_rate: requires r1 > mu1 when r2 < r1 + mu2");
  }
  const double spill = r1 + mu2 - r2;  // rate into node 2 above its drain
  if (y <= spill * T) {
    out.regime = 2;
    const double x1 = y * (r1 - mu1) / spill;
    const double alt = c1 * std::pow(x1, a);
    if (c2 * std::pow(y, a) <= alt) {
      node2_only();
    } else {
      out.value = alt;
      out.jump_size << x1, 0.0;
      out.jump_time << T - x1 / (r1 - mu1), T;
    }
    return out;
  }
  out.regime = 3;
  const double x1 = (r1 - mu1) * T;
  const double x2 = y - spill * T;
  const double alt = c1 * std::pow(x1, a) + c2 * std::pow(x2, a);
  if (c2 * std::pow(y, a) <= alt) {
    node2_only();
  } else {
    out.value = alt;
    out.jump_size << x1, x2;
    out.jump_time << 0.0, T;
  }
  return out;
}

double holder_bound(const OverflowProblem& p, double y1, double y2) {
  if (!(y1 > 0.0) || !(y2 > 0.0)) {
    throw std::invalid_argument("holder_bound: thresholds must be > 0");
  }
  double coef = 0.0;
  for (int i = 0; i < p.net.dimension(); ++i) {
    if (p.weights(i) > 0.0) {
      coef = std::max(coef, p.net.tail_coeff(i) /
                                std::pow(p.weights(i), p.net.alpha));
    }
  }
  return coef * std::pow(std::abs(y1 - y2), p.net.alpha);
}

}  // namespace fluidnet
