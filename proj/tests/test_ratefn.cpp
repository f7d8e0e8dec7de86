#include "fluidnet/ratefn.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace fluidnet;

namespace {

FluidNetwork single_net(double r, double mu, double c) {
  FluidNetwork net;
  net.routing = Eigen::MatrixXd::Zero(1, 1);
  net.service = Eigen::VectorXd::Constant(1, r);
  net.mean_input = Eigen::VectorXd::Constant(1, mu);
  net.tail_coeff = Eigen::VectorXd::Constant(1, c);
  net.exogenous = {0};
  net.alpha = 0.5;
  net.horizon = 1.0;
  return net;
}

FluidNetwork tandem_net(double r1, double r2, double mu1, double mu2,
                        double c1, double c2, double alpha = 0.5,
                        double T = 1.0) {
  FluidNetwork net;
  net.routing.resize(2, 2);
  net.routing << 0, 1, 0, 0;
  net.service.resize(2);
  net.service << r1, r2;
  net.mean_input.resize(2);
  net.mean_input << mu1, mu2;
  net.tail_coeff.resize(2);
  net.tail_coeff << c1, c2;
  net.exogenous = {0, 1};
  net.alpha = alpha;
  net.horizon = T;
  return net;
}

OverflowProblem tandem_problem(const FluidNetwork& net, double y) {
  OverflowProblem p;
  p.net = net;
  p.weights.resize(2);
  p.weights << 0, 1;
  p.threshold = y;
  return p;
}

}  // namespace

TEST_CASE("candidate_drifts") {
  Eigen::VectorXd d = candidate_drifts(tandem_net(3, 3, 1, 1, 1, 1));
  CHECK(d(0) == doctest::Approx(-2.0));
  CHECK(d(1) == doctest::Approx(1.0));
}

TEST_CASE("rate_of_path examples") {
  FluidNetwork net = single_net(2, 1, 1);
  // no jumps, correct drift
  VectorPath flat({StepDriftPath(1.0, -1.0)});
  CHECK(rate_of_path(net, flat) == 0.0);
  // two unit jumps, c=1, alpha=0.5
  VectorPath two({StepDriftPath(1.0, -1.0, {{0.2, 1.0}, {0.6, 1.0}})});
  CHECK(rate_of_path(net, two) == doctest::Approx(2.0));
  // wrong drift is off the effective domain
  VectorPath off({StepDriftPath(1.0, 0.0, {{0.2, 1.0}})});
  CHECK(std::isinf(rate_of_path(net, off)));
  // jump in a non-exogenous coordinate
  FluidNetwork tn = tandem_net(3, 3, 1, 0, 1, 0);
  tn.exogenous = {0};
  tn.mean_input(1) = 0.0;
  VectorPath bad({StepDriftPath(1.0, -2.0),
                  StepDriftPath(1.0, -0.0, {{0.5, 1.0}})});
  CHECK(std::isinf(rate_of_path(tn, bad)));
}

TEST_CASE("OverflowProblem::check rejects unreachable weights") {
  // only node 2 jumps; node 2 cannot influence node 1
  FluidNetwork net = tandem_net(3, 3, 0, 1, 0, 1);
  net.exogenous = {1};
  OverflowProblem p;
  p.net = net;
  p.weights.resize(2);
  p.weights << 1, 0;
  p.threshold = 1.0;
  CHECK_THROWS_AS(p.check(), std::invalid_argument);
  p.weights << 0, 1;
  CHECK_NOTHROW(p.check());
  // node-1 jumps reach node 2 downstream even though J cap I+ is empty
  FluidNetwork down = tandem_net(3, 3, 1, 0, 1, 0);
  down.exogenous = {0};
  down.mean_input(1) = 0.0;
  p.net = down;
  CHECK_NOTHROW(p.check());
  p.threshold = 0.0;
  CHECK_THROWS_AS(p.check(), std::invalid_argument);
}

TEST_CASE("solve_overflow: single queue gives y^alpha") {
  OverflowProblem p;
  p.net = single_net(2, 1, 1);
  p.weights = Eigen::VectorXd::Constant(1, 1.0);
  p.threshold = 1.5;
  RateSolution s = solve_overflow(p);
  REQUIRE(s.feasible);
  CHECK(s.value == doctest::Approx(std::sqrt(1.5)).epsilon(1e-6));
  CHECK(s.jump_size(0) == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(s.jump_time(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("tandem_rate: regime 1, r2 >= r1 + mu2") {
  FluidNetwork net = tandem_net(2, 4, 1, 1, 0.7, 1.3);
  for (double y : {0.5, 1.0, 3.0}) {
    RateSolution s = tandem_rate(tandem_problem(net, y));
    REQUIRE(s.feasible);
    CHECK(s.regime == 1);
    CHECK(s.value == doctest::Approx(1.3 * std::pow(y, 0.5)).epsilon(1e-12));
    CHECK(s.jump_size(0) == 0.0);
    CHECK(s.jump_size(1) == doctest::Approx(y));
    CHECK(s.jump_time(1) == doctest::Approx(net.horizon));
  }
}

TEST_CASE("tandem_rate: regime 2 at y = 1") {
  FluidNetwork net = tandem_net(3, 3, 1, 1, 0.2, 1.0);
  RateSolution s = tandem_rate(tandem_problem(net, 1.0));
  REQUIRE(s.feasible);
  CHECK(s.regime == 2);
  // min{c1 ((r1-mu1)/(r1+mu2-r2))^alpha, c2} y^alpha = 0.2 sqrt(2)
  CHECK(s.value == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.jump_size(0) == doctest::Approx(2.0));
  CHECK(s.jump_size(1) == 0.0);
  CHECK(s.jump_time(0) == doctest::Approx(0.0));
}

TEST_CASE("tandem_rate: regime 3 worked example") {
  FluidNetwork net = tandem_net(3, 3, 1, 1, 0.2, 1.0);
  RateSolution s = tandem_rate(tandem_problem(net, 2.0));
  REQUIRE(s.feasible);
  CHECK(s.regime == 3);
  CHECK(s.value == doctest::Approx(0.2 * std::sqrt(2.0) + 1.0).epsilon(1e-12));
  CHECK(s.jump_size(0) == doctest::Approx(2.0));
  CHECK(s.jump_size(1) == doctest::Approx(1.0));
  CHECK(s.jump_time(0) == doctest::Approx(0.0));
  CHECK(s.jump_time(1) == doctest::Approx(1.0));
}

TEST_CASE("tandem_rate: node-2-only branch of regime 3") {
  // large c1 makes the single node-2 jump optimal
  FluidNetwork net = tandem_net(3, 3, 1, 1, 5.0, 1.0);
  RateSolution s = tandem_rate(tandem_problem(net, 2.0));
  CHECK(s.regime == 3);
  CHECK(s.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.jump_size(0) == 0.0);
  CHECK(s.jump_size(1) == doctest::Approx(2.0));
}

TEST_CASE("tandem witnesses reach the threshold through reflect") {
  for (double y : {0.5, 1.0, 2.0, 3.5}) {
    for (double c1 : {0.1, 0.5, 2.0}) {
      FluidNetwork net = tandem_net(3, 3, 1, 1, c1, 1.0);
      OverflowProblem p = tandem_problem(net, y);
      RateSolution s = tandem_rate(p);
      REQUIRE(s.feasible);
      ReflectionMatrix refl = ReflectionMatrix::from_routing(net.routing);
      double val = overflow_functional(refl, p, s.jump_size, s.jump_time);
      CHECK(val >= y - 1e-6);
      // reported value matches the cost of the witness
      double cost = net.tail_coeff(0) * std::pow(s.jump_size(0), net.alpha) +
                    net.tail_coeff(1) * std::pow(s.jump_size(1), net.alpha);
      CHECK(s.value == doctest::Approx(cost).epsilon(1e-10));
    }
  }
}

TEST_CASE("is_tandem") {
  CHECK(is_tandem(tandem_net(3, 3, 1, 1, 1, 1)));
  CHECK_FALSE(is_tandem(single_net(2, 1, 1)));
  FluidNetwork net = tandem_net(3, 3, 1, 1, 1, 1);
  net.routing(0, 1) = 0.5;
  CHECK_FALSE(is_tandem(net));
  CHECK_THROWS_AS(tandem_rate(tandem_problem(single_net(2, 1, 1), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("solver agrees with the analytic tandem form on a sweep") {
  for (double y : {0.5, 1.5, 3.0}) {
    for (double T : {0.5, 1.0, 2.0}) {
      for (double c1 : {0.1, 0.5, 2.0}) {
        FluidNetwork net = tandem_net(3, 3, 1, 1, c1, 1.0, 0.5, T);
        OverflowProblem p = tandem_problem(net, y);
        RateSolution an = tandem_rate(p);
        RateSolution gr = solve_overflow(p, 21);
        REQUIRE(an.feasible);
        REQUIRE(gr.feasible);
        CHECK(gr.value == doctest::Approx(an.value).epsilon(1e-3));
        // the grid answer can only sit above the true optimum
        CHECK(gr.value >= an.value - 1e-9);
      }
    }
  }
  // regime-1 geometry too
  FluidNetwork net = tandem_net(2, 4, 1, 1, 0.7, 1.3);
  OverflowProblem p = tandem_problem(net, 2.0);
  CHECK(solve_overflow(p, 21).value ==
        doctest::Approx(tandem_rate(p).value).epsilon(1e-3));
}

TEST_CASE("holder_bound examples") {
  FluidNetwork net = tandem_net(3, 3, 1, 1, 0.2, 1.0);
  OverflowProblem p = tandem_problem(net, 1.0);
  CHECK(holder_bound(p, 1.0, 1.0) == 0.0);
  CHECK(holder_bound(p, 1.0, 1.25) == doctest::Approx(0.5));

  FluidNetwork net2 = tandem_net(3, 3, 1, 1, 3.0, 1.0);
  OverflowProblem q = tandem_problem(net2, 1.0);
  q.weights << 2, 1;
  CHECK(holder_bound(q, 1.0, 2.0) ==
        doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("Holder continuity of the analytic tandem value") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    double c1 = 0.1 + 2.0 * u01(rng);
    FluidNetwork net = tandem_net(3, 3, 1, 1, c1, 0.5 + u01(rng));
    double y1 = 0.2 + 3.0 * u01(rng);
    double y2 = 0.2 + 3.0 * u01(rng);
    OverflowProblem p = tandem_problem(net, y1);
    double v1 = tandem_rate(p).value;
    p.threshold = y2;
    double v2 = tandem_rate(p).value;
    CHECK(std::abs(v1 - v2) <= holder_bound(p, y1, y2) + 1e-9);
  }
}

TEST_CASE("monotonicity of the solver value in y") {
  FluidNetwork net = tandem_net(3, 3, 1, 1, 0.2, 1.0);
  double prev = 0.0;
  for (double y : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    RateSolution s = solve_overflow(tandem_problem(net, y), 21);
    REQUIRE(s.feasible);
    CHECK(s.value >= prev - 1e-9);
    prev = s.value;
  }
}

TEST_CASE("infeasible threshold reports infinity") {
  // only node 1 is exogenous; node 2 content is capped by r1 T
  FluidNetwork net = tandem_net(3, 3, 1, 0, 1, 0);
  net.exogenous = {0};
  net.mean_input(1) = 0.0;
  net.tail_coeff(1) = 0.0;
  OverflowProblem p;
  p.net = net;
  p.weights.resize(2);
  p.weights << 0, 1;
  p.threshold = 50.0;
  RateSolution s = solve_overflow(p, 15);
  CHECK_FALSE(s.feasible);
  CHECK(std::isinf(s.value));
}

TEST_CASE("one-jump restriction is optimal vs two-jump brute force") {
  // single queue: enumerate two jumps per path on a coarse grid
  FluidNetwork net = single_net(2, 0.5, 1);
  OverflowProblem p;
  p.net = net;
  p.weights = Eigen::VectorXd::Constant(1, 1.0);
  p.threshold = 1.0;
  ReflectionMatrix refl = ReflectionMatrix::from_routing(net.routing);
  double brute = std::numeric_limits<double>::infinity();
  const int m = 7;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int s = 0; s < m; ++s)
        for (int t = 0; t < m; ++t) {
          double x1 = 1.4 * a / (m - 1), x2 = 1.4 * b / (m - 1);
          double u1 = 1.0 * s / (m - 1), u2 = 1.0 * t / (m - 1);
          std::vector<Jump> js;
          if (x1 > 0) js.push_back({u1, x1});
          if (x2 > 0) js.push_back({u2, x2});
          VectorPath path({StepDriftPath(1.0, -1.5, js)});
          ReflectionSolution sol = reflect(refl, path);
          if (sol.terminal_content()(0) >= p.threshold - 1e-9) {
            double cost = 0.0;
            for (const Jump& j : path.coord(0).jumps())
              cost += std::pow(j.size, 0.5);
            brute = std::min(brute, cost);
          }
        }
  RateSolution s = solve_overflow(p);
  REQUIRE(s.feasible);
  CHECK(s.value <= brute + 1e-9);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-6));  // x*=y at u=T
}

TEST_CASE("strict/non-strict thresholds coincide in the limit") {
  FluidNetwork net = tandem_net(3, 3, 1, 1, 0.2, 1.0);
  OverflowProblem p = tandem_problem(net, 1.0);
  double v0 = solve_overflow(p, 21).value;
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    p.threshold = 1.0 + eps;
    double v = solve_overflow(p, 21).value;
    CHECK(v >= v0 - 1e-6);
    double gap = v - v0;
    CHECK(gap <= holder_bound(p, 1.0, 1.0 + eps) + 2e-3);
    CHECK(gap <= prev_gap + 1e-6);
    prev_gap = gap;
  }
}
