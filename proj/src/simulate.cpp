#include "fluidnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "fluidnet/reflection.hpp"

namespace fluidnet {

namespace {
std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

RepStream::RepStream(std::uint64_t seed, std::uint64_t n, std::uint64_t rep) {
  std::uint64_t s = seed;
  state_ = splitmix64(s);
  s = state_ ^ (n * 0xd6e8feb86659fd93ULL);
  state_ = splitmix64(s);
  s = state_ ^ (rep * 0xa0761d6478bd642fULL);
  state_ = splitmix64(s);
}

double RepStream::uniform() {
  // 53 random bits into (0, 1); never returns an exact 0.
  std::uint64_t bits = splitmix64(state_) >> 11;
  double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  return u;
}

double sample_jump(double c, double alpha, const TailLaw& law, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_jump: u must be in (0, 1)");
  }
  const double target = -std::log(u);  // solve c L(x) x^alpha = target
  if (law.kind == TailLaw::Kind::Constant) {
    return std::pow(target / c, 1.0 / alpha);
  }
  double hi = 1.0;
  while (c * law(hi) * std::pow(hi, alpha) < target) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (c * law(mid) * std::pow(mid, alpha) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double jump_mean(double c, double alpha, const TailLaw& law) {
  if (c <= 0.0) return 0.0;
  if (law.kind == TailLaw::Kind::Constant) {
    return std::tgamma(1.0 + 1.0 / alpha) * std::pow(c, -1.0 / alpha);
  }
  static std::mutex guard;
  static std::map<std::tuple<double, double, double>, double> cache;
  const std::tuple<double, double, double> key{c, alpha, law.gamma};
  {
    std::lock_guard<std::mutex> lk(guard);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // E[X] = int_0^inf e^{-t} x(t) dt with x(t) the inverse transform at
  // u = e^{-t}; composite Simpson, the tail past t = 60 is negligible.
  const int panels = 4000;
  const double hi = 60.0;
  const double h = hi / panels;
  auto f = [&](double t) {
    return t <= 0.0 ? 0.0
                    : std::exp(-t) * sample_jump(c, alpha, law, std::exp(-t));
  };
  double acc = f(0.0) + f(hi);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(k * h);
  const double mean = acc * h / 3.0;
  std::lock_guard<std::mutex> lk(guard);
  cache.emplace(key, mean);
  return mean;
}

VectorPath sample_input_path(const FluidNetwork& net,
                             const ReflectionMatrix& refl, double t_scaled,
                             RepStream& rng) {
  const int d = net.dimension();
  Eigen::VectorXd drift = net.mean_input - refl.qcal * net.service;
  for (int i = 0; i < d; ++i) {
    if (net.is_exogenous(i)) {
      drift(i) -= jump_mean(net.tail_coeff(i), net.alpha, net.tail_law);
    }
  }
  std::vector<StepDriftPath> coords;
  coords.reserve(d);
  for (int i = 0; i < d; ++i) {
    std::vector<Jump> jumps;
    if (net.is_exogenous(i)) {
      double t = -std::log(rng.uniform());  // unit-rate Poisson epochs
      while (t <= t_scaled) {
        double size = sample_jump(net.tail_coeff(i), net.alpha, net.tail_law,
                                  rng.uniform());
        jumps.push_back({t, size});
        t += -std::log(rng.uniform());
      }
    }
    coords.emplace_back(std::max(t_scaled, 1e-300), drift(i),
                        std::move(jumps));
  }
  return VectorPath(std::move(coords));
}

Eigen::VectorXd simulate_content(const FluidNetwork& net,
                                 const ReflectionMatrix& refl, long n,
                                 double horizon, RepStream& rng) {
  VectorPath x = sample_input_path(net, refl, horizon * n, rng);
  ReflectionSolution sol = reflect(refl, x);
  return sol.terminal_content() / static_cast<double>(n);
}

namespace {
// Wilson score interval at 95%.
void wilson(long hits, long reps, double& lo, double& hi) {
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(reps);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = p + z2 / (2.0 * nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  lo = std::max(0.0, (center - half) / denom);
  hi = std::min(1.0, (center + half) / denom);
}
}  // namespace

std::vector<McEstimate> estimate_overflow(const FluidNetwork& net,
                                          const McConfig& mc, int threads) {
  if (mc.reps < 1) {
    throw std::invalid_argument("estimate_overflow: reps >= 1 required");
  }
  if (threads <= 0) {
    if (const char* env = std::getenv("FLUIDNET_THREADS")) {
      threads = std::max(1, std::atoi(env));
    } else {
      unsigned hw = std::thread::hardware_concurrency();
      threads = hw ? static_cast<int>(hw) : 1;
    }
  }
  const ReflectionMatrix refl = ReflectionMatrix::from_routing(net.routing);
  std::vector<McEstimate> out;
  for (long n : mc.n_values) {
    std::vector<long> hits_per_thread(threads, 0);
    auto worker = [&](int w) {
      long local = 0;
      for (long rep = w; rep < mc.reps; rep += threads) {
        RepStream rng(mc.seed, static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(rep));
        Eigen::VectorXd z = simulate_content(net, refl, n, mc.horizon, rng);
        if (mc.weights.dot(z) >= mc.threshold) ++local;
      }
      hits_per_thread[w] = local;
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < threads; ++w) pool.emplace_back(worker, w);
    worker(0);
    for (auto& th : pool) th.join();
    long hits = 0;
    for (long h : hits_per_thread) hits += h;

    McEstimate est;
    est.n = n;
    est.reps = mc.reps;
    est.hits = hits;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(mc.reps);
    wilson(hits, mc.reps, est.ci_lo, est.ci_hi);
    const double speed =
        net.tail_law(static_cast<double>(n)) * std::pow(n, net.alpha);
    if (hits == 0) {
      // No observed hits: report the bound implied by one pseudo-hit.
      est.decay = std::log(static_cast<double>(mc.reps)) / speed;
      est.decay_is_lower_bound = true;
    } else {
      est.decay = -std::log(est.p_hat) / speed;
    }
    out.push_back(est);
  }
  return out;
}

}  // namespace fluidnet
