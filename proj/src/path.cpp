#include "fluidnet/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fluidnet {

StepDriftPath::StepDriftPath(double horizon, double drift,
                             std::vector<Jump> jumps, double origin)
    : horizon_(horizon), drift_(drift), origin_(origin) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("StepDriftPath: horizon must be > 0");
  }
  for (const Jump& j : jumps) {
    if (j.time < 0.0 || j.time > horizon_) {
      throw std::invalid_argument("StepDriftPath: jump time outside [0, T]");
    }
    if (j.size < 0.0) {
      throw std::invalid_argument("StepDriftPath: negative jump size");
    }
  }
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const Jump& a, const Jump& b) { return a.time < b.time; });
  // Merge coincident epochs, drop sub-threshold jumps.
  for (const Jump& j : jumps) {
    if (!jumps_.empty() && j.time == jumps_.back().time) {
      jumps_.back().size += j.size;
    } else {
      jumps_.push_back(j);
    }
  }
  std::erase_if(jumps_, [](const Jump& j) { return j.size < kJumpEps; });
}

double StepDriftPath::value(double t) const {
  if (t < 0.0 || t > horizon_) {
    throw std::domain_error("StepDriftPath::value: t outside [0, T]");
  }
  double v = origin_ + drift_ * t;
  for (const Jump& j : jumps_) {
    if (j.time > t) break;
    v += j.size;
  }
  return v;
}

double StepDriftPath::left_limit(double t) const {
  if (t < 0.0 || t > horizon_) {
    throw std::domain_error("StepDriftPath::left_limit: t outside [0, T]");
  }
  double v = origin_ + drift_ * t;
  for (const Jump& j : jumps_) {
    if (j.time >= t) break;
    v += j.size;
  }
  return v;
}

double StepDriftPath::jump_mass() const {
  return std::accumulate(jumps_.begin(), jumps_.end(), 0.0,
                         [](double s, const Jump& j) { return s + j.size; });
}

bool StepDriftPath::operator==(const StepDriftPath& other) const {
  if (horizon_ != other.horizon_ || drift_ != other.drift_ ||
      origin_ != other.origin_ || jumps_.size() != other.jumps_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    if (jumps_[i].time != other.jumps_[i].time ||
        jumps_[i].size != other.jumps_[i].size) {
      return false;
    }
  }
  return true;
}

VectorPath::VectorPath(std::vector<StepDriftPath> coords)
    : coords_(std::move(coords)) {
  if (coords_.empty()) {
    throw std::invalid_argument("VectorPath: need at least one coordinate");
  }
  for (const StepDriftPath& c : coords_) {
    if (c.horizon() != coords_.front().horizon()) {
      throw std::invalid_argument("VectorPath: horizons differ");
    }
  }
}

Eigen::VectorXd VectorPath::value(double t) const {
  Eigen::VectorXd v(dimension());
  for (int i = 0; i < dimension(); ++i) v(i) = coords_[i].value(t);
  return v;
}

Eigen::VectorXd VectorPath::left_limit(double t) const {
  Eigen::VectorXd v(dimension());
  for (int i = 0; i < dimension(); ++i) v(i) = coords_[i].left_limit(t);
  return v;
}

TimeDeformation::TimeDeformation(double horizon,
                                 std::vector<std::pair<double, double>> knots)
    : horizon_(horizon), knots_(std::move(knots)) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("TimeDeformation: horizon must be > 0");
  }
  if (knots_.empty() || knots_.front().first != 0.0) {
    knots_.insert(knots_.begin(), {0.0, 0.0});
  }
  if (knots_.back().first != horizon_) {
    knots_.push_back({horizon_, horizon_});
  }
  if (knots_.front() != std::pair<double, double>{0.0, 0.0} ||
      knots_.back() != std::pair<double, double>{horizon_, horizon_}) {
    throw std::invalid_argument("TimeDeformation: endpoints must be fixed");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].first > knots_[i - 1].first) ||
        !(knots_[i].second > knots_[i - 1].second)) {
      throw std::invalid_argument("TimeDeformation: knots not increasing");
    }
  }
}

TimeDeformation TimeDeformation::identity(double horizon) {
  return TimeDeformation(horizon, {{0.0, 0.0}, {horizon, horizon}});
}

namespace {
double interp(const std::vector<std::pair<double, double>>& knots, double s,
              bool inverse_axes) {
  auto x = [&](const std::pair<double, double>& k) {
    return inverse_axes ? k.second : k.first;
  };
  auto y = [&](const std::pair<double, double>& k) {
    return inverse_axes ? k.first : k.second;
  };
  if (s <= x(knots.front())) return y(knots.front());
  if (s >= x(knots.back())) return y(knots.back());
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (s <= x(knots[i])) {
      double w = (s - x(knots[i - 1])) / (x(knots[i]) - x(knots[i - 1]));
      return y(knots[i - 1]) + w * (y(knots[i]) - y(knots[i - 1]));
    }
  }
  return y(knots.back());
}
}  // namespace

double TimeDeformation::operator()(double s) const {
  return interp(knots_, s, false);
}

double TimeDeformation::inverse(double t) const {
  return interp(knots_, t, true);
}

double TimeDeformation::max_deviation() const {
  double m = 0.0;
  for (const auto& [s, v] : knots_) m = std::max(m, std::abs(v - s));
  return m;
}

VectorPath drift_shift(const VectorPath& p, const Eigen::VectorXd& kappa) {
  if (kappa.size() != p.dimension()) {
    throw std::invalid_argument("drift_shift: dimension mismatch");
  }
  std::vector<StepDriftPath> out;
  out.reserve(p.dimension());
  for (int i = 0; i < p.dimension(); ++i) {
    const StepDriftPath& c = p.coord(i);
    out.emplace_back(c.horizon(), c.drift() - kappa(i), c.jumps(), c.origin());
  }
  return VectorPath(std::move(out));
}

Eigen::VectorXd terminal(const VectorPath& p) { return p.value(p.horizon()); }

namespace {
// Critical times where the sup of a piecewise-linear-with-jumps difference
// can be attained: endpoints and every jump epoch.
std::vector<double> merged_breakpoints(const StepDriftPath& a,
                                       const StepDriftPath& b) {
  std::vector<double> ts{0.0, a.horizon()};
  for (const Jump& j : a.jumps()) ts.push_back(j.time);
  for (const Jump& j : b.jumps()) ts.push_back(j.time);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}
}  // namespace

double uniform_distance(const StepDriftPath& a, const StepDriftPath& b) {
  if (a.horizon() != b.horizon()) {
    throw std::invalid_argument("uniform_distance: horizons differ");
  }
  double sup = 0.0;
  for (double t : merged_breakpoints(a, b)) {
    sup = std::max(sup, std::abs(a.value(t) - b.value(t)));
    sup = std::max(sup, std::abs(a.left_limit(t) - b.left_limit(t)));
  }
  return sup;
}

double uniform_distance(const VectorPath& a, const VectorPath& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("uniform_distance: dimension mismatch");
  }
  double sup = 0.0;
  for (int i = 0; i < a.dimension(); ++i) {
    sup = std::max(sup, uniform_distance(a.coord(i), b.coord(i)));
  }
  return sup;
}

double deformed_uniform_distance(const StepDriftPath& a, const StepDriftPath& b,
                                 const TimeDeformation& lambda) {
  // a o lambda is piecewise linear with jumps at lambda^{-1}(u) for each jump
  // u of a; the difference against b is linear between critical times.
  std::vector<double> ts{0.0, a.horizon()};
  for (const Jump& j : a.jumps()) ts.push_back(lambda.inverse(j.time));
  for (const Jump& j : b.jumps()) ts.push_back(j.time);
  for (const auto& [s, v] : lambda.knots()) ts.push_back(s);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  double sup = 0.0;
  for (double t : ts) {
    sup = std::max(sup, std::abs(a.value(lambda(t)) - b.value(t)));
    // lambda is a continuous increasing bijection, so the left limit of the
    // composition is a's left limit at lambda(t).
    sup = std::max(sup, std::abs(a.left_limit(lambda(t)) - b.left_limit(t)));
  }
  return sup;
}

namespace {
// Enumerate order-preserving injections of a's jump epochs into b's, build
// the interpolating deformation for each, and take the best cost.
double one_direction_j1(const StepDriftPath& a, const StepDriftPath& b) {
  const double T = a.horizon();
  auto cost = [&](const TimeDeformation& lam) {
    return std::max(deformed_uniform_distance(a, b, lam), lam.max_deviation());
  };
  double best = cost(TimeDeformation::identity(T));

  const auto& ja = a.jumps();
  const auto& jb = b.jumps();
  const std::size_t m = ja.size(), n = jb.size();
  if (m == 0 || n == 0 || m > n) return best;

  // lambda(v_{k_j}) = u_j aligns a's j-th jump with b's chosen epoch.
  std::vector<std::size_t> pick(m);
  auto try_pick = [&]() {
    std::vector<std::pair<double, double>> knots;
    knots.emplace_back(0.0, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      knots.emplace_back(jb[pick[j]].time, ja[j].time);
    }
    knots.emplace_back(T, T);
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].first > knots[i - 1].first) ||
          !(knots[i].second > knots[i - 1].second)) {
        return;  // degenerate matching (epoch at 0 or T)
      }
    }
    best = std::min(best, cost(TimeDeformation(T, std::move(knots))));
  };
  // Iterate over all increasing index tuples of length m from {0..n-1}.
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    try_pick();
    std::size_t j = m;
    while (j > 0 && pick[j - 1] == n - m + (j - 1)) --j;
    if (j == 0) break;
    ++pick[j - 1];
    for (std::size_t l = j; l < m; ++l) pick[l] = pick[l - 1] + 1;
  }
  return best;
}
}  // namespace

double j1_distance_upper(const StepDriftPath& a, const StepDriftPath& b) {
  if (a.horizon() != b.horizon()) {
    throw std::invalid_argument("j1_distance_upper: horizons differ");
  }
  return std::min(one_direction_j1(a, b), one_direction_j1(b, a));
}

double product_j1_upper(const VectorPath& a, const VectorPath& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("product_j1_upper: dimension mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < a.dimension(); ++i) {
    sum += j1_distance_upper(a.coord(i), b.coord(i));
  }
  return sum;
}

std::string format_path(const VectorPath& p) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "T=" << num(p.horizon()) << "\n";
  for (int i = 0; i < p.dimension(); ++i) {
    const StepDriftPath& c = p.coord(i);
    os << "drift=" << num(c.drift()) << "; origin=" << num(c.origin())
       << "; jumps=";
    for (std::size_t j = 0; j < c.jumps().size(); ++j) {
      if (j) os << ",";
      os << "(" << num(c.jumps()[j].time) << "," << num(c.jumps()[j].size)
         << ")";
    }
    os << "\n";
  }
  return os.str();
}

namespace {
std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

VectorPath parse_path(std::istream& in) {
  std::string line;
  double horizon = -1.0;
  std::vector<StepDriftPath> coords;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("T=", 0) == 0) {
      horizon = std::stod(line.substr(2));
      continue;
    }
    if (horizon <= 0.0) {
      throw std::runtime_error("path file line " + std::to_string(lineno) +
                               ": T=<v> header required before coordinates");
    }
    double drift = 0.0, origin = 0.0;
    std::vector<Jump> jumps;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ';')) {
      field = strip(field);
      auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("path file line " + std::to_string(lineno) +
                                 ": expected key=value, got '" + field + "'");
      }
      std::string key = strip(field.substr(0, eq));
      std::string val = strip(field.substr(eq + 1));
      if (key == "drift") {
        drift = std::stod(val);
      } else if (key == "origin") {
        origin = std::stod(val);
      } else if (key == "jumps") {
        std::size_t pos = 0;
        while ((pos = val.find('(', pos)) != std::string::npos) {
          auto comma = val.find(',', pos);
          auto close = val.find(')', pos);
          if (comma == std::string::npos || close == std::string::npos ||
              comma > close) {
            throw std::runtime_error("path file line " +
                                     std::to_string(lineno) +
                                     ": malformed jump list");
          }
          Jump j;
          j.time = std::stod(val.substr(pos + 1, comma - pos - 1));
          j.size = std::stod(val.substr(comma + 1, close - comma - 1));
          jumps.push_back(j);
          pos = close + 1;
        }
      } else {
        throw std::runtime_error("path file line " + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
      }
    }
    coords.emplace_back(horizon, drift, std::move(jumps), origin);
  }
  if (coords.empty()) {
    throw std::runtime_error("path file: no coordinates found");
  }
  return VectorPath(std::move(coords));
}

VectorPath parse_path_string(const std::string& text) {
  std::istringstream in(text);
  return parse_path(in);
}

}  // namespace fluidnet
