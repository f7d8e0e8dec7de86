#include "fluidnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fluidnet {

double TailLaw::operator()(double x) const {
  switch (kind) {
    case Kind::Constant:
      return 1.0;
    case Kind::LogGamma:
      return std::pow(std::log(std::exp(1.0) + x), gamma);
  }
  return 1.0;
}

std::string TailLaw::describe() const {
  if (kind == Kind::Constant) return "const";
  std::ostringstream os;
  os << "loggamma:" << gamma;
  return os.str();
}

bool FluidNetwork::is_exogenous(int i) const {
  return std::binary_search(exogenous.begin(), exogenous.end(), i);
}

ReflectionMatrix ReflectionMatrix::from_routing(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) {
    throw std::invalid_argument("ReflectionMatrix: routing matrix not square");
  }
  ReflectionMatrix m;
  m.routing = q;
  const Eigen::MatrixXd id =
      Eigen::MatrixXd::Identity(q.rows(), q.cols());
  m.qcal = id - q.transpose();
  m.qcal_inv = m.qcal.partialPivLu().solve(id);
  if ((m.qcal_inv * m.qcal - id).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::runtime_error("ReflectionMatrix: inverse check failed");
  }
  if (m.qcal_inv.minCoeff() < -1e-12) {
    throw std::runtime_error(
        "ReflectionMatrix: (I - Q^T)^{-1} has negative entries; routing "
        "matrix violates the spectral condition");
  }
  return m;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0.0;
  // Power iteration on |m|; for nonnegative matrices this converges to the
  // Perron root, which equals the spectral radius.
  Eigen::MatrixXd a = m.cwiseAbs();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd w = a * v;
    double norm = w.norm();
    if (norm < 1e-300) return 0.0;  // nilpotent-like collapse
    w /= norm;
    double next = (a * w).dot(w);
    if (std::abs(next - lambda) < 1e-12) return next;
    lambda = next;
    v = w;
  }
  return lambda;
}

namespace {
void check(ValidationReport& rep, const std::string& name, bool pass,
           const std::string& detail) {
  rep.checks.push_back({name, pass, detail});
}
}  // namespace

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.pass; });
}

ValidationReport validate(const FluidNetwork& net) {
  ValidationReport rep;
  const int d = net.dimension();
  std::ostringstream bad;

  bool sizes_ok = net.routing.rows() == d && net.routing.cols() == d &&
                  net.mean_input.size() == d && net.tail_coeff.size() == d &&
                  d >= 1;
  check(rep, "dimensions", sizes_ok,
        sizes_ok ? "" : "Q, r, mu, c sizes inconsistent");
  if (!sizes_ok) return rep;

  bool diag_ok = true, nonneg_ok = true, rows_ok = true;
  for (int i = 0; i < d; ++i) {
    if (net.routing(i, i) != 0.0) {
      diag_ok = false;
      bad << " q[" << i << "][" << i << "]";
    }
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (net.routing(i, j) < 0.0) {
        nonneg_ok = false;
        bad << " q[" << i << "][" << j << "]";
      }
      row += net.routing(i, j);
    }
    if (row > 1.0 + 1e-12) {
      rows_ok = false;
      bad << " row " << i << " sums to " << row;
    }
  }
  check(rep, "zero diagonal", diag_ok, diag_ok ? "" : "nonzero:" + bad.str());
  check(rep, "nonnegative routing", nonneg_ok,
        nonneg_ok ? "" : "negative entries:" + bad.str());
  check(rep, "substochastic rows", rows_ok, rows_ok ? "" : bad.str());

  double rho = spectral_radius(net.routing);
  {
    std::ostringstream os;
    os << "spectral radius " << rho;
    check(rep, "spectral condition (Q^n -> 0)", rho < 1.0, os.str());
  }

  check(rep, "alpha in (0,1)", net.alpha > 0.0 && net.alpha < 1.0, "");
  check(rep, "horizon > 0", net.horizon > 0.0, "");
  check(rep, "service rates >= 0", net.service.minCoeff() >= 0.0, "");

  bool exo_ok = true;
  std::ostringstream exo_bad;
  for (int i = 0; i < d; ++i) {
    if (net.is_exogenous(i)) {
      if (!(net.tail_coeff(i) > 0.0)) {
        exo_ok = false;
        exo_bad << " c[" << i << "] must be > 0";
      }
      if (net.mean_input(i) < 0.0) {
        exo_ok = false;
        exo_bad << " mu[" << i << "] must be >= 0";
      }
    } else {
      if (net.mean_input(i) != 0.0) {
        exo_ok = false;
        exo_bad << " mu[" << i << "] must be 0 off the exogenous set";
      }
    }
  }
  check(rep, "exogenous parameters", exo_ok, exo_bad.str());

  if (rep.ok()) {
    Eigen::VectorXd kella = stability_kella(net);
    Eigen::VectorXd thru = stability_throughput(net);
    if (kella.minCoeff() <= 0.0 && thru.minCoeff() > 0.0) {
      rep.warnings.push_back(
          "Kella stability condition (I-Q^T)r - mu > 0 fails but the "
          "throughput condition r > (I-Q^T)^{-1} mu holds");
    } else if (thru.minCoeff() <= 0.0) {
      rep.warnings.push_back("network is unstable: effective arrival rate "
                             "meets or exceeds service rate");
    }
  }
  return rep;
}

Eigen::VectorXd stability_kella(const FluidNetwork& net) {
  const Eigen::MatrixXd qcal =
      Eigen::MatrixXd::Identity(net.dimension(), net.dimension()) -
      net.routing.transpose();
  return qcal * net.service - net.mean_input;
}

Eigen::VectorXd stability_throughput(const FluidNetwork& net) {
  const Eigen::MatrixXd qcal =
      Eigen::MatrixXd::Identity(net.dimension(), net.dimension()) -
      net.routing.transpose();
  return net.service - qcal.partialPivLu().solve(net.mean_input);
}

}  // namespace fluidnet
