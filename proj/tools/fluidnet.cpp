#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fluidnet/config.hpp"
#include "fluidnet/network.hpp"
#include "fluidnet/path.hpp"
#include "fluidnet/ratefn.hpp"
#include "fluidnet/reflection.hpp"
#include "fluidnet/simulate.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

using Clock = std::chrono::steady_clock;

struct RunContext {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();
};

void emit_manifest(const RunContext& ctx) {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                Clock::now() - ctx.start)
                .count();
  std::string outs;
  for (const auto& o : ctx.outputs) {
    if (!outs.empty()) outs += ";";
    outs += o;
  }
  if (outs.empty()) outs = "-";
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(ctx.config_hash));
  std::cout << "manifest: command=" << ctx.command << " config_hash=" << hash
            << " seed=" << ctx.seed << " version=" << kVersion
            << " wall_ms=" << ms << " outputs=" << outs << "\n";
}

std::string read_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open file: " + filename);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Loads, validates, and reports. Returns false (after printing) on failure.
bool load_validated(const std::string& cfg_file, fluidnet::FluidNetwork& net,
                    RunContext& ctx, bool print_report) {
  std::string raw = read_file(cfg_file);
  ctx.config_hash = fluidnet::config_hash(raw);
  net = fluidnet::parse_network_config_string(raw);
  fluidnet::ValidationReport rep = fluidnet::validate(net);
  if (print_report) {
    for (const auto& c : rep.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
      if (!c.detail.empty()) std::cout << ": " << c.detail;
      std::cout << "\n";
    }
  }
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
  if (!rep.ok()) {
    if (!print_report) {
      for (const auto& c : rep.checks) {
        if (!c.pass) std::cout << "[FAIL] " << c.name << ": " << c.detail << "\n";
      }
    }
    std::cout << "validation failed\n";
    return false;
  }
  return true;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

Eigen::VectorXd parse_vec(const std::string& s, int d, const char* name) {
  std::vector<double> v = parse_list(s);
  if (static_cast<int>(v.size()) != d) {
    throw std::runtime_error(std::string(name) + " needs exactly " +
                             std::to_string(d) + " comma-separated entries");
  }
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) out(i) = v[i];
  return out;
}

void write_text(const std::string& filename, const std::string& text,
                RunContext& ctx) {
  std::ofstream out(filename);
  if (!out) throw std::runtime_error("cannot write file: " + filename);
  out << text;
  ctx.outputs.push_back(filename);
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  return fluidnet::format_sig9(v);
}

int cmd_validate(const std::string& cfg, RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, true)) return kExitConfig;
  std::cout << "validation passed\n";
  return 0;
}

int cmd_reflect(const std::string& cfg, const std::string& path_file,
                int oracle_grid, const std::string& csv, RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, false)) return kExitConfig;
  std::ifstream pin(path_file);
  if (!pin) throw std::runtime_error("cannot open path file: " + path_file);
  fluidnet::VectorPath x = fluidnet::parse_path(pin);
  if (x.dimension() != net.dimension()) {
    std::cout << "error: path dimension " << x.dimension()
              << " does not match network dimension " << net.dimension()
              << "\n";
    return kExitConfig;
  }
  auto refl = fluidnet::ReflectionMatrix::from_routing(net.routing);
  fluidnet::ReflectionSolution sol = fluidnet::reflect(refl, x);
  const int d = net.dimension();
  Eigen::VectorXd zt = sol.terminal_content();
  Eigen::VectorXd yt = sol.terminal_regulator();
  for (int i = 0; i < d; ++i) {
    std::cout << "Z_" << (i + 1) << "(T) = " << fmt(zt(i)) << "  Y_" << (i + 1)
              << "(T) = " << fmt(yt(i)) << "\n";
  }
  if (oracle_grid > 0) {
    fluidnet::GridSolution g =
        fluidnet::reflect_fixedpoint_oracle(refl, x, oracle_grid);
    double sup = 0.0;
    for (std::size_t k = 0; k < g.times.size(); ++k) {
      for (int i = 0; i < d; ++i) {
        sup = std::max(sup,
                       std::abs(g.content(i, k) - sol.z_at(i, g.times[k])));
      }
    }
    std::cout << "oracle_sup_diff = " << fmt(sup) << "\n";
  }
  if (!csv.empty()) {
    fluidnet::CsvTable t;
    t.header.push_back("t");
    for (int i = 0; i < d; ++i) t.header.push_back("Z_" + std::to_string(i + 1));
    for (int i = 0; i < d; ++i) t.header.push_back("Y_" + std::to_string(i + 1));
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      std::vector<std::string> row{fmt(sol.times[k])};
      for (int i = 0; i < d; ++i) row.push_back(fmt(sol.content(i, k)));
      for (int i = 0; i < d; ++i) row.push_back(fmt(sol.regulator(i, k)));
      t.rows.push_back(std::move(row));
    }
    write_text(csv, fluidnet::format_csv(t), ctx);
  }
  return 0;
}

void print_solution(const fluidnet::RateSolution& s) {
  std::cout << "value = " << fmt(s.value) << "\n";
  std::cout << "method = " << s.method << "\n";
  if (s.regime > 0) std::cout << "regime = " << s.regime << "\n";
  if (s.feasible) {
    for (int i = 0; i < s.jump_size.size(); ++i) {
      std::cout << "x_" << (i + 1) << " = " << fmt(s.jump_size(i)) << "  u_"
                << (i + 1) << " = " << fmt(s.jump_time(i)) << "\n";
    }
  }
}

int cmd_rate(const std::string& cfg, const std::string& b_str, double y,
             int grid, const std::string& sweep, const std::string& csv,
             RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, false)) return kExitConfig;
  fluidnet::OverflowProblem p;
  p.net = net;
  p.weights = parse_vec(b_str, net.dimension(), "--b");
  p.threshold = y;
  p.check();
  fluidnet::RateSolution s = fluidnet::solve_overflow(p, grid);
  print_solution(s);
  if (!csv.empty()) {
    std::vector<double> ys{y};
    if (!sweep.empty()) {
      // lo:hi:steps
      double lo, hi;
      int steps;
      if (std::sscanf(sweep.c_str(), "%lf:%lf:%d", &lo, &hi, &steps) != 3 ||
          steps < 2) {
        throw std::runtime_error("--sweep expects lo:hi:steps");
      }
      ys.clear();
      for (int k = 0; k < steps; ++k) {
        ys.push_back(lo + (hi - lo) * k / (steps - 1));
      }
    }
    fluidnet::CsvTable t;
    t.header = {"y", "V_star"};
    for (double yy : ys) {
      p.threshold = yy;
      fluidnet::RateSolution sy =
          (yy == y) ? s : fluidnet::solve_overflow(p, grid);
      t.rows.push_back({fmt(yy), fmt(sy.value)});
    }
    write_text(csv, fluidnet::format_csv(t), ctx);
  }
  if (!s.feasible) return kExitInfeasible;
  return 0;
}

int cmd_tandem(const std::string& cfg, double y, RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, false)) return kExitConfig;
  if (!fluidnet::is_tandem(net)) {
    std::cout << "error: config is not a two-node tandem\n";
    return kExitConfig;
  }
  fluidnet::OverflowProblem p;
  p.net = net;
  p.weights.resize(2);
  p.weights << 0, 1;
  p.threshold = y;
  fluidnet::RateSolution s = fluidnet::tandem_rate(p);
  print_solution(s);
  if (!s.feasible) return kExitInfeasible;
  return 0;
}

fluidnet::CsvTable decay_table(const std::vector<fluidnet::McEstimate>& est) {
  fluidnet::CsvTable t;
  t.header = {"n", "reps", "hits", "p_hat", "ci_lo", "ci_hi", "decay"};
  for (const auto& e : est) {
    t.rows.push_back({std::to_string(e.n), std::to_string(e.reps),
                      std::to_string(e.hits), fmt(e.p_hat), fmt(e.ci_lo),
                      fmt(e.ci_hi), fmt(e.decay)});
  }
  return t;
}

int cmd_simulate(const std::string& cfg, const std::string& b_str, double y,
                 const std::string& n_str, long reps, std::uint64_t seed,
                 const std::string& csv, RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, false)) return kExitConfig;
  ctx.seed = seed;
  fluidnet::McConfig mc;
  for (double v : parse_list(n_str)) mc.n_values.push_back(static_cast<long>(v));
  if (mc.n_values.empty()) throw std::runtime_error("--n needs at least one value");
  mc.reps = reps;
  mc.seed = seed;
  mc.weights = parse_vec(b_str, net.dimension(), "--b");
  mc.threshold = y;
  mc.horizon = net.horizon;
  std::vector<fluidnet::McEstimate> est = fluidnet::estimate_overflow(net, mc);
  for (const auto& e : est) {
    std::cout << "n=" << e.n << " hits=" << e.hits << " p_hat=" << fmt(e.p_hat)
              << " decay=" << fmt(e.decay)
              << (e.decay_is_lower_bound ? " (lower bound: zero hits)" : "")
              << "\n";
  }
  if (!csv.empty()) {
    write_text(csv, fluidnet::format_csv(decay_table(est)), ctx);
  }
  return 0;
}

int cmd_compare(const std::string& cfg, const std::string& b_str, double y,
                const std::string& n_str, long reps, std::uint64_t seed,
                int grid, const std::string& csv, RunContext& ctx) {
  fluidnet::FluidNetwork net;
  if (!load_validated(cfg, net, ctx, false)) return kExitConfig;
  ctx.seed = seed;
  fluidnet::OverflowProblem p;
  p.net = net;
  p.weights = parse_vec(b_str, net.dimension(), "--b");
  p.threshold = y;
  p.check();
  fluidnet::RateSolution s = fluidnet::solve_overflow(p, grid);
  if (!s.feasible) {
    print_solution(s);
    return kExitInfeasible;
  }
  fluidnet::McConfig mc;
  for (double v : parse_list(n_str)) mc.n_values.push_back(static_cast<long>(v));
  if (mc.n_values.empty()) throw std::runtime_error("--n needs at least one value");
  mc.reps = reps;
  mc.seed = seed;
  mc.weights = p.weights;
  mc.threshold = y;
  mc.horizon = net.horizon;
  std::vector<fluidnet::McEstimate> est = fluidnet::estimate_overflow(net, mc);
  fluidnet::CsvTable t;
  t.header = {"y",    "V_star", "n",     "reps", "hits",
              "p_hat", "ci_lo",  "ci_hi", "decay"};
  for (const auto& e : est) {
    t.rows.push_back({fmt(y), fmt(s.value), std::to_string(e.n),
                      std::to_string(e.reps), std::to_string(e.hits),
                      fmt(e.p_hat), fmt(e.ci_lo), fmt(e.ci_hi), fmt(e.decay)});
  }
  std::string text = fluidnet::format_csv(t);
  std::cout << text;
  if (!csv.empty()) write_text(csv, text, ctx);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluid network reflection, rate functions, and simulation"};
  app.set_version_flag("--version", std::string("fluidnet ") + kVersion);
  app.require_subcommand(1);

  std::string cfg, path_file, b_str, n_str = "5,10,20", csv, sweep;
  double y = 1.0;
  int grid = 41, oracle_grid = 0;
  long reps = 1000;
  std::uint64_t seed = 0;

  CLI::App* validate = app.add_subcommand("validate", "check a network config");
  validate->add_option("cfg", cfg)->required();

  CLI::App* reflect = app.add_subcommand("reflect", "reflect a path file");
  reflect->add_option("cfg", cfg)->required();
  reflect->add_option("path-file", path_file)->required();
  reflect->add_option("--oracle-grid", oracle_grid);
  reflect->add_option("--csv", csv);

  CLI::App* rate = app.add_subcommand("rate", "solve the overflow rate problem");
  rate->add_option("cfg", cfg)->required();
  rate->add_option("--b", b_str)->required();
  rate->add_option("--y", y)->required();
  rate->add_option("--grid", grid);
  rate->add_option("--sweep", sweep);
  rate->add_option("--csv", csv);

  CLI::App* tandem = app.add_subcommand("tandem", "two-node tandem closed form");
  tandem->add_option("cfg", cfg)->required();
  tandem->add_option("--y", y)->required();

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo decay rates");
  simulate->add_option("cfg", cfg)->required();
  simulate->add_option("--b", b_str)->required();
  simulate->add_option("--y", y)->required();
  simulate->add_option("--n", n_str);
  simulate->add_option("--reps", reps);
  simulate->add_option("--seed", seed);
  simulate->add_option("--csv", csv);

  CLI::App* compare = app.add_subcommand("compare", "rate vs simulated decay");
  compare->add_option("cfg", cfg)->required();
  compare->add_option("--b", b_str)->required();
  compare->add_option("--y", y)->required();
  compare->add_option("--n", n_str);
  compare->add_option("--reps", reps);
  compare->add_option("--seed", seed);
  compare->add_option("--grid", grid);
  compare->add_option("--csv", csv);

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  int code = 0;
  try {
    if (validate->parsed()) {
      ctx.command = "validate";
      code = cmd_validate(cfg, ctx);
    } else if (reflect->parsed()) {
      ctx.command = "reflect";
      code = cmd_reflect(cfg, path_file, oracle_grid, csv, ctx);
    } else if (rate->parsed()) {
      ctx.command = "rate";
      code = cmd_rate(cfg, b_str, y, grid, sweep, csv, ctx);
    } else if (tandem->parsed()) {
      ctx.command = "tandem";
      code = cmd_tandem(cfg, y, ctx);
    } else if (simulate->parsed()) {
      ctx.command = "simulate";
      code = cmd_simulate(cfg, b_str, y, n_str, reps, seed, csv, ctx);
    } else if (compare->parsed()) {
      ctx.command = "compare";
      code = cmd_compare(cfg, b_str, y, n_str, reps, seed, grid, csv, ctx);
    }
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << "\n";
    emit_manifest(ctx);
    return kExitConfig;
  }
  emit_manifest(ctx);
  return code;
}
