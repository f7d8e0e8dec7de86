#include "fluidnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fluidnet {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& s, int lineno) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    if (!tok.empty() && tok.back() == ',') tok.pop_back();
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected number, got '" + tok + "'");
    }
  }
  return out;
}

[[noreturn]] void fail(int lineno, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(lineno) + ": " +
                           msg);
}

}  // namespace

FluidNetwork parse_network_config(std::istream& in) {
  FluidNetwork net;
  int d = -1;
  std::vector<std::vector<double>> q_rows;
  bool in_q = false;
  bool saw_alpha = false, saw_T = false, saw_r = false;
  std::vector<double> r, mu, c;
  std::vector<int> exo;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (in_q && static_cast<int>(q_rows.size()) < d) {
        q_rows.push_back(parse_numbers(line, lineno));
        continue;
      }
      fail(lineno, "expected key = value");
    }
    in_q = false;
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));
    if (key == "d") {
      d = static_cast<int>(parse_numbers(val, lineno).at(0));
      if (d < 1) fail(lineno, "d must be >= 1");
    } else if (key == "alpha") {
      net.alpha = parse_numbers(val, lineno).at(0);
      saw_alpha = true;
    } else if (key == "T") {
      net.horizon = parse_numbers(val, lineno).at(0);
      saw_T = true;
    } else if (key == "Q") {
      if (d < 1) fail(lineno, "d must come before Q");
      if (val.empty()) {
        in_q = true;  // rows follow, one per line
      } else {
        std::istringstream rows(val);
        std::string row;
        while (std::getline(rows, row, ';')) {
          q_rows.push_back(parse_numbers(row, lineno));
        }
      }
    } else if (key == "r") {
      r = parse_numbers(val, lineno);
      saw_r = true;
    } else if (key == "mu") {
      mu = parse_numbers(val, lineno);
    } else if (key == "c") {
      c = parse_numbers(val, lineno);
    } else if (key == "exogenous") {
      for (double v : parse_numbers(val, lineno)) {
        int node = static_cast<int>(v);
        if (node < 1) fail(lineno, "exogenous nodes are 1-based");
        exo.push_back(node - 1);
      }
    } else if (key == "L") {
      if (val == "const") {
        net.tail_law = {TailLaw::Kind::Constant, 0.0};
      } else if (val.rfind("loggamma:", 0) == 0) {
        double g = parse_numbers(val.substr(9), lineno).at(0);
        if (g < 0.0) fail(lineno, "loggamma exponent must be >= 0");
        net.tail_law = {TailLaw::Kind::LogGamma, g};
      } else {
        fail(lineno, "L must be 'const' or 'loggamma:<gamma>'");
      }
    } else {
      fail(lineno, "unknown key '" + key + "'");
    }
  }
  if (d < 1) throw std::runtime_error("config: missing key 'd'");
  if (!saw_alpha) throw std::runtime_error("config: missing key 'alpha'");
  if (!saw_T) throw std::runtime_error("config: missing key 'T'");
  if (!saw_r) throw std::runtime_error("config: missing key 'r'");
  if (static_cast<int>(q_rows.size()) != d) {
    throw std::runtime_error("config: Q must have exactly d rows");
  }
  for (const auto& row : q_rows) {
    if (static_cast<int>(row.size()) != d) {
      throw std::runtime_error("config: each Q row must have d entries");
    }
  }
  auto to_vec = [&](const std::vector<double>& v, const char* name,
                    double fill) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(d, fill);
    if (!v.empty()) {
      if (static_cast<int>(v.size()) != d) {
        throw std::runtime_error(std::string("config: '") + name +
                                 "' must have d entries");
      }
      for (int i = 0; i < d; ++i) out(i) = v[i];
    }
    return out;
  };
  net.routing.resize(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) net.routing(i, j) = q_rows[i][j];
  }
  net.service = to_vec(r, "r", 0.0);
  net.mean_input = to_vec(mu, "mu", 0.0);
  net.tail_coeff = to_vec(c, "c", 0.0);
  std::sort(exo.begin(), exo.end());
  exo.erase(std::unique(exo.begin(), exo.end()), exo.end());
  if (!exo.empty() && exo.back() >= d) {
    throw std::runtime_error("config: exogenous node index exceeds d");
  }
  net.exogenous = std::move(exo);
  return net;
}

FluidNetwork parse_network_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_network_config(in);
}

FluidNetwork load_network_config(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open config file: " + filename);
  return parse_network_config(in);
}

std::string format_sig9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_network_config(const FluidNetwork& net) {
  std::ostringstream os;
  const int d = net.dimension();
  os << "d = " << d << "\n";
  os << "alpha = " << format_sig9(net.alpha) << "\n";
  os << "T = " << format_sig9(net.horizon) << "\n";
  os << "Q =\n";
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      os << (j ? " " : "") << format_sig9(net.routing(i, j));
    }
    os << "\n";
  }
  auto vec = [&](const char* key, const Eigen::VectorXd& v) {
    os << key << " =";
    for (int i = 0; i < d; ++i) os << " " << format_sig9(v(i));
    os << "\n";
  };
  vec("r", net.service);
  vec("mu", net.mean_input);
  vec("c", net.tail_coeff);
  os << "exogenous =";
  for (int i : net.exogenous) os << " " << (i + 1);
  os << "\n";
  os << "L = " << net.tail_law.describe() << "\n";
  return os.str();
}

std::uint64_t config_hash(const std::string& raw_text) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](char ch) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  };
  std::istringstream in(raw_text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream toks(line);
    std::string tok;
    while (toks >> tok) {
      for (char ch : tok) feed(ch);
      feed('\x1f');
    }
  }
  return h;
}

std::string format_csv(const CsvTable& table) {
  std::ostringstream os;
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ",";
      os << cells[i];
    }
    os << "\n";
  };
  row(table.header);
  for (const auto& r : table.rows) row(r);
  return os.str();
}

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("csv: empty input");
  return table;
}

CsvTable parse_csv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace fluidnet
