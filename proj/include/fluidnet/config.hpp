#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fluidnet/network.hpp"

namespace fluidnet {

// Parse the sectioned plain-text network config. Keys: d, alpha, T, Q
// (row-per-line or ';'-separated rows), r, mu, c, exogenous (1-based),
// L (const | loggamma:<gamma>). Throws with a line diagnostic on errors.
FluidNetwork parse_network_config(std::istream& in);
FluidNetwork parse_network_config_string(const std::string& text);
FluidNetwork load_network_config(const std::string& filename);

std::string format_network_config(const FluidNetwork& net);

// FNV-1a over the config's token stream: stable across whitespace-only and
// comment-only edits.
std::uint64_t config_hash(const std::string& raw_text);

// Minimal CSV support: the tool's own outputs must round-trip through this.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_csv(const CsvTable& table);
CsvTable parse_csv(std::istream& in);
CsvTable parse_csv_string(const std::string& text);

// All numeric CLI/CSV output is printed with 9 significant digits.
std::string format_sig9(double v);

}  // namespace fluidnet
