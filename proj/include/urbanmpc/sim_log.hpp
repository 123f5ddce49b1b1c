// Copyright 2026 The urbanmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef URBANMPC__SIM_LOG_HPP_
#define URBANMPC__SIM_LOG_HPP_

// Reading back the CSV written by write_log_csv and the plan snapshots.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace urbanmpc {

class LogError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Column-addressable log. Non-numeric cells (status) are kept as text; empty cells read as NaN.
struct LogTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;

  std::size_t rows() const { return cells.size(); }
  bool has(const std::string & col) const { return index_.count(col) > 0; }

  std::size_t column(const std::string & col) const
  {
    const auto it = index_.find(col);
    if (it == index_.end()) { throw LogError("log has no column '" + col + "'"); }
    return it->second;
  }

  double number(std::size_t row, const std::string & col) const
  {
    const std::string & s = cells.at(row).at(column(col));
    if (s.empty()) { return std::nan(""); }
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      throw LogError("log row " + std::to_string(row + 2) + ", column '" + col + "': not a number");
    }
    return v;
  }

  std::vector<double> series(const std::string & col) const
  {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) { out[i] = number(i, col); }
    return out;
  }

  const std::string & text(std::size_t row, const std::string & col) const { return cells.at(row).at(column(col)); }

  /// Names of the pedestrians recorded in the "<name>_x,<name>_y" trailing columns.
  std::vector<std::string> pedestrians() const
  {
    std::vector<std::string> out;
    const std::size_t first = has("min_center_distance") ? column("min_center_distance") + 1 : header.size();
    for (std::size_t i = first; i + 1 < header.size(); i += 2) {
      const std::string & h = header[i];
      if (h.size() > 2 && h.compare(h.size() - 2, 2, "_x") == 0) { out.push_back(h.substr(0, h.size() - 2)); }
    }
    return out;
  }

  void build_index()
  {
    index_.clear();
    for (std::size_t i = 0; i < header.size(); ++i) { index_[header[i]] = i; }
  }

private:
  std::map<std::string, std::size_t> index_;
};

inline LogTable read_log_csv(std::istream & in)
{
  LogTable t;
  std::string line;
  auto split = [](const std::string & l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) { out.push_back(cell); }
    if (!l.empty() && l.back() == ',') { out.emplace_back(); }
    return out;
  };
  if (!std::getline(in, line)) { throw LogError("log is empty"); }
  t.header = split(line);
  t.build_index();
  if (!t.has("t")) { throw LogError("log header lacks a 't' column"); }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) { continue; }
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw LogError("log line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                     " cells, got " + std::to_string(row.size()));
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

inline LogTable read_log_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw LogError("cannot open log: " + path.string()); }
  return read_log_csv(in);
}

inline std::vector<nlohmann::json> read_plans_jsonl(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw LogError("cannot open plans: " + path.string()); }
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) { continue; }
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error &) {
      throw LogError(path.string() + ": malformed line " + std::to_string(lineno));
    }
  }
  return out;
}

}  // namespace urbanmpc

#endif  // URBANMPC__SIM_LOG_HPP_
