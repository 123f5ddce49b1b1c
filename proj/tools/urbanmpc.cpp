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

// urbanmpc: run scenarios, benchmark the QP solver, render logs.
//
// Exit codes: 0 ok, 2 usage or configuration error, 3 runtime failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urbanmpc/plotting.hpp"
#include "urbanmpc/qp_dump.hpp"
#include "urbanmpc/qp_random.hpp"
#include "urbanmpc/qp_solver.hpp"
#include "urbanmpc/scenario_config.hpp"
#include "urbanmpc/sim_log.hpp"
#include "urbanmpc/simulation.hpp"

namespace fs = std::filesystem;
using namespace urbanmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path & path, const std::string & content)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw std::runtime_error("cannot write " + path.string()); }
  os << content;
  if (!os) { throw std::runtime_error("write failed: " + path.string()); }
}

template <class F>
void write_stream(const fs::path & path, F && fn)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw std::runtime_error("cannot write " + path.string()); }
  fn(os);
  if (!os) { throw std::runtime_error("write failed: " + path.string()); }
}

std::string time_tag(double t)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

// ---- run -------------------------------------------------------------------

struct RunArgs
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> delay;
};

int cmd_run(const RunArgs & a)
{
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(a.config);
    if (a.seed) { cfg.seed = *a.seed; }
    if (a.duration) { cfg.duration = *a.duration; }
    if (a.delay) { cfg.controller.delay = *a.delay; }
    cfg.validate();
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  const SimResult res = run(cfg);

  write_stream(out / "log.csv", [&](std::ostream & os) { write_log_csv(os, res); });
  write_stream(out / "timing.csv", [&](std::ostream & os) { write_timing_csv(os, res); });
  write_stream(out / "plans.jsonl", [&](std::ostream & os) { write_plans_jsonl(os, res); });
  write_file(out / "summary.json", summary_json(res, cfg).dump(2) + "\n");

  std::stringstream csv;
  write_log_csv(csv, res);
  const LogTable log = read_log_csv(csv);
  write_file(out / "timeseries.svg", render_timeseries(log));
  if (!res.plans.empty()) { write_file(out / "overhead_t0.00.svg", render_overhead(log, res.plans, 0.0)); }

  const SimSummary & s = res.summary;
  std::printf("%s: %zu steps, min gap %.3f m, max |e_y| %.3f m, fallbacks %d, cycle %.2f / %.2f ms (mean / max)\n",
              cfg.name.c_str(), s.steps, std::isfinite(s.min_gap) ? s.min_gap : 0.0, s.max_abs_lateral_error,
              s.fallbacks, s.time_mean * 1e3, s.time_max * 1e3);
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct Stats
{
  std::vector<double> v;
  double mean() const
  {
    double s = 0.0;
    for (const double x : v) { s += x; }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  double stddev() const
  {
    if (v.empty()) { return 0.0; }
    const double m = mean();
    double s = 0.0;
    for (const double x : v) { s += (x - m) * (x - m); }
    return std::sqrt(s / static_cast<double>(v.size()));
  }
  double max() const { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
};

struct BenchRow
{
  std::string name;
  std::string kind;
  int optimal{0};
  Stats prep, solve, total;
};

BenchRow bench_scenario(const fs::path & path)
{
  const ScenarioConfig cfg = load_scenario(path);
  const SimResult res = run(cfg);
  BenchRow r{cfg.name, "scenario", 0, {}, {}, {}};
  for (const SimStep & s : res.steps) {
    r.prep.v.push_back(s.command.prep_time * 1e3);
    r.solve.v.push_back(s.command.solve_time * 1e3);
    r.total.v.push_back(s.command.total_time() * 1e3);
    r.optimal += s.command.status == SolveStatus::kOptimal ? 1 : 0;
  }
  return r;
}

void time_qp(const OcpQp & qp, BenchRow & r)
{
  RiccatiIpmSolver solver;
  const auto t0 = std::chrono::steady_clock::now();
  const OcpSolution sol = solver.solve(qp);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.prep.v.push_back(0.0);
  r.solve.v.push_back(ms);
  r.total.v.push_back(ms);
  r.optimal += sol.status == SolveStatus::kOptimal ? 1 : 0;
}

std::vector<fs::path> expand_suite(const fs::path & p)
{
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto & e : fs::directory_iterator(p)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".json" || ext == ".qpd")) { out.push_back(e.path()); }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  if (!fs::exists(p)) { throw UsageError("suite not found: " + p.string()); }
  if (p.extension() == ".json") {
    std::ifstream in(p);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error & e) {
      throw UsageError(p.string() + ": " + e.what());
    }
    if (j.is_array()) {
      for (const auto & item : j) {
        if (!item.is_string()) { throw UsageError(p.string() + ": suite lists must hold path strings"); }
        fs::path q(item.get<std::string>());
        if (q.is_relative()) { q = p.parent_path() / q; }
        out.push_back(q);
      }
      return out;
    }
  }
  out.push_back(p);
  return out;
}

int cmd_bench(const std::string & suite, int random_n, std::uint64_t seed, const std::string & out_dir)
{
  std::vector<BenchRow> rows;
  try {
    if (!suite.empty()) {
      for (const fs::path & p : expand_suite(suite)) {
        if (p.extension() == ".qpd") {
          BenchRow r{p.filename().string(), "qp", 0, {}, {}, {}};
          time_qp(load_qp_dump(p).qp, r);
          rows.push_back(std::move(r));
        } else {
          rows.push_back(bench_scenario(p));
        }
      }
    } else {
      std::mt19937_64 rng(seed);
      BenchRow r{"random", "qp", 0, {}, {}, {}};
      for (int i = 0; i < random_n; ++i) { time_qp(random_ocp_qp(rng).qp, r); }
      rows.push_back(std::move(r));
    }
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError & e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  const char * header =
    "name,kind,instances,optimal,prep_mean_ms,prep_std_ms,prep_max_ms,solve_mean_ms,solve_std_ms,solve_max_ms,"
    "total_mean_ms,total_std_ms,total_max_ms";
  std::ostringstream csv;
  csv << header << '\n';
  std::printf("%-20s %-8s %9s %8s %12s %12s %12s\n", "name", "kind", "instances", "optimal", "mean [ms]", "std [ms]",
              "max [ms]");
  for (const BenchRow & r : rows) {
    char line[512];
    std::snprintf(line, sizeof(line), "%s,%s,%zu,%d,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f", r.name.c_str(),
                  r.kind.c_str(), r.total.v.size(), r.optimal, r.prep.mean(), r.prep.stddev(), r.prep.max(),
                  r.solve.mean(), r.solve.stddev(), r.solve.max(), r.total.mean(), r.total.stddev(), r.total.max());
    csv << line << '\n';
    std::printf("%-20s %-8s %9zu %8d %12.3f %12.3f %12.3f\n", r.name.c_str(), r.kind.c_str(), r.total.v.size(),
                r.optimal, r.total.mean(), r.total.stddev(), r.total.max());
  }
  write_file(out / "bench.csv", csv.str());
  return kExitOk;
}

// ---- plot ------------------------------------------------------------------

std::vector<double> parse_times(const std::string & s)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) { continue; }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) { throw std::invalid_argument(tok); }
    } catch (const std::exception &) {
      throw UsageError("bad snapshot time '" + tok + "'");
    }
  }
  return out;
}

int cmd_plot(const std::string & log_path, const std::string & kind, const std::string & times_arg,
             const std::string & out_dir)
{
  PlotSpec spec;
  spec.kind = kind == "overhead" ? PlotKind::kOverhead : PlotKind::kTimeseries;
  spec.out_dir = out_dir;
  LogTable log;
  std::vector<nlohmann::json> plans;
  try {
    spec.times = parse_times(times_arg);
    log = read_log_csv(fs::path(log_path));
    if (spec.kind == PlotKind::kOverhead) {
      const fs::path plans_path = fs::path(log_path).parent_path() / "plans.jsonl";
      if (fs::exists(plans_path)) { plans = read_plans_jsonl(plans_path); }
    }
  } catch (const UsageError & e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const LogError & e) {
    std::cerr << "log error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (log.rows() == 0) {
    std::cerr << "log error: no rows in " << log_path << '\n';
    return kExitUsage;
  }

  const fs::path out(spec.out_dir);
  fs::create_directories(out);
  if (spec.kind == PlotKind::kTimeseries) {
    write_file(out / "timeseries.svg", render_timeseries(log));
    return kExitOk;
  }
  const std::vector<double> t = log.series("t");
  if (spec.times.empty()) { spec.times.push_back(t.front()); }
  const double dt_half = t.size() > 1 ? 0.5 * (t[1] - t[0]) : 0.0;
  std::vector<double> skipped;
  for (const double ts : spec.times) {
    if (ts < t.front() - dt_half || ts > t.back() + dt_half) {
      skipped.push_back(ts);
      continue;
    }
    write_file(out / ("overhead_t" + time_tag(ts) + ".svg"), render_overhead(log, plans, ts));
  }
  if (!skipped.empty()) {
    std::cerr << "skipped snapshot times outside [" << t.front() << ", " << t.back() << "]:";
    for (const double s : skipped) { std::cerr << ' ' << s; }
    std::cerr << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Urban-driving MPC: closed-loop simulation, solver benchmarks and plots"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto * run_cmd = app.add_subcommand("run", "Run a scenario and write logs, summary and plots");
  run_cmd->add_option("--config", run_args.config, "Scenario JSON file")->required();
  run_cmd->add_option("--out", run_args.out, "Output directory")->required();
  run_cmd->add_option("--seed", run_args.seed, "Override the scenario seed");
  run_cmd->add_option("--duration", run_args.duration, "Override the simulated duration [s]");
  run_cmd->add_option("--delay", run_args.delay, "Override the steering delay [s]");

  std::string suite, bench_out;
  int random_n = 0;
  std::uint64_t bench_seed = 0;
  auto * bench_cmd = app.add_subcommand("bench", "Time linearization and QP solves");
  auto * suite_opt = bench_cmd->add_option("--suite", suite, "Scenario or .qpd file, directory, or JSON list");
  auto * random_opt = bench_cmd->add_option("--random", random_n, "Number of random OCP-QP instances")
                        ->check(CLI::NonNegativeNumber);
  suite_opt->excludes(random_opt);
  random_opt->excludes(suite_opt);
  bench_cmd->add_option("--seed", bench_seed, "Seed for --random");
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();

  std::string log_path, kind, times, plot_out;
  auto * plot_cmd = app.add_subcommand("plot", "Render a log to SVG");
  plot_cmd->add_option("--log", log_path, "log.csv written by run")->required();
  plot_cmd->add_option("--kind", kind, "overhead or timeseries")
    ->required()
    ->check(CLI::IsMember({"overhead", "timeseries"}));
  plot_cmd->add_option("--times", times, "Comma-separated snapshot times [s]");
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) { return cmd_run(run_args); }
    if (*bench_cmd) {
      if (suite_opt->count() == 0 && random_opt->count() == 0) {
        std::cerr << "bench: one of --suite or --random is required\n";
        return kExitUsage;
      }
      return cmd_bench(suite, random_n, bench_seed, bench_out);
    }
    if (*plot_cmd) { return cmd_plot(log_path, kind, times, plot_out); }
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
