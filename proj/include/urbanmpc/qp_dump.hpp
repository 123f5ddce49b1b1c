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

#ifndef URBANMPC__QP_DUMP_HPP_
#define URBANMPC__QP_DUMP_HPP_

/**
 * @file
 * @brief Binary dump of an OcpQp (and optionally a primal solution).
 *
 * Layout, all integers uint32 and all reals IEEE-754 binary64, little-endian:
 *
 *     magic "UMPCQPD\0" (8 bytes) | version (=1) | flags (bit 0: solution present) | N
 *     x0: vec
 *     N+1 stages: A B b Q S R q r C D dl du slack_weight
 *     [solution: N+1 x vecs, N u vecs, N+1 slack vecs, status, iterations]
 *
 * vec = length then entries; mat = rows, cols, then entries column-major.
 * Infinite row bounds are stored as IEEE infinities.
 */

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "urbanmpc/ocp_qp.hpp"

namespace urbanmpc {

inline constexpr std::array<char, 8> kQpDumpMagic{'U', 'M', 'P', 'C', 'Q', 'P', 'D', '\0'};
inline constexpr std::uint32_t kQpDumpVersion = 1;

class QpDumpError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct QpDump
{
  OcpQp qp;
  std::optional<OcpSolution> solution;
};

namespace detail {

template <class T>
T to_little(T v)
{
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

class DumpWriter
{
public:
  explicit DumpWriter(std::ostream & os) : os_(os) {}

  void u32(std::uint32_t v)
  {
    v = to_little(v);
    os_.write(reinterpret_cast<const char *>(&v), sizeof(v));
  }
  void f64(double d)
  {
    auto v = to_little(std::bit_cast<std::uint64_t>(d));
    os_.write(reinterpret_cast<const char *>(&v), sizeof(v));
  }
  void vec(const Eigen::VectorXd & v)
  {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) { f64(v[i]); }
  }
  void mat(const Eigen::MatrixXd & m)
  {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) { f64(m(i, j)); }
    }
  }

private:
  std::ostream & os_;
};

class DumpReader
{
public:
  explicit DumpReader(std::istream & is) : is_(is) {}

  std::uint32_t u32()
  {
    std::uint32_t v{};
    read(&v, sizeof(v));
    return to_little(v);
  }
  double f64()
  {
    std::uint64_t v{};
    read(&v, sizeof(v));
    return std::bit_cast<double>(to_little(v));
  }
  Eigen::VectorXd vec()
  {
    const std::uint32_t n = dim();
    Eigen::VectorXd v(n);
    for (std::uint32_t i = 0; i < n; ++i) { v[i] = f64(); }
    return v;
  }
  Eigen::MatrixXd mat()
  {
    const std::uint32_t r = dim();
    const std::uint32_t c = dim();
    Eigen::MatrixXd m(r, c);
    for (std::uint32_t j = 0; j < c; ++j) {
      for (std::uint32_t i = 0; i < r; ++i) { m(i, j) = f64(); }
    }
    return m;
  }
  void read(void * dst, std::size_t n)
  {
    is_.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) { throw QpDumpError("qp dump: truncated input"); }
  }

private:
  std::uint32_t dim()
  {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) { throw QpDumpError("qp dump: implausible dimension " + std::to_string(n)); }
    return n;
  }

  std::istream & is_;
};

}  // namespace detail

inline void write_qp_dump(std::ostream & os, const OcpQp & qp, const OcpSolution * sol = nullptr)
{
  qp.validate();
  if (sol != nullptr && !sol->has_primal_for(qp)) { throw std::invalid_argument("write_qp_dump: solution does not fit qp"); }
  detail::DumpWriter w(os);
  os.write(kQpDumpMagic.data(), kQpDumpMagic.size());
  w.u32(kQpDumpVersion);
  w.u32(sol != nullptr ? 1u : 0u);
  w.u32(static_cast<std::uint32_t>(qp.horizon()));
  w.vec(qp.x0);
  for (const OcpStage & s : qp.stages) {
    w.mat(s.A);
    w.mat(s.B);
    w.vec(s.b);
    w.mat(s.Q);
    w.mat(s.S);
    w.mat(s.R);
    w.vec(s.q);
    w.vec(s.r);
    w.mat(s.C);
    w.mat(s.D);
    w.vec(s.dl);
    w.vec(s.du);
    w.vec(s.slack_weight);
  }
  if (sol != nullptr) {
    for (const auto & x : sol->x) { w.vec(x); }
    for (const auto & u : sol->u) { w.vec(u); }
    for (const auto & s : sol->slack) { w.vec(s); }
    w.u32(static_cast<std::uint32_t>(sol->status));
    w.u32(static_cast<std::uint32_t>(sol->iterations));
  }
  if (!os) { throw QpDumpError("qp dump: write failed"); }
}

inline QpDump read_qp_dump(std::istream & is)
{
  detail::DumpReader r(is);
  std::array<char, 8> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kQpDumpMagic) { throw QpDumpError("qp dump: bad magic"); }
  const std::uint32_t version = r.u32();
  if (version != kQpDumpVersion) { throw QpDumpError("qp dump: unsupported version " + std::to_string(version)); }
  const std::uint32_t flags = r.u32();
  const std::uint32_t N = r.u32();
  if (N == 0 || N > 100000) { throw QpDumpError("qp dump: bad horizon"); }
  QpDump d;
  d.qp.x0 = r.vec();
  d.qp.stages.resize(N + 1);
  for (OcpStage & s : d.qp.stages) {
    s.A = r.mat();
    s.B = r.mat();
    s.b = r.vec();
    s.Q = r.mat();
    s.S = r.mat();
    s.R = r.mat();
    s.q = r.vec();
    s.r = r.vec();
    s.C = r.mat();
    s.D = r.mat();
    s.dl = r.vec();
    s.du = r.vec();
    s.slack_weight = r.vec();
  }
  try {
    d.qp.validate();
  } catch (const std::invalid_argument & e) {
    throw QpDumpError(std::string("qp dump: ") + e.what());
  }
  if ((flags & 1u) != 0u) {
    OcpSolution sol;
    sol.x.resize(N + 1);
    sol.u.resize(N);
    sol.slack.resize(N + 1);
    for (auto & x : sol.x) { x = r.vec(); }
    for (auto & u : sol.u) { u = r.vec(); }
    for (auto & s : sol.slack) { s = r.vec(); }
    const std::uint32_t st = r.u32();
    if (st > static_cast<std::uint32_t>(SolveStatus::kNumericalFailure)) { throw QpDumpError("qp dump: bad status"); }
    sol.status = static_cast<SolveStatus>(st);
    sol.iterations = static_cast<int>(r.u32());
    if (!sol.has_primal_for(d.qp)) { throw QpDumpError("qp dump: solution does not fit qp"); }
    d.solution = std::move(sol);
  }
  return d;
}

inline void save_qp_dump(const std::filesystem::path & path, const OcpQp & qp, const OcpSolution * sol = nullptr)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw QpDumpError("cannot open " + path.string()); }
  write_qp_dump(os, qp, sol);
}

inline QpDump load_qp_dump(const std::filesystem::path & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { throw QpDumpError("cannot open " + path.string()); }
  return read_qp_dump(is);
}

}  // namespace urbanmpc

#endif  // URBANMPC__QP_DUMP_HPP_
