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

#include <gtest/gtest.h>

#include <regex>
#include <set>
#include <sstream>
#include <string>

#include "urbanmpc/plotting.hpp"

using namespace urbanmpc;

namespace {

LogTable constant_speed_log(std::size_t rows)
{
  std::ostringstream os;
  os << "t,x,y,v,theta,delta,omega,a_cmd,delta_sp_cmd\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const double t = 0.05 * static_cast<double>(i);
    os << t << ',' << 10.0 * t << ",0,10,0,0,0,0,0\n";
  }
  std::istringstream in(os.str());
  return read_log_csv(in);
}

}  // namespace

TEST(SvgNumber, Formatting)
{
  EXPECT_EQ(svg::num(1.5), "1.5");
  EXPECT_EQ(svg::num(2.0), "2");
  EXPECT_EQ(svg::num(-0.00001), "0");
  EXPECT_EQ(svg::num(0.123456), "0.1235");
}

TEST(Timeseries, ConstantSpeedGivesFlatPanel)
{
  const std::string svg = render_timeseries(constant_speed_log(30));
  const std::regex re("data-column=\"v\" stroke=\"[^\"]+\" points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, re));
  std::set<std::string> ys;
  std::istringstream pts(m[1].str());
  std::string p;
  int n = 0;
  while (pts >> p) {
    ys.insert(p.substr(p.find(',') + 1));
    ++n;
  }
  EXPECT_EQ(n, 30);
  EXPECT_EQ(ys.size(), 1u);
}

TEST(Timeseries, Deterministic)
{
  EXPECT_EQ(render_timeseries(constant_speed_log(12)), render_timeseries(constant_speed_log(12)));
}

TEST(Overhead, NearestRowAndEmptyPlans)
{
  const std::vector<double> t{0.0, 0.05, 0.1};
  EXPECT_EQ(nearest_row(t, 0.07), 1u);
  EXPECT_EQ(nearest_row(t, 5.0), 2u);
  const std::string svg = render_overhead(constant_speed_log(3), {}, 0.1);
  EXPECT_NE(svg.find("<title>t = 0.1 s</title>"), std::string::npos);
  EXPECT_EQ(svg.find("class=\"plan\""), std::string::npos);
}
