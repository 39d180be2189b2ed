// Copyright 2026 The tmsent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tmsent/config.hpp"

#include <cstdlib>
#include <sstream>

#include "gtest/gtest.h"
#include "tmsent/parallel.hpp"
#include "tmsent/svg.hpp"

using namespace tmsent;

TEST(run_config, file_then_env) {
    RunConfig c;
    std::istringstream file("# comment\nseed = 42\nsamples=1000 # trailing\nensemble = full2q\nspin = 3/2\n");
    c.load(file);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.samples, 1000);
    EXPECT_EQ(c.ensemble, EnsembleKind::TwoQubitFull);
    EXPECT_EQ(c.spin.num_qubits(), 3);
    ::setenv("TMSENT_EPS_FEAS", "1e-7", 1);
    c.apply_env();
    ::unsetenv("TMSENT_EPS_FEAS");
    EXPECT_DOUBLE_EQ(c.eps_feas, 1e-7);
    EXPECT_NO_THROW(c.validate());
    auto header = c.header("probabilities");
    EXPECT_NE(header.find("# seed = 42\n"), std::string::npos);
    EXPECT_NE(header.find("# ensemble = full2q\n"), std::string::npos);
}

TEST(run_config, rejects_bad_input) {
    RunConfig c;
    EXPECT_THROW(c.set("colour", "red"), std::invalid_argument);
    EXPECT_THROW(c.set("samples", "many"), std::invalid_argument);
    std::istringstream bad("seed 4\n");
    EXPECT_THROW(c.load(bad), std::invalid_argument);
    c.samples = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.samples = 10;
    c.k_max = 1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(parallel, results_by_index_and_errors) {
    std::vector<int> out(100, 0);
    parallel_for(100, 4, [&](long i) { out[i] = static_cast<int>(i * i); });
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(out[i], i * i);
    }
    EXPECT_THROW(parallel_for(10, 3,
                              [](long i) {
                                  if (i == 5) {
                                      throw std::runtime_error("boom");
                                  }
                              }),
                 std::runtime_error);
}

TEST(svg, charts_are_well_formed) {
    auto bars = svg::bar_chart("p", {"a", "b<c"}, {0.2, 0.5}, {0.1, 0.4}, {0.3, 0.6}, "set", "p", "seed = 1\n");
    EXPECT_EQ(bars.rfind("<svg", 0), 0u);
    EXPECT_NE(bars.find("b&lt;c"), std::string::npos);
    EXPECT_NE(bars.find("seed = 1"), std::string::npos);
    EXPECT_NE(bars.find("</svg>"), std::string::npos);
    auto hist = svg::histogram("d", {3.1, 3.2, 4.0, 5.5}, 0.07, "d");
    EXPECT_NE(hist.find("<rect"), std::string::npos);
    auto lines = svg::line_chart("best", {1, 2, 3}, {{"p", {0.1, 0.5, 1.0}, {0.05, 0.4, 1.0}, {0.15, 0.6, 1.0}}},
                                 "k", "value");
    EXPECT_NE(lines.find("<polyline"), std::string::npos);
    EXPECT_THROW(svg::bar_chart("x", {"a"}, {1.0, 2.0}, {}, {}, "", ""), std::invalid_argument);
}
