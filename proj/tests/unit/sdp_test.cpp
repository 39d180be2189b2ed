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


#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tmsent/sdp.hpp"

namespace tmsent {
namespace {

SdpProblem scalar_block(double constant, double coefficient) {
    auto p = SdpProblem::with_unit_box(1);
    p.add_block(1);
    p.blocks[0].constant(0, 0) = constant;
    p.blocks[0].coefficients[0].push_back({0, 0, coefficient});
    return p;
}

// [[1, z], [z, c]] with a single variable.
SdpProblem two_by_two(double c) {
    auto p = SdpProblem::with_unit_box(1);
    p.add_block(2);
    p.blocks[0].constant << 1, 0, 0, c;
    p.blocks[0].coefficients[0].push_back({0, 1, 1.0});
    return p;
}

TEST(sdp, scalar_examples) {
    SdpOptions exact;
    exact.early_exit = false;
    auto v = solve_feasibility(scalar_block(0.0, 1.0), exact);
    ASSERT_EQ(v.status, SdpStatus::StrictlyFeasible);
    EXPECT_NEAR(v.margin, 1.0, 1e-6);
    EXPECT_NEAR(v.primal_point(0), 1.0, 1e-6);

    auto none = SdpProblem::with_unit_box(0);
    none.add_block(1);
    none.blocks[0].constant(0, 0) = -1.0;
    auto w = solve_feasibility(none);
    ASSERT_EQ(w.status, SdpStatus::Infeasible);
    ASSERT_TRUE(w.dual_certificate.has_value());
    EXPECT_LT(w.dual_certificate->bound, 0.0);

    auto shifted = scalar_block(-2.0, 1.0);  // z - 2 >= 0 impossible in the box
    auto s = solve_feasibility(shifted);
    ASSERT_EQ(s.status, SdpStatus::Infeasible);
    EXPECT_GE(s.margin, -1.0 - 1e-9);
    auto s_exact = solve_feasibility(shifted, exact);
    ASSERT_EQ(s_exact.status, SdpStatus::Infeasible);
    EXPECT_NEAR(s_exact.margin, -1.0, 1e-6);
}

TEST(sdp, two_by_two_against_eigenvalue_sweep) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int decided = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        const int nv = 1 + trial % 2;
        auto p = SdpProblem::with_unit_box(nv);
        p.add_block(n);
        Matrix c(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                c(i, j) = u(rng);
            }
        }
        c = 0.5 * (c + c.transpose()).eval();
        c.diagonal().array() += 0.3;
        p.blocks[0].constant = c;
        for (int v = 0; v < nv; ++v) {
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    p.blocks[0].coefficients[v].push_back({i, j, u(rng)});
                }
            }
        }
        // Oracle: best min eigenvalue over a fine grid of the box.
        const int grid = nv == 1 ? 4001 : 301;
        double best = -1e300;
        Vector z(nv);
        for (int a = 0; a < grid; ++a) {
            z(0) = -1.0 + 2.0 * a / (grid - 1);
            if (nv == 1) {
                best = std::max(best, min_eigenvalue(p.blocks[0].evaluate(z)));
                continue;
            }
            for (int b = 0; b < grid; ++b) {
                z(1) = -1.0 + 2.0 * b / (grid - 1);
                best = std::max(best, min_eigenvalue(p.blocks[0].evaluate(z)));
            }
        }
        SdpOptions exact;
        exact.early_exit = false;
        auto verdict = solve_feasibility(p, exact);
        if (best > 1e-2) {
            EXPECT_EQ(verdict.status, SdpStatus::StrictlyFeasible) << "trial " << trial;
            ++decided;
        } else if (best < -1e-2) {
            // The grid maximum is within the grid spacing of the true one.
            if (best < -0.05) {
                EXPECT_EQ(verdict.status, SdpStatus::Infeasible) << "trial " << trial;
                ++decided;
            }
        }
        if (verdict.status == SdpStatus::StrictlyFeasible) {
            EXPECT_GE(best, -0.05);
            EXPECT_GT(verified_margin(p, verdict.primal_point), 0.0);
            EXPECT_GE(verdict.margin, best - 1e-6);
        }
        if (verdict.status == SdpStatus::Infeasible) {
            EXPECT_LT(best, 1e-6);
            EXPECT_LE(best, verdict.margin + 1e-9);
        }
    }
    EXPECT_GT(decided, 150);
}

TEST(sdp, two_by_two_closed_form) {
    SdpOptions exact;
    exact.early_exit = false;
    // max_z min eig [[1, z], [z, 0.25]] is attained at z = 0 with value 0.25.
    auto v = solve_feasibility(two_by_two(0.25), exact);
    ASSERT_EQ(v.status, SdpStatus::StrictlyFeasible);
    EXPECT_NEAR(v.margin, 0.25, 1e-6);

    auto p = two_by_two(0.25);
    p.equalities.push_back({{{0, 1.0}}, 0.7});  // 0.25 - 0.49 < 0
    auto w = solve_feasibility(p);
    ASSERT_EQ(w.status, SdpStatus::Infeasible);
    DualCertificate cert = *w.dual_certificate;
    EXPECT_TRUE(verify_infeasibility_certificate(p, cert));
    EXPECT_LE(cert.residual, 1e-7);
}

TEST(sdp, scale_invariance) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = SdpProblem::with_unit_box(3);
        p.add_block(4);
        Matrix c = Matrix::Identity(4, 4) * (trial % 2 == 0 ? 0.4 : -0.2);
        p.blocks[0].constant = c;
        for (int v = 0; v < 3; ++v) {
            for (int i = 0; i < 4; ++i) {
                for (int j = i; j < 4; ++j) {
                    p.blocks[0].coefficients[v].push_back({i, j, 0.5 * u(rng)});
                }
            }
        }
        auto base = solve_feasibility(p);
        for (double s : {1e-3, 1e3}) {
            auto q = p;
            q.blocks[0].constant *= s;
            for (auto &list : q.blocks[0].coefficients) {
                for (auto &e : list) {
                    e.value *= s;
                }
            }
            EXPECT_EQ(solve_feasibility(q).status, base.status) << "trial " << trial << " scale " << s;
        }
    }
}

TEST(sdp, adding_equalities_never_creates_feasibility) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = SdpProblem::with_unit_box(4);
        p.add_block(3);
        p.blocks[0].constant = Matrix::Identity(3, 3) * 0.1;
        for (int v = 0; v < 4; ++v) {
            for (int i = 0; i < 3; ++i) {
                for (int j = i; j < 3; ++j) {
                    p.blocks[0].coefficients[v].push_back({i, j, u(rng)});
                }
            }
        }
        SdpOptions exact;
        exact.early_exit = false;
        double previous = solve_feasibility(p, exact).margin;
        auto q = p;
        for (int v = 0; v < 4; ++v) {
            q.equalities.push_back({{{v, 1.0}}, 0.8 * u(rng)});
            auto verdict = solve_feasibility(q, exact);
            EXPECT_LE(verdict.margin, previous + 1e-6) << "trial " << trial;
            if (verdict.status != SdpStatus::Indeterminate) {
                previous = verdict.margin;
            }
        }
    }
}

TEST(sdp, linear_contradiction_is_reported_separately) {
    auto p = two_by_two(1.0);
    p.equalities.push_back({{{0, 1.0}}, 0.1});
    p.equalities.push_back({{{0, 2.0}}, 0.5});
    auto v = solve_feasibility(p);
    ASSERT_EQ(v.status, SdpStatus::Infeasible);
    ASSERT_TRUE(v.dual_certificate.has_value());
    EXPECT_TRUE(v.dual_certificate->linear_contradiction);
}

TEST(sdp, box_multipliers_certify_fixed_variables) {
    auto p = scalar_block(1.0, 1.0);
    p.equalities.push_back({{{0, 1.0}}, 1.5});
    auto v = solve_feasibility(p);
    ASSERT_EQ(v.status, SdpStatus::Infeasible);
    EXPECT_FALSE(v.dual_certificate->linear_contradiction);
}

TEST(sdp, tampered_certificate_is_rejected) {
    auto p = two_by_two(0.25);
    p.equalities.push_back({{{0, 1.0}}, 0.9});
    auto v = solve_feasibility(p);
    ASSERT_EQ(v.status, SdpStatus::Infeasible);
    DualCertificate cert = *v.dual_certificate;
    cert.psd[0] = Matrix::Identity(2, 2);
    EXPECT_FALSE(verify_infeasibility_certificate(p, cert));
}

TEST(sdp, minimize_linear) {
    auto p = SdpProblem::with_unit_box(1);
    p.add_block(2);
    p.blocks[0].constant = Matrix::Identity(2, 2);
    p.blocks[0].coefficients[0].push_back({0, 1, 2.0});  // [[1, 2z], [2z, 1]]
    Vector c(1);
    c << 1.0;
    auto r = minimize_linear(p, c);
    ASSERT_EQ(r.status, LinearStatus::Optimal);
    EXPECT_NEAR(r.z(0), -0.5, 1e-6);
}

TEST(sdp, dump_round_trip) {
    auto p = two_by_two(0.25);
    p.equalities.push_back({{{0, 1.0}}, 0.3});
    p.lower(0) = -0.75;
    std::stringstream ss;
    dump_problem(ss, p);
    auto q = read_problem(ss);
    EXPECT_EQ(q.num_vars, p.num_vars);
    EXPECT_EQ(q.blocks[0].constant, p.blocks[0].constant);
    EXPECT_DOUBLE_EQ(q.lower(0), -0.75);
    ASSERT_EQ(q.equalities.size(), 1u);
    EXPECT_EQ(solve_feasibility(q).status, solve_feasibility(p).status);
    std::stringstream bad("num_vars 1\nblocks 1 2\n0,3,1,1,1.0\n");
    EXPECT_THROW(read_problem(bad), std::invalid_argument);
}

}  // namespace
}  // namespace tmsent
