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


#include "tmsent/sampling.hpp"

#include <sstream>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "tmsent/quantumness.hpp"

using namespace tmsent;

TEST(sampling, valid_and_deterministic) {
    for (auto kind : {EnsembleKind::Symmetric, EnsembleKind::TwoQubitFull}) {
        SeededEnsemble e{42, kind, SpinSize::from_qubits(3)};
        for (int i = 0; i < 50; ++i) {
            DenseHermitian rho = sample_state(e, i);
            EXPECT_NEAR(rho.trace(), 1.0, 1e-12);
            EXPECT_GE(rho.min_eigenvalue(), -1e-12);
            DenseHermitian again = sample_state(e, i);
            EXPECT_TRUE(rho.matrix() == again.matrix());
        }
        SeededEnsemble other{43, kind, SpinSize::from_qubits(3)};
        EXPECT_FALSE(sample_state(e, 0).matrix() == sample_state(other, 0).matrix());
        EXPECT_FALSE(sample_state(e, 0).matrix() == sample_state(e, 1).matrix());
    }
}

TEST(sampling, tensor_invariants_on_random_states) {
    for (int n = 2; n <= 6; ++n) {
        SeededEnsemble e{5, EnsembleKind::Symmetric, SpinSize::from_qubits(n)};
        for (int i = 0; i < 1000; ++i) {
            DenseHermitian rho = sample_state(e, i);
            TensorRepr x = tensor_from_density(rho, e.spin);
            ASSERT_LT(x.sum_rule_residual(), 1e-10);
            for (double v : x.values()) {
                ASSERT_LE(std::abs(v), 1.0 + 1e-12);
            }
            DenseHermitian back = density_from_tensor(x);
            ASSERT_LT((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(sampling, coherent_tensors_are_products) {
    auto rng = substream(9, 0);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 100; ++trial) {
        auto dir = CoherentDirection::normalized({normal(rng), normal(rng), normal(rng)});
        SpinSize spin = SpinSize::from_qubits(2 + trial % 4);
        TensorRepr x = tensor_from_density(coherent_density(dir, spin), spin);
        TensorRepr expected = coherent_tensor(dir, spin);
        for (std::size_t i = 0; i < x.values().size(); ++i) {
            ASSERT_NEAR(x.values()[i], expected.values()[i], 1e-12);
        }
    }
}

TEST(ppt, two_qubit_examples) {
    ComplexMatrix bell = ComplexMatrix::Zero(4, 4);
    bell(1, 1) = bell(1, 2) = bell(2, 1) = bell(2, 2) = 0.5;
    EXPECT_FALSE(ppt_separable_two_qubit(DenseHermitian(bell)));
    EXPECT_TRUE(ppt_separable_two_qubit(DenseHermitian(ComplexMatrix::Identity(4, 4) / 4.0)));
    DenseHermitian ps = embed_symmetric_two_qubit(DenseHermitian(ComplexMatrix::Identity(3, 3) / 3.0));
    EXPECT_TRUE(ppt_separable_two_qubit(ps));
    // P_s/3 has partial-transpose spectrum {1/6, 1/6, 1/6, 1/2}.
    EXPECT_NEAR(min_pt_eigenvalue_two_qubit(ps), 1.0 / 6.0, 1e-14);
}

TEST(ppt, symmetric_split_matches_qubit_oracle) {
    for (int n = 2; n <= 5; ++n) {
        SeededEnsemble e{8, EnsembleKind::Symmetric, SpinSize::from_qubits(n)};
        for (int i = 0; i < 20; ++i) {
            DenseHermitian rho = sample_state(e, i);
            for (int m = 1; m < n; ++m) {
                EXPECT_NEAR(min_pt_eigenvalue_symmetric(rho, m), oracle::min_pt_eigenvalue_qubits(rho.matrix(), m),
                            1e-12);
            }
        }
    }
}

TEST(ppt, two_qubit_tensor_of_embedded_state_matches_symmetric_tensor) {
    SeededEnsemble e{3, EnsembleKind::Symmetric, SpinSize::from_qubits(2)};
    DenseHermitian rho = sample_state(e, 0);
    TensorRepr x = tensor_from_density(rho, e.spin);
    TwoQubitTensor full = tensor_from_two_qubit_density(embed_symmetric_two_qubit(rho));
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            EXPECT_NEAR(full(mu, nu), x.at({mu, nu}), 1e-12);
        }
    }
}

TEST(quantumness, classical_mixture_has_zero_distance) {
    SpinSize spin = SpinSize::from_qubits(2);
    auto grid = CoherentGrid::fibonacci(800, spin);
    ComplexMatrix rho = ComplexMatrix::Zero(3, 3);
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXcd v = coherent_state(grid->directions()[i * 77], spin);
        rho += v * v.adjoint() / 10.0;
    }
    QuantumnessResult q = quantumness(DenseHermitian(rho), *grid);
    EXPECT_TRUE(q.converged());
    EXPECT_LE(q.q_value, 1e-6);
    double total = 0.0;
    for (double w : q.weights) {
        EXPECT_GE(w, 0.0);
        total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(quantumness, bell_state_is_nonclassical) {
    SpinSize spin = SpinSize::from_qubits(2);
    ComplexMatrix rho = ComplexMatrix::Zero(3, 3);
    rho(1, 1) = 1.0;
    QuantumnessResult q = quantumness(DenseHermitian(rho), spin, 2000);
    EXPECT_TRUE(q.converged());
    EXPECT_GT(q.q_value, 0.1);
    // The maximally mixed state P_s/3 is classical, so it bounds Q from above.
    ComplexMatrix mixed = ComplexMatrix::Zero(3, 3);
    mixed(0, 0) = mixed(1, 1) = mixed(2, 2) = 1.0 / 3.0;
    double upper = (rho - mixed).norm();
    EXPECT_LE(q.q_value, upper + 1e-6);
}

TEST(quantumness, nested_grids_refine) {
    SpinSize spin = SpinSize::from_qubits(2);
    SeededEnsemble e{11, EnsembleKind::Symmetric, spin};
    auto coarse = fibonacci_grid(100);
    auto fine = coarse;
    auto extra = fibonacci_grid(700);
    fine.insert(fine.end(), extra.begin(), extra.end());
    CoherentGrid g_coarse(coarse, spin);
    CoherentGrid g_fine(fine, spin);
    for (int i = 0; i < 30; ++i) {
        DenseHermitian rho = sample_state(e, i);
        double qc = quantumness(rho, g_coarse).q_value;
        double qf = quantumness(rho, g_fine).q_value;
        EXPECT_LE(qf, qc + 1e-9);
    }
    EXPECT_THROW(quantumness(sample_state(e, 0), spin, 10), std::invalid_argument);
}
