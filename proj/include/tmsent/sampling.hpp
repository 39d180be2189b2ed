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


#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "tmsent/common.hpp"
#include "tmsent/spin_tensor.hpp"

namespace tmsent {

enum class EnsembleKind { Symmetric, TwoQubitFull };

inline std::string to_string(EnsembleKind kind) {
    return kind == EnsembleKind::Symmetric ? "sym" : "full2q";
}

inline EnsembleKind parse_ensemble_kind(const std::string &s) {
    if (s == "sym" || s == "symmetric") {
        return EnsembleKind::Symmetric;
    }
    if (s == "full2q" || s == "two-qubit-full") {
        return EnsembleKind::TwoQubitFull;
    }
    throw std::invalid_argument("unknown ensemble kind '" + s + "' (expected sym or full2q)");
}

/// SplitMix64 finalizer; used to derive independent per-index substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Engine for substream `index` of `seed`. `stream` separates unrelated
/// consumers (state sampling, bootstrap, ...) sharing the same seed.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
    std::uint64_t key = splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

/// Hilbert-Schmidt ensemble rho = G G^dagger / tr(G G^dagger) with G square
/// and i.i.d. standard complex normal entries.
struct SeededEnsemble {
    std::uint64_t seed = 1;
    EnsembleKind kind = EnsembleKind::Symmetric;
    SpinSize spin = SpinSize::from_qubits(2);

    int dim() const {
        return kind == EnsembleKind::Symmetric ? spin.dicke_dim() : 4;
    }
};

inline constexpr std::uint64_t kStateStream = 0x5354415445ULL;

/// State number `index` of the ensemble; depends only on (seed, kind, spin, index).
inline DenseHermitian sample_state(const SeededEnsemble &ensemble, std::uint64_t index) {
    const int d = ensemble.dim();
    auto rng = substream(ensemble.seed, index, kStateStream + static_cast<std::uint64_t>(d));
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix g(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            double re = normal(rng);
            double im = normal(rng);
            g(r, c) = Complex(re, im);
        }
    }
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DenseHermitian(0.5 * (rho + rho.adjoint()));
}

/// Partial transpose of a (d1 d2) x (d1 d2) matrix on the second factor.
inline ComplexMatrix partial_transpose_second(const ComplexMatrix &m, int d1, int d2) {
    if (m.rows() != d1 * d2 || m.cols() != d1 * d2) {
        throw std::invalid_argument("partial_transpose_second: dimension mismatch");
    }
    ComplexMatrix r(m.rows(), m.cols());
    for (int i1 = 0; i1 < d1; ++i1) {
        for (int j1 = 0; j1 < d1; ++j1) {
            r.block(i1 * d2, j1 * d2, d2, d2) = m.block(i1 * d2, j1 * d2, d2, d2).transpose();
        }
    }
    return r;
}

inline double min_pt_eigenvalue_two_qubit(const DenseHermitian &rho) {
    if (rho.dim() != 4) {
        throw std::invalid_argument("two-qubit PPT test needs a 4x4 matrix");
    }
    return min_eigenvalue(partial_transpose_second(rho.matrix(), 2, 2));
}

inline constexpr double kPptTol = 1e-10;

/// Peres-Horodecki test; exact separability criterion for two qubits.
inline bool ppt_separable_two_qubit(const DenseHermitian &rho) {
    return min_pt_eigenvalue_two_qubit(rho) >= -kPptTol;
}

/// Isometry from the (N+1)-dim symmetric space into Sym_m (x) Sym_{N-m}:
/// |D_N^w> = sum_a sqrt(C(m,a) C(N-m,w-a) / C(N,w)) |D_m^a> |D_{N-m}^{w-a}>.
inline Matrix dicke_split_isometry(int n, int m) {
    if (m < 1 || m >= n) {
        throw std::invalid_argument("dicke_split_isometry: need 0 < m < N");
    }
    const int d2 = n - m + 1;
    Matrix v = Matrix::Zero((m + 1) * d2, n + 1);
    for (int w = 0; w <= n; ++w) {
        for (int a = std::max(0, w - (n - m)); a <= std::min(m, w); ++a) {
            v(a * d2 + (w - a), w) = std::sqrt(binomial(m, a) * binomial(n - m, w - a) / binomial(n, w));
        }
    }
    return v;
}

/// Symmetric two-qubit state written in the computational basis |00>,|01>,|10>,|11>.
inline DenseHermitian embed_symmetric_two_qubit(const DenseHermitian &rho) {
    if (rho.dim() != 3) {
        throw std::invalid_argument("embed_symmetric_two_qubit: expected a 3x3 Dicke-basis matrix");
    }
    Matrix v = dicke_split_isometry(2, 1);
    return DenseHermitian(v.cast<Complex>() * rho.matrix() * v.transpose().cast<Complex>());
}

/// Smallest eigenvalue of the partial transpose across the split of the N
/// qubits into m and N - m, computed inside Sym_m (x) Sym_{N-m}.
inline double min_pt_eigenvalue_symmetric(const DenseHermitian &rho, int m) {
    const int n = rho.dim() - 1;
    Matrix v = dicke_split_isometry(n, m);
    ComplexMatrix lifted = v.cast<Complex>() * rho.matrix() * v.transpose().cast<Complex>();
    return min_eigenvalue(partial_transpose_second(lifted, m + 1, n - m + 1));
}

/// True if the partial transpose is negative across some m | N - m split.
inline bool npt_symmetric(const DenseHermitian &rho, double tol = kPptTol) {
    const int n = rho.dim() - 1;
    for (int m = 1; m <= n / 2; ++m) {
        if (min_pt_eigenvalue_symmetric(rho, m) < -tol) {
            return true;
        }
    }
    return false;
}

/// Separability oracle for ensemble samples: exact (PPT) for two qubits and
/// the symmetric two-qubit case.
inline bool ppt_separable(const DenseHermitian &rho, EnsembleKind kind) {
    if (kind == EnsembleKind::TwoQubitFull) {
        return ppt_separable_two_qubit(rho);
    }
    if (rho.dim() != 3) {
        throw std::invalid_argument("ppt_separable: exact oracle only for two qubits");
    }
    return min_pt_eigenvalue_symmetric(rho, 1) >= -kPptTol;
}

}  // namespace tmsent
