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

#include <algorithm>
#include <array>
#include <bit>
#include <string>
#include <vector>

#include "tmsent/common.hpp"
#include "tmsent/monomial.hpp"
#include "tmsent/observables.hpp"
#include "tmsent/sampling.hpp"
#include "tmsent/spin_tensor.hpp"

namespace tmsent {

inline constexpr double kWitnessThreshold = -1e-10;

/// Diagonal tensor entry X_{mu1...muj mu1...muj} of a spin-j tensor, named
/// by its half index (sorted, entries in 0..3).
struct DiagonalObservable {
    std::vector<int> half_index;

    /// Number of non-identity entries in the half index.
    int degree() const {
        return static_cast<int>(std::count_if(half_index.begin(), half_index.end(), [](int m) { return m != 0; }));
    }
    /// The moment measured: twice the axis counts of the half index.
    Monomial moment() const {
        Monomial m;
        for (int mu : half_index) {
            if (mu) {
                m.exponents[mu - 1] += 2;
            }
        }
        return m;
    }
    /// Axis letters of the full index, sorted ("xxyy" for half index x, y).
    std::string letters() const {
        std::string s;
        for (int mu : half_index) {
            if (mu) {
                s += std::string(2, detail::kAxisNames[mu]);
            }
        }
        std::sort(s.begin(), s.end());
        return s;
    }
    std::string label() const {
        return "D_" + letters();
    }
    bool operator==(const DiagonalObservable &) const = default;
};

/// All C(j + 3, 3) half indices of spin j, including the trivial one.
inline std::vector<DiagonalObservable> all_diagonal_observables(int j) {
    std::vector<DiagonalObservable> out;
    std::vector<int> idx(j, 0);
    while (true) {
        out.push_back({idx});
        int pos = j - 1;
        while (pos >= 0 && idx[pos] == 3) {
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++idx[pos];
        for (int q = pos + 1; q < j; ++q) {
            idx[q] = idx[pos];
        }
    }
    return out;
}

/// Representative of the axis-permutation orbit with the smallest label.
inline DiagonalObservable canonical_diagonal(const DiagonalObservable &d) {
    DiagonalObservable best;
    bool have = false;
    for (const auto &p : detail::axis_permutations()) {
        DiagonalObservable image;
        for (int mu : d.half_index) {
            image.half_index.push_back(p[mu]);
        }
        std::sort(image.half_index.begin(), image.half_index.end());
        if (!have || image.letters() < best.letters()) {
            best = image;
            have = true;
        }
    }
    return best;
}

/// Non-trivial diagonal observables of spin j up to axis permutations,
/// ordered by degree and then by label.
inline std::vector<DiagonalObservable> enumerate_diag(int j, int max_j = 5) {
    if (j < 1 || j > max_j) {
        throw std::invalid_argument("enumerate_diag: spin must be an integer in 1.." + std::to_string(max_j));
    }
    std::vector<DiagonalObservable> out;
    for (const auto &d : all_diagonal_observables(j)) {
        if (d.degree() == 0) {
            continue;
        }
        auto c = canonical_diagonal(d);
        if (std::find(out.begin(), out.end(), c) == out.end()) {
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end(), [](const DiagonalObservable &a, const DiagonalObservable &b) {
        if (a.degree() != b.degree()) {
            return a.degree() < b.degree();
        }
        return a.letters() < b.letters();
    });
    return out;
}

inline int require_integer_spin(SpinSize spin, const char *where) {
    if (!spin.is_integer()) {
        throw std::invalid_argument(std::string(where) + ": integer spin required, got " + spin.to_string());
    }
    return spin.num_qubits() / 2;
}

struct DiagWitnessResult {
    bool detected = false;
    std::vector<DiagonalObservable> violating;
    double min_value = 1.0;
};

/// Evaluates every diagonal entry; separable states have them all >= 0.
inline DiagWitnessResult diag_witness(const TensorRepr &x, double threshold = kWitnessThreshold) {
    const int j = require_integer_spin(x.spin(), "diag_witness");
    DiagWitnessResult r;
    for (const auto &d : all_diagonal_observables(j)) {
        if (d.degree() == 0) {
            continue;
        }
        double v = x.at(d.moment());
        r.min_value = std::min(r.min_value, v);
        if (v < threshold) {
            r.detected = true;
            r.violating.push_back(d);
        }
    }
    return r;
}

/// T_{(mu,i),(nu,i')} = sum_tau X_{tau mu nu} sigma^tau_{i i'} for a spin-3/2
/// tensor; its spectrum is 4 times that of the partial transpose.
inline ComplexMatrix t32_matrix(const TensorRepr &x) {
    if (x.spin().num_qubits() != 3) {
        throw std::invalid_argument("t32_matrix: spin 3/2 required, got " + x.spin().to_string());
    }
    const auto &pauli = pauli_matrices();
    ComplexMatrix t = ComplexMatrix::Zero(8, 8);
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            for (int tau = 0; tau < 4; ++tau) {
                t.block<2, 2>(2 * mu, 2 * nu) += x.at({tau, mu, nu}) * pauli[tau];
            }
        }
    }
    return t;
}

/// Eigenvalues (ascending) of the partial transpose of a symmetric state
/// across one qubit versus the rest, padded with the zeros of the full
/// 2^N space.
inline Vector partial_transpose_spectrum(const DenseHermitian &rho) {
    const int n = rho.dim() - 1;
    Matrix v = dicke_split_isometry(n, 1);
    ComplexMatrix lifted = v.cast<Complex>() * rho.matrix() * v.transpose().cast<Complex>();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(partial_transpose_second(lifted, 2, n));
    Vector out = Vector::Zero(1 << n);
    out.tail(es.eigenvalues().size()) = es.eigenvalues();
    std::sort(out.data(), out.data() + out.size());
    return out;
}

/// The six informative diagonal entries of T: X_{0bb} + X_{bb3} and
/// X_{0bb} - X_{bb3} for b = x, y, z.
struct PairWitness {
    std::array<double, 6> values{};

    static const std::array<std::string, 6> &labels() {
        static const std::array<std::string, 6> names{"X011+X113", "X011-X113", "X022+X223",
                                                      "X022-X223", "X033+X333", "X033-X333"};
        return names;
    }
    bool negative(int i, double threshold = kWitnessThreshold) const {
        return values[i] < threshold;
    }
};

inline PairWitness pair_witness(const TensorRepr &x) {
    if (x.spin().num_qubits() != 3) {
        throw std::invalid_argument("pair_witness: spin 3/2 required");
    }
    PairWitness p;
    for (int b = 1; b <= 3; ++b) {
        double base = x.at({0, b, b});
        double tail = x.at({b, b, 3});
        p.values[2 * (b - 1)] = base + tail;
        p.values[2 * (b - 1) + 1] = base - tail;
    }
    return p;
}

struct PairSubsetStats {
    std::vector<int> members;
    long detected = 0;
    long total = 0;
    double fraction() const {
        return total ? static_cast<double>(detected) / total : 0.0;
    }
    std::string label() const {
        std::string s;
        for (int m : members) {
            if (!s.empty()) {
                s += "|";
            }
            s += PairWitness::labels()[m];
        }
        return s;
    }
};

/// For every k-subset of the six pair values, the fraction of the given
/// (entangled) sample with at least one negative value in the subset.
inline std::vector<PairSubsetStats> pair_witness_stats(const std::vector<PairWitness> &sample, int k) {
    if (k < 1 || k > 6) {
        throw std::invalid_argument("pair_witness_stats: k must be in 1..6");
    }
    std::vector<PairSubsetStats> out;
    for (unsigned mask = 1; mask < 64; ++mask) {
        if (std::popcount(mask) != k) {
            continue;
        }
        PairSubsetStats s;
        for (int i = 0; i < 6; ++i) {
            if (mask & (1u << i)) {
                s.members.push_back(i);
            }
        }
        s.total = static_cast<long>(sample.size());
        for (const auto &p : sample) {
            bool hit = std::any_of(s.members.begin(), s.members.end(), [&p](int i) { return p.negative(i); });
            s.detected += hit;
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Monte Carlo tallies of the diagonal witnesses on the symmetric
/// Hilbert-Schmidt ensemble of spin j.
struct DiagWitnessStats {
    int j = 0;
    long states = 0;
    /// States that are NPT across some split or flagged by a witness.
    long entangled = 0;
    long detected = 0;
    std::vector<DiagonalObservable> classes;
    /// Per canonical class: states where that representative is negative.
    std::vector<long> detected_by_class;

    long undetected() const {
        return entangled - detected;
    }
    double undetected_fraction() const {
        return entangled ? static_cast<double>(undetected()) / entangled : 0.0;
    }
};

/// Evaluates states [first, first + count) of the seeded ensemble.
inline DiagWitnessStats diag_witness_stats(int j, std::uint64_t seed, long first, long count) {
    DiagWitnessStats st;
    st.j = j;
    st.classes = enumerate_diag(j);
    st.detected_by_class.assign(st.classes.size(), 0);
    SpinSize spin = SpinSize::from_twice_j(2 * j);
    SeededEnsemble ens{seed, EnsembleKind::Symmetric, spin};
    for (long i = first; i < first + count; ++i) {
        auto rho = sample_state(ens, static_cast<std::uint64_t>(i));
        auto x = tensor_from_density(rho, spin);
        auto w = diag_witness(x);
        ++st.states;
        for (std::size_t c = 0; c < st.classes.size(); ++c) {
            if (x.at(st.classes[c].moment()) < kWitnessThreshold) {
                ++st.detected_by_class[c];
            }
        }
        if (w.detected) {
            ++st.detected;
            ++st.entangled;
        } else if (npt_symmetric(rho)) {
            ++st.entangled;
        }
    }
    return st;
}

inline void merge_into(DiagWitnessStats &acc, const DiagWitnessStats &part) {
    if (acc.classes.empty()) {
        acc = part;
        return;
    }
    acc.states += part.states;
    acc.entangled += part.entangled;
    acc.detected += part.detected;
    for (std::size_t c = 0; c < acc.detected_by_class.size(); ++c) {
        acc.detected_by_class[c] += part.detected_by_class[c];
    }
}

}  // namespace tmsent
