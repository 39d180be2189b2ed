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

#include <map>
#include <memory>
#include <mutex>

#include "tmsent/common.hpp"
#include "tmsent/monomial.hpp"

namespace tmsent {

/// Dicke-basis matrices of symmetrized Pauli strings.
///
/// For every alpha = (a, b, c) with |alpha| <= N the table holds the
/// (N+1) x (N+1) matrix <D_w'| sigma_0^{N-|alpha|} sigma_x^a sigma_y^b sigma_z^c |D_w>,
/// where D_w is the Dicke state with w excitations (w = 0 is |j, j>, i.e.
/// m runs from j down to -j). The ordering of the factors is irrelevant
/// because Dicke states are permutation invariant.
///
/// Entries are computed combinatorially (no 2^N embedding), so the table
/// is available for any N that fits in double-precision binomials.
class SymmetricPauliTable {
   public:
    static std::shared_ptr<const SymmetricPauliTable> for_qubits(int num_qubits) {
        static std::mutex mutex;
        static std::map<int, std::shared_ptr<const SymmetricPauliTable>> cache;
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(num_qubits);
        if (it != cache.end()) {
            return it->second;
        }
        auto table = std::shared_ptr<const SymmetricPauliTable>(new SymmetricPauliTable(num_qubits));
        cache.emplace(num_qubits, table);
        return table;
    }

    int num_qubits() const {
        return n_;
    }
    int dim() const {
        return n_ + 1;
    }
    const MonomialBasis &alphas() const {
        return alphas_;
    }
    const ComplexMatrix &op(int alpha_index) const {
        return ops_[alpha_index];
    }
    /// Number of distinct orderings of the Pauli string labelled by alpha.
    double multiplicity(int alpha_index) const {
        return multiplicity_[alpha_index];
    }

   private:
    explicit SymmetricPauliTable(int n) : n_(n), alphas_(3, n) {
        if (n < 1 || n > 40) {
            throw std::invalid_argument("SymmetricPauliTable: qubit count out of range");
        }
        ops_.reserve(alphas_.size());
        multiplicity_.reserve(alphas_.size());
        for (const auto &alpha : alphas_.items()) {
            ops_.push_back(build(alpha));
            int c0 = n - alpha.degree();
            multiplicity_.push_back(factorial(n) / (factorial(c0) * factorial(alpha[0]) * factorial(alpha[1]) *
                                                    factorial(alpha[2])));
        }
    }

    ComplexMatrix build(const Monomial &alpha) const {
        const int a = alpha[0];
        const int b = alpha[1];
        const int c = alpha[2];
        const int c0 = n_ - a - b - c;
        // i^b from the sigma_y factors acting on |0>.
        static const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        const Complex y_phase = kIPow[b % 4];
        ComplexMatrix m = ComplexMatrix::Zero(n_ + 1, n_ + 1);
        // Split the input excitations w = i + p + q + r over the identity,
        // x, y and z groups; the x and y groups flip their bits.
        for (int i = 0; i <= c0; ++i) {
            for (int p = 0; p <= a; ++p) {
                for (int q = 0; q <= b; ++q) {
                    for (int r = 0; r <= c; ++r) {
                        const int w = i + p + q + r;
                        const int w_out = i + (a - p) + (b - q) + r;
                        double count = binomial(c0, i) * binomial(a, p) * binomial(b, q) * binomial(c, r);
                        double sign = ((q + r) % 2 == 0) ? 1.0 : -1.0;
                        m(w_out, w) += y_phase * (sign * count);
                    }
                }
            }
        }
        for (int w_out = 0; w_out <= n_; ++w_out) {
            for (int w = 0; w <= n_; ++w) {
                m(w_out, w) /= std::sqrt(binomial(n_, w) * binomial(n_, w_out));
            }
        }
        return m;
    }

    int n_;
    MonomialBasis alphas_;
    std::vector<ComplexMatrix> ops_;
    std::vector<double> multiplicity_;
};

}  // namespace tmsent
