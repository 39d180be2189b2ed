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
#include <cstdio>
#include <istream>
#include <ostream>
#include <array>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "tmsent/common.hpp"
#include "tmsent/monomial.hpp"
#include "tmsent/symmetric_operators.hpp"

namespace tmsent {

/// A spin j = N/2 viewed as N qubits in the symmetric subspace.
class SpinSize {
   public:
    static SpinSize from_qubits(int num_qubits) {
        if (num_qubits < 1) {
            throw std::invalid_argument("SpinSize: need at least one qubit");
        }
        return SpinSize(num_qubits);
    }
    static SpinSize from_twice_j(int twice_j) {
        return from_qubits(twice_j);
    }
    /// Parses "1", "3/2", "1.5", "2" ...
    static SpinSize parse(const std::string &text) {
        auto slash = text.find('/');
        if (slash != std::string::npos) {
            int num = std::stoi(text.substr(0, slash));
            int den = std::stoi(text.substr(slash + 1));
            if (den != 2 && den != 1) {
                throw std::invalid_argument("SpinSize: spin must be a multiple of 1/2");
            }
            return from_qubits(den == 2 ? num : 2 * num);
        }
        double j = std::stod(text);
        double twice = 2.0 * j;
        if (std::abs(twice - std::round(twice)) > 1e-12) {
            throw std::invalid_argument("SpinSize: spin must be a multiple of 1/2");
        }
        return from_qubits(static_cast<int>(std::round(twice)));
    }

    int num_qubits() const {
        return n_;
    }
    int twice_j() const {
        return n_;
    }
    double j() const {
        return 0.5 * n_;
    }
    bool is_integer() const {
        return n_ % 2 == 0;
    }
    int dicke_dim() const {
        return n_ + 1;
    }
    std::string to_string() const {
        return is_integer() ? std::to_string(n_ / 2) : std::to_string(n_) + "/2";
    }

    bool operator==(const SpinSize &) const = default;

   private:
    explicit SpinSize(int n) : n_(n) {}
    int n_;
};

/// Dense complex matrix that is Hermitian to a fixed tolerance.
class DenseHermitian {
   public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kPositivityTol = 1e-10;

    DenseHermitian() = default;

    /// Throws InvariantError unless m is square and Hermitian to 1e-12
    /// (relative to its largest entry).
    explicit DenseHermitian(ComplexMatrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0) {
            throw InvariantError("DenseHermitian: matrix must be square and non-empty");
        }
        double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol * scale) {
            throw InvariantError("DenseHermitian: matrix is not Hermitian");
        }
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
    }

    int dim() const {
        return static_cast<int>(m_.rows());
    }
    const ComplexMatrix &matrix() const {
        return m_;
    }
    double trace() const {
        return m_.trace().real();
    }
    double min_eigenvalue() const {
        return tmsent::min_eigenvalue(m_);
    }

    bool is_density_matrix() const {
        return std::abs(trace() - 1.0) <= kTraceTol && min_eigenvalue() >= -kPositivityTol;
    }

    void require_density_matrix() const {
        if (std::abs(trace() - 1.0) > kTraceTol) {
            throw InvariantError("density matrix must have unit trace");
        }
        if (min_eigenvalue() < -kPositivityTol) {
            throw InvariantError("density matrix must be positive semidefinite");
        }
    }

   private:
    ComplexMatrix m_;
};

/// Pauli matrices sigma_0 = 1, sigma_1 = x, sigma_2 = y, sigma_3 = z.
inline const std::array<Eigen::Matrix2cd, 4> &pauli_matrices() {
    static const std::array<Eigen::Matrix2cd, 4> paulis = [] {
        std::array<Eigen::Matrix2cd, 4> p;
        const Complex i(0, 1);
        p[0] << 1, 0, 0, 1;
        p[1] << 0, 1, 1, 0;
        p[2] << 0, -i, i, 0;
        p[3] << 1, 0, 0, -1;
        return p;
    }();
    return paulis;
}

using MomentMap = std::map<Monomial, double>;

/// Real symmetric Bloch tensor X_{mu1...muN} = tr(rho sigma_mu1 x ... x sigma_muN)
/// of a symmetric N-qubit state.
///
/// Storage is keyed by alpha, the count of x, y, z indices in the sorted
/// multi-index; the zeros are implied by N - |alpha|. This is the same key
/// as the moment y_alpha.
class TensorRepr {
   public:
    static constexpr double kSumRuleTol = 1e-9;

    /// values[i] belongs to table->alphas()[i]. Validates all invariants.
    TensorRepr(SpinSize spin, std::vector<double> values) : TensorRepr(spin, std::move(values), true) {}

    static TensorRepr unchecked(SpinSize spin, std::vector<double> values) {
        return TensorRepr(spin, std::move(values), false);
    }

    /// Builds a tensor from (sorted or unsorted) multi-index entries;
    /// unspecified entries are zero and X_{0...0} defaults to 1.
    static TensorRepr from_entries(SpinSize spin, const std::vector<std::pair<std::vector<int>, double>> &entries) {
        auto table = SymmetricPauliTable::for_qubits(spin.num_qubits());
        std::vector<double> values(table->alphas().size(), 0.0);
        values[0] = 1.0;
        for (const auto &[index, value] : entries) {
            values[position(spin, index)] = value;
        }
        return TensorRepr(spin, std::move(values));
    }

    SpinSize spin() const {
        return spin_;
    }
    const std::vector<double> &values() const {
        return values_;
    }
    const MonomialBasis &alphas() const {
        return table_->alphas();
    }

    double at(const Monomial &alpha) const {
        int i = table_->alphas().index_of(alpha);
        if (i < 0) {
            throw std::out_of_range("TensorRepr: alpha outside the tensor");
        }
        return values_[i];
    }

    /// Entry for a multi-index of length N with entries in 0..3, in any order.
    double at(std::span<const int> multi_index) const {
        return values_[position(spin_, multi_index)];
    }
    double at(std::initializer_list<int> multi_index) const {
        std::vector<int> v(multi_index);
        return at(std::span<const int>(v));
    }

    /// The sorted multi-index (mu_1 <= ... <= mu_N) that alpha labels.
    std::vector<int> multi_index(int alpha_index) const {
        const Monomial &a = table_->alphas()[alpha_index];
        std::vector<int> mu(spin_.num_qubits() - a.degree(), 0);
        for (int axis = 0; axis < 3; ++axis) {
            mu.insert(mu.end(), a[axis], axis + 1);
        }
        return mu;
    }

    /// Largest violation of sum_a X_{a a suffix} = X_{0 0 suffix} over all suffixes.
    double sum_rule_residual() const {
        double worst = 0.0;
        const auto &alphas = table_->alphas();
        for (int i = 0; i < alphas.size(); ++i) {
            const Monomial &a = alphas[i];
            if (a.degree() > spin_.num_qubits() - 2) {
                continue;
            }
            double s = -values_[i];
            for (int axis = 0; axis < 3; ++axis) {
                s += values_[alphas.index_of(a + Monomial::unit(axis, 2))];
            }
            worst = std::max(worst, std::abs(s));
        }
        return worst;
    }

   private:
    TensorRepr(SpinSize spin, std::vector<double> values, bool check)
        : spin_(spin), table_(SymmetricPauliTable::for_qubits(spin.num_qubits())), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != table_->alphas().size()) {
            throw InvariantError("TensorRepr: wrong number of entries for this spin");
        }
        if (check) {
            if (std::abs(values_[0] - 1.0) > 1e-10) {
                throw InvariantError("TensorRepr: X_{0...0} must equal 1");
            }
            for (double v : values_) {
                if (!(std::abs(v) <= 1.0 + 1e-10)) {
                    throw InvariantError("TensorRepr: entries must lie in [-1, 1]");
                }
            }
            if (sum_rule_residual() > kSumRuleTol) {
                throw InvariantError("TensorRepr: sum rule violated");
            }
        }
    }

    static int position(SpinSize spin, std::span<const int> multi_index) {
        if (static_cast<int>(multi_index.size()) != spin.num_qubits()) {
            throw std::invalid_argument("TensorRepr: multi-index length must equal N");
        }
        Monomial alpha;
        for (int mu : multi_index) {
            if (mu < 0 || mu > 3) {
                throw std::invalid_argument("TensorRepr: index entries must be in 0..3");
            }
            if (mu > 0) {
                alpha.exponents[mu - 1]++;
            }
        }
        return SymmetricPauliTable::for_qubits(spin.num_qubits())->alphas().index_of(alpha);
    }

    SpinSize spin_;
    std::shared_ptr<const SymmetricPauliTable> table_;
    std::vector<double> values_;
};

/// Two-qubit correlation tensor X_{mu nu} = tr(rho sigma_mu x sigma_nu), no
/// symmetry between the qubits. X(0,0) = 1.
struct TwoQubitTensor {
    Eigen::Matrix4d values = Eigen::Matrix4d::Zero();

    double operator()(int mu, int nu) const {
        return values(mu, nu);
    }
};

/// Unit Bloch vector of a coherent spin state.
class CoherentDirection {
   public:
    static constexpr double kNormTol = 1e-12;

    explicit CoherentDirection(Eigen::Vector3d n) : n_(n) {
        if (std::abs(n_.squaredNorm() - 1.0) > kNormTol) {
            throw InvariantError("CoherentDirection: vector must have unit norm");
        }
    }
    static CoherentDirection normalized(Eigen::Vector3d n) {
        return CoherentDirection(n / n.norm());
    }
    static CoherentDirection from_angles(double theta, double phi) {
        return normalized({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
    }

    const Eigen::Vector3d &vector() const {
        return n_;
    }
    double theta() const {
        return std::acos(std::clamp(n_.z(), -1.0, 1.0));
    }
    double phi() const {
        return std::atan2(n_.y(), n_.x());
    }

   private:
    Eigen::Vector3d n_;
};

/// Dicke-basis amplitudes of (cos(t/2)|0> + e^{i p} sin(t/2)|1>)^{x N}.
inline Eigen::VectorXcd coherent_state(const CoherentDirection &n, SpinSize spin) {
    const int N = spin.num_qubits();
    const double c = std::cos(0.5 * n.theta());
    const double s = std::sin(0.5 * n.theta());
    const Complex phase = std::polar(1.0, n.phi());
    Eigen::VectorXcd v(N + 1);
    for (int w = 0; w <= N; ++w) {
        v(w) = std::sqrt(binomial(N, w)) * std::pow(c, N - w) * std::pow(s, w) * std::pow(phase, w);
    }
    return v;
}

inline DenseHermitian coherent_density(const CoherentDirection &n, SpinSize spin) {
    Eigen::VectorXcd v = coherent_state(n, spin);
    return DenseHermitian(v * v.adjoint());
}

/// Rank-one tensor X_{mu1...muN} = n_mu1 ... n_muN with n_0 = 1.
inline TensorRepr coherent_tensor(const CoherentDirection &n, SpinSize spin) {
    auto table = SymmetricPauliTable::for_qubits(spin.num_qubits());
    std::vector<double> values;
    values.reserve(table->alphas().size());
    const auto &v = n.vector();
    for (const auto &alpha : table->alphas().items()) {
        values.push_back(std::pow(v.x(), alpha[0]) * std::pow(v.y(), alpha[1]) * std::pow(v.z(), alpha[2]));
    }
    return TensorRepr::unchecked(spin, std::move(values));
}

/// X_{mu1...muN} = tr(rho sigma_mu1 x ... x sigma_muN) for rho given in the
/// Dicke basis (dimension N + 1, m = j down to -j).
inline TensorRepr tensor_from_density(const DenseHermitian &rho, SpinSize spin) {
    if (rho.dim() != spin.dicke_dim()) {
        throw std::invalid_argument("tensor_from_density: dimension does not match spin");
    }
    auto table = SymmetricPauliTable::for_qubits(spin.num_qubits());
    std::vector<double> values(table->alphas().size());
    const ComplexMatrix &r = rho.matrix();
    for (int i = 0; i < table->alphas().size(); ++i) {
        // tr(rho S) with S Hermitian: sum_{ab} rho_ab S_ba.
        values[i] = (r.cwiseProduct(table->op(i).transpose())).sum().real();
    }
    return TensorRepr::unchecked(spin, std::move(values));
}

/// Formal inverse of tensor_from_density on the symmetric subspace:
/// rho = 2^{-N} sum_mu X_mu P_s sigma_mu P_s. Hermitian with unit trace;
/// positivity holds only when x comes from a state.
inline DenseHermitian density_from_tensor(const TensorRepr &x) {
    const int N = x.spin().num_qubits();
    auto table = SymmetricPauliTable::for_qubits(N);
    ComplexMatrix rho = ComplexMatrix::Zero(N + 1, N + 1);
    for (int i = 0; i < table->alphas().size(); ++i) {
        if (x.values()[i] != 0.0) {
            rho += (table->multiplicity(i) * x.values()[i]) * table->op(i);
        }
    }
    rho /= std::pow(2.0, N);
    return DenseHermitian(rho);
}

inline TwoQubitTensor tensor_from_two_qubit_density(const DenseHermitian &rho) {
    if (rho.dim() != 4) {
        throw std::invalid_argument("tensor_from_two_qubit_density: expected a 4x4 matrix");
    }
    const auto &p = pauli_matrices();
    TwoQubitTensor x;
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            Eigen::Matrix4cd op = Eigen::kroneckerProduct(p[mu], p[nu]);
            x.values(mu, nu) = (rho.matrix() * op).trace().real();
        }
    }
    return x;
}

inline DenseHermitian two_qubit_density_from_tensor(const TwoQubitTensor &x) {
    const auto &p = pauli_matrices();
    ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            Eigen::Matrix4cd op = Eigen::kroneckerProduct(p[mu], p[nu]);
            rho += x.values(mu, nu) * op;
        }
    }
    return DenseHermitian(rho / 4.0);
}

/// y_alpha = X_{mu1...muN}. Verifies the sum rule (the sphere relations
/// between moments of different degree) instead of assuming it.
inline MomentMap moments_from_tensor(const TensorRepr &x) {
    if (x.sum_rule_residual() > TensorRepr::kSumRuleTol) {
        throw InvariantError("moments_from_tensor: tensor violates the sum rule");
    }
    MomentMap y;
    const auto &alphas = x.alphas();
    for (int i = 0; i < alphas.size(); ++i) {
        y.emplace(alphas[i], x.values()[i]);
    }
    return y;
}

/// Product-case moments: X_{mu nu} is the moment of x^{(1)}_mu x^{(2)}_nu.
inline MomentMap moments_from_two_qubit_tensor(const TwoQubitTensor &x) {
    MomentMap y;
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            Monomial m;
            if (mu > 0) {
                m.exponents[mu - 1] = 1;
            }
            if (nu > 0) {
                m.exponents[3 + nu - 1] = 1;
            }
            y.emplace(m, x.values(mu, nu));
        }
    }
    return y;
}

/// Formats a double with 17 significant digits so it parses back exactly.
inline std::string format_exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::pair<std::string, std::string>> read_index_value_csv(std::istream &in) {
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("index", 0) == 0) {
                continue;
            }
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("tensor CSV: expected 'index,value' rows, got '" + line + "'");
        }
        rows.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    }
    return rows;
}

inline std::vector<int> parse_digit_index(const std::string &s) {
    std::vector<int> mu;
    for (char c : s) {
        if (c < '0' || c > '3') {
            throw std::invalid_argument("tensor CSV: index digits must be 0..3, got '" + s + "'");
        }
        mu.push_back(c - '0');
    }
    return mu;
}

}  // namespace detail

/// Writes `index,value` rows, one per sorted multi-index.
inline void write_tensor_csv(std::ostream &out, const TensorRepr &x) {
    out << "index,value\n";
    for (int i = 0; i < x.alphas().size(); ++i) {
        std::string index;
        for (int mu : x.multi_index(i)) {
            index += static_cast<char>('0' + mu);
        }
        out << index << ',' << format_exact(x.values()[i]) << '\n';
    }
}

/// Reads a symmetric tensor. Indices may appear in any order; the spin is
/// the index length. Missing entries are zero; lines starting with '#' are
/// comments.
inline TensorRepr read_tensor_csv(std::istream &in) {
    auto rows = detail::read_index_value_csv(in);
    if (rows.empty()) {
        throw std::invalid_argument("tensor CSV: no entries");
    }
    SpinSize spin = SpinSize::from_qubits(static_cast<int>(rows.front().first.size()));
    std::vector<std::pair<std::vector<int>, double>> entries;
    for (const auto &[index, value] : rows) {
        entries.emplace_back(detail::parse_digit_index(index), std::stod(value));
    }
    return TensorRepr::from_entries(spin, entries);
}

inline void write_two_qubit_tensor_csv(std::ostream &out, const TwoQubitTensor &x) {
    out << "index,value\n";
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            out << mu << nu << ',' << format_exact(x(mu, nu)) << '\n';
        }
    }
}

inline TwoQubitTensor read_two_qubit_tensor_csv(std::istream &in) {
    TwoQubitTensor x;
    x.values(0, 0) = 1.0;
    for (const auto &[index, value] : detail::read_index_value_csv(in)) {
        auto mu = detail::parse_digit_index(index);
        if (mu.size() != 2) {
            throw std::invalid_argument("two-qubit tensor CSV: index must have two digits");
        }
        x.values(mu[0], mu[1]) = std::stod(value);
    }
    if (std::abs(x(0, 0) - 1.0) > 1e-10 || x.values.cwiseAbs().maxCoeff() > 1.0 + 1e-10) {
        throw InvariantError("two-qubit tensor CSV: entries out of range or X_00 != 1");
    }
    return x;
}

/// Writes `alpha1,alpha2,alpha3,value` rows (symmetric moments).
inline void write_moments_csv(std::ostream &out, const MomentMap &y) {
    out << "alpha1,alpha2,alpha3,value\n";
    for (const auto &[alpha, value] : y) {
        out << alpha[0] << ',' << alpha[1] << ',' << alpha[2] << ',' << format_exact(value) << '\n';
    }
}

}  // namespace tmsent
