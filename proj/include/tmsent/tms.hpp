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

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tmsent/common.hpp"
#include "tmsent/monomial.hpp"
#include "tmsent/observables.hpp"
#include "tmsent/sdp.hpp"
#include "tmsent/spin_tensor.hpp"

namespace tmsent {

enum class VarietyKind { Sphere, SpherePair };

/// The support set of the representing measure: one Bloch sphere
/// (symmetric states) or a product of two (two distinguishable qubits).
struct VarietySpec {
    VarietyKind kind = VarietyKind::Sphere;

    static VarietySpec sphere() {
        return {VarietyKind::Sphere};
    }
    static VarietySpec sphere_pair() {
        return {VarietyKind::SpherePair};
    }
    static VarietySpec for_universe(Universe u) {
        return u == Universe::Symmetric ? sphere() : sphere_pair();
    }

    int num_vars() const {
        return kind == VarietyKind::Sphere ? 3 : 6;
    }
    int default_k_max() const {
        return kind == VarietyKind::Sphere ? 3 : 2;
    }
    std::string name() const {
        return kind == VarietyKind::Sphere ? "sphere3" : "sphere3xsphere3";
    }
    bool operator==(const VarietySpec &) const = default;
};

/// Partial moment assignment alpha -> y_alpha on a variety.
struct TruncatedMomentSequence {
    VarietySpec variety;
    MomentMap known;

    /// Highest degree among the known moments.
    int degree() const {
        int d = 0;
        for (const auto &[m, v] : known) {
            d = std::max(d, m.degree());
        }
        return d;
    }

    /// Checks |y| <= 1 and y_0 = 1 (inserting y_0 when absent).
    void normalize() {
        for (const auto &[m, v] : known) {
            for (int i = variety.num_vars(); i < kMaxVariables; ++i) {
                if (m[i] != 0) {
                    throw InvariantError("TruncatedMomentSequence: moment uses a variable outside the variety");
                }
            }
            if (!std::isfinite(v) || std::abs(v) > 1.0 + 1e-9) {
                throw InvariantError("TruncatedMomentSequence: known moments must lie in [-1, 1]");
            }
        }
        auto it = known.find(Monomial());
        if (it == known.end()) {
            known.emplace(Monomial(), 1.0);
        } else if (std::abs(it->second - 1.0) > 1e-12) {
            throw InvariantError("TruncatedMomentSequence: y_0 must equal 1");
        }
    }
};

/// Linear combination of normal-form moment variables plus a constant.
struct MomentExpression {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;
};

/// Order-k moment matrix layout on a variety.
///
/// Moments are reduced to normal form with the sphere relation
/// z^2 = 1 - x^2 - y^2 (per sphere), so the variables are the normal-form
/// monomials (z exponents at most one) of degree 1..2k. The SDP block is
/// the moment matrix restricted to normal-form rows; the full M_k is a
/// congruence T M_red T^T of it with T of full column rank, so the two are
/// PSD together and have equal ranks.
class MomentMatrixSpec {
   public:
    static std::shared_ptr<const MomentMatrixSpec> get(VarietySpec variety, int k) {
        static std::mutex mutex;
        static std::map<std::pair<int, int>, std::shared_ptr<const MomentMatrixSpec>> cache;
        std::lock_guard<std::mutex> lock(mutex);
        auto key = std::make_pair(static_cast<int>(variety.kind), k);
        auto it = cache.find(key);
        if (it != cache.end()) {
            return it->second;
        }
        auto spec = std::shared_ptr<const MomentMatrixSpec>(new MomentMatrixSpec(variety, k));
        cache.emplace(key, spec);
        return spec;
    }

    VarietySpec variety() const {
        return variety_;
    }
    int order() const {
        return k_;
    }
    /// Monomials of degree <= k indexing the full moment matrix.
    const MonomialBasis &basis() const {
        return basis_;
    }
    int full_dim() const {
        return basis_.size();
    }
    /// Number of distinct alpha + beta over the full matrix.
    int distinct_moments() const {
        return distinct_moments_;
    }
    /// Normal-form monomials of degree <= k indexing the SDP block.
    const std::vector<Monomial> &reduced_rows() const {
        return reduced_rows_;
    }
    int reduced_dim() const {
        return static_cast<int>(reduced_rows_.size());
    }
    /// Normal-form monomials of degree 1..2k; variable v is variables()[v].
    const std::vector<Monomial> &variables() const {
        return variables_;
    }
    int num_variables() const {
        return static_cast<int>(variables_.size());
    }

    /// Expression of y_alpha in the moment variables.
    MomentExpression expression(const Monomial &alpha) const {
        MomentExpression e;
        for (const auto &[m, c] : normal_form(alpha)) {
            if (m == Monomial()) {
                e.constant += c;
            } else {
                e.terms.emplace_back(variable_index_.at(m), c);
            }
        }
        return e;
    }

    double evaluate(const Monomial &alpha, const Vector &z) const {
        auto e = expression(alpha);
        double s = e.constant;
        for (const auto &[v, c] : e.terms) {
            s += c * z(v);
        }
        return s;
    }

    /// Full moment matrix M_k at z.
    Matrix full_matrix(const Vector &z) const {
        const int n = full_dim();
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                m(i, j) = m(j, i) = evaluate(basis_[i] + basis_[j], z);
            }
        }
        return m;
    }

    /// Leading principal block of M_k indexed by degree <= order monomials.
    Matrix full_matrix(const Vector &z, int order) const {
        int n = 0;
        while (n < full_dim() && basis_[n].degree() <= order) {
            ++n;
        }
        return full_matrix(z).topLeftCorner(n, n);
    }

    /// SDP with the reduced moment matrix as its only block, no equalities
    /// and the unit box on every moment variable.
    const SdpProblem &skeleton() const {
        return skeleton_;
    }

   private:
    MomentMatrixSpec(VarietySpec variety, int k) : variety_(variety), k_(k), basis_(variety.num_vars(), k) {
        if (k < 1 || k > 6) {
            throw std::invalid_argument("MomentMatrixSpec: order out of range");
        }
        std::set<Monomial> sums;
        for (const auto &a : basis_.items()) {
            for (const auto &b : basis_.items()) {
                sums.insert(a + b);
            }
        }
        distinct_moments_ = static_cast<int>(sums.size());
        for (const auto &m : basis_.items()) {
            if (is_normal(m)) {
                reduced_rows_.push_back(m);
            }
        }
        MonomialBasis all(variety.num_vars(), 2 * k);
        for (const auto &m : all.items()) {
            if (m.degree() > 0 && is_normal(m)) {
                variable_index_.emplace(m, static_cast<int>(variables_.size()));
                variables_.push_back(m);
            }
        }
        const int nv = num_variables();
        const int n = reduced_dim();
        skeleton_ = SdpProblem::with_unit_box(nv);
        skeleton_.add_block(n);
        auto &blk = skeleton_.blocks[0];
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                auto e = expression(reduced_rows_[i] + reduced_rows_[j]);
                blk.constant(i, j) = blk.constant(j, i) = e.constant;
                for (const auto &[v, c] : e.terms) {
                    blk.coefficients[v].push_back({i, j, c});
                }
            }
        }
    }

    bool is_normal(const Monomial &m) const {
        if (m[2] > 1) {
            return false;
        }
        return variety_.kind == VarietyKind::Sphere || m[5] <= 1;
    }

    /// Rewrites alpha with z^2 -> 1 - x^2 - y^2 until every z exponent is
    /// at most one.
    std::map<Monomial, double> normal_form(const Monomial &alpha) const {
        {
            std::lock_guard<std::mutex> lock(memo_mutex_);
            auto it = memo_.find(alpha);
            if (it != memo_.end()) {
                return it->second;
            }
        }
        std::map<Monomial, double> out;
        int zvar = -1;
        if (alpha[2] > 1) {
            zvar = 2;
        } else if (variety_.kind == VarietyKind::SpherePair && alpha[5] > 1) {
            zvar = 5;
        }
        if (zvar < 0) {
            out.emplace(alpha, 1.0);
        } else {
            Monomial base = alpha;
            base.exponents[zvar] = static_cast<std::uint8_t>(base.exponents[zvar] - 2);
            auto add = [&out](const std::map<Monomial, double> &part, double sign) {
                for (const auto &[m, c] : part) {
                    out[m] += sign * c;
                }
            };
            add(normal_form(base), 1.0);
            add(normal_form(base + Monomial::unit(zvar - 2, 2)), -1.0);
            add(normal_form(base + Monomial::unit(zvar - 1, 2)), -1.0);
            for (auto it = out.begin(); it != out.end();) {
                it = it->second == 0.0 ? out.erase(it) : std::next(it);
            }
        }
        std::lock_guard<std::mutex> lock(memo_mutex_);
        memo_.emplace(alpha, out);
        return out;
    }

    VarietySpec variety_;
    int k_;
    MonomialBasis basis_;
    int distinct_moments_ = 0;
    std::vector<Monomial> reduced_rows_;
    std::vector<Monomial> variables_;
    std::map<Monomial, int> variable_index_;
    SdpProblem skeleton_;
    mutable std::mutex memo_mutex_;
    mutable std::map<Monomial, std::map<Monomial, double>> memo_;
};

/// Feasibility instance of the order-k extension: the reduced moment
/// matrix must be PSD, every known moment is a linear equality on the
/// normal-form variables, and all variables lie in [-1, 1].
inline SdpProblem build_instance(const TruncatedMomentSequence &tms, int k) {
    TruncatedMomentSequence seq = tms;
    seq.normalize();
    if (k < 2 || 2 * k < seq.degree()) {
        throw std::invalid_argument("build_instance: need k >= 2 and 2k >= degree of the known moments");
    }
    auto spec = MomentMatrixSpec::get(seq.variety, k);
    SdpProblem p = spec->skeleton();
    for (const auto &[alpha, value] : seq.known) {
        if (alpha == Monomial()) {
            continue;
        }
        auto e = spec->expression(alpha);
        LinearEquality eq;
        eq.terms = e.terms;
        eq.rhs = value - e.constant;
        if (eq.terms.empty()) {
            // A known moment that reduces to a constant.
            if (std::abs(eq.rhs) > 1e-9) {
                eq.terms.emplace_back(0, 0.0);
                p.equalities.push_back(eq);
            }
            continue;
        }
        p.equalities.push_back(eq);
    }
    return p;
}

enum class TmsOutcome { EntangledCertified, SeparableFlat, FeasibleNotFlat, Indeterminate };

inline std::string to_string(TmsOutcome o) {
    switch (o) {
        case TmsOutcome::EntangledCertified:
            return "ENTANGLED_CERTIFIED";
        case TmsOutcome::SeparableFlat:
            return "SEPARABLE_FLAT";
        case TmsOutcome::FeasibleNotFlat:
            return "FEASIBLE_NOT_FLAT";
        default:
            return "INDETERMINATE";
    }
}

struct TmsConfig {
    /// 0 selects max(2, ceil(degree / 2)).
    int k_min = 0;
    /// 0 selects the variety default (3 on one sphere, 2 on two).
    int k_max = 0;
    double eps_feas = 1e-8;
    /// Singular values below eps_rank * sigma_max count as zero.
    double eps_rank = 1e-6;
    /// Without the flatness search a feasible level only escalates k, and
    /// the final feasible outcome is FEASIBLE_NOT_FLAT.
    bool check_flatness = true;
    int max_iterations = 200;
    std::uint64_t flatness_seed = 0x466c6174ULL;
};

struct TmsVerdict {
    TmsOutcome outcome = TmsOutcome::Indeterminate;
    int level = 0;
    SdpVerdict sdp;
    /// (rank M_{k-1}, rank M_k) at the flatness candidate.
    std::optional<std::pair<int, int>> ranks;
    bool linear_contradiction = false;
    double timing_ms = 0.0;

    bool detected() const {
        return outcome == TmsOutcome::EntangledCertified;
    }
};

inline int numerical_rank(const Matrix &m, double eps_rank) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto &s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) {
        return 0;
    }
    int r = 0;
    for (int i = 0; i < s.size(); ++i) {
        if (s(i) > eps_rank * s(0)) {
            ++r;
        }
    }
    return r;
}

namespace detail {

/// Searches the feasible set for a flat point by minimizing a few linear
/// objectives <R, M_red>: the trace first, then seeded random PD R.
/// Returns the ranks of the best candidate and whether it is flat.
inline std::pair<std::pair<int, int>, bool> flatness_search(const SdpProblem &p, const MomentMatrixSpec &spec,
                                                            const TmsConfig &config, Vector &point) {
    const int n = spec.reduced_dim();
    const int nv = spec.num_variables();
    const auto &blk = p.blocks[0];
    SdpOptions opt;
    opt.eps_feas = config.eps_feas;
    opt.max_iterations = config.max_iterations;
    std::mt19937_64 rng(config.flatness_seed ^ static_cast<std::uint64_t>(spec.order()));
    std::normal_distribution<double> gauss;
    std::pair<int, int> best{0, std::numeric_limits<int>::max()};
    bool flat = false;
    for (int attempt = 0; attempt < 3 && !flat; ++attempt) {
        Matrix r = Matrix::Identity(n, n);
        if (attempt > 0) {
            Matrix g(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    g(i, j) = gauss(rng);
                }
            }
            r = g * g.transpose() / n;
        }
        Vector c = Vector::Zero(nv);
        for (int v = 0; v < nv; ++v) {
            for (const auto &e : blk.coefficients[v]) {
                c(v) += e.value * (e.row == e.col ? r(e.row, e.col) : 2.0 * r(e.row, e.col));
            }
        }
        auto opt_point = minimize_linear(p, c, opt);
        if (opt_point.status != LinearStatus::Optimal) {
            continue;
        }
        // The candidate must itself be (numerically) feasible.
        Matrix red = blk.evaluate(opt_point.z);
        if (min_eigenvalue(red) < -1e-6 * std::max(1.0, red.norm())) {
            continue;
        }
        int rk = numerical_rank(spec.full_matrix(opt_point.z), config.eps_rank);
        int rk1 = numerical_rank(spec.full_matrix(opt_point.z, spec.order() - 1), config.eps_rank);
        if (rk - rk1 < best.second - best.first) {
            best = {rk1, rk};
            point = opt_point.z;
        }
        flat = rk == rk1;
    }
    return {best, flat};
}

}  // namespace detail

/// Runs the extension hierarchy k = k_min..k_max on a partial moment
/// assignment.
inline TmsVerdict detect_moments(const TruncatedMomentSequence &input, const TmsConfig &config = {}) {
    auto start = std::chrono::steady_clock::now();
    TruncatedMomentSequence tms = input;
    tms.normalize();
    const int k_lo = config.k_min > 0 ? config.k_min : std::max(2, (tms.degree() + 1) / 2);
    const int k_hi = config.k_max > 0 ? config.k_max : std::max(k_lo, tms.variety.default_k_max());
    if (k_lo < 2 || 2 * k_lo < tms.degree() || k_hi < k_lo) {
        throw std::invalid_argument("detect: invalid extension order range");
    }
    SdpOptions opt;
    opt.eps_feas = config.eps_feas;
    opt.max_iterations = config.max_iterations;
    TmsVerdict verdict;
    for (int k = k_lo; k <= k_hi; ++k) {
        auto spec = MomentMatrixSpec::get(tms.variety, k);
        SdpProblem p = build_instance(tms, k);
        verdict.level = k;
        verdict.sdp = solve_feasibility(p, opt);
        if (verdict.sdp.status == SdpStatus::Infeasible) {
            verdict.outcome = TmsOutcome::EntangledCertified;
            verdict.linear_contradiction = verdict.sdp.dual_certificate->linear_contradiction;
            break;
        }
        if (verdict.sdp.status == SdpStatus::Indeterminate) {
            verdict.outcome = TmsOutcome::Indeterminate;
            break;
        }
        verdict.outcome = TmsOutcome::FeasibleNotFlat;
        if (config.check_flatness) {
            Vector point;
            auto [ranks, flat] = detail::flatness_search(p, *spec, config, point);
            if (ranks.second != std::numeric_limits<int>::max()) {
                verdict.ranks = ranks;
            }
            if (flat) {
                verdict.outcome = TmsOutcome::SeparableFlat;
                break;
            }
        }
    }
    verdict.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return verdict;
}

/// Moments of a measurement set taken from a symmetric tensor.
inline TruncatedMomentSequence moments_for_set(const TensorRepr &x, const MeasurementSet &set) {
    if (set.universe() != Universe::Symmetric) {
        throw std::invalid_argument("moments_for_set: symmetric tensors need a symmetric measurement set");
    }
    if (x.spin().num_qubits() < 2) {
        throw std::invalid_argument("moments_for_set: the symmetric universe needs at least two qubits");
    }
    auto all = moments_from_tensor(x);
    TruncatedMomentSequence tms{VarietySpec::sphere(), {}};
    for (const auto &m : effective_moments(set)) {
        tms.known.emplace(m, all.at(m));
    }
    return tms;
}

inline TruncatedMomentSequence moments_for_set(const TwoQubitTensor &x, const MeasurementSet &set) {
    if (set.universe() != Universe::TwoQubitFull) {
        throw std::invalid_argument("moments_for_set: two-qubit tensors need a two-qubit measurement set");
    }
    auto all = moments_from_two_qubit_tensor(x);
    TruncatedMomentSequence tms{VarietySpec::sphere_pair(), {}};
    for (const auto &m : effective_moments(set)) {
        tms.known.emplace(m, all.at(m));
    }
    return tms;
}

inline TmsVerdict detect(const TensorRepr &x, const MeasurementSet &set, const TmsConfig &config = {}) {
    return detect_moments(moments_for_set(x, set), config);
}

inline TmsVerdict detect(const TwoQubitTensor &x, const MeasurementSet &set, const TmsConfig &config = {}) {
    return detect_moments(moments_for_set(x, set), config);
}

/// Every moment of the tensor fixed.
inline TmsVerdict detect_full_tomography(const TensorRepr &x, const TmsConfig &config = {}) {
    TruncatedMomentSequence tms{VarietySpec::sphere(), moments_from_tensor(x)};
    return detect_moments(tms, config);
}

inline TmsVerdict detect_full_tomography(const TwoQubitTensor &x, const TmsConfig &config = {}) {
    TruncatedMomentSequence tms{VarietySpec::sphere_pair(), moments_from_two_qubit_tensor(x)};
    return detect_moments(tms, config);
}

}  // namespace tmsent
