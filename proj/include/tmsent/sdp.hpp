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
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tmsent/common.hpp"

namespace tmsent {

/// One nonzero of a symmetric coefficient matrix; (row, col) and (col, row)
/// are implied together, so store each off-diagonal pair once.
struct MatrixEntry {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Affine symmetric matrix map z -> constant + sum_v z_v A_v.
struct PsdBlock {
    int dim = 0;
    Matrix constant;
    /// coefficients[v] lists the entries of A_v.
    std::vector<std::vector<MatrixEntry>> coefficients;

    Matrix evaluate(const Vector &z) const {
        Matrix m = constant;
        for (std::size_t v = 0; v < coefficients.size(); ++v) {
            if (z(v) == 0.0) {
                continue;
            }
            for (const auto &e : coefficients[v]) {
                m(e.row, e.col) += z(v) * e.value;
                if (e.row != e.col) {
                    m(e.col, e.row) += z(v) * e.value;
                }
            }
        }
        return m;
    }
};

/// sum_v coefficient * z_v = rhs.
struct LinearEquality {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
};

/// Feasibility instance: find z with every block PSD, the equalities
/// satisfied and lower <= z <= upper.
struct SdpProblem {
    int num_vars = 0;
    std::vector<PsdBlock> blocks;
    std::vector<LinearEquality> equalities;
    Vector lower;
    Vector upper;

    /// Creates an instance with the default box [-1, 1] on every variable.
    static SdpProblem with_unit_box(int num_vars) {
        SdpProblem p;
        p.num_vars = num_vars;
        p.lower = Vector::Constant(num_vars, -1.0);
        p.upper = Vector::Constant(num_vars, 1.0);
        return p;
    }

    int add_block(int dim) {
        PsdBlock b;
        b.dim = dim;
        b.constant = Matrix::Zero(dim, dim);
        b.coefficients.resize(num_vars);
        blocks.push_back(std::move(b));
        return static_cast<int>(blocks.size()) - 1;
    }

    void validate() const {
        if (num_vars < 0 || lower.size() != num_vars || upper.size() != num_vars) {
            throw InvariantError("SdpProblem: box bounds do not match the variable count");
        }
        if (blocks.empty()) {
            throw InvariantError("SdpProblem: at least one PSD block is required");
        }
        for (int v = 0; v < num_vars; ++v) {
            if (!std::isfinite(lower(v)) || !std::isfinite(upper(v)) || lower(v) > upper(v)) {
                throw InvariantError("SdpProblem: box bounds must be finite with lower <= upper");
            }
        }
        for (const auto &b : blocks) {
            if (b.constant.rows() != b.dim || b.constant.cols() != b.dim ||
                static_cast<int>(b.coefficients.size()) != num_vars) {
                throw InvariantError("SdpProblem: block shape mismatch");
            }
            if (!b.constant.allFinite() || max_abs(b.constant - b.constant.transpose()) > 0.0) {
                throw InvariantError("SdpProblem: block constants must be finite and symmetric");
            }
            for (const auto &list : b.coefficients) {
                for (const auto &e : list) {
                    if (e.row < 0 || e.col < 0 || e.row >= b.dim || e.col >= b.dim || !std::isfinite(e.value)) {
                        throw InvariantError("SdpProblem: coefficient entry out of range");
                    }
                }
            }
        }
        for (const auto &eq : equalities) {
            for (const auto &[v, c] : eq.terms) {
                if (v < 0 || v >= num_vars || !std::isfinite(c)) {
                    throw InvariantError("SdpProblem: equality references an unknown variable");
                }
            }
            if (!std::isfinite(eq.rhs)) {
                throw InvariantError("SdpProblem: equality right-hand side must be finite");
            }
        }
    }

    /// Largest absolute entry of the block data; feasibility thresholds are
    /// relative to it so verdicts do not depend on the overall scale.
    double data_scale() const {
        double s = 0.0;
        for (const auto &b : blocks) {
            s = std::max(s, max_abs(b.constant));
            for (const auto &list : b.coefficients) {
                for (const auto &e : list) {
                    s = std::max(s, std::abs(e.value));
                }
            }
        }
        return s > 0.0 ? s : 1.0;
    }
};

enum class SdpStatus { StrictlyFeasible, Infeasible, Indeterminate };

inline std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::StrictlyFeasible:
            return "STRICTLY_FEASIBLE";
        case SdpStatus::Infeasible:
            return "INFEASIBLE";
        default:
            return "INDETERMINATE";
    }
}

/// Farkas-type certificate: PSD multipliers Y_b, box multipliers and
/// equality multipliers mu such that for every z in the box
///   sum_b <M_b(z), Y_b> + sum upper_mult (u - z) + sum lower_mult (z - l)
/// equals value + residual^T z on the equality subspace. Infeasibility
/// follows when value + sum |residual_v| max(|l_v|, |u_v|) < 0.
struct DualCertificate {
    std::vector<Matrix> psd;
    Vector upper_mult;
    Vector lower_mult;
    Vector equality_mult;
    double value = 0.0;
    double residual = 0.0;
    double bound = 0.0;
    /// The equalities alone are inconsistent; only equality_mult is used.
    bool linear_contradiction = false;
};

struct SdpVerdict {
    SdpStatus status = SdpStatus::Indeterminate;
    /// Feasible: certified min eigenvalue over the blocks at primal_point.
    /// Infeasible: certified upper bound on the best achievable margin.
    double margin = 0.0;
    Vector primal_point;
    std::optional<DualCertificate> dual_certificate;
    int iterations = 0;
    std::string diagnostics;
};

struct SdpOptions {
    double eps_feas = 1e-8;
    int max_iterations = 200;
    double gap_tolerance = 1e-9;
    double certificate_tolerance = 1e-7;
    /// Stop as soon as a verified verdict is available instead of solving
    /// the margin problem to optimality.
    bool early_exit = true;
};

namespace detail {

struct SymEntry {
    int i;
    int k;
    double a;
};

/// Equality elimination z = z0 + N w with orthonormal N.
struct AffineParametrization {
    Vector z0;
    Matrix N;
    bool consistent = true;
    Vector contradiction;  // mu with E^T mu = 0 and mu^T f != 0
    Matrix E;
    Vector f;
};

inline AffineParametrization parametrize(const SdpProblem &p) {
    AffineParametrization a;
    const int nv = p.num_vars;
    const int q = static_cast<int>(p.equalities.size());
    a.E = Matrix::Zero(q, nv);
    a.f = Vector::Zero(q);
    for (int r = 0; r < q; ++r) {
        for (const auto &[v, c] : p.equalities[r].terms) {
            a.E(r, v) += c;
        }
        a.f(r) = p.equalities[r].rhs;
    }
    if (q == 0) {
        a.z0 = Vector::Zero(nv);
        a.N = Matrix::Identity(nv, nv);
        return a;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(a.E.transpose());
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    Matrix Q = qr.householderQ() * Matrix::Identity(nv, nv);
    a.N = Q.rightCols(nv - rank);
    Matrix range = Q.leftCols(rank);
    // Minimum-norm solution within the row space of E.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.E);
    cod.setThreshold(1e-12);
    a.z0 = cod.solve(a.f);
    a.z0 = range * (range.transpose() * a.z0);
    Vector resid = a.E * a.z0 - a.f;
    double scale = 1.0 + max_abs(a.f);
    if (max_abs(resid) > 1e-9 * scale) {
        a.consistent = false;
        // Left null vector of E that detects the residual.
        Eigen::JacobiSVD<Matrix> svd(a.E, Eigen::ComputeFullU);
        Vector mu = Vector::Zero(q);
        const auto &sv = svd.singularValues();
        for (int i = 0; i < q; ++i) {
            double s = i < sv.size() ? sv(i) : 0.0;
            if (s <= 1e-12 * std::max(1.0, sv.size() ? sv(0) : 1.0)) {
                mu += svd.matrixU().col(i) * svd.matrixU().col(i).dot(resid);
            }
        }
        a.contradiction = mu;
    }
    return a;
}

inline double min_eig_sym(const Matrix &m) {
    if (m.rows() == 0) {
        return std::numeric_limits<double>::infinity();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace detail

/// Checks the Farkas identity in the problem's own coordinates and fills
/// value, residual and bound. Returns true when the certificate proves
/// infeasibility.
inline bool verify_infeasibility_certificate(const SdpProblem &p, DualCertificate &cert,
                                             double tolerance = 1e-7) {
    const int nv = p.num_vars;
    auto param = detail::parametrize(p);
    if (cert.linear_contradiction) {
        if (cert.equality_mult.size() != param.E.rows()) {
            return false;
        }
        double scale = max_abs(cert.equality_mult);
        if (scale == 0.0) {
            return false;
        }
        Vector mu = cert.equality_mult / scale;
        cert.residual = max_abs(param.E.transpose() * mu);
        cert.value = -std::abs(mu.dot(param.f));
        cert.bound = cert.value;
        return cert.residual <= tolerance && std::abs(mu.dot(param.f)) > tolerance * (1.0 + cert.residual);
    }
    if (cert.psd.size() != p.blocks.size() || cert.upper_mult.size() != nv || cert.lower_mult.size() != nv) {
        return false;
    }
    double norm = 0.0;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const Matrix &y = cert.psd[b];
        if (y.rows() != p.blocks[b].dim || detail::min_eig_sym(y) < -1e-14 * std::max(1.0, y.trace())) {
            return false;
        }
        norm += y.trace();
    }
    if ((cert.upper_mult.array() < 0).any() || (cert.lower_mult.array() < 0).any()) {
        return false;
    }
    // Trace normalization turns the bound into an upper bound on the margin
    // t; pure box certificates fall back to the multiplier sum.
    if (!(norm > 0.0)) {
        norm = cert.upper_mult.sum() + cert.lower_mult.sum();
    }
    if (!(norm > 0.0)) {
        return false;
    }
    Vector g = cert.lower_mult - cert.upper_mult;
    double value = cert.upper_mult.dot(p.upper) - cert.lower_mult.dot(p.lower);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const auto &blk = p.blocks[b];
        const Matrix &y = cert.psd[b];
        value += (blk.constant.cwiseProduct(y)).sum();
        for (int v = 0; v < nv; ++v) {
            double s = 0.0;
            for (const auto &e : blk.coefficients[v]) {
                s += e.value * (e.row == e.col ? y(e.row, e.col) : y(e.row, e.col) + y(e.col, e.row));
            }
            g(v) += s;
        }
    }
    Vector mu = Vector::Zero(param.E.rows());
    if (param.E.rows() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(param.E.transpose());
        mu = cod.solve(g);
    }
    Vector r = g - param.E.transpose() * mu;
    value += mu.dot(param.f);
    double slack = 0.0;
    for (int v = 0; v < nv; ++v) {
        slack += std::abs(r(v)) * std::max(std::abs(p.lower(v)), std::abs(p.upper(v)));
    }
    cert.equality_mult = mu;
    cert.value = value / norm;
    cert.residual = max_abs(r) / norm;
    cert.bound = (value + slack) / norm;
    return cert.residual <= tolerance * p.data_scale() && cert.bound < 0.0;
}

/// Smallest block eigenvalue at z, or -inf when z leaves the box or breaks
/// an equality by more than 1e-9.
inline double verified_margin(const SdpProblem &p, const Vector &z) {
    for (int v = 0; v < p.num_vars; ++v) {
        if (z(v) < p.lower(v) - 1e-12 || z(v) > p.upper(v) + 1e-12) {
            return -std::numeric_limits<double>::infinity();
        }
    }
    for (const auto &eq : p.equalities) {
        double s = -eq.rhs;
        for (const auto &[v, c] : eq.terms) {
            s += c * z(v);
        }
        if (std::abs(s) > 1e-9 * (1.0 + std::abs(eq.rhs))) {
            return -std::numeric_limits<double>::infinity();
        }
    }
    double m = std::numeric_limits<double>::infinity();
    for (const auto &b : p.blocks) {
        m = std::min(m, detail::min_eig_sym(b.evaluate(z)));
    }
    return m;
}

namespace detail {

/// Primal-dual interior-point method for
///   maximize  b^T y  subject to  S_j = C_j - sum_i y_i A_ij PSD,  s = c - A_lp y >= 0
/// where y = (w, t), z = z0 + N w parametrizes the equality subspace, the
/// PSD blocks are M_j(z) - t I (t optional) and the LP block is the box.
/// Nesterov-Todd scaling with Mehrotra predictor-corrector.
class ConicSolver {
   public:
    enum class Outcome { Converged, EarlyFeasible, EarlyInfeasible, IterationLimit, NumericalFailure };

    struct Result {
        Outcome outcome = Outcome::NumericalFailure;
        Vector z;
        double t = 0.0;
        double pobj = 0.0;
        double dobj = 0.0;
        int iterations = 0;
        std::vector<Matrix> X;
        Vector xu;
        Vector xl;
        double verified_margin = -std::numeric_limits<double>::infinity();
        std::optional<DualCertificate> certificate;
        std::string diagnostics;
    };

    ConicSolver(const SdpProblem &p, const AffineParametrization &param, bool with_t, const Vector &objective_w,
                double objective_t, const SdpOptions &options)
        : p_(p), param_(param), with_t_(with_t), options_(options) {
        nv_ = p.num_vars;
        mw_ = static_cast<int>(param.N.cols());
        m_ = mw_ + (with_t ? 1 : 0);
        b_ = Vector::Zero(m_);
        b_.head(mw_) = objective_w;
        if (with_t) {
            b_(mw_) = objective_t;
        }
        for (const auto &blk : p.blocks) {
            Block cb;
            cb.n = blk.dim;
            cb.C = blk.evaluate(param.z0);
            cb.A.resize(nv_);
            for (int v = 0; v < nv_; ++v) {
                for (const auto &e : blk.coefficients[v]) {
                    cb.A[v].push_back({e.row, e.col, e.value});
                    if (e.row != e.col) {
                        cb.A[v].push_back({e.col, e.row, e.value});
                    }
                }
            }
            blocks_.push_back(std::move(cb));
        }
        cu_ = p.upper - param.z0;
        cl_ = param.z0 - p.lower;
        scale_ = p.data_scale();
        threshold_ = options.eps_feas * scale_;
    }

    Result solve() {
        Result res;
        const int nb = static_cast<int>(blocks_.size());
        int nu = 0;
        for (const auto &blk : blocks_) {
            nu += blk.n;
        }
        const double nu_total = nu + 2.0 * nv_;

        // Infeasible starting point.
        std::vector<Matrix> X(nb), S(nb);
        double max_a = 1.0;
        for (int j = 0; j < nb; ++j) {
            const auto &blk = blocks_[j];
            double anorm = 0.0;
            for (int v = 0; v < nv_; ++v) {
                double s = 0.0;
                for (const auto &e : blk.A[v]) {
                    s += e.a * e.a;
                }
                anorm = std::max(anorm, std::sqrt(s));
            }
            max_a = std::max(max_a, anorm);
            double xi = std::max({10.0, std::sqrt(double(blk.n)), blk.n * (1.0 + max_abs(b_)) / (1.0 + anorm)});
            double eta = std::max({10.0, std::sqrt(double(blk.n)), blk.C.norm(), anorm});
            X[j] = xi * Matrix::Identity(blk.n, blk.n);
            S[j] = eta * Matrix::Identity(blk.n, blk.n);
        }
        Vector xu = Vector::Constant(nv_, 10.0), xl = Vector::Constant(nv_, 10.0);
        double lp_eta = std::max(10.0, std::max(max_abs(cu_), max_abs(cl_)));
        Vector su = Vector::Constant(nv_, lp_eta), sl = Vector::Constant(nv_, lp_eta);
        Vector y = Vector::Zero(m_);

        const double bnorm = b_.norm();
        double cnorm = 0.0;
        for (const auto &blk : blocks_) {
            cnorm += blk.C.norm();
        }

        for (int iter = 1; iter <= options_.max_iterations; ++iter) {
            res.iterations = iter;
            // Residuals.
            std::vector<Matrix> Rd(nb);
            std::vector<Matrix> adj = adjoint(y);
            double dinf = 0.0;
            for (int j = 0; j < nb; ++j) {
                Rd[j] = blocks_[j].C - adj[j] - S[j];
                dinf += Rd[j].norm();
            }
            Vector nw = param_.N * y.head(mw_);
            Vector rdu = cu_ - nw - su;
            Vector rdl = cl_ + nw - sl;
            dinf += std::sqrt(rdu.squaredNorm() + rdl.squaredNorm());
            Vector rp = b_ - apply(X) - lp_apply(xu, xl);
            double pinf = rp.norm() / (1.0 + bnorm);
            dinf /= (1.0 + cnorm);

            double gap = 0.0;
            double pobj = cu_.dot(xu) + cl_.dot(xl);
            for (int j = 0; j < nb; ++j) {
                gap += X[j].cwiseProduct(S[j]).sum();
                pobj += blocks_[j].C.cwiseProduct(X[j]).sum();
            }
            gap += xu.dot(su) + xl.dot(sl);
            double dobj = b_.dot(y);
            double mu = gap / nu_total;
            res.pobj = pobj;
            res.dobj = dobj;
            record(res, y, X, xu, xl);

            if (with_t_ && options_.early_exit) {
                if (try_feasible(res, y)) {
                    res.outcome = Outcome::EarlyFeasible;
                    return res;
                }
                if (pobj < -threshold_ && try_infeasible(res, X, xu, xl)) {
                    res.outcome = Outcome::EarlyInfeasible;
                    return res;
                }
            }
            double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            if (relgap < options_.gap_tolerance && pinf < 1e-9 && dinf < 1e-9) {
                res.outcome = Outcome::Converged;
                return res;
            }

            // Nesterov-Todd scaling.
            std::vector<Matrix> G(nb), Ginv(nb), W(nb);
            std::vector<Vector> D(nb);
            for (int j = 0; j < nb; ++j) {
                Eigen::LLT<Matrix> lx(X[j]), ls(S[j]);
                if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) {
                    res.outcome = Outcome::NumericalFailure;
                    res.diagnostics = "iterate lost positive definiteness";
                    return res;
                }
                Matrix LX = lx.matrixL();
                Matrix LS = ls.matrixL();
                Eigen::JacobiSVD<Matrix> svd(LS.transpose() * LX, Eigen::ComputeFullU | Eigen::ComputeFullV);
                D[j] = svd.singularValues();
                if (D[j].minCoeff() <= 0.0) {
                    res.outcome = Outcome::NumericalFailure;
                    res.diagnostics = "degenerate scaling";
                    return res;
                }
                Vector dis = D[j].cwiseSqrt().cwiseInverse();
                G[j] = LX * svd.matrixV() * dis.asDiagonal();
                Ginv[j] = D[j].cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                          LX.triangularView<Eigen::Lower>().solve(Matrix::Identity(blocks_[j].n, blocks_[j].n));
                W[j] = G[j] * G[j].transpose();
            }
            Vector du = xu.cwiseQuotient(su), dl = xl.cwiseQuotient(sl);

            Matrix H = schur(W, du, dl);
            Eigen::LLT<Matrix> chol(H);
            if (chol.info() != Eigen::Success) {
                double reg = 1e-12 * std::max(1.0, max_abs(H.diagonal()));
                H.diagonal().array() += reg;
                chol.compute(H);
                if (chol.info() != Eigen::Success) {
                    res.outcome = Outcome::NumericalFailure;
                    res.diagnostics = "Schur complement is not positive definite";
                    return res;
                }
            }

            // Predictor.
            std::vector<Matrix> Rc(nb);
            for (int j = 0; j < nb; ++j) {
                Rc[j] = -X[j];
            }
            Vector rcu = -xu.cwiseProduct(su), rcl = -xl.cwiseProduct(sl);
            Direction aff = direction(chol, W, Rc, Rd, rp, rcu, rcl, rdu, rdl, xu, xl, su, sl);
            double ap = std::min(1.0, max_step(X, aff.dX, xu, aff.dxu, xl, aff.dxl));
            double ad = std::min(1.0, max_step(S, aff.dS, su, aff.dsu, sl, aff.dsl));
            double mu_aff = 0.0;
            for (int j = 0; j < nb; ++j) {
                mu_aff += (X[j] + ap * aff.dX[j]).cwiseProduct(S[j] + ad * aff.dS[j]).sum();
            }
            mu_aff += (xu + ap * aff.dxu).dot(su + ad * aff.dsu) + (xl + ap * aff.dxl).dot(sl + ad * aff.dsl);
            mu_aff /= nu_total;
            double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

            // Corrector.
            for (int j = 0; j < nb; ++j) {
                const int n = blocks_[j].n;
                Matrix dXs = Ginv[j] * aff.dX[j] * Ginv[j].transpose();
                Matrix dSs = G[j].transpose() * aff.dS[j] * G[j];
                Matrix R = -0.5 * (dXs * dSs + dSs * dXs);
                R.diagonal().array() += sigma * mu;
                R.diagonal() -= D[j].cwiseProduct(D[j]);
                Matrix Z(n, n);
                for (int a = 0; a < n; ++a) {
                    for (int c = 0; c < n; ++c) {
                        Z(a, c) = 2.0 * R(a, c) / (D[j](a) + D[j](c));
                    }
                }
                Rc[j] = G[j] * Z * G[j].transpose();
                Rc[j] = 0.5 * (Rc[j] + Rc[j].transpose()).eval();
            }
            rcu = (Vector::Constant(nv_, sigma * mu) - xu.cwiseProduct(su) - aff.dxu.cwiseProduct(aff.dsu));
            rcl = (Vector::Constant(nv_, sigma * mu) - xl.cwiseProduct(sl) - aff.dxl.cwiseProduct(aff.dsl));
            Direction dir = direction(chol, W, Rc, Rd, rp, rcu, rcl, rdu, rdl, xu, xl, su, sl);
            double pmax = max_step(X, dir.dX, xu, dir.dxu, xl, dir.dxl);
            double dmax = max_step(S, dir.dS, su, dir.dsu, sl, dir.dsl);
            double gamma = 0.9 + 0.09 * std::min(ap, ad);
            double alpha_p = std::min(1.0, gamma * pmax);
            double alpha_d = std::min(1.0, gamma * dmax);

            for (int j = 0; j < nb; ++j) {
                X[j] += alpha_p * dir.dX[j];
                S[j] += alpha_d * dir.dS[j];
                X[j] = 0.5 * (X[j] + X[j].transpose()).eval();
                S[j] = 0.5 * (S[j] + S[j].transpose()).eval();
            }
            xu += alpha_p * dir.dxu;
            xl += alpha_p * dir.dxl;
            su += alpha_d * dir.dsu;
            sl += alpha_d * dir.dsl;
            y += alpha_d * dir.dy;
            if (!y.allFinite()) {
                res.outcome = Outcome::NumericalFailure;
                res.diagnostics = "non-finite iterate";
                return res;
            }
        }
        res.outcome = Outcome::IterationLimit;
        res.diagnostics = "iteration limit reached";
        return res;
    }

    double threshold() const {
        return threshold_;
    }

    /// Accepts y = (w, t) when z(w) verifiably clears the threshold.
    bool try_feasible(Result &res, const Vector &y) const {
        if (y(mw_) <= threshold_) {
            return false;
        }
        Vector z = param_.z0 + param_.N * y.head(mw_);
        for (int v = 0; v < nv_; ++v) {
            if (z(v) < p_.lower(v) - 1e-12 || z(v) > p_.upper(v) + 1e-12) {
                return false;
            }
        }
        for (const auto &blk : p_.blocks) {
            Matrix m = blk.evaluate(z);
            m.diagonal().array() -= threshold_;
            Eigen::LLT<Matrix> l(m);
            if (l.info() != Eigen::Success) {
                return false;
            }
        }
        double margin = verified_margin(p_, z);
        if (!(margin > threshold_)) {
            return false;
        }
        res.z = z;
        res.verified_margin = margin;
        return true;
    }

    bool try_infeasible(Result &res, const std::vector<Matrix> &X, const Vector &xu, const Vector &xl) const {
        DualCertificate cert;
        cert.psd = X;
        cert.upper_mult = xu;
        cert.lower_mult = xl;
        if (!verify_infeasibility_certificate(p_, cert, options_.certificate_tolerance)) {
            return false;
        }
        if (!(cert.bound < -threshold_)) {
            return false;
        }
        res.certificate = cert;
        return true;
    }

   private:
    struct Block {
        int n = 0;
        Matrix C;
        std::vector<std::vector<SymEntry>> A;
    };

    struct Direction {
        Vector dy;
        std::vector<Matrix> dX, dS;
        Vector dxu, dxl, dsu, dsl;
    };

    /// Raw inner products g_v = sum_j <A_vj, M_j>.
    Vector raw_inner(const std::vector<Matrix> &M) const {
        Vector g = Vector::Zero(nv_);
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            for (int v = 0; v < nv_; ++v) {
                double s = 0.0;
                for (const auto &e : blocks_[j].A[v]) {
                    s += e.a * M[j](e.i, e.k);
                }
                g(v) += s;
            }
        }
        return g;
    }

    /// A(M)_i = <A_i, M> in y coordinates.
    Vector apply(const std::vector<Matrix> &M) const {
        Vector out(m_);
        out.head(mw_) = -(param_.N.transpose() * raw_inner(M));
        if (with_t_) {
            double tr = 0.0;
            for (const auto &mm : M) {
                tr += mm.trace();
            }
            out(mw_) = tr;
        }
        return out;
    }

    Vector lp_apply(const Vector &xu, const Vector &xl) const {
        Vector out = Vector::Zero(m_);
        out.head(mw_) = param_.N.transpose() * (xu - xl);
        return out;
    }

    /// sum_i y_i A_i per block.
    std::vector<Matrix> adjoint(const Vector &y) const {
        Vector u = -(param_.N * y.head(mw_));
        std::vector<Matrix> out;
        for (const auto &blk : blocks_) {
            Matrix m = Matrix::Zero(blk.n, blk.n);
            for (int v = 0; v < nv_; ++v) {
                if (u(v) == 0.0) {
                    continue;
                }
                for (const auto &e : blk.A[v]) {
                    m(e.i, e.k) += u(v) * e.a;
                }
            }
            if (with_t_) {
                m.diagonal().array() += y(mw_);
            }
            out.push_back(std::move(m));
        }
        return out;
    }

    Matrix schur(const std::vector<Matrix> &W, const Vector &du, const Vector &dl) const {
        Matrix Hraw = Matrix::Zero(nv_, nv_);
        Vector ht = Vector::Zero(nv_);
        double tt = 0.0;
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            const auto &blk = blocks_[j];
            const Matrix &w = W[j];
            Matrix B(blk.n, blk.n);
            for (int s = 0; s < nv_; ++s) {
                if (blk.A[s].empty()) {
                    continue;
                }
                B.setZero();
                for (const auto &e : blk.A[s]) {
                    B.noalias() += e.a * w.col(e.i) * w.row(e.k);
                }
                for (int r = 0; r <= s; ++r) {
                    double h = 0.0;
                    for (const auto &e : blk.A[r]) {
                        h += e.a * B(e.k, e.i);
                    }
                    Hraw(r, s) += h;
                }
            }
            if (with_t_) {
                Matrix w2 = w * w;
                for (int v = 0; v < nv_; ++v) {
                    double h = 0.0;
                    for (const auto &e : blk.A[v]) {
                        h += e.a * w2(e.k, e.i);
                    }
                    ht(v) += h;
                }
                tt += w.squaredNorm();
            }
        }
        Hraw.triangularView<Eigen::StrictlyLower>() = Hraw.transpose();
        Hraw.diagonal() += du + dl;
        Matrix H(m_, m_);
        Matrix HN = Hraw * param_.N;
        H.topLeftCorner(mw_, mw_) = param_.N.transpose() * HN;
        if (with_t_) {
            Vector c = -(param_.N.transpose() * ht);
            H.block(0, mw_, mw_, 1) = c;
            H.block(mw_, 0, 1, mw_) = c.transpose();
            H(mw_, mw_) = tt;
        }
        return H;
    }

    Direction direction(const Eigen::LLT<Matrix> &chol, const std::vector<Matrix> &W, const std::vector<Matrix> &Rc,
                        const std::vector<Matrix> &Rd, const Vector &rp, const Vector &rcu, const Vector &rcl,
                        const Vector &rdu, const Vector &rdl, const Vector &xu, const Vector &xl, const Vector &su,
                        const Vector &sl) const {
        const int nb = static_cast<int>(blocks_.size());
        std::vector<Matrix> WRdW(nb);
        for (int j = 0; j < nb; ++j) {
            WRdW[j] = W[j] * Rd[j] * W[j];
        }
        Vector tu = (rcu - xu.cwiseProduct(rdu)).cwiseQuotient(su);
        Vector tl = (rcl - xl.cwiseProduct(rdl)).cwiseQuotient(sl);
        Vector rhs = rp - apply(Rc) + apply(WRdW) - lp_apply(tu, tl);
        Direction d;
        d.dy = chol.solve(rhs);
        std::vector<Matrix> adj = adjoint(d.dy);
        d.dX.resize(nb);
        d.dS.resize(nb);
        for (int j = 0; j < nb; ++j) {
            d.dS[j] = Rd[j] - adj[j];
            d.dX[j] = Rc[j] - W[j] * d.dS[j] * W[j];
            d.dX[j] = 0.5 * (d.dX[j] + d.dX[j].transpose()).eval();
        }
        Vector nw = param_.N * d.dy.head(mw_);
        d.dsu = rdu - nw;
        d.dsl = rdl + nw;
        d.dxu = (rcu - xu.cwiseProduct(d.dsu)).cwiseQuotient(su);
        d.dxl = (rcl - xl.cwiseProduct(d.dsl)).cwiseQuotient(sl);
        return d;
    }

    static double max_step(const std::vector<Matrix> &M, const std::vector<Matrix> &dM, const Vector &a,
                           const Vector &da, const Vector &b, const Vector &db) {
        double alpha = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < M.size(); ++j) {
            Eigen::LLT<Matrix> l(M[j]);
            Matrix Linv = l.matrixL().solve(Matrix::Identity(M[j].rows(), M[j].cols()));
            Matrix T = Linv * dM[j] * Linv.transpose();
            double lmin = min_eig_sym(0.5 * (T + T.transpose()));
            if (lmin < 0) {
                alpha = std::min(alpha, -1.0 / lmin);
            }
        }
        for (int i = 0; i < a.size(); ++i) {
            if (da(i) < 0) {
                alpha = std::min(alpha, -a(i) / da(i));
            }
            if (db(i) < 0) {
                alpha = std::min(alpha, -b(i) / db(i));
            }
        }
        return alpha;
    }

    void record(Result &res, const Vector &y, const std::vector<Matrix> &X, const Vector &xu, const Vector &xl) const {
        res.z = param_.z0 + param_.N * y.head(mw_);
        res.t = with_t_ ? y(mw_) : 0.0;
        res.X = X;
        res.xu = xu;
        res.xl = xl;
    }

    const SdpProblem &p_;
    const AffineParametrization &param_;
    bool with_t_;
    SdpOptions options_;
    int nv_ = 0;
    int mw_ = 0;
    int m_ = 0;
    Vector b_;
    std::vector<Block> blocks_;
    Vector cu_, cl_;
    double scale_ = 1.0;
    double threshold_ = 0.0;

};

}  // namespace detail

/// Decides strict feasibility through the margin problem
///   maximize t  subject to  M_b(z) - t I PSD, equalities, box.
/// Every verdict other than INDETERMINATE is re-verified from scratch: a
/// feasible point by dense eigenvalues, an infeasibility certificate by the
/// Farkas identity.
inline SdpVerdict solve_feasibility(const SdpProblem &p, const SdpOptions &options = {}) {
    if (!(options.eps_feas > 0)) {
        throw std::invalid_argument("solve_feasibility: eps_feas must be positive");
    }
    p.validate();
    SdpVerdict verdict;
    auto param = detail::parametrize(p);
    const double threshold = options.eps_feas * p.data_scale();

    if (!param.consistent) {
        DualCertificate cert;
        cert.linear_contradiction = true;
        cert.equality_mult = param.contradiction;
        if (verify_infeasibility_certificate(p, cert, options.certificate_tolerance)) {
            verdict.status = SdpStatus::Infeasible;
            verdict.margin = -std::numeric_limits<double>::infinity();
            verdict.dual_certificate = cert;
            verdict.diagnostics = "linear equalities are inconsistent";
        } else {
            verdict.diagnostics = "inconsistent equalities without a verifiable certificate";
        }
        return verdict;
    }

    if (param.N.cols() == 0) {
        // Every variable is fixed: evaluate directly.
        Vector z = param.z0;
        for (int v = 0; v < p.num_vars; ++v) {
            if (z(v) > p.upper(v) + 1e-12 || z(v) < p.lower(v) - 1e-12) {
                DualCertificate cert;
                for (const auto &b : p.blocks) {
                    cert.psd.push_back(Matrix::Zero(b.dim, b.dim));
                }
                cert.upper_mult = Vector::Zero(p.num_vars);
                cert.lower_mult = Vector::Zero(p.num_vars);
                (z(v) > p.upper(v) ? cert.upper_mult : cert.lower_mult)(v) = 1.0;
                if (verify_infeasibility_certificate(p, cert, options.certificate_tolerance)) {
                    verdict.status = SdpStatus::Infeasible;
                    verdict.margin = cert.bound;
                    verdict.dual_certificate = cert;
                    verdict.diagnostics = "fixed variable outside its box";
                }
                return verdict;
            }
        }
        double best = std::numeric_limits<double>::infinity();
        int worst_block = 0;
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            double m = detail::min_eig_sym(p.blocks[b].evaluate(z));
            if (m < best) {
                best = m;
                worst_block = static_cast<int>(b);
            }
        }
        verdict.primal_point = z;
        if (best > threshold) {
            verdict.status = SdpStatus::StrictlyFeasible;
            verdict.margin = verified_margin(p, z);
        } else if (best < -threshold) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(p.blocks[worst_block].evaluate(z));
            DualCertificate cert;
            for (const auto &b : p.blocks) {
                cert.psd.push_back(Matrix::Zero(b.dim, b.dim));
            }
            cert.psd[worst_block] = es.eigenvectors().col(0) * es.eigenvectors().col(0).transpose();
            cert.upper_mult = Vector::Zero(p.num_vars);
            cert.lower_mult = Vector::Zero(p.num_vars);
            if (verify_infeasibility_certificate(p, cert, options.certificate_tolerance)) {
                verdict.status = SdpStatus::Infeasible;
                verdict.margin = cert.bound;
                verdict.dual_certificate = cert;
            } else {
                verdict.diagnostics = "negative eigenvalue without a verifiable certificate";
            }
        } else {
            verdict.margin = best;
            verdict.diagnostics = "margin within tolerance of zero";
        }
        return verdict;
    }

    Vector bw = Vector::Zero(param.N.cols());
    detail::ConicSolver solver(p, param, true, bw, 1.0, options);
    auto res = solver.solve();
    verdict.iterations = res.iterations;
    verdict.diagnostics = res.diagnostics;
    using Outcome = detail::ConicSolver::Outcome;
    if (res.outcome == Outcome::EarlyFeasible) {
        verdict.status = SdpStatus::StrictlyFeasible;
        verdict.margin = res.verified_margin;
        verdict.primal_point = res.z;
        return verdict;
    }
    if (res.outcome == Outcome::EarlyInfeasible) {
        verdict.status = SdpStatus::Infeasible;
        verdict.margin = res.certificate->bound;
        verdict.dual_certificate = res.certificate;
        return verdict;
    }
    // Converged or stopped: decide from the last iterate, verifying either way.
    Eigen::VectorXd y(param.N.cols() + 1);
    y.head(param.N.cols()) = param.N.transpose() * (res.z - param.z0);
    y(param.N.cols()) = res.t;
    verdict.primal_point = res.z;
    if (res.t > threshold && solver.try_feasible(res, y)) {
        verdict.status = SdpStatus::StrictlyFeasible;
        verdict.margin = res.verified_margin;
        verdict.primal_point = res.z;
        return verdict;
    }
    if (res.pobj < -threshold && solver.try_infeasible(res, res.X, res.xu, res.xl)) {
        verdict.status = SdpStatus::Infeasible;
        verdict.margin = res.certificate->bound;
        verdict.dual_certificate = res.certificate;
        return verdict;
    }
    verdict.margin = res.t;
    if (verdict.diagnostics.empty()) {
        verdict.diagnostics = "optimal margin within tolerance of zero";
    }
    return verdict;
}

enum class LinearStatus { Optimal, Failed };

struct LinearOptimum {
    LinearStatus status = LinearStatus::Failed;
    Vector z;
    double value = 0.0;
    int iterations = 0;
};

/// minimize objective^T z over the feasible set of p (no margin variable).
inline LinearOptimum minimize_linear(const SdpProblem &p, const Vector &objective, const SdpOptions &options = {}) {
    p.validate();
    if (objective.size() != p.num_vars) {
        throw std::invalid_argument("minimize_linear: objective size mismatch");
    }
    auto param = detail::parametrize(p);
    LinearOptimum out;
    if (!param.consistent) {
        return out;
    }
    if (param.N.cols() == 0) {
        out.status = LinearStatus::Optimal;
        out.z = param.z0;
        out.value = objective.dot(out.z);
        return out;
    }
    SdpOptions opt = options;
    opt.early_exit = false;
    Vector bw = -(param.N.transpose() * objective);
    detail::ConicSolver solver(p, param, false, bw, 0.0, opt);
    auto res = solver.solve();
    out.iterations = res.iterations;
    out.z = res.z;
    out.value = objective.dot(res.z);
    if (res.outcome == detail::ConicSolver::Outcome::Converged ||
        (res.outcome != detail::ConicSolver::Outcome::NumericalFailure && res.z.allFinite())) {
        out.status = LinearStatus::Optimal;
    }
    if (res.outcome == detail::ConicSolver::Outcome::NumericalFailure && res.z.allFinite()) {
        // The last iterate before the breakdown is usually already accurate.
        out.status = LinearStatus::Optimal;
    }
    return out;
}

/// Writes the problem in a plain-text layout modelled on SDPA sparse:
///   num_vars N / blocks K d1 ... dK / box lines / eq lines, then one
///   "var,block,i,j,value" line per upper-triangular entry (var 0 is the
///   constant, var v >= 1 is z_{v-1}; block, i, j are 1-based).
inline void dump_problem(std::ostream &out, const SdpProblem &p) {
    out.precision(17);
    out << "num_vars " << p.num_vars << '\n';
    out << "blocks " << p.blocks.size();
    for (const auto &b : p.blocks) {
        out << ' ' << b.dim;
    }
    out << '\n';
    for (int v = 0; v < p.num_vars; ++v) {
        out << "box " << v + 1 << ' ' << p.lower(v) << ' ' << p.upper(v) << '\n';
    }
    for (const auto &eq : p.equalities) {
        out << "eq " << eq.rhs << ' ' << eq.terms.size();
        for (const auto &[v, c] : eq.terms) {
            out << ' ' << v + 1 << ' ' << c;
        }
        out << '\n';
    }
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const auto &blk = p.blocks[b];
        for (int i = 0; i < blk.dim; ++i) {
            for (int j = i; j < blk.dim; ++j) {
                if (blk.constant(i, j) != 0.0) {
                    out << 0 << ',' << b + 1 << ',' << i + 1 << ',' << j + 1 << ',' << blk.constant(i, j) << '\n';
                }
            }
        }
        for (int v = 0; v < p.num_vars; ++v) {
            for (const auto &e : blk.coefficients[v]) {
                int i = std::min(e.row, e.col), j = std::max(e.row, e.col);
                out << v + 1 << ',' << b + 1 << ',' << i + 1 << ',' << j + 1 << ',' << e.value << '\n';
            }
        }
    }
}

inline SdpProblem read_problem(std::istream &in) {
    SdpProblem p;
    std::string line;
    auto fail = [](const std::string &why) { throw std::invalid_argument("read_problem: " + why); };
    bool have_vars = false, have_blocks = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        if (line.rfind("num_vars", 0) == 0) {
            std::string tag;
            ss >> tag >> p.num_vars;
            p.lower = Vector::Constant(p.num_vars, -1.0);
            p.upper = Vector::Constant(p.num_vars, 1.0);
            have_vars = true;
        } else if (line.rfind("blocks", 0) == 0) {
            if (!have_vars) {
                fail("num_vars must precede blocks");
            }
            std::string tag;
            int k = 0;
            ss >> tag >> k;
            for (int b = 0; b < k; ++b) {
                int d = 0;
                ss >> d;
                p.add_block(d);
            }
            have_blocks = true;
        } else if (line.rfind("box", 0) == 0) {
            std::string tag;
            int v = 0;
            double lo = 0, hi = 0;
            ss >> tag >> v >> lo >> hi;
            if (v < 1 || v > p.num_vars) {
                fail("box index out of range");
            }
            p.lower(v - 1) = lo;
            p.upper(v - 1) = hi;
        } else if (line.rfind("eq", 0) == 0) {
            std::string tag;
            LinearEquality eq;
            std::size_t n = 0;
            ss >> tag >> eq.rhs >> n;
            for (std::size_t t = 0; t < n; ++t) {
                int v = 0;
                double c = 0;
                ss >> v >> c;
                eq.terms.emplace_back(v - 1, c);
            }
            p.equalities.push_back(eq);
        } else {
            if (!have_blocks) {
                fail("entries before the block line");
            }
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream es(line);
            int v, b, i, j;
            double value;
            if (!(es >> v >> b >> i >> j >> value)) {
                fail("malformed entry '" + line + "'");
            }
            if (b < 1 || b > static_cast<int>(p.blocks.size()) || v < 0 || v > p.num_vars) {
                fail("entry index out of range");
            }
            auto &blk = p.blocks[b - 1];
            if (v == 0) {
                blk.constant(i - 1, j - 1) = value;
                blk.constant(j - 1, i - 1) = value;
            } else {
                blk.coefficients[v - 1].push_back({i - 1, j - 1, value});
            }
        }
    }
    p.validate();
    return p;
}

}  // namespace tmsent
