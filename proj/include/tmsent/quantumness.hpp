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
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "tmsent/common.hpp"
#include "tmsent/spin_tensor.hpp"

namespace tmsent {

/// Deterministic Fibonacci lattice of `size` unit vectors.
inline std::vector<CoherentDirection> fibonacci_grid(int size) {
    if (size < 1) {
        throw std::invalid_argument("fibonacci_grid: size must be positive");
    }
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<CoherentDirection> grid;
    grid.reserve(size);
    for (int i = 0; i < size; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / size;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden_angle * i;
        grid.push_back(CoherentDirection::normalized({r * std::cos(phi), r * std::sin(phi), z}));
    }
    return grid;
}

/// Real coordinates of a Hermitian matrix in which the Euclidean norm is
/// the Hilbert-Schmidt norm.
inline Vector hermitian_coordinates(const ComplexMatrix &h) {
    const int d = static_cast<int>(h.rows());
    Vector v(d * d);
    int k = 0;
    for (int i = 0; i < d; ++i) {
        v(k++) = h(i, i).real();
        for (int j = i + 1; j < d; ++j) {
            v(k++) = std::sqrt(2.0) * h(i, j).real();
            v(k++) = std::sqrt(2.0) * h(i, j).imag();
        }
    }
    return v;
}

enum class QuantumnessStatus { Converged, IterationLimit };

struct QuantumnessResult {
    QuantumnessStatus status = QuantumnessStatus::Converged;
    /// Hilbert-Schmidt distance to the best grid mixture; an upper bound on Q.
    double q_value = 0.0;
    std::vector<double> weights;
    int grid_size = 0;
    int iterations = 0;

    bool converged() const {
        return status == QuantumnessStatus::Converged;
    }
};

struct QuantumnessOptions {
    double tolerance = 1e-9;
    int max_iterations = 100000;
};

/// Minimum-norm point of the convex hull of the columns of p (Wolfe's
/// algorithm). Returns barycentric weights over the columns.
inline QuantumnessResult min_norm_point(const Matrix &p, const QuantumnessOptions &options) {
    const int n = static_cast<int>(p.cols());
    QuantumnessResult result;
    result.grid_size = n;
    result.weights.assign(n, 0.0);

    double scale = p.colwise().squaredNorm().maxCoeff();
    const double eps_w = 1e-14;

    std::vector<int> active;
    Vector w;
    {
        Eigen::Index j0;
        p.colwise().squaredNorm().minCoeff(&j0);
        active.push_back(static_cast<int>(j0));
        w = Vector::Ones(1);
    }
    Vector x = p.col(active[0]);

    auto affine_minimizer = [&](const std::vector<int> &s) {
        const int m = static_cast<int>(s.size());
        Matrix kkt = Matrix::Zero(m + 1, m + 1);
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                kkt(a, b) = p.col(s[a]).dot(p.col(s[b]));
            }
            kkt(a, m) = 1.0;
            kkt(m, a) = 1.0;
        }
        Vector rhs = Vector::Zero(m + 1);
        rhs(m) = 1.0;
        Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        return Vector(sol.head(m));
    };

    int iterations = 0;
    while (true) {
        if (++iterations > options.max_iterations) {
            result.status = QuantumnessStatus::IterationLimit;
            break;
        }
        Vector dots = p.transpose() * x;
        Eigen::Index j;
        double best = dots.minCoeff(&j);
        if (x.squaredNorm() - best <= options.tolerance * scale) {
            break;
        }
        if (std::find(active.begin(), active.end(), static_cast<int>(j)) != active.end()) {
            break;
        }
        active.push_back(static_cast<int>(j));
        w.conservativeResize(w.size() + 1);
        w(w.size() - 1) = 0.0;

        while (true) {
            if (++iterations > options.max_iterations) {
                result.status = QuantumnessStatus::IterationLimit;
                break;
            }
            Vector v = affine_minimizer(active);
            if ((v.array() > eps_w).all()) {
                w = v;
                break;
            }
            double theta = 1.0;
            for (int a = 0; a < v.size(); ++a) {
                if (v(a) <= eps_w) {
                    double denom = w(a) - v(a);
                    if (denom > 0) {
                        theta = std::min(theta, w(a) / denom);
                    }
                }
            }
            w = w + theta * (v - w);
            std::vector<int> kept;
            std::vector<double> kept_w;
            for (int a = 0; a < w.size(); ++a) {
                if (w(a) > eps_w) {
                    kept.push_back(active[a]);
                    kept_w.push_back(w(a));
                }
            }
            if (kept.empty()) {
                throw NumericalError("min_norm_point: active set collapsed");
            }
            active = kept;
            w = Eigen::Map<Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
            w /= w.sum();
        }
        if (result.status != QuantumnessStatus::Converged) {
            break;
        }
        x = Vector::Zero(p.rows());
        for (int a = 0; a < w.size(); ++a) {
            x += w(a) * p.col(active[a]);
        }
    }

    for (int a = 0; a < static_cast<int>(active.size()); ++a) {
        result.weights[active[a]] = w(a);
    }
    result.q_value = x.norm();
    result.iterations = iterations;
    return result;
}

/// Coherent-state projectors of a grid as columns in Hermitian coordinates.
class CoherentGrid {
   public:
    CoherentGrid(std::vector<CoherentDirection> directions, SpinSize spin)
        : spin_(spin), directions_(std::move(directions)) {
        const int d = spin.dicke_dim();
        columns_.resize(d * d, static_cast<Eigen::Index>(directions_.size()));
        for (std::size_t i = 0; i < directions_.size(); ++i) {
            Eigen::VectorXcd v = coherent_state(directions_[i], spin);
            columns_.col(static_cast<Eigen::Index>(i)) = hermitian_coordinates(v * v.adjoint());
        }
    }

    /// Shared Fibonacci grid for (size, spin).
    static std::shared_ptr<const CoherentGrid> fibonacci(int size, SpinSize spin) {
        static std::mutex mutex;
        static std::map<std::pair<int, int>, std::shared_ptr<const CoherentGrid>> cache;
        std::lock_guard<std::mutex> lock(mutex);
        auto key = std::make_pair(size, spin.num_qubits());
        auto it = cache.find(key);
        if (it == cache.end()) {
            it = cache.emplace(key, std::make_shared<const CoherentGrid>(fibonacci_grid(size), spin)).first;
        }
        return it->second;
    }

    SpinSize spin() const {
        return spin_;
    }
    int size() const {
        return static_cast<int>(directions_.size());
    }
    const std::vector<CoherentDirection> &directions() const {
        return directions_;
    }
    const Matrix &columns() const {
        return columns_;
    }

   private:
    SpinSize spin_;
    std::vector<CoherentDirection> directions_;
    Matrix columns_;
};

/// Hilbert-Schmidt distance from rho to the convex hull of the grid's
/// coherent states.
inline QuantumnessResult quantumness(const DenseHermitian &rho, const CoherentGrid &grid,
                                     const QuantumnessOptions &options = {}) {
    if (rho.dim() != grid.spin().dicke_dim()) {
        throw std::invalid_argument("quantumness: dimension does not match spin");
    }
    Matrix shifted = grid.columns().colwise() - hermitian_coordinates(rho.matrix());
    return min_norm_point(shifted, options);
}

inline QuantumnessResult quantumness(const DenseHermitian &rho, SpinSize spin, int grid_size = 800,
                                     const QuantumnessOptions &options = {}) {
    if (grid_size < 50) {
        throw std::invalid_argument("quantumness: grid_size must be at least 50");
    }
    return quantumness(rho, *CoherentGrid::fibonacci(grid_size, spin), options);
}

}  // namespace tmsent
