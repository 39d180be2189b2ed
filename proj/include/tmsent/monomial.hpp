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

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmsent {

inline constexpr int kMaxVariables = 6;

/// Exponent vector of a monomial x^alpha in up to six real variables.
///
/// The symmetric (single Bloch sphere) case uses variables 0..2; the
/// two-qubit product case uses 0..2 for qubit 1 and 3..5 for qubit 2.
struct Monomial {
    std::array<std::uint8_t, kMaxVariables> exponents{};

    constexpr Monomial() = default;

    constexpr Monomial(int a, int b, int c) {
        exponents[0] = static_cast<std::uint8_t>(a);
        exponents[1] = static_cast<std::uint8_t>(b);
        exponents[2] = static_cast<std::uint8_t>(c);
    }

    static constexpr Monomial product(int a1, int b1, int c1, int a2, int b2, int c2) {
        Monomial m(a1, b1, c1);
        m.exponents[3] = static_cast<std::uint8_t>(a2);
        m.exponents[4] = static_cast<std::uint8_t>(b2);
        m.exponents[5] = static_cast<std::uint8_t>(c2);
        return m;
    }

    static constexpr Monomial unit(int var, int power = 1) {
        Monomial m;
        m.exponents[var] = static_cast<std::uint8_t>(power);
        return m;
    }

    constexpr int degree() const {
        int d = 0;
        for (auto e : exponents) {
            d += e;
        }
        return d;
    }

    constexpr int operator[](int var) const {
        return exponents[var];
    }

    constexpr Monomial operator+(const Monomial &other) const {
        Monomial r;
        for (int i = 0; i < kMaxVariables; ++i) {
            r.exponents[i] = static_cast<std::uint8_t>(exponents[i] + other.exponents[i]);
        }
        return r;
    }

    constexpr auto operator<=>(const Monomial &) const = default;
};

/// Renders alpha as "(a,b,c)" or "(a,b,c|d,e,f)" for the product case.
inline std::string to_string(const Monomial &m, int num_vars = 3) {
    std::string s = "(";
    for (int i = 0; i < num_vars; ++i) {
        if (i > 0) {
            s += (i == 3) ? "|" : ",";
        }
        s += std::to_string(m[i]);
    }
    return s + ")";
}

/// All monomials of degree <= max_degree in num_vars variables, in graded
/// order: by degree, then lexicographically with higher powers of earlier
/// variables first (x^2, xy, xz, y^2, yz, z^2, ...).
class MonomialBasis {
   public:
    MonomialBasis() = default;

    MonomialBasis(int num_vars, int max_degree) : num_vars_(num_vars), max_degree_(max_degree) {
        if (num_vars < 1 || num_vars > kMaxVariables || max_degree < 0) {
            throw std::invalid_argument("MonomialBasis: unsupported shape");
        }
        radix_ = max_degree + 1;
        std::size_t table = 1;
        for (int i = 0; i < num_vars; ++i) {
            table *= static_cast<std::size_t>(radix_);
        }
        lookup_.assign(table, -1);
        for (int d = 0; d <= max_degree; ++d) {
            Monomial m;
            emit(m, 0, d);
        }
    }

    int num_vars() const {
        return num_vars_;
    }
    int max_degree() const {
        return max_degree_;
    }
    int size() const {
        return static_cast<int>(items_.size());
    }
    const Monomial &operator[](int i) const {
        return items_[i];
    }
    const std::vector<Monomial> &items() const {
        return items_;
    }

    /// Position of m in the basis, or -1 when m is not a member.
    int index_of(const Monomial &m) const {
        std::size_t key = 0;
        for (int i = kMaxVariables - 1; i >= 0; --i) {
            if (i >= num_vars_) {
                if (m[i] != 0) {
                    return -1;
                }
                continue;
            }
            if (m[i] >= radix_) {
                return -1;
            }
            key = key * radix_ + m[i];
        }
        return lookup_[key];
    }

    bool contains(const Monomial &m) const {
        return index_of(m) >= 0;
    }

   private:
    void emit(Monomial &m, int var, int remaining) {
        if (var == num_vars_ - 1) {
            m.exponents[var] = static_cast<std::uint8_t>(remaining);
            std::size_t key = 0;
            for (int i = num_vars_ - 1; i >= 0; --i) {
                key = key * radix_ + m[i];
            }
            lookup_[key] = static_cast<int>(items_.size());
            items_.push_back(m);
            m.exponents[var] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            m.exponents[var] = static_cast<std::uint8_t>(e);
            emit(m, var + 1, remaining - e);
        }
        m.exponents[var] = 0;
    }

    int num_vars_ = 0;
    int max_degree_ = 0;
    int radix_ = 1;
    std::vector<Monomial> items_;
    std::vector<int> lookup_;
};

}  // namespace tmsent

template <>
struct std::hash<tmsent::Monomial> {
    std::size_t operator()(const tmsent::Monomial &m) const noexcept {
        std::size_t h = 0;
        for (auto e : m.exponents) {
            h = h * 131 + e;
        }
        return h;
    }
};
