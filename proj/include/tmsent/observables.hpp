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
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tmsent/monomial.hpp"

namespace tmsent {

/// Which family of Pauli observables a measurement set draws from.
enum class Universe {
    /// Symmetric two-qubit states: x, y, z, xx, xy, xz, yy, yz (zz is
    /// redundant given xx and yy and is left out).
    Symmetric,
    /// General two-qubit states: the 15 non-identity Pauli products.
    TwoQubitFull,
};

inline std::string to_string(Universe u) {
    return u == Universe::Symmetric ? "sym" : "full2q";
}

inline Universe parse_universe(const std::string &s) {
    if (s == "sym" || s == "symmetric") {
        return Universe::Symmetric;
    }
    if (s == "full2q" || s == "two-qubit-full") {
        return Universe::TwoQubitFull;
    }
    throw std::invalid_argument("unknown universe '" + s + "' (expected sym or full2q)");
}

/// Pauli observable as two axes in 0..3 (0 = identity).
///
/// Symmetric case: a sorted axis multiset, first <= second, e.g. (0,1) = x
/// and (1,2) = xy. Two-qubit case: (axis on qubit 1, axis on qubit 2).
struct Observable {
    std::uint8_t first = 0;
    std::uint8_t second = 0;

    constexpr auto operator<=>(const Observable &) const = default;
};

/// Permutation of the axes {1,2,3} for each qubit; perm[0] = 0 always.
struct AxisPermutation {
    std::array<std::uint8_t, 4> qubit1{0, 1, 2, 3};
    std::array<std::uint8_t, 4> qubit2{0, 1, 2, 3};

    bool is_identity() const {
        return qubit1 == std::array<std::uint8_t, 4>{0, 1, 2, 3} && qubit2 == qubit1;
    }
    AxisPermutation compose(const AxisPermutation &inner) const {
        AxisPermutation r;
        for (int a = 0; a < 4; ++a) {
            r.qubit1[a] = qubit1[inner.qubit1[a]];
            r.qubit2[a] = qubit2[inner.qubit2[a]];
        }
        return r;
    }
    bool operator==(const AxisPermutation &) const = default;
};

namespace detail {

inline std::vector<std::array<std::uint8_t, 4>> axis_permutations() {
    std::vector<std::array<std::uint8_t, 4>> out;
    std::array<std::uint8_t, 3> p{1, 2, 3};
    do {
        out.push_back({0, p[0], p[1], p[2]});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

inline constexpr char kAxisNames[] = {'1', 'x', 'y', 'z'};

inline int axis_from_char(char c) {
    switch (c) {
        case 'x':
            return 1;
        case 'y':
            return 2;
        case 'z':
            return 3;
        default:
            throw std::invalid_argument(std::string("unknown axis '") + c + "'");
    }
}

}  // namespace detail

/// The observable universe of one kind with its axis-permutation group.
class ObservableUniverse {
   public:
    static const ObservableUniverse &get(Universe kind) {
        static const ObservableUniverse sym(Universe::Symmetric);
        static const ObservableUniverse full(Universe::TwoQubitFull);
        return kind == Universe::Symmetric ? sym : full;
    }

    Universe kind() const {
        return kind_;
    }
    int size() const {
        return static_cast<int>(members_.size());
    }
    const std::vector<Observable> &members() const {
        return members_;
    }
    const Observable &operator[](int i) const {
        return members_[i];
    }

    /// Position in the universe, or -1 if the observable is outside it.
    int index_of(const Observable &o) const {
        for (int i = 0; i < size(); ++i) {
            if (members_[i] == o) {
                return i;
            }
        }
        return -1;
    }

    /// 6 elements (same permutation on both qubits) for the symmetric
    /// universe; 36 (independent permutations) for the two-qubit one.
    const std::vector<AxisPermutation> &group() const {
        return group_;
    }

    /// image(g)[i] = index of g applied to observable i, or -1 when the
    /// image leaves the universe.
    const std::vector<int> &image(int group_index) const {
        return images_[group_index];
    }

    Observable apply(const AxisPermutation &g, const Observable &o) const {
        if (kind_ == Universe::Symmetric) {
            std::uint8_t a = g.qubit1[o.first];
            std::uint8_t b = g.qubit1[o.second];
            return {std::min(a, b), std::max(a, b)};
        }
        return {g.qubit1[o.first], g.qubit2[o.second]};
    }

    std::string label(const Observable &o) const {
        std::string s;
        if (kind_ == Universe::Symmetric) {
            if (o.first != 0) {
                s += detail::kAxisNames[o.first];
            }
            s += detail::kAxisNames[o.second];
            return s;
        }
        if (o.first != 0) {
            s += detail::kAxisNames[o.first];
            s += '1';
        }
        if (o.second != 0) {
            s += detail::kAxisNames[o.second];
            s += '2';
        }
        return s;
    }
    std::string label(int i) const {
        return label(members_[i]);
    }

    /// Parses "x", "yx", "xy" (symmetric) or "x1", "y2", "x1y2", "y2x1"
    /// (two-qubit). Does not require membership in the universe.
    Observable parse(const std::string &text) const {
        if (kind_ == Universe::Symmetric) {
            if (text.empty() || text.size() > 2) {
                throw std::invalid_argument("bad symmetric observable label '" + text + "'");
            }
            int a = detail::axis_from_char(text[0]);
            int b = text.size() == 2 ? detail::axis_from_char(text[1]) : 0;
            return {static_cast<std::uint8_t>(std::min(a, b)), static_cast<std::uint8_t>(std::max(a, b))};
        }
        Observable o;
        if (text.size() != 2 && text.size() != 4) {
            throw std::invalid_argument("bad two-qubit observable label '" + text + "'");
        }
        bool seen[3] = {false, false, false};
        for (std::size_t i = 0; i < text.size(); i += 2) {
            int axis = detail::axis_from_char(text[i]);
            char q = text[i + 1];
            if ((q != '1' && q != '2') || seen[q - '0']) {
                throw std::invalid_argument("bad two-qubit observable label '" + text + "'");
            }
            seen[q - '0'] = true;
            (q == '1' ? o.first : o.second) = static_cast<std::uint8_t>(axis);
        }
        return o;
    }

    int parse_index(const std::string &text) const {
        int i = index_of(parse(text));
        if (i < 0) {
            throw std::invalid_argument("observable '" + text + "' is not in the " + to_string(kind_) + " universe");
        }
        return i;
    }

    /// The moment an observable measures: x^alpha on one sphere (symmetric)
    /// or x^(1)_a x^(2)_b on the product of spheres (two-qubit).
    Monomial moment(const Observable &o) const {
        Monomial m;
        if (kind_ == Universe::Symmetric) {
            if (o.first) {
                m.exponents[o.first - 1]++;
            }
            if (o.second) {
                m.exponents[o.second - 1]++;
            }
            return m;
        }
        if (o.first) {
            m.exponents[o.first - 1]++;
        }
        if (o.second) {
            m.exponents[3 + o.second - 1]++;
        }
        return m;
    }

   private:
    explicit ObservableUniverse(Universe kind) : kind_(kind) {
        auto perms = detail::axis_permutations();
        if (kind == Universe::Symmetric) {
            members_ = {{0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}};
            for (const auto &p : perms) {
                group_.push_back({p, p});
            }
        } else {
            // Index a2 * 4 + a1, skipping the identity.
            for (std::uint8_t a2 = 0; a2 < 4; ++a2) {
                for (std::uint8_t a1 = 0; a1 < 4; ++a1) {
                    if (a1 || a2) {
                        members_.push_back({a1, a2});
                    }
                }
            }
            for (const auto &p : perms) {
                for (const auto &q : perms) {
                    group_.push_back({p, q});
                }
            }
        }
        for (const auto &g : group_) {
            std::vector<int> img;
            for (const auto &o : members_) {
                img.push_back(index_of(apply(g, o)));
            }
            images_.push_back(std::move(img));
        }
    }

    Universe kind_;
    std::vector<Observable> members_;
    std::vector<AxisPermutation> group_;
    std::vector<std::vector<int>> images_;
};

/// Unordered set of observables from one universe, stored as a bitmask
/// over universe indices. Sets of equal size compare in lexicographic
/// order of their sorted member indices.
class MeasurementSet {
   public:
    MeasurementSet() = default;
    MeasurementSet(Universe u, std::uint32_t mask) : universe_(u), mask_(mask) {
        if (mask >> ObservableUniverse::get(u).size()) {
            throw std::invalid_argument("MeasurementSet: member outside the universe");
        }
    }
    static MeasurementSet from_indices(Universe u, const std::vector<int> &indices) {
        std::uint32_t mask = 0;
        for (int i : indices) {
            mask |= 1u << i;
        }
        return MeasurementSet(u, mask);
    }
    /// Parses a '+'-joined label list such as "xx+yy" or "x1x2+y1y2".
    static MeasurementSet parse(Universe u, const std::string &text) {
        const auto &uni = ObservableUniverse::get(u);
        std::uint32_t mask = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto plus = text.find('+', start);
            std::string part = text.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
            if (!part.empty()) {
                mask |= 1u << uni.parse_index(part);
            }
            if (plus == std::string::npos) {
                break;
            }
            start = plus + 1;
        }
        return MeasurementSet(u, mask);
    }
    static MeasurementSet all(Universe u) {
        return MeasurementSet(u, (1u << ObservableUniverse::get(u).size()) - 1);
    }

    Universe universe() const {
        return universe_;
    }
    std::uint32_t mask() const {
        return mask_;
    }
    int size() const {
        return std::popcount(mask_);
    }
    bool empty() const {
        return mask_ == 0;
    }
    bool contains(int index) const {
        return (mask_ >> index) & 1u;
    }
    bool is_subset_of(const MeasurementSet &other) const {
        return (mask_ & ~other.mask_) == 0;
    }
    MeasurementSet with(int index) const {
        return MeasurementSet(universe_, mask_ | (1u << index));
    }

    std::vector<int> indices() const {
        std::vector<int> out;
        for (std::uint32_t m = mask_; m; m &= m - 1) {
            out.push_back(std::countr_zero(m));
        }
        return out;
    }
    std::vector<Observable> members() const {
        const auto &uni = ObservableUniverse::get(universe_);
        std::vector<Observable> out;
        for (int i : indices()) {
            out.push_back(uni[i]);
        }
        return out;
    }

    std::string label() const {
        const auto &uni = ObservableUniverse::get(universe_);
        std::string s;
        for (int i : indices()) {
            if (!s.empty()) {
                s += '+';
            }
            s += uni.label(i);
        }
        return s;
    }

    /// Lexicographic comparison of the sorted member index lists.
    bool lex_less(const MeasurementSet &other) const {
        if (size() != other.size()) {
            return size() < other.size();
        }
        std::uint32_t diff = mask_ ^ other.mask_;
        if (diff == 0) {
            return false;
        }
        return (mask_ & (diff & (~diff + 1))) != 0;
    }

    bool operator==(const MeasurementSet &) const = default;
    bool operator<(const MeasurementSet &other) const {
        if (universe_ != other.universe_) {
            return universe_ < other.universe_;
        }
        return lex_less(other);
    }

   private:
    Universe universe_ = Universe::Symmetric;
    std::uint32_t mask_ = 0;
};

/// Image of s under group element g, or nullopt-like empty flag when some
/// member leaves the universe.
inline bool apply_group(const MeasurementSet &s, int group_index, MeasurementSet &out) {
    const auto &img = ObservableUniverse::get(s.universe()).image(group_index);
    std::uint32_t mask = 0;
    for (std::uint32_t m = s.mask(); m; m &= m - 1) {
        int j = img[std::countr_zero(m)];
        if (j < 0) {
            return false;
        }
        mask |= 1u << j;
    }
    out = MeasurementSet(s.universe(), mask);
    return true;
}

/// Lexicographically smallest image of s over the axis group, among images
/// that stay inside the universe.
inline MeasurementSet canonical_set(const MeasurementSet &s) {
    const auto &uni = ObservableUniverse::get(s.universe());
    MeasurementSet best = s;
    MeasurementSet candidate;
    for (int g = 0; g < static_cast<int>(uni.group().size()); ++g) {
        if (apply_group(s, g, candidate) && candidate.lex_less(best)) {
            best = candidate;
        }
    }
    return best;
}

inline bool is_canonical(const MeasurementSet &s) {
    return canonical_set(s) == s;
}

/// All canonical k-subsets of the universe in lexicographic order.
inline std::vector<MeasurementSet> enumerate_sets(Universe u, int k) {
    const int n = ObservableUniverse::get(u).size();
    if (k < 1 || k > n) {
        throw std::invalid_argument("enumerate_sets: k out of range");
    }
    std::vector<MeasurementSet> out;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) == k) {
            MeasurementSet s(u, mask);
            if (is_canonical(s)) {
                out.push_back(s);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Ordered sequence of distinct observables.
struct MeasurementPath {
    Universe universe = Universe::Symmetric;
    std::vector<int> steps;

    int size() const {
        return static_cast<int>(steps.size());
    }

    MeasurementSet prefix_set(int k) const {
        std::uint32_t mask = 0;
        for (int i = 0; i < k; ++i) {
            mask |= 1u << steps[i];
        }
        return MeasurementSet(universe, mask);
    }

    /// Canonical prefix sets of lengths 1..size(); two paths are equivalent
    /// iff these lists are equal.
    std::vector<MeasurementSet> canonical_representation() const {
        std::vector<MeasurementSet> rep;
        for (int k = 1; k <= size(); ++k) {
            rep.push_back(canonical_set(prefix_set(k)));
        }
        return rep;
    }

    std::string label() const {
        const auto &uni = ObservableUniverse::get(universe);
        std::string s;
        for (int i : steps) {
            if (!s.empty()) {
                s += '>';
            }
            s += uni.label(i);
        }
        return s;
    }

    static MeasurementPath parse(Universe u, const std::string &text) {
        const auto &uni = ObservableUniverse::get(u);
        MeasurementPath p{u, {}};
        std::size_t start = 0;
        while (start < text.size()) {
            auto sep = text.find_first_of(">,", start);
            std::string part = text.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
            p.steps.push_back(uni.parse_index(part));
            if (sep == std::string::npos) {
                break;
            }
            start = sep + 1;
        }
        return p;
    }
};

/// Non-equivalent ordered paths of length k in the symmetric universe whose
/// first step is xx. Each class is represented by its lexicographically
/// first member; classes appear in that order.
inline std::vector<MeasurementPath> enumerate_paths(int k) {
    const auto &uni = ObservableUniverse::get(Universe::Symmetric);
    if (k < 1 || k > uni.size()) {
        throw std::invalid_argument("enumerate_paths: k out of range");
    }
    const int first = uni.parse_index("xx");
    std::vector<int> rest;
    for (int i = 0; i < uni.size(); ++i) {
        if (i != first) {
            rest.push_back(i);
        }
    }
    std::set<std::vector<std::uint32_t>> seen;
    std::vector<MeasurementPath> out;
    // Walk all ordered (k-1)-selections of the remaining observables in
    // lexicographic order, extending one canonical prefix at a time.
    std::vector<int> steps{first};
    std::vector<std::uint32_t> rep{canonical_set(MeasurementSet(Universe::Symmetric, 1u << first)).mask()};
    std::uint32_t used = 1u << first;
    auto recurse = [&](auto &&self) -> void {
        if (static_cast<int>(steps.size()) == k) {
            if (seen.insert(rep).second) {
                out.push_back({Universe::Symmetric, steps});
            }
            return;
        }
        for (int i : rest) {
            if (used & (1u << i)) {
                continue;
            }
            used |= 1u << i;
            steps.push_back(i);
            MeasurementSet prefix(Universe::Symmetric, used);
            rep.push_back(canonical_set(prefix).mask());
            self(self);
            rep.pop_back();
            steps.pop_back();
            used &= ~(1u << i);
        }
    };
    recurse(recurse);
    return out;
}

/// Moments fixed by measuring s, closed under the sphere relations
/// y_{a+2e1} + y_{a+2e2} + y_{a+2e3} = y_a that have three known terms.
/// y_0 = 1 is always included.
inline std::vector<Monomial> close_under_sum_rule(std::set<Monomial> known, Universe u) {
    known.insert(Monomial());
    if (u == Universe::TwoQubitFull) {
        // Per-qubit degree is at most one, so no relation ever has three
        // known terms.
        return {known.begin(), known.end()};
    }
    bool changed = true;
    while (changed) {
        changed = false;
        int max_degree = 0;
        for (const auto &m : known) {
            max_degree = std::max(max_degree, m.degree());
        }
        MonomialBasis base(3, std::max(0, max_degree - 2));
        for (const auto &a : base.items()) {
            std::array<Monomial, 4> terms{a, a + Monomial::unit(0, 2), a + Monomial::unit(1, 2),
                                          a + Monomial::unit(2, 2)};
            int missing = -1;
            int count = 0;
            for (int t = 0; t < 4; ++t) {
                if (known.count(terms[t])) {
                    ++count;
                } else {
                    missing = t;
                }
            }
            if (count == 3) {
                known.insert(terms[missing]);
                changed = true;
            }
        }
    }
    return {known.begin(), known.end()};
}

/// Effective moments of a measurement set, without the trivial y_0.
inline std::vector<Monomial> effective_moments(const MeasurementSet &s) {
    const auto &uni = ObservableUniverse::get(s.universe());
    std::set<Monomial> known;
    for (const auto &o : s.members()) {
        known.insert(uni.moment(o));
    }
    auto closed = close_under_sum_rule(known, s.universe());
    closed.erase(closed.begin());
    return closed;
}

/// C(sum_{n=1}^{2j+1} T_n - 1, k) with T_n = n(n+1)/2: the number of
/// k-subsets of the spin-j observable universe before symmetry reduction.
inline boost::multiprecision::cpp_int mk_formula(int twice_j, int k) {
    using boost::multiprecision::cpp_int;
    if (twice_j < 1 || k < 0) {
        throw std::invalid_argument("mk_formula: need j >= 1/2 and k >= 0");
    }
    cpp_int m = twice_j + 1;
    cpp_int universe = m * (m + 1) * (m + 2) / 6 - 1;
    if (k > universe) {
        return 0;
    }
    cpp_int r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (universe - k + i) / i;
    }
    return r;
}

}  // namespace tmsent
