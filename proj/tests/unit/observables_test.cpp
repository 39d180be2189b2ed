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


#include "tmsent/observables.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gtest/gtest.h"

using namespace tmsent;

namespace {

// Orbit count by union-find over the "maps validly onto" relation.
std::vector<int> orbit_counts_oracle(Universe u) {
    const auto &uni = ObservableUniverse::get(u);
    const int n = uni.size();
    std::vector<std::uint32_t> parent(1u << n);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (const auto &g : uni.group()) {
            std::uint32_t img = 0;
            bool inside = true;
            for (int i = 0; i < n; ++i) {
                if (mask >> i & 1u) {
                    int j = uni.index_of(uni.apply(g, uni[i]));
                    if (j < 0) {
                        inside = false;
                        break;
                    }
                    img |= 1u << j;
                }
            }
            if (inside) {
                parent[find(mask)] = find(img);
            }
        }
    }
    std::vector<int> counts(n + 1, 0);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (find(mask) == mask) {
            counts[std::popcount(mask)]++;
        }
    }
    return counts;
}

std::map<int, std::vector<std::string>> read_reference_sets() {
    std::ifstream in(std::string(TMSENT_TEST_DATA_DIR) + "/sym_set_classes.csv");
    std::map<int, std::vector<std::string>> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string k, id, members;
        std::getline(ss, k, ',');
        std::getline(ss, id, ',');
        std::getline(ss, members, ',');
        out[std::stoi(k)].push_back(members);
    }
    return out;
}

}  // namespace

TEST(observables, universes_and_groups) {
    const auto &sym = ObservableUniverse::get(Universe::Symmetric);
    const auto &full = ObservableUniverse::get(Universe::TwoQubitFull);
    EXPECT_EQ(sym.size(), 8);
    EXPECT_EQ(full.size(), 15);
    EXPECT_EQ(sym.group().size(), 6u);
    EXPECT_EQ(full.group().size(), 36u);
    for (const auto *uni : {&sym, &full}) {
        EXPECT_TRUE(uni->group()[0].is_identity());
        for (const auto &g : uni->group()) {
            for (const auto &h : uni->group()) {
                auto gh = g.compose(h);
                EXPECT_NE(std::find(uni->group().begin(), uni->group().end(), gh), uni->group().end());
            }
        }
    }
    std::string labels;
    for (int i = 0; i < sym.size(); ++i) {
        labels += sym.label(i) + " ";
    }
    EXPECT_EQ(labels, "x y z xx xy xz yy yz ");
    labels.clear();
    for (int i = 0; i < full.size(); ++i) {
        labels += full.label(i) + " ";
    }
    EXPECT_EQ(labels, "x1 y1 z1 x2 x1x2 y1x2 z1x2 y2 x1y2 y1y2 z1y2 z2 x1z2 y1z2 z1z2 ");
}

TEST(observables, label_parsing) {
    const auto &sym = ObservableUniverse::get(Universe::Symmetric);
    const auto &full = ObservableUniverse::get(Universe::TwoQubitFull);
    EXPECT_EQ(sym.parse_index("yx"), sym.parse_index("xy"));
    EXPECT_THROW(sym.parse_index("zz"), std::invalid_argument);
    EXPECT_THROW(sym.parse_index("q"), std::invalid_argument);
    EXPECT_EQ(full.parse_index("y2x1"), full.parse_index("x1y2"));
    EXPECT_THROW(full.parse_index("x1y1"), std::invalid_argument);
    EXPECT_THROW(full.parse_index("x3"), std::invalid_argument);
    MeasurementSet s = MeasurementSet::parse(Universe::Symmetric, "yy+xx");
    EXPECT_EQ(s.label(), "xx+yy");
    EXPECT_EQ(MeasurementSet::parse(Universe::TwoQubitFull, "y1y2+x1x2").label(), "x1x2+y1y2");
    MeasurementPath p = MeasurementPath::parse(Universe::Symmetric, "xx>yy>xz");
    EXPECT_EQ(p.label(), "xx>yy>xz");
}

TEST(observables, canonical_examples) {
    auto canon = [](const std::string &s) {
        return canonical_set(MeasurementSet::parse(Universe::Symmetric, s)).label();
    };
    EXPECT_EQ(canon("yy"), "xx");
    EXPECT_EQ(canon("xz+yz"), "xy+xz");
    EXPECT_EQ(canon("x+y+z"), "x+y+z");
    EXPECT_EQ(canon("z"), "x");
    EXPECT_EQ(canon("yz"), "xy");
}

TEST(observables, canonical_is_idempotent_and_orbit_constant_sym) {
    const auto &uni = ObservableUniverse::get(Universe::Symmetric);
    for (std::uint32_t mask = 0; mask < 256; ++mask) {
        MeasurementSet s(Universe::Symmetric, mask);
        MeasurementSet c = canonical_set(s);
        EXPECT_EQ(canonical_set(c), c);
        EXPECT_EQ(c.size(), s.size());
        for (int g = 0; g < static_cast<int>(uni.group().size()); ++g) {
            MeasurementSet img;
            if (apply_group(s, g, img)) {
                EXPECT_EQ(canonical_set(img), c);
            }
        }
    }
}

TEST(observables, canonical_is_orbit_constant_full_sampled) {
    const auto &uni = ObservableUniverse::get(Universe::TwoQubitFull);
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        MeasurementSet s(Universe::TwoQubitFull, static_cast<std::uint32_t>(rng()) & 0x7fffu);
        MeasurementSet c = canonical_set(s);
        EXPECT_EQ(canonical_set(c), c);
        MeasurementSet img;
        ASSERT_TRUE(apply_group(s, static_cast<int>(rng() % uni.group().size()), img));
        EXPECT_EQ(canonical_set(img), c);
    }
}

TEST(observables, enumeration_matches_orbit_oracle) {
    for (auto u : {Universe::Symmetric, Universe::TwoQubitFull}) {
        auto expected = orbit_counts_oracle(u);
        const int n = ObservableUniverse::get(u).size();
        for (int k = 1; k <= n; ++k) {
            auto sets = enumerate_sets(u, k);
            EXPECT_EQ(static_cast<int>(sets.size()), expected[k]) << to_string(u) << " k=" << k;
            EXPECT_TRUE(std::is_sorted(sets.begin(), sets.end()));
        }
    }
}

TEST(observables, enumeration_counts) {
    std::vector<int> sym;
    for (int k = 1; k <= 8; ++k) {
        sym.push_back(static_cast<int>(enumerate_sets(Universe::Symmetric, k).size()));
    }
    // Counts under the zz-free equivalence; see the reference-list test for k = 4.
    EXPECT_EQ(sym, (std::vector<int>{3, 9, 19, 25, 23, 14, 5, 1}));
    std::vector<int> full;
    for (int k = 1; k <= 15; ++k) {
        full.push_back(static_cast<int>(enumerate_sets(Universe::TwoQubitFull, k).size()));
    }
    EXPECT_EQ(full, (std::vector<int>{3, 10, 30, 69, 132, 205, 254, 254, 205, 132, 69, 30, 10, 3, 1}));
    for (int k = 1; k < 15; ++k) {
        EXPECT_EQ(full[k - 1], full[15 - k - 1]);
    }
}

TEST(observables, orbits_partition_all_subsets) {
    for (auto u : {Universe::Symmetric, Universe::TwoQubitFull}) {
        const int n = ObservableUniverse::get(u).size();
        std::map<std::uint32_t, int> orbit_sizes;
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            orbit_sizes[canonical_set(MeasurementSet(u, mask)).mask()]++;
        }
        for (int k = 1; k <= n; ++k) {
            long total = 0;
            for (const auto &s : enumerate_sets(u, k)) {
                total += orbit_sizes[s.mask()];
            }
            long binom = 1;
            for (int i = 1; i <= k; ++i) {
                binom = binom * (n - k + i) / i;
            }
            EXPECT_EQ(total, binom);
        }
    }
}

TEST(observables, reference_lists_match_enumeration) {
    auto reference = read_reference_sets();
    for (int k = 1; k <= 8; ++k) {
        std::set<std::uint32_t> ours;
        for (const auto &s : enumerate_sets(Universe::Symmetric, k)) {
            ours.insert(s.mask());
        }
        std::set<std::uint32_t> theirs;
        for (const auto &label : reference[k]) {
            theirs.insert(canonical_set(MeasurementSet::parse(Universe::Symmetric, label)).mask());
        }
        for (auto m : theirs) {
            EXPECT_TRUE(ours.count(m)) << "k=" << k;
        }
        if (k != 4) {
            EXPECT_EQ(ours, theirs) << "k=" << k;
            EXPECT_EQ(reference[k].size(), ours.size());
        } else {
            // The k = 4 reference table lists z+xx+yy+yz and z+xx+xz+yy, which
            // are x<->y images of each other, and omits z+xx+xy+yy.
            EXPECT_EQ(theirs.size(), 24u);
            EXPECT_FALSE(theirs.count(MeasurementSet::parse(Universe::Symmetric, "z+xx+xy+yy").mask()));
            EXPECT_EQ(canonical_set(MeasurementSet::parse(Universe::Symmetric, "z+xx+yy+yz")).label(),
                      "z+xx+xz+yy");
        }
    }
}

TEST(observables, path_counts_and_examples) {
    std::vector<int> counts;
    for (int k = 1; k <= 8; ++k) {
        counts.push_back(static_cast<int>(enumerate_paths(k).size()));
    }
    EXPECT_EQ(counts, (std::vector<int>{1, 5, 26, 128, 524, 1604, 3228, 3228}));
    std::vector<std::string> two;
    for (const auto &p : enumerate_paths(2)) {
        two.push_back(p.label());
    }
    EXPECT_EQ(two, (std::vector<std::string>{"xx>x", "xx>y", "xx>xy", "xx>yy", "xx>yz"}));
    EXPECT_EQ(enumerate_paths(1)[0].label(), "xx");
}

TEST(observables, path_representation_distinguishes_classes) {
    auto paths = enumerate_paths(4);
    std::set<std::vector<std::uint32_t>> reps;
    for (const auto &p : paths) {
        std::vector<std::uint32_t> r;
        for (const auto &s : p.canonical_representation()) {
            r.push_back(s.mask());
        }
        EXPECT_TRUE(reps.insert(r).second);
    }
    // Relabeling x <-> y after the first two steps leaves the representation unchanged.
    auto a = MeasurementPath::parse(Universe::Symmetric, "xx>yy>xz");
    auto b = MeasurementPath::parse(Universe::Symmetric, "xx>yy>yz");
    EXPECT_EQ(a.canonical_representation(), b.canonical_representation());
}

TEST(observables, effective_moments) {
    auto eff = [](const std::string &s) { return effective_moments(MeasurementSet::parse(Universe::Symmetric, s)); };
    EXPECT_EQ(eff("xx+yy"), (std::vector<Monomial>{Monomial(0, 0, 2), Monomial(0, 2, 0), Monomial(2, 0, 0)}));
    EXPECT_EQ(eff("x"), (std::vector<Monomial>{Monomial(1, 0, 0)}));
    EXPECT_EQ(eff("xx"), (std::vector<Monomial>{Monomial(2, 0, 0)}));
    auto full = effective_moments(MeasurementSet::parse(Universe::TwoQubitFull, "x1x2+z2"));
    EXPECT_EQ(full.size(), 2u);
    EXPECT_EQ(full[1], Monomial::product(1, 0, 0, 1, 0, 0));
}

TEST(observables, mk_formula) {
    EXPECT_EQ(mk_formula(2, 1), 9);
    EXPECT_EQ(mk_formula(2, 2), 36);
    EXPECT_EQ(mk_formula(4, 1), 34);
    EXPECT_EQ(mk_formula(1, 1), 3);
    // C(285, 140) is far beyond 64 bits.
    boost::multiprecision::cpp_int expected("2809979454968269508692940699414442677187262484229906924336891768408526820747291581770");
    EXPECT_EQ(mk_formula(10, 140), expected);
    EXPECT_EQ(mk_formula(10, 0), 1);
    EXPECT_EQ(mk_formula(2, 10), 0);
}
