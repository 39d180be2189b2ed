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

#include "tmsent/statistics.hpp"

#include <random>
#include <sstream>

#include "gtest/gtest.h"

using namespace tmsent;

namespace {

// Random non-decreasing sequence ending at `last`.
std::vector<double> random_monotone(int n, double last, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, last);
    std::vector<double> p(n);
    for (auto &v : p) {
        v = u(rng);
    }
    std::sort(p.begin(), p.end());
    p.back() = last;
    return p;
}

// One unsymmetrized column per set.
VerdictMatrix plain_matrix(const std::vector<MeasurementSet> &sets) {
    VerdictMatrix vm;
    vm.sets = sets;
    for (std::size_t j = 0; j < sets.size(); ++j) {
        vm.columns.push_back(effective_moments(sets[j]));
        vm.images.push_back({static_cast<int>(j)});
    }
    return vm;
}

// Verdict matrix over all symmetric sets where each state is detected by a
// set iff the set contains one of the state's "key" observables.
VerdictMatrix synthetic_matrix(long states, std::uint64_t seed) {
    VerdictMatrix vm = plain_matrix(canonical_sets_in_range(Universe::Symmetric, 1, 8));
    vm.ensemble = SeededEnsemble{seed, EnsembleKind::Symmetric, SpinSize::from_qubits(2)};
    vm.sampled = states;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(1, 255);
    for (long s = 0; s < states; ++s) {
        vm.state_index.push_back(s);
        std::uint32_t keys = pick(rng) & pick(rng);
        for (const auto &set : vm.sets) {
            bool hit = (set.mask() & keys) != 0 || set.size() == 8;
            vm.outcomes.push_back(hit ? TmsOutcome::EntangledCertified : TmsOutcome::FeasibleNotFlat);
        }
    }
    return vm;
}

}  // namespace

TEST(path_algebra, tree_example) {
    const std::vector<std::vector<double>> tree = {
        {0.57, 0.62, 0.76}, {0.57, 0.62, 0.95}, {0.57, 0.68, 0.77}, {0.57, 0.68, 0.78}};
    int best = -1;
    double best_d = 1e9;
    for (int i = 0; i < 4; ++i) {
        double d = path_algebra(tree[i], Remainder::NextDepth).d;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    EXPECT_EQ(best, 1);
    EXPECT_NEAR(best_d, 1.86, 1e-12);
    // Dropping the undetected remainder favours the third sequence instead.
    EXPECT_LT(path_algebra(tree[2]).d, path_algebra(tree[1]).d);
}

TEST(path_algebra, trivial_sequences) {
    auto all = path_algebra(std::vector<double>(8, 1.0));
    EXPECT_DOUBLE_EQ(all.d, 1.0);
    EXPECT_DOUBLE_EQ(all.q[0], 1.0);
    for (int k = 1; k < 8; ++k) {
        EXPECT_EQ(all.q[k], 0.0);
        EXPECT_EQ(all.r[k], 0.0);
    }
    std::vector<double> last(8, 0.0);
    last[7] = 1.0;
    EXPECT_DOUBLE_EQ(path_algebra(last).d, 8.0);
}

TEST(path_algebra, identities_on_random_sequences) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        auto p = random_monotone(8, 1.0, rng);
        auto a = path_algebra(p);
        EXPECT_DOUBLE_EQ(a.q[0], p[0]);
        double sum_r = 0.0;
        for (int k = 0; k < 8; ++k) {
            EXPECT_NEAR(a.r[k], a.r_difference[k], 1e-12);
            sum_r += a.r[k];
        }
        EXPECT_NEAR(sum_r, 1.0, 1e-12);
        EXPECT_NEAR(a.d, a.d_telescoped, 1e-12);
        EXPECT_GE(a.d, 1.0 - 1e-12);
        EXPECT_LE(a.d, 8.0 + 1e-12);
        auto b = path_algebra(random_monotone(5, 0.9, rng), Remainder::NextDepth);
        EXPECT_NEAR(b.d, b.d_telescoped, 1e-12);
    }
}

TEST(path_algebra, integrity_errors) {
    EXPECT_THROW(path_algebra({0.5, 1.0, 0.9}), DataIntegrityError);
    EXPECT_THROW(path_algebra({0.5, 1.2}), InvariantError);
    EXPECT_THROW(path_algebra({}), std::invalid_argument);
}

TEST(statistics, probabilities_and_bootstrap) {
    auto vm = synthetic_matrix(3000, 9);
    BootstrapConfig boot{200, 0.8, 3};
    auto t = estimate_set_probabilities(vm, boot);
    ASSERT_EQ(t.rows.size(), vm.sets.size());
    ASSERT_EQ(t.replicates.size(), 200u);
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
        double count = 0;
        for (long s = 0; s < vm.num_states(); ++s) {
            count += vm.detected(s, static_cast<int>(j));
        }
        EXPECT_DOUBLE_EQ(t.rows[j].p, static_cast<double>(count) / vm.num_states());
        EXPECT_LE(t.rows[j].lo, t.rows[j].p);
        EXPECT_GE(t.rows[j].hi, t.rows[j].p);
        EXPECT_GE(t.rows[j].lo, 0.0);
        EXPECT_LE(t.rows[j].hi, 1.0);
    }
    EXPECT_DOUBLE_EQ(t.lookup(MeasurementSet::all(Universe::Symmetric)).p, 1.0);
    auto again = estimate_set_probabilities(vm, boot);
    EXPECT_EQ(again.replicates, t.replicates);
    EXPECT_GT(t.optimal(1).p, 0.0);
}

TEST(statistics, rejects_empty_and_non_monotone_input) {
    VerdictMatrix empty = plain_matrix({MeasurementSet::parse(Universe::Symmetric, "xx")});
    EXPECT_THROW(estimate_set_probabilities(empty), std::invalid_argument);

    VerdictMatrix vm = plain_matrix(normalized_sets(
        {MeasurementSet::parse(Universe::Symmetric, "xx"), MeasurementSet::parse(Universe::Symmetric, "xx+yy")}));
    vm.state_index = {0};
    vm.outcomes = {TmsOutcome::EntangledCertified, TmsOutcome::FeasibleNotFlat};
    EXPECT_EQ(check_monotonicity(vm).violations, 1);
    EXPECT_THROW(estimate_set_probabilities(vm), DataIntegrityError);
    vm.outcomes[1] = TmsOutcome::Indeterminate;
    EXPECT_EQ(check_monotonicity(vm).indeterminate, 1);
    EXPECT_NO_THROW(estimate_set_probabilities(vm));
}

TEST(statistics, csv_round_trip) {
    auto t = estimate_set_probabilities(synthetic_matrix(500, 2), BootstrapConfig{50, 0.8, 1});
    std::stringstream ss;
    ss << "# seed = 2\n";
    write_probability_csv(ss, t);
    auto back = read_probability_csv(ss, Universe::Symmetric);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_EQ(back.rows[i].set, t.rows[i].set);
        EXPECT_NEAR(back.rows[i].p, t.rows[i].p, 1e-6);
        EXPECT_EQ(back.rows[i].n, t.rows[i].n);
    }
    EXPECT_EQ(set_id(MeasurementSet::parse(Universe::Symmetric, "xx+yy")), 7);
    EXPECT_EQ(set_id(MeasurementSet::parse(Universe::Symmetric, "xx")), 2);
}

TEST(statistics, best_path_matches_brute_force) {
    auto t = estimate_set_probabilities(synthetic_matrix(2000, 4), BootstrapConfig{100, 0.8, 1});
    auto paths = enumerate_paths(8);
    auto res = best_path(t, paths);
    ASSERT_EQ(res.paths.size(), 3228u);
    double lo = 1e9;
    double hi = -1e9;
    for (const auto &path : paths) {
        std::vector<double> p;
        for (int k = 1; k <= 8; ++k) {
            p.push_back(t.lookup(path.prefix_set(k)).p);
        }
        double d = 8 * p[7];
        for (int k = 0; k < 7; ++k) {
            d -= p[k];
        }
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    EXPECT_NEAR(res.d_min(), lo, 1e-12);
    EXPECT_NEAR(res.d_max(), hi, 1e-12);
    EXPECT_FALSE(res.exact_ties.empty());
    EXPECT_GE(res.degeneracy.size(), res.exact_ties.size());
    const auto &b = res.best_path();
    EXPECT_LE(b.d_lo, b.d());
    EXPECT_GE(b.d_hi, b.d());
    std::stringstream ss;
    write_paths_csv(ss, res);
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header.substr(0, 22), "path_id,steps,d,p1,p2,");
}

TEST(statistics, verdicts_do_not_depend_on_workers) {
    EstimationConfig cfg;
    cfg.ensemble = SeededEnsemble{17, EnsembleKind::Symmetric, SpinSize::from_qubits(2)};
    cfg.samples = 60;
    cfg.sets = {MeasurementSet::parse(Universe::Symmetric, "xx"), MeasurementSet::parse(Universe::Symmetric, "yy+xx"),
                MeasurementSet::parse(Universe::Symmetric, "xx+yy+xz")};
    cfg.workers = 1;
    auto one = compute_verdicts(cfg);
    cfg.workers = 3;
    auto three = compute_verdicts(cfg);
    EXPECT_EQ(one.sets.size(), 3u);
    EXPECT_EQ(one.images[0].size(), 6u);
    EXPECT_EQ(one.state_index, three.state_index);
    EXPECT_EQ(one.outcomes, three.outcomes);
    EXPECT_EQ(one.separable + one.num_states(), 60);
    EXPECT_EQ(check_monotonicity(one).violations, 0);
    for (long s = 0; s < one.num_states(); ++s) {
        auto rho = sample_state(cfg.ensemble, one.state_index[s]);
        EXPECT_FALSE(ppt_separable(rho, EnsembleKind::Symmetric));
    }
}

TEST(statistics, quantumness_bins) {
    VerdictMatrix vm = plain_matrix({MeasurementSet::parse(Universe::Symmetric, "xx")});
    std::vector<double> q;
    for (int s = 0; s < 100; ++s) {
        vm.state_index.push_back(s);
        q.push_back(0.001 * s);
        vm.outcomes.push_back(s >= 50 ? TmsOutcome::EntangledCertified : TmsOutcome::FeasibleNotFlat);
    }
    auto rates = quantumness_binned_rates(vm, q, vm.sets, 0.015);
    ASSERT_EQ(rates.bins.size(), 7u);
    long total = 0;
    for (const auto &b : rates.bins) {
        total += b.population;
    }
    EXPECT_EQ(total, 100);
    EXPECT_DOUBLE_EQ(rates.bins.front().rate[0], 0.0);
    EXPECT_DOUBLE_EQ(rates.bins.back().rate[0], 1.0);
    EXPECT_GT(rates.trend(0), 0.9);
    EXPECT_TRUE(rates.increasing_within_errors(0));
    EXPECT_THROW(quantumness_binned_rates(vm, {0.1}, vm.sets), std::invalid_argument);
}

TEST(statistics, symmetrized_scores_are_exact_for_equivalent_sets) {
    EstimationConfig cfg;
    cfg.ensemble = SeededEnsemble{23, EnsembleKind::Symmetric, SpinSize::from_qubits(2)};
    cfg.samples = 40;
    cfg.workers = 1;
    auto s16 = MeasurementSet::parse(Universe::Symmetric, "xx+xy+yy");
    auto s18 = MeasurementSet::parse(Universe::Symmetric, "xx+xz+yy");
    auto s2 = MeasurementSet::parse(Universe::Symmetric, "xx+yy");
    cfg.sets = {s2, s16, s18};
    auto vm = compute_verdicts(cfg);
    int i2 = vm.index_of(s2);
    int i16 = vm.index_of(s16);
    int i18 = vm.index_of(s18);
    auto a = vm.images[i16];
    auto b = vm.images[i18];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    for (long s = 0; s < vm.num_states(); ++s) {
        EXPECT_EQ(vm.detected(s, i16), vm.detected(s, i18));
        EXPECT_LE(vm.detected(s, i2), vm.detected(s, i16));
    }
}

TEST(statistics, verdict_cache_round_trip) {
    EstimationConfig cfg;
    cfg.ensemble = SeededEnsemble{31, EnsembleKind::Symmetric, SpinSize::from_qubits(2)};
    cfg.samples = 20;
    cfg.workers = 1;
    cfg.sets = {MeasurementSet::parse(Universe::Symmetric, "xx+yy")};
    auto vm = compute_verdicts(cfg);
    std::stringstream ss;
    save_verdicts(ss, vm, cfg);
    VerdictMatrix back;
    ASSERT_TRUE(load_verdicts(ss, cfg, back));
    EXPECT_EQ(back.outcomes, vm.outcomes);
    EXPECT_EQ(back.state_index, vm.state_index);
    EXPECT_EQ(back.separable, vm.separable);
    std::stringstream again;
    save_verdicts(again, vm, cfg);
    cfg.samples = 21;
    EXPECT_FALSE(load_verdicts(again, cfg, back));
}
