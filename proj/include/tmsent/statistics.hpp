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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tmsent/observables.hpp"
#include "tmsent/parallel.hpp"
#include "tmsent/quantumness.hpp"
#include "tmsent/sampling.hpp"
#include "tmsent/tms.hpp"

namespace tmsent {

inline Universe universe_for(EnsembleKind kind) {
    return kind == EnsembleKind::Symmetric ? Universe::Symmetric : Universe::TwoQubitFull;
}

/// 1-based position of a canonical set among enumerate_sets(u, |s|).
inline int set_id(const MeasurementSet &s) {
    static std::mutex mutex;
    static std::map<std::pair<Universe, int>, std::map<std::uint32_t, int>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(s.universe(), s.size());
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::map<std::uint32_t, int> ids;
        int id = 0;
        for (const auto &c : enumerate_sets(s.universe(), s.size())) {
            ids.emplace(c.mask(), ++id);
        }
        it = cache.emplace(key, std::move(ids)).first;
    }
    auto found = it->second.find(canonical_set(s).mask());
    return found == it->second.end() ? 0 : found->second;
}

/// Canonical sets with sizes in [k_lo, k_hi], ordered by size then id.
inline std::vector<MeasurementSet> canonical_sets_in_range(Universe u, int k_lo, int k_hi) {
    std::vector<MeasurementSet> out;
    for (int k = k_lo; k <= k_hi; ++k) {
        auto sets = enumerate_sets(u, k);
        out.insert(out.end(), sets.begin(), sets.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// State x set verdicts

struct EstimationConfig {
    SeededEnsemble ensemble;
    /// Number of ensemble draws (separable ones are discarded afterwards).
    long samples = 50000;
    /// Measurement sets to evaluate; canonicalized and deduplicated.
    std::vector<MeasurementSet> sets;
    TmsConfig tms = default_tms();
    /// Symmetric universe only: average each set over the six axis
    /// relabellings of its effective moments.
    bool symmetrize = true;
    int workers = 0;
    std::function<void(long, long)> progress;

    static TmsConfig default_tms() {
        TmsConfig c;
        c.check_flatness = false;
        c.k_max = 2;
        return c;
    }
};

/// Verdicts of every entangled draw. Each column is a distinct set of known
/// moments that was actually solved; a measurement set is scored as the
/// mean verdict over its image columns. Rows follow the ensemble index
/// order, so the matrix does not depend on the worker count.
struct VerdictMatrix {
    SeededEnsemble ensemble;
    std::vector<MeasurementSet> sets;
    /// Sorted known moments of each column, without y_0.
    std::vector<std::vector<Monomial>> columns;
    /// images[j]: one column per group element for sets[j] (repeats allowed).
    std::vector<std::vector<int>> images;
    long sampled = 0;
    long separable = 0;
    std::vector<std::uint64_t> state_index;
    /// State-major outcomes over columns.
    std::vector<TmsOutcome> outcomes;

    long num_states() const {
        return static_cast<long>(state_index.size());
    }
    int num_sets() const {
        return static_cast<int>(sets.size());
    }
    int num_columns() const {
        return static_cast<int>(columns.size());
    }
    TmsOutcome at(long state, int column) const {
        return outcomes[static_cast<std::size_t>(state) * columns.size() + column];
    }
    /// Fraction of the set's image columns certified for this state.
    double detected(long state, int set) const {
        return fraction(state, set, TmsOutcome::EntangledCertified);
    }
    double indeterminate(long state, int set) const {
        return fraction(state, set, TmsOutcome::Indeterminate);
    }
    int index_of(const MeasurementSet &s) const {
        auto c = canonical_set(s);
        for (int j = 0; j < num_sets(); ++j) {
            if (sets[j] == c) {
                return j;
            }
        }
        return -1;
    }
    double separable_fraction() const {
        return sampled ? static_cast<double>(separable) / sampled : 0.0;
    }

   private:
    double fraction(long state, int set, TmsOutcome o) const {
        int hits = 0;
        for (int c : images[set]) {
            hits += at(state, c) == o;
        }
        return static_cast<double>(hits) / images[set].size();
    }
};

inline std::vector<MeasurementSet> normalized_sets(const std::vector<MeasurementSet> &sets) {
    std::vector<MeasurementSet> out;
    for (const auto &s : sets) {
        if (s.empty()) {
            throw std::invalid_argument("normalized_sets: empty measurement set");
        }
        out.push_back(canonical_set(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Known-moment sets scored for s: its effective moments, and under
/// symmetrization their images under the six axis permutations.
inline std::vector<std::vector<Monomial>> moment_images(const MeasurementSet &s, bool symmetrize) {
    auto base = effective_moments(s);
    if (!symmetrize || s.universe() != Universe::Symmetric) {
        return {base};
    }
    std::vector<std::vector<Monomial>> out;
    for (const auto &perm : detail::axis_permutations()) {
        std::vector<Monomial> img;
        for (const auto &m : base) {
            // perm[0] is the identity slot; perm[1..3] relabel x, y, z.
            int e[3] = {0, 0, 0};
            for (int a = 0; a < 3; ++a) {
                e[perm[a + 1] - 1] = m[a];
            }
            img.push_back(Monomial(e[0], e[1], e[2]));
        }
        std::sort(img.begin(), img.end());
        out.push_back(std::move(img));
    }
    return out;
}

namespace detail {

inline void assign_columns(VerdictMatrix &vm, bool symmetrize) {
    std::map<std::vector<Monomial>, int> column_of;
    vm.columns.clear();
    vm.images.clear();
    for (const auto &s : vm.sets) {
        std::vector<int> cols;
        for (auto &img : moment_images(s, symmetrize)) {
            auto [it, fresh] = column_of.emplace(img, static_cast<int>(vm.columns.size()));
            if (fresh) {
                vm.columns.push_back(img);
            }
            cols.push_back(it->second);
        }
        vm.images.push_back(std::move(cols));
    }
}

}  // namespace detail

inline VerdictMatrix compute_verdicts(const EstimationConfig &config) {
    if (config.samples < 1) {
        throw std::invalid_argument("compute_verdicts: samples must be positive");
    }
    VerdictMatrix vm;
    vm.ensemble = config.ensemble;
    vm.sets = normalized_sets(config.sets);
    if (vm.sets.empty()) {
        throw std::invalid_argument("compute_verdicts: no measurement sets");
    }
    const Universe u = universe_for(config.ensemble.kind);
    if (config.ensemble.kind == EnsembleKind::Symmetric && config.ensemble.spin.num_qubits() != 2) {
        throw std::invalid_argument("compute_verdicts: the separability oracle needs spin 1");
    }
    for (const auto &s : vm.sets) {
        if (s.universe() != u) {
            throw std::invalid_argument("compute_verdicts: set from a different universe");
        }
    }
    detail::assign_columns(vm, config.symmetrize);
    const VarietySpec variety = VarietySpec::for_universe(u);
    const std::size_t width = vm.columns.size();
    std::vector<std::uint8_t> entangled(config.samples, 0);
    std::vector<TmsOutcome> rows(config.samples * width, TmsOutcome::Indeterminate);
    parallel_for(
        config.samples, config.workers,
        [&](long i) {
            auto rho = sample_state(config.ensemble, static_cast<std::uint64_t>(i));
            if (ppt_separable(rho, config.ensemble.kind)) {
                return;
            }
            entangled[i] = 1;
            MomentMap all = config.ensemble.kind == EnsembleKind::Symmetric
                                ? moments_from_tensor(tensor_from_density(rho, config.ensemble.spin))
                                : moments_from_two_qubit_tensor(tensor_from_two_qubit_density(rho));
            for (std::size_t c = 0; c < width; ++c) {
                TruncatedMomentSequence tms{variety, {}};
                for (const auto &m : vm.columns[c]) {
                    tms.known.emplace(m, all.at(m));
                }
                rows[i * width + c] = detect_moments(tms, config.tms).outcome;
            }
        },
        config.progress);
    vm.sampled = config.samples;
    for (long i = 0; i < config.samples; ++i) {
        if (!entangled[i]) {
            ++vm.separable;
            continue;
        }
        vm.state_index.push_back(static_cast<std::uint64_t>(i));
        vm.outcomes.insert(vm.outcomes.end(), rows.begin() + i * width, rows.begin() + (i + 1) * width);
    }
    return vm;
}

/// One-line description of everything that determines a verdict matrix.
inline std::string verdict_cache_key(const EstimationConfig &c) {
    std::ostringstream os;
    os.precision(17);
    os << "seed=" << c.ensemble.seed << " ensemble=" << to_string(c.ensemble.kind) << " spin=" << c.ensemble.spin.to_string()
       << " samples=" << c.samples << " symmetrize=" << c.symmetrize << " k_min=" << c.tms.k_min
       << " k_max=" << c.tms.k_max << " eps_feas=" << c.tms.eps_feas << " iterations=" << c.tms.max_iterations
       << " sets=";
    for (const auto &s : normalized_sets(c.sets)) {
        os << s.label() << ';';
    }
    return os.str();
}

inline constexpr char kOutcomeCodes[] = {'E', 'S', 'F', 'I'};

inline void save_verdicts(std::ostream &os, const VerdictMatrix &vm, const EstimationConfig &config) {
    os << "tmsent-verdicts 1\n" << verdict_cache_key(config) << "\n";
    os << vm.sampled << ' ' << vm.separable << ' ' << vm.num_states() << ' ' << vm.num_columns() << "\n";
    for (long s = 0; s < vm.num_states(); ++s) {
        os << vm.state_index[s] << ' ';
        for (int c = 0; c < vm.num_columns(); ++c) {
            os << kOutcomeCodes[static_cast<int>(vm.at(s, c))];
        }
        os << '\n';
    }
}

/// Loads a matrix saved for the same configuration; returns false when the
/// stream holds a different or malformed run.
inline bool load_verdicts(std::istream &is, const EstimationConfig &config, VerdictMatrix &out) {
    std::string magic, key;
    if (!std::getline(is, magic) || magic != "tmsent-verdicts 1" || !std::getline(is, key) ||
        key != verdict_cache_key(config)) {
        return false;
    }
    VerdictMatrix vm;
    vm.ensemble = config.ensemble;
    vm.sets = normalized_sets(config.sets);
    detail::assign_columns(vm, config.symmetrize);
    long states = 0;
    int columns = 0;
    if (!(is >> vm.sampled >> vm.separable >> states >> columns) || columns != vm.num_columns()) {
        return false;
    }
    vm.outcomes.reserve(static_cast<std::size_t>(states) * columns);
    for (long s = 0; s < states; ++s) {
        std::uint64_t index = 0;
        std::string codes;
        if (!(is >> index >> codes) || static_cast<int>(codes.size()) != columns) {
            return false;
        }
        vm.state_index.push_back(index);
        for (char ch : codes) {
            const char *hit = std::find(std::begin(kOutcomeCodes), std::end(kOutcomeCodes), ch);
            if (hit == std::end(kOutcomeCodes)) {
                return false;
            }
            vm.outcomes.push_back(static_cast<TmsOutcome>(hit - std::begin(kOutcomeCodes)));
        }
    }
    out = std::move(vm);
    return true;
}

/// compute_verdicts with an on-disk cache at `path` (ignored when empty).
inline VerdictMatrix cached_verdicts(const EstimationConfig &config, const std::string &path) {
    if (!path.empty()) {
        std::ifstream in(path);
        VerdictMatrix vm;
        if (in && load_verdicts(in, config, vm)) {
            return vm;
        }
    }
    auto vm = compute_verdicts(config);
    if (!path.empty()) {
        // Write then rename so concurrent readers never see a partial file.
        std::string tmp = path + ".tmp" + std::to_string(std::random_device{}());
        {
            std::ofstream out(tmp);
            save_verdicts(out, vm, config);
        }
        std::filesystem::rename(tmp, path);
    }
    return vm;
}

struct MonotonicityReport {
    /// Column pairs (A, B) with the known moments of A inside those of B.
    long pairs = 0;
    /// A certified but B feasible: impossible for a sound solver.
    long violations = 0;
    /// A certified but B INDETERMINATE.
    long indeterminate = 0;
};

/// Checks detected(A) => detected(B) for every state and every pair of
/// solved moment sets A subset B.
inline MonotonicityReport check_monotonicity(const VerdictMatrix &vm) {
    MonotonicityReport rep;
    for (int a = 0; a < vm.num_columns(); ++a) {
        for (int b = 0; b < vm.num_columns(); ++b) {
            const auto &ca = vm.columns[a];
            const auto &cb = vm.columns[b];
            if (a == b || !std::includes(cb.begin(), cb.end(), ca.begin(), ca.end())) {
                continue;
            }
            ++rep.pairs;
            for (long s = 0; s < vm.num_states(); ++s) {
                if (vm.at(s, a) != TmsOutcome::EntangledCertified || vm.at(s, b) == TmsOutcome::EntangledCertified) {
                    continue;
                }
                if (vm.at(s, b) == TmsOutcome::Indeterminate) {
                    ++rep.indeterminate;
                } else {
                    ++rep.violations;
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Set probabilities

struct SetProbability {
    MeasurementSet set;
    long n = 0;
    /// Sum over states of the detected image fraction.
    double detected = 0.0;
    /// Mean INDETERMINATE image fraction.
    double indeterminate_rate = 0.0;
    double p = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    int k() const {
        return set.size();
    }
};

struct BootstrapConfig {
    int resamples = 1000;
    /// Subsample size as a fraction of the entangled sample (4e4 of 5e4).
    double fraction = 0.8;
    std::uint64_t seed = 1;
};

inline constexpr std::uint64_t kBootstrapStream = 0x424f4f54ULL;

struct SetProbabilityTable {
    Universe universe = Universe::Symmetric;
    std::vector<SetProbability> rows;
    /// replicates[r][i]: estimate of rows[i].p on bootstrap subsample r.
    std::vector<std::vector<double>> replicates;

    int index_of(const MeasurementSet &s) const {
        auto c = canonical_set(s);
        for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
            if (rows[i].set == c) {
                return i;
            }
        }
        return -1;
    }
    const SetProbability &lookup(const MeasurementSet &s) const {
        int i = index_of(s);
        if (i < 0) {
            throw std::out_of_range("SetProbabilityTable: set " + s.label() + " not in table");
        }
        return rows[i];
    }
    /// Highest-p set of size k; the first in id order wins ties.
    const SetProbability &optimal(int k) const {
        const SetProbability *best = nullptr;
        for (const auto &r : rows) {
            if (r.k() == k && (!best || r.p > best->p)) {
                best = &r;
            }
        }
        if (!best) {
            throw std::out_of_range("SetProbabilityTable: no set of size " + std::to_string(k));
        }
        return *best;
    }
    double max_indeterminate_rate() const {
        double m = 0.0;
        for (const auto &r : rows) {
            m = std::max(m, r.indeterminate_rate);
        }
        return m;
    }
};

/// Reduces a verdict matrix to detection probabilities over the entangled
/// states, with max/min bootstrap bounds over random subsamples.
inline SetProbabilityTable estimate_set_probabilities(const VerdictMatrix &vm, const BootstrapConfig &boot = {}) {
    const long n = vm.num_states();
    if (n == 0) {
        throw std::invalid_argument("estimate_set_probabilities: empty entangled sample");
    }
    auto mono = check_monotonicity(vm);
    if (mono.violations > 0) {
        throw DataIntegrityError("estimate_set_probabilities: " + std::to_string(mono.violations) +
                                 " verdicts violate monotonicity under set inclusion");
    }
    SetProbabilityTable table;
    table.universe = universe_for(vm.ensemble.kind);
    const int width = vm.num_sets();
    // score[s * width + j]: detected image fraction of set j on state s.
    std::vector<double> score(static_cast<std::size_t>(n) * width);
    for (int j = 0; j < width; ++j) {
        SetProbability row;
        row.set = vm.sets[j];
        row.n = n;
        double indeterminate = 0.0;
        for (long s = 0; s < n; ++s) {
            double v = vm.detected(s, j);
            score[s * width + j] = v;
            row.detected += v;
            indeterminate += vm.indeterminate(s, j);
        }
        row.p = std::clamp(row.detected / n, 0.0, 1.0);
        row.indeterminate_rate = indeterminate / n;
        row.lo = row.hi = row.p;
        table.rows.push_back(row);
    }
    const long m = std::max(1L, static_cast<long>(std::llround(boot.fraction * n)));
    if (boot.resamples > 0 && m < n) {
        std::vector<long> perm(n);
        std::iota(perm.begin(), perm.end(), 0L);
        std::vector<double> acc(width);
        for (int r = 0; r < boot.resamples; ++r) {
            auto rng = substream(boot.seed, static_cast<std::uint64_t>(r), kBootstrapStream);
            std::fill(acc.begin(), acc.end(), 0.0);
            for (long i = 0; i < m; ++i) {
                std::uniform_int_distribution<long> pick(i, n - 1);
                std::swap(perm[i], perm[pick(rng)]);
                const double *row = &score[perm[i] * width];
                for (int j = 0; j < width; ++j) {
                    acc[j] += row[j];
                }
            }
            std::vector<double> rep(width);
            for (int j = 0; j < width; ++j) {
                rep[j] = std::clamp(acc[j] / m, 0.0, 1.0);
                table.rows[j].lo = std::min(table.rows[j].lo, rep[j]);
                table.rows[j].hi = std::max(table.rows[j].hi, rep[j]);
            }
            table.replicates.push_back(std::move(rep));
        }
    }
    return table;
}

inline void write_probability_csv(std::ostream &os, const SetProbabilityTable &t) {
    os << "k,set_id,members,p,lo,hi,n,indeterminate\n";
    char buf[128];
    for (const auto &r : t.rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.p, r.lo, r.hi);
        os << r.k() << ',' << set_id(r.set) << ',' << r.set.label() << ',' << buf << ',' << r.n << ',';
        std::snprintf(buf, sizeof(buf), "%.6f", r.indeterminate_rate);
        os << buf << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

}  // namespace detail

/// Reads a table written by write_probability_csv. Lines starting with '#'
/// are comments; bootstrap replicates are not stored in the file.
inline SetProbabilityTable read_probability_csv(std::istream &is, Universe u) {
    SetProbabilityTable t;
    t.universe = u;
    std::string line;
    std::map<std::string, int> col;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto cells = detail::split_csv(line);
        if (col.empty()) {
            for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
                col[cells[i]] = i;
            }
            for (const char *name : {"members", "p", "lo", "hi", "n"}) {
                if (!col.count(name)) {
                    throw std::invalid_argument(std::string("read_probability_csv: missing column ") + name);
                }
            }
            continue;
        }
        SetProbability r;
        r.set = canonical_set(MeasurementSet::parse(u, cells.at(col["members"])));
        r.p = std::stod(cells.at(col["p"]));
        r.lo = std::stod(cells.at(col["lo"]));
        r.hi = std::stod(cells.at(col["hi"]));
        r.n = std::stol(cells.at(col["n"]));
        if (col.count("indeterminate")) {
            r.indeterminate_rate = std::stod(cells.at(col["indeterminate"]));
        }
        r.detected = r.p * r.n;
        if (r.p < 0.0 || r.p > 1.0 || r.lo > r.p || r.hi < r.p) {
            throw InvariantError("read_probability_csv: bad probability row for " + r.set.label());
        }
        t.rows.push_back(r);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Path algebra

/// Depth charged to states still undetected after the last step. Real paths
/// end with the full set (p = 1) where both conventions coincide.
enum class Remainder { Ignore, NextDepth };

struct PathAlgebra {
    std::vector<double> p;
    std::vector<double> q;
    /// r from the product form q_k prod_{j<k}(1 - q_j).
    std::vector<double> r;
    /// r from the difference form p_k - p_{k-1}.
    std::vector<double> r_difference;
    double d = 0.0;
    double d_telescoped = 0.0;
};

inline constexpr double kAlgebraTolerance = 1e-12;

/// q, r and d for a non-decreasing detection sequence p_1..p_n.
inline PathAlgebra path_algebra(const std::vector<double> &p, Remainder remainder = Remainder::Ignore) {
    const int n = static_cast<int>(p.size());
    if (n == 0) {
        throw std::invalid_argument("path_algebra: empty sequence");
    }
    PathAlgebra a;
    a.p = p;
    double prev = 0.0;
    double survive = 1.0;
    for (int k = 0; k < n; ++k) {
        if (!(p[k] >= 0.0 && p[k] <= 1.0)) {
            throw InvariantError("path_algebra: probability outside [0, 1]");
        }
        if (prev == 1.0 && p[k] < 1.0) {
            throw DataIntegrityError("path_algebra: p^(k-1) = 1 but p^(k) < 1 at k = " + std::to_string(k + 1));
        }
        double q = prev == 1.0 ? 0.0 : (p[k] - prev) / (1.0 - prev);
        a.q.push_back(q);
        a.r.push_back(q * survive);
        a.r_difference.push_back(p[k] - prev);
        survive *= 1.0 - q;
        prev = p[k];
    }
    double tail = 0.0;
    for (int k = 0; k < n; ++k) {
        a.d += (k + 1) * a.r[k];
        tail += p[k];
    }
    if (remainder == Remainder::NextDepth) {
        a.d += (n + 1) * (1.0 - p[n - 1]);
        a.d_telescoped = (n + 1) - tail;
    } else {
        a.d_telescoped = n * p[n - 1] - (tail - p[n - 1]);
    }
    for (int k = 0; k < n; ++k) {
        double rebuilt = 0.0;
        for (int j = 0; j <= k; ++j) {
            double w = a.q[j];
            for (int m = j + 1; m <= k; ++m) {
                w *= 1.0 - a.q[m];
            }
            rebuilt += w;
        }
        if (std::abs(a.r[k] - a.r_difference[k]) > kAlgebraTolerance || std::abs(rebuilt - p[k]) > kAlgebraTolerance) {
            throw NumericalError("path_algebra: identities fail at k = " + std::to_string(k + 1));
        }
    }
    if (std::abs(a.d - a.d_telescoped) > kAlgebraTolerance) {
        throw NumericalError("path_algebra: telescoped depth disagrees");
    }
    return a;
}

struct PathStats {
    MeasurementPath path;
    PathAlgebra algebra;
    /// Bootstrap extremes of p, q, r and d over the table's replicates; equal
    /// to the point values when the table carries none.
    std::vector<double> p_lo, p_hi, q_lo, q_hi, r_lo, r_hi;
    double d_lo = 0.0;
    double d_hi = 0.0;

    double d() const {
        return algebra.d;
    }
    double d_error() const {
        return 0.5 * (d_hi - d_lo);
    }
};

inline PathStats path_stats(const MeasurementPath &path, const SetProbabilityTable &table) {
    const int n = path.size();
    std::vector<int> rows;
    std::vector<double> p;
    for (int k = 1; k <= n; ++k) {
        int i = table.index_of(path.prefix_set(k));
        if (i < 0) {
            throw std::out_of_range("path_stats: prefix " + path.prefix_set(k).label() + " missing from table");
        }
        rows.push_back(i);
        p.push_back(table.rows[i].p);
    }
    PathStats st;
    st.path = path;
    st.algebra = path_algebra(p);
    st.p_lo = st.p_hi = st.algebra.p;
    st.q_lo = st.q_hi = st.algebra.q;
    st.r_lo = st.r_hi = st.algebra.r;
    st.d_lo = st.d_hi = st.algebra.d;
    if (table.replicates.empty()) {
        // Worst-case propagation of the per-set bounds through d = n p_n - sum_{k<n} p_k.
        double err = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto &row = table.rows[rows[k]];
            double half = 0.5 * (row.hi - row.lo);
            st.p_lo[k] = row.lo;
            st.p_hi[k] = row.hi;
            err += (k == n - 1 ? n : 1) * half;
        }
        st.d_lo = st.algebra.d - err;
        st.d_hi = st.algebra.d + err;
        return st;
    }
    std::vector<double> rp(n);
    for (const auto &rep : table.replicates) {
        double prev = 0.0;
        double survive = 1.0;
        double d = 0.0;
        for (int k = 0; k < n; ++k) {
            rp[k] = rep[rows[k]];
            double q = prev >= 1.0 ? 0.0 : (rp[k] - prev) / (1.0 - prev);
            double r = q * survive;
            survive *= 1.0 - q;
            prev = rp[k];
            d += (k + 1) * r;
            st.p_lo[k] = std::min(st.p_lo[k], rp[k]);
            st.p_hi[k] = std::max(st.p_hi[k], rp[k]);
            st.q_lo[k] = std::min(st.q_lo[k], q);
            st.q_hi[k] = std::max(st.q_hi[k], q);
            st.r_lo[k] = std::min(st.r_lo[k], r);
            st.r_hi[k] = std::max(st.r_hi[k], r);
        }
        st.d_lo = std::min(st.d_lo, d);
        st.d_hi = std::max(st.d_hi, d);
    }
    return st;
}

struct BestPathResult {
    std::vector<PathStats> paths;
    int best = -1;
    int worst = -1;
    /// Paths whose d equals the minimum to 1e-12.
    std::vector<int> exact_ties;
    /// Paths within the bootstrap error of the minimum (includes exact_ties).
    std::vector<int> degeneracy;

    const PathStats &best_path() const {
        return paths.at(best);
    }
    double d_min() const {
        return paths.at(best).d();
    }
    double d_max() const {
        return paths.at(worst).d();
    }
};

inline BestPathResult best_path(const SetProbabilityTable &table, const std::vector<MeasurementPath> &paths) {
    if (paths.empty()) {
        throw std::invalid_argument("best_path: no paths");
    }
    BestPathResult res;
    res.paths.reserve(paths.size());
    for (const auto &path : paths) {
        res.paths.push_back(path_stats(path, table));
    }
    res.best = 0;
    res.worst = 0;
    for (int i = 1; i < static_cast<int>(res.paths.size()); ++i) {
        if (res.paths[i].d() < res.paths[res.best].d()) {
            res.best = i;
        }
        if (res.paths[i].d() > res.paths[res.worst].d()) {
            res.worst = i;
        }
    }
    const double d0 = res.d_min();
    const double band = std::max(kAlgebraTolerance, res.paths[res.best].d_error());
    for (int i = 0; i < static_cast<int>(res.paths.size()); ++i) {
        double gap = res.paths[i].d() - d0;
        if (gap <= kAlgebraTolerance) {
            res.exact_ties.push_back(i);
        }
        if (gap <= band) {
            res.degeneracy.push_back(i);
        }
    }
    return res;
}

inline BestPathResult best_path(const SetProbabilityTable &table) {
    return best_path(table, enumerate_paths(ObservableUniverse::get(Universe::Symmetric).size()));
}

inline void write_paths_csv(std::ostream &os, const BestPathResult &res) {
    const int n = res.paths.front().path.size();
    os << "path_id,steps,d";
    for (int k = 1; k <= n; ++k) {
        os << ",p" << k;
    }
    for (int k = 1; k <= n; ++k) {
        os << ",r" << k;
    }
    os << '\n';
    char buf[64];
    for (std::size_t i = 0; i < res.paths.size(); ++i) {
        const auto &st = res.paths[i];
        std::snprintf(buf, sizeof(buf), "%.6f", st.d());
        os << i + 1 << ',' << st.path.label() << ',' << buf;
        for (double v : st.algebra.p) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            os << ',' << buf;
        }
        for (double v : st.algebra.r) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Quantumness binning

/// Quantumness of every state in the verdict matrix, by row.
inline std::vector<double> quantumness_of_states(const VerdictMatrix &vm, int grid_size = 800, int workers = 0,
                                                 const std::function<void(long, long)> &progress = {}) {
    if (vm.ensemble.kind != EnsembleKind::Symmetric) {
        throw std::invalid_argument("quantumness_of_states: symmetric ensemble required");
    }
    auto grid = CoherentGrid::fibonacci(grid_size, vm.ensemble.spin);
    std::vector<double> q(vm.num_states());
    parallel_for(
        vm.num_states(), workers,
        [&](long s) { q[s] = quantumness(sample_state(vm.ensemble, vm.state_index[s]), *grid).q_value; }, progress);
    return q;
}

struct QuantumnessBin {
    double lo = 0.0;
    double hi = 0.0;
    long population = 0;
    /// Per evaluated set: detected weight, rate and binomial standard error.
    std::vector<double> detected;
    std::vector<double> rate;
    std::vector<double> stderr_rate;

    bool empty() const {
        return population == 0;
    }
};

struct QuantumnessRates {
    std::vector<MeasurementSet> sets;
    double bin_width = 0.015;
    std::vector<QuantumnessBin> bins;

    /// Rate in the highest populated bin minus the lowest, per set.
    double trend(int set) const {
        const QuantumnessBin *first = nullptr;
        const QuantumnessBin *last = nullptr;
        for (const auto &b : bins) {
            if (!b.empty()) {
                if (!first) {
                    first = &b;
                }
                last = &b;
            }
        }
        return first ? last->rate[set] - first->rate[set] : 0.0;
    }
    /// True when the lowest-Q rate does not exceed the highest-Q rate by more
    /// than their combined error bars.
    bool increasing_within_errors(int set) const {
        const QuantumnessBin *first = nullptr;
        const QuantumnessBin *last = nullptr;
        for (const auto &b : bins) {
            if (!b.empty()) {
                if (!first) {
                    first = &b;
                }
                last = &b;
            }
        }
        if (!first) {
            return true;
        }
        return first->rate[set] <= last->rate[set] + first->stderr_rate[set] + last->stderr_rate[set];
    }
};

inline QuantumnessRates quantumness_binned_rates(const VerdictMatrix &vm, const std::vector<double> &q,
                                                 const std::vector<MeasurementSet> &sets, double bin_width = 0.015) {
    if (bin_width <= 0.0) {
        throw std::invalid_argument("quantumness_binned_rates: bin width must be positive");
    }
    if (static_cast<long>(q.size()) != vm.num_states()) {
        throw std::invalid_argument("quantumness_binned_rates: one quantumness value per state required");
    }
    QuantumnessRates res;
    res.bin_width = bin_width;
    std::vector<int> cols;
    for (const auto &s : sets) {
        int j = vm.index_of(s);
        if (j < 0) {
            throw std::out_of_range("quantumness_binned_rates: set " + s.label() + " was not evaluated");
        }
        cols.push_back(j);
        res.sets.push_back(vm.sets[j]);
    }
    double q_max = q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
    int nbins = std::max(1, static_cast<int>(std::floor(q_max / bin_width)) + 1);
    res.bins.resize(nbins);
    for (int b = 0; b < nbins; ++b) {
        res.bins[b].lo = b * bin_width;
        res.bins[b].hi = (b + 1) * bin_width;
        res.bins[b].detected.assign(cols.size(), 0);
    }
    for (long s = 0; s < vm.num_states(); ++s) {
        int b = std::min(nbins - 1, static_cast<int>(std::floor(std::max(0.0, q[s]) / bin_width)));
        ++res.bins[b].population;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            res.bins[b].detected[c] += vm.detected(s, cols[c]);
        }
    }
    for (auto &bin : res.bins) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            double n = static_cast<double>(bin.population);
            double r = n > 0 ? bin.detected[c] / n : 0.0;
            bin.rate.push_back(r);
            bin.stderr_rate.push_back(n > 0 ? std::sqrt(r * (1.0 - r) / n) : 0.0);
        }
    }
    return res;
}

}  // namespace tmsent
