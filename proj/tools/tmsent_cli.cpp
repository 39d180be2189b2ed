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

// Command-line front end: sampling, enumeration, detection, statistics and
// figure output. Exit codes: 0 success, 1 usage error, 2 the INDETERMINATE
// fraction exceeded indeterminate_cap.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tmsent/tmsent.hpp"

using namespace tmsent;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Level { Quiet, Info, Verbose };

struct Context {
    std::string command;
    RunConfig cfg;
    std::string config_file;
    std::map<std::string, std::string> overrides;
    std::string format = "csv";
    std::string out;
    std::string svg;
    bool quiet = false;
    bool verbose = false;

    Level level() const {
        return quiet ? Level::Quiet : (verbose ? Level::Verbose : Level::Info);
    }
    void info(const std::string &msg) const {
        if (level() != Level::Quiet) {
            std::cerr << msg << '\n';
        }
    }
    void debug(const std::string &msg) const {
        if (level() == Level::Verbose) {
            std::cerr << msg << '\n';
        }
    }
    std::function<void(long, long)> progress(const std::string &what) const {
        if (level() != Level::Verbose) {
            return {};
        }
        auto step = std::make_shared<long>(0);
        return [what, step](long done, long total) {
            long pct = done * 20 / total;
            if (pct > *step || done == total) {
                *step = pct;
                std::cerr << what << ": " << done << "/" << total << '\n';
            }
        };
    }
    std::string header(const std::string &prefix = "# ") const {
        return cfg.header(command, prefix);
    }
    json config_json() const {
        json j;
        j["command"] = command;
        for (const auto &[k, v] : cfg.entries()) {
            j[k] = v;
        }
        return j;
    }
};

void finalize_config(Context &ctx) {
    if (!ctx.config_file.empty()) {
        ctx.cfg.load_file(ctx.config_file);
    }
    ctx.cfg.apply_env();
    for (const auto &[k, v] : ctx.overrides) {
        ctx.cfg.set(k, v);
    }
    ctx.cfg.validate();
    if (ctx.format != "csv" && ctx.format != "json") {
        throw std::invalid_argument("--format must be csv or json");
    }
}

/// Registers a flag whose value lands in the config under `key`.
CLI::Option *config_flag(CLI::App *app, Context &ctx, const std::string &flag, const std::string &key,
                         const std::string &help) {
    return app->add_option_function<std::string>(
        flag, [&ctx, key](const std::string &v) { ctx.overrides[key] = v; }, help);
}

void common_flags(CLI::App *app, Context &ctx) {
    app->add_option("--config", ctx.config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--format", ctx.format, "output format: csv or json");
    app->add_option("--out,-o", ctx.out, "output file ('-' or empty for stdout)");
    app->add_flag("--quiet,-q", ctx.quiet, "only errors on stderr");
    app->add_flag("--verbose,-v", ctx.verbose, "progress on stderr");
    config_flag(app, ctx, "--seed", "seed", "master seed");
    config_flag(app, ctx, "--workers", "workers", "worker threads (0 = all cores)");
}

std::pair<int, int> parse_range(const std::string &text) {
    auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            int k = std::stoi(text);
            return {k, k};
        }
        return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
    } catch (const std::logic_error &) {
        throw std::invalid_argument("bad range '" + text + "' (expected K or A..B)");
    }
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) {
        if (!part.empty()) {
            out.push_back(part);
        }
    }
    return out;
}

void write_text(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (fs::path(path).has_parent_path()) {
        fs::create_directories(fs::path(path).parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string sibling(const std::string &path, const std::string &suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

SeededEnsemble ensemble_of(const RunConfig &cfg) {
    return SeededEnsemble{cfg.seed, cfg.ensemble, cfg.ensemble == EnsembleKind::Symmetric ? cfg.spin
                                                                                         : SpinSize::from_qubits(2)};
}

TmsConfig tms_config(const RunConfig &cfg, bool flatness) {
    TmsConfig t;
    t.k_max = cfg.k_max;
    t.eps_feas = cfg.eps_feas;
    t.eps_rank = cfg.eps_rank;
    t.check_flatness = flatness;
    return t;
}

// ---------------------------------------------------------------------------
// sample

int run_sample(Context &ctx) {
    auto ens = ensemble_of(ctx.cfg);
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows(ctx.cfg.samples);
    std::vector<std::uint8_t> ppt(ctx.cfg.samples);
    if (ens.kind == EnsembleKind::Symmetric) {
        auto table = SymmetricPauliTable::for_qubits(ens.spin.num_qubits());
        auto probe = TensorRepr::unchecked(ens.spin, std::vector<double>(table->alphas().size(), 0.0));
        for (int i = 0; i < table->alphas().size(); ++i) {
            std::string s;
            for (int mu : probe.multi_index(i)) {
                s += static_cast<char>('0' + mu);
            }
            names.push_back(s);
        }
    } else {
        for (int mu = 0; mu < 4; ++mu) {
            for (int nu = 0; nu < 4; ++nu) {
                names.push_back(std::string{static_cast<char>('0' + mu), static_cast<char>('0' + nu)});
            }
        }
    }
    parallel_for(
        ctx.cfg.samples, ctx.cfg.workers,
        [&](long i) {
            auto rho = sample_state(ens, static_cast<std::uint64_t>(i));
            if (ens.kind == EnsembleKind::Symmetric) {
                rows[i] = tensor_from_density(rho, ens.spin).values();
                ppt[i] = !npt_symmetric(rho);
            } else {
                auto x = tensor_from_two_qubit_density(rho);
                for (int mu = 0; mu < 4; ++mu) {
                    for (int nu = 0; nu < 4; ++nu) {
                        rows[i].push_back(x(mu, nu));
                    }
                }
                ppt[i] = ppt_separable_two_qubit(rho);
            }
        },
        ctx.progress("sample"));
    std::ostringstream os;
    if (ctx.format == "json") {
        json j;
        j["config"] = ctx.config_json();
        j["columns"] = names;
        for (long i = 0; i < ctx.cfg.samples; ++i) {
            j["states"].push_back({{"index", i}, {"ppt", static_cast<bool>(ppt[i])}, {"tensor", rows[i]}});
        }
        os << j.dump(1) << '\n';
    } else {
        os << ctx.header() << "index,ppt";
        for (const auto &n : names) {
            os << ",X" << n;
        }
        os << '\n';
        for (long i = 0; i < ctx.cfg.samples; ++i) {
            os << i << ',' << int(ppt[i]);
            for (double v : rows[i]) {
                os << ',' << fmt(v, 12);
            }
            os << '\n';
        }
    }
    write_text(ctx.out, os.str());
    return 0;
}

// ---------------------------------------------------------------------------
// enumerate-sets / enumerate-paths

int run_enumerate_sets(Context &ctx, const std::string &k_text, bool all) {
    Universe u = universe_for(ctx.cfg.ensemble);
    const int n = ObservableUniverse::get(u).size();
    auto [lo, hi] = all ? std::pair<int, int>{1, n} : parse_range(k_text);
    if (lo < 1 || hi > n || lo > hi) {
        throw std::invalid_argument("k outside 1.." + std::to_string(n));
    }
    std::ostringstream os;
    json j;
    std::string counts;
    if (ctx.format == "csv") {
        os << ctx.header();
    }
    std::ostringstream body;
    body << "k,set_id,members\n";
    for (int k = lo; k <= hi; ++k) {
        auto sets = enumerate_sets(u, k);
        counts += (counts.empty() ? "" : ",") + std::to_string(sets.size());
        int id = 0;
        for (const auto &s : sets) {
            body << k << ',' << ++id << ',' << s.label() << '\n';
            j["sets"].push_back({{"k", k}, {"set_id", id}, {"members", s.label()}});
        }
        j["counts"][std::to_string(k)] = sets.size();
    }
    if (ctx.format == "json") {
        j["config"] = ctx.config_json();
        os << j.dump(1) << '\n';
    } else {
        os << "# counts per k = " << counts << '\n' << body.str();
    }
    ctx.info("counts per k: " + counts);
    write_text(ctx.out, os.str());
    return 0;
}

int run_enumerate_paths(Context &ctx, int k) {
    auto paths = enumerate_paths(k);
    std::ostringstream os;
    if (ctx.format == "json") {
        json j;
        j["config"] = ctx.config_json();
        int id = 0;
        for (const auto &p : paths) {
            j["paths"].push_back({{"path_id", ++id}, {"steps", p.label()}});
        }
        os << j.dump(1) << '\n';
    } else {
        os << ctx.header() << "path_id,steps\n";
        int id = 0;
        for (const auto &p : paths) {
            os << ++id << ',' << p.label() << '\n';
        }
    }
    ctx.info("paths of length " + std::to_string(k) + ": " + std::to_string(paths.size()));
    write_text(ctx.out, os.str());
    return 0;
}

// ---------------------------------------------------------------------------
// detect

std::vector<std::pair<std::vector<int>, double>> read_tensor_entries(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open tensor file " + path);
    }
    std::vector<std::pair<std::vector<int>, double>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) {
            continue;
        }
        auto cells = split(line, ',');
        if (cells.size() != 2) {
            throw std::invalid_argument("tensor file: expected 'index,value' rows");
        }
        std::vector<int> idx;
        for (char c : cells[0]) {
            if (c < '0' || c > '3') {
                throw std::invalid_argument("tensor file: index digits must be 0..3");
            }
            idx.push_back(c - '0');
        }
        entries.emplace_back(idx, std::stod(cells[1]));
    }
    if (entries.empty()) {
        throw std::invalid_argument("tensor file: no entries");
    }
    return entries;
}

int run_detect(Context &ctx, const std::string &tensor_path, const std::string &set_text, bool full, bool flatness) {
    auto entries = read_tensor_entries(tensor_path);
    const int n = static_cast<int>(entries.front().first.size());
    TmsConfig tc = tms_config(ctx.cfg, flatness);
    tc.k_max = ctx.overrides.count("k_max") ? ctx.cfg.k_max : 0;
    TmsVerdict v;
    std::string set_label = "full";
    if (ctx.cfg.ensemble == EnsembleKind::Symmetric) {
        auto x = TensorRepr::from_entries(SpinSize::from_qubits(n), entries);
        if (full) {
            v = detect_full_tomography(x, tc);
        } else {
            auto set = MeasurementSet::parse(Universe::Symmetric, set_text);
            set_label = set.label();
            v = detect(x, set, tc);
        }
    } else {
        if (n != 2) {
            throw std::invalid_argument("two-qubit tensors use two-digit indices");
        }
        TwoQubitTensor x;
        x.values(0, 0) = 1.0;
        for (const auto &[idx, value] : entries) {
            x.values(idx[0], idx[1]) = value;
        }
        if (full) {
            v = detect_full_tomography(x, tc);
        } else {
            auto set = MeasurementSet::parse(Universe::TwoQubitFull, set_text);
            set_label = set.label();
            v = detect(x, set, tc);
        }
    }
    json j;
    j["outcome"] = to_string(v.outcome);
    j["level"] = v.level;
    j["margin"] = v.sdp.margin;
    j["ranks"] = v.ranks ? json::array({v.ranks->first, v.ranks->second}) : json(nullptr);
    j["timing_ms"] = v.timing_ms;
    j["linear_contradiction"] = v.linear_contradiction;
    j["set"] = set_label;
    std::ostringstream os;
    if (ctx.format == "csv") {
        os << ctx.header() << "outcome,level,margin,ranks,timing_ms\n"
           << to_string(v.outcome) << ',' << v.level << ',' << v.sdp.margin << ','
           << (v.ranks ? std::to_string(v.ranks->first) + "/" + std::to_string(v.ranks->second) : "") << ','
           << fmt(v.timing_ms, 3) << '\n';
    } else {
        os << j.dump(1) << '\n';
    }
    write_text(ctx.out, os.str());
    return v.outcome == TmsOutcome::Indeterminate && ctx.cfg.indeterminate_cap < 1.0 ? kExitBudget : 0;
}

// ---------------------------------------------------------------------------
// probabilities / paths / quantumness

std::vector<MeasurementSet> selected_sets(Universe u, const std::string &k_text, const std::string &set_text) {
    std::vector<MeasurementSet> sets;
    if (!set_text.empty()) {
        for (const auto &label : split(set_text, ',')) {
            sets.push_back(MeasurementSet::parse(u, label));
        }
        return sets;
    }
    auto [lo, hi] = parse_range(k_text);
    const int n = ObservableUniverse::get(u).size();
    if (lo < 1 || hi > n || lo > hi) {
        throw std::invalid_argument("k outside 1.." + std::to_string(n));
    }
    return canonical_sets_in_range(u, lo, hi);
}

EstimationConfig estimation_config(const Context &ctx, std::vector<MeasurementSet> sets, bool symmetrize) {
    EstimationConfig ec;
    ec.ensemble = ensemble_of(ctx.cfg);
    ec.samples = ctx.cfg.samples;
    ec.sets = std::move(sets);
    ec.tms = tms_config(ctx.cfg, false);
    ec.symmetrize = symmetrize;
    ec.workers = ctx.cfg.workers;
    ec.progress = ctx.progress("verdicts");
    return ec;
}

std::string probability_svg(const SetProbabilityTable &t, int k, const std::string &comment) {
    std::vector<std::string> labels;
    std::vector<double> p, lo, hi;
    for (const auto &r : t.rows) {
        if (r.k() == k) {
            labels.push_back(std::to_string(set_id(r.set)));
            p.push_back(r.p);
            lo.push_back(r.lo);
            hi.push_back(r.hi);
        }
    }
    return svg::bar_chart("Detection probability, k = " + std::to_string(k), labels, p, lo, hi, "set id", "p",
                          comment);
}

std::string probability_text(const Context &ctx, const SetProbabilityTable &t, const VerdictMatrix &vm) {
    std::ostringstream os;
    if (ctx.format == "json") {
        json j;
        j["config"] = ctx.config_json();
        j["sampled"] = vm.sampled;
        j["separable"] = vm.separable;
        for (const auto &r : t.rows) {
            j["rows"].push_back({{"k", r.k()},
                                 {"set_id", set_id(r.set)},
                                 {"members", r.set.label()},
                                 {"p", r.p},
                                 {"lo", r.lo},
                                 {"hi", r.hi},
                                 {"n", r.n},
                                 {"indeterminate", r.indeterminate_rate}});
        }
        os << j.dump(1) << '\n';
    } else {
        os << ctx.header() << "# sampled = " << vm.sampled << ", separable = " << vm.separable << '\n';
        write_probability_csv(os, t);
    }
    return os.str();
}

int budget_exit(const Context &ctx, double rate) {
    if (rate > ctx.cfg.indeterminate_cap) {
        ctx.info("INDETERMINATE fraction " + fmt(rate, 5) + " exceeds cap " + fmt(ctx.cfg.indeterminate_cap, 5));
        return kExitBudget;
    }
    return 0;
}

int run_probabilities(Context &ctx, const std::string &k_text, const std::string &set_text, bool no_symmetrize,
                      const std::string &cache) {
    Universe u = universe_for(ctx.cfg.ensemble);
    auto ec = estimation_config(ctx, selected_sets(u, k_text, set_text), !no_symmetrize);
    auto vm = cached_verdicts(ec, cache);
    auto t = estimate_set_probabilities(vm, BootstrapConfig{ctx.cfg.resamples, 0.8, ctx.cfg.seed});
    ctx.info("entangled states: " + std::to_string(vm.num_states()) + " of " + std::to_string(vm.sampled) +
             " (separable fraction " + fmt(vm.separable_fraction(), 4) + ")");
    write_text(ctx.out, probability_text(ctx, t, vm));
    if (!ctx.svg.empty()) {
        std::set<int> ks;
        for (const auto &r : t.rows) {
            ks.insert(r.k());
        }
        for (int k : ks) {
            std::string path = ks.size() == 1 ? ctx.svg : sibling(ctx.svg, "-k" + std::to_string(k));
            write_text(path, probability_svg(t, k, ctx.header("")));
        }
    }
    return budget_exit(ctx, t.max_indeterminate_rate());
}

std::string best_path_svg(const PathStats &st, const std::string &comment) {
    std::vector<double> ks;
    for (int k = 1; k <= st.path.size(); ++k) {
        ks.push_back(k);
    }
    std::vector<svg::Series> series{{"p", st.algebra.p, st.p_lo, st.p_hi},
                                    {"q", st.algebra.q, st.q_lo, st.q_hi},
                                    {"r", st.algebra.r, st.r_lo, st.r_hi}};
    return svg::line_chart("Best path " + st.path.label(), ks, series, "k", "probability", comment);
}

json best_path_json(const BestPathResult &res) {
    json j;
    const auto &b = res.best_path();
    j["best"] = b.path.label();
    j["d_min"] = res.d_min();
    j["d_error"] = b.d_error();
    j["d_max"] = res.d_max();
    j["worst"] = res.paths[res.worst].path.label();
    for (int i : res.exact_ties) {
        j["exact_ties"].push_back(res.paths[i].path.label());
    }
    for (int i : res.degeneracy) {
        j["degeneracy"].push_back(res.paths[i].path.label());
    }
    std::vector<std::string> first3;
    for (int k = 0; k < 3 && k < b.path.size(); ++k) {
        first3.push_back(ObservableUniverse::get(Universe::Symmetric).label(b.path.steps[k]));
    }
    j["first_three"] = first3;
    return j;
}

std::string paths_text(const Context &ctx, const BestPathResult &res) {
    std::ostringstream os;
    if (ctx.format == "json") {
        json j;
        j["config"] = ctx.config_json();
        j["summary"] = best_path_json(res);
        for (std::size_t i = 0; i < res.paths.size(); ++i) {
            const auto &st = res.paths[i];
            j["paths"].push_back(
                {{"path_id", i + 1}, {"steps", st.path.label()}, {"d", st.d()}, {"p", st.algebra.p}, {"r", st.algebra.r}});
        }
        os << j.dump(1) << '\n';
    } else {
        auto s = best_path_json(res);
        os << ctx.header() << "# best = " << s["best"].get<std::string>() << ", d = " << fmt(res.d_min(), 4)
           << ", max d = " << fmt(res.d_max(), 4) << ", exact ties = " << res.exact_ties.size()
           << ", within error = " << res.degeneracy.size() << '\n';
        write_paths_csv(os, res);
    }
    return os.str();
}

void write_path_svgs(const Context &ctx, const BestPathResult &res, const std::string &path) {
    std::vector<double> d;
    for (const auto &st : res.paths) {
        d.push_back(st.d());
    }
    write_text(path, svg::histogram("Average detection depth over paths", d, 0.07, "d", ctx.header("")));
    write_text(sibling(path, "-best"), best_path_svg(res.best_path(), ctx.header("")));
}

int run_paths(Context &ctx, const std::string &probs_path) {
    std::ifstream in(probs_path);
    if (!in) {
        throw std::invalid_argument("cannot open " + probs_path);
    }
    auto table = read_probability_csv(in, Universe::Symmetric);
    auto res = best_path(table);
    ctx.info("best path " + res.best_path().path.label() + " d = " + fmt(res.d_min(), 4) + "; max d = " +
             fmt(res.d_max(), 4));
    write_text(ctx.out, paths_text(ctx, res));
    if (!ctx.svg.empty()) {
        write_path_svgs(ctx, res, ctx.svg);
    }
    return 0;
}

std::string quantumness_text(const Context &ctx, const QuantumnessRates &rates) {
    std::ostringstream os;
    if (ctx.format == "json") {
        json j;
        j["config"] = ctx.config_json();
        for (std::size_t s = 0; s < rates.sets.size(); ++s) {
            j["sets"].push_back(rates.sets[s].label());
            j["increasing_within_errors"].push_back(rates.increasing_within_errors(static_cast<int>(s)));
        }
        for (const auto &b : rates.bins) {
            j["bins"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"population", b.population}, {"rate", b.rate},
                                 {"stderr", b.stderr_rate}});
        }
        os << j.dump(1) << '\n';
    } else {
        os << ctx.header();
        for (std::size_t s = 0; s < rates.sets.size(); ++s) {
            os << "# k = " << rates.sets[s].size() << " optimal set " << rates.sets[s].label()
               << ": trend = " << fmt(rates.trend(static_cast<int>(s)), 4)
               << (rates.increasing_within_errors(static_cast<int>(s)) ? " (increasing within errors)"
                                                                        : " (not increasing)")
               << '\n';
        }
        os << "bin_lo,bin_hi,population,k,members,rate,stderr,empty\n";
        for (const auto &b : rates.bins) {
            for (std::size_t s = 0; s < rates.sets.size(); ++s) {
                os << fmt(b.lo, 4) << ',' << fmt(b.hi, 4) << ',' << b.population << ',' << rates.sets[s].size() << ','
                   << rates.sets[s].label() << ',' << fmt(b.rate[s]) << ',' << fmt(b.stderr_rate[s]) << ','
                   << int(b.empty()) << '\n';
            }
        }
    }
    return os.str();
}

std::string quantumness_svg(const QuantumnessRates &rates, const std::string &comment) {
    std::vector<double> centers;
    std::vector<svg::Series> series;
    for (std::size_t s = 0; s < rates.sets.size(); ++s) {
        series.push_back({"k=" + std::to_string(rates.sets[s].size()), {}, {}, {}});
    }
    for (const auto &b : rates.bins) {
        if (b.empty()) {
            continue;
        }
        centers.push_back(0.5 * (b.lo + b.hi));
        for (std::size_t s = 0; s < rates.sets.size(); ++s) {
            series[s].y.push_back(100 * b.rate[s]);
            series[s].lo.push_back(100 * std::max(0.0, b.rate[s] - b.stderr_rate[s]));
            series[s].hi.push_back(100 * std::min(1.0, b.rate[s] + b.stderr_rate[s]));
        }
    }
    return svg::line_chart("Detected entangled states vs quantumness", centers, series, "Q", "detected (%)", comment);
}

QuantumnessRates quantumness_from(const Context &ctx, const VerdictMatrix &vm, const SetProbabilityTable &t, int k_hi,
                                  int grid) {
    std::vector<MeasurementSet> optimal;
    for (int k = 1; k <= k_hi; ++k) {
        optimal.push_back(t.optimal(k).set);
    }
    auto q = quantumness_of_states(vm, grid, ctx.cfg.workers, ctx.progress("quantumness"));
    return quantumness_binned_rates(vm, q, optimal, ctx.cfg.bin_width);
}

int run_quantumness(Context &ctx, int k_hi, int grid, const std::string &cache) {
    if (ctx.cfg.ensemble != EnsembleKind::Symmetric || ctx.cfg.spin.num_qubits() != 2) {
        throw std::invalid_argument("quantumness needs the symmetric spin-1 ensemble");
    }
    auto ec = estimation_config(ctx, canonical_sets_in_range(Universe::Symmetric, 1, k_hi), true);
    auto vm = cached_verdicts(ec, cache);
    auto t = estimate_set_probabilities(vm, BootstrapConfig{0, 0.8, ctx.cfg.seed});
    auto rates = quantumness_from(ctx, vm, t, k_hi, grid);
    write_text(ctx.out, quantumness_text(ctx, rates));
    if (!ctx.svg.empty()) {
        write_text(ctx.svg, quantumness_svg(rates, ctx.header("")));
    }
    return budget_exit(ctx, t.max_indeterminate_rate());
}

// ---------------------------------------------------------------------------
// diag-witness / ppt32

DiagWitnessStats diag_stats_parallel(const Context &ctx, int j, long count) {
    const long chunk = 500;
    const long chunks = (count + chunk - 1) / chunk;
    std::vector<DiagWitnessStats> parts(chunks);
    parallel_for(
        chunks, ctx.cfg.workers,
        [&](long c) { parts[c] = diag_witness_stats(j, ctx.cfg.seed, c * chunk, std::min(chunk, count - c * chunk)); },
        ctx.progress("diag j=" + std::to_string(j)));
    DiagWitnessStats acc;
    for (const auto &p : parts) {
        merge_into(acc, p);
    }
    return acc;
}

double binomial_stderr(double p, long n) {
    return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0;
}

std::string diag_text(const Context &ctx, const std::vector<DiagWitnessStats> &all) {
    std::ostringstream os;
    json j;
    if (ctx.format == "csv") {
        os << ctx.header() << "j,k_or_observable,detected_fraction,stderr\n";
    }
    for (const auto &st : all) {
        std::vector<std::pair<std::string, double>> rows;
        for (std::size_t c = 0; c < st.classes.size(); ++c) {
            double f = st.entangled ? static_cast<double>(st.detected_by_class[c]) / st.entangled : 0.0;
            rows.emplace_back(st.classes[c].label(), f);
        }
        double any = st.entangled ? static_cast<double>(st.detected) / st.entangled : 0.0;
        rows.emplace_back("all", any);
        rows.emplace_back("undetected", st.undetected_fraction());
        for (const auto &[label, f] : rows) {
            double e = binomial_stderr(f, st.entangled);
            if (ctx.format == "csv") {
                os << st.j << ',' << label << ',' << fmt(f, 8) << ',' << fmt(e, 8) << '\n';
            }
            j["rows"].push_back({{"j", st.j}, {"k_or_observable", label}, {"detected_fraction", f}, {"stderr", e}});
        }
        j["summary"].push_back({{"j", st.j},
                                {"states", st.states},
                                {"entangled", st.entangled},
                                {"undetected", st.undetected()}});
    }
    if (ctx.format == "json") {
        j["config"] = ctx.config_json();
        os << j.dump(1) << '\n';
    }
    return os.str();
}

std::string diag_svg(const std::vector<DiagWitnessStats> &all, const std::string &comment) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto &st : all) {
        labels.push_back("j=" + std::to_string(st.j));
        values.push_back(100 * st.undetected_fraction());
    }
    return svg::bar_chart("Entangled states missed by diagonal witnesses", labels, values, {}, {}, "spin",
                          "undetected (%)", comment);
}

int run_diag(Context &ctx, const std::string &j_text) {
    auto [lo, hi] = parse_range(j_text);
    if (lo < 1 || hi > 5 || lo > hi) {
        throw std::invalid_argument("j must lie in 1..5");
    }
    std::vector<DiagWitnessStats> all;
    for (int j = lo; j <= hi; ++j) {
        all.push_back(diag_stats_parallel(ctx, j, ctx.cfg.samples));
        ctx.info("j = " + std::to_string(j) + ": entangled " + std::to_string(all.back().entangled) + ", undetected " +
                 std::to_string(all.back().undetected()));
    }
    write_text(ctx.out, diag_text(ctx, all));
    if (!ctx.svg.empty()) {
        write_text(ctx.svg, diag_svg(all, ctx.header("")));
    }
    return 0;
}

struct Ppt32Result {
    long states = 0;
    long entangled = 0;
    double max_spectrum_error = 0.0;
    std::vector<std::vector<PairSubsetStats>> by_k;
};

Ppt32Result ppt32_compute(const Context &ctx, long count) {
    SpinSize spin = SpinSize::from_qubits(3);
    SeededEnsemble ens{ctx.cfg.seed, EnsembleKind::Symmetric, spin};
    std::vector<std::uint8_t> npt(count);
    std::vector<double> err(count);
    std::vector<PairWitness> witness(count);
    parallel_for(
        count, ctx.cfg.workers,
        [&](long i) {
            auto rho = sample_state(ens, static_cast<std::uint64_t>(i));
            auto x = tensor_from_density(rho, spin);
            Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(t32_matrix(x));
            Vector t = es.eigenvalues() / 4.0;
            Vector pt = partial_transpose_spectrum(rho);
            std::sort(pt.data(), pt.data() + pt.size());
            err[i] = (t - pt).cwiseAbs().maxCoeff();
            npt[i] = pt(0) < -kPptTol;
            witness[i] = pair_witness(x);
        },
        ctx.progress("ppt32"));
    Ppt32Result res;
    res.states = count;
    std::vector<PairWitness> entangled;
    for (long i = 0; i < count; ++i) {
        res.max_spectrum_error = std::max(res.max_spectrum_error, err[i]);
        if (npt[i]) {
            entangled.push_back(witness[i]);
        }
    }
    res.entangled = static_cast<long>(entangled.size());
    for (int k = 1; k <= 6; ++k) {
        res.by_k.push_back(pair_witness_stats(entangled, k));
    }
    return res;
}

std::string ppt32_text(const Context &ctx, const Ppt32Result &r) {
    std::ostringstream os;
    json j;
    if (ctx.format == "csv") {
        os << ctx.header() << "# states = " << r.states << ", entangled = " << r.entangled
           << ", max |spec(T)/4 - spec(PT)| = " << r.max_spectrum_error << '\n'
           << "k,subset,detected_fraction,stderr\n";
    }
    for (const auto &subsets : r.by_k) {
        for (const auto &s : subsets) {
            double e = binomial_stderr(s.fraction(), s.total);
            if (ctx.format == "csv") {
                os << s.members.size() << ',' << s.label() << ',' << fmt(s.fraction(), 8) << ',' << fmt(e, 8) << '\n';
            }
            j["rows"].push_back(
                {{"k", s.members.size()}, {"subset", s.label()}, {"detected_fraction", s.fraction()}, {"stderr", e}});
        }
    }
    if (ctx.format == "json") {
        j["config"] = ctx.config_json();
        j["states"] = r.states;
        j["entangled"] = r.entangled;
        j["max_spectrum_error"] = r.max_spectrum_error;
        os << j.dump(1) << '\n';
    }
    return os.str();
}

std::string ppt32_svg(const Ppt32Result &r, const std::string &comment) {
    std::vector<std::string> labels;
    std::vector<double> best;
    for (const auto &subsets : r.by_k) {
        double b = 0.0;
        for (const auto &s : subsets) {
            b = std::max(b, s.fraction());
        }
        labels.push_back("k=" + std::to_string(subsets.front().members.size()));
        best.push_back(100 * b);
    }
    return svg::bar_chart("Best pair-witness subset, spin 3/2", labels, best, {}, {}, "subset size",
                          "detected (%)", comment);
}

int run_ppt32(Context &ctx) {
    auto r = ppt32_compute(ctx, ctx.cfg.samples);
    ctx.info("entangled " + std::to_string(r.entangled) + " of " + std::to_string(r.states) +
             "; max spectrum error " + std::to_string(r.max_spectrum_error));
    write_text(ctx.out, ppt32_text(ctx, r));
    if (!ctx.svg.empty()) {
        write_text(ctx.svg, ppt32_svg(r, ctx.header("")));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// reproduce

std::string timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&now));
    return buf;
}

int run_reproduce(Context &ctx, double scale, std::string dir) {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("--scale must be positive");
    }
    if (dir.empty()) {
        dir = (fs::path(ctx.cfg.out_dir) / ("reproduce-" + timestamp())).string();
    }
    fs::create_directories(dir);
    auto path = [&](const std::string &name) { return (fs::path(dir) / name).string(); };
    auto scaled = [&](double n) { return std::max(1L, static_cast<long>(std::llround(n * scale))); };
    json manifest;
    manifest["version"] = kVersion;
    manifest["compiler"] = __VERSION__;
    manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    manifest["scale"] = scale;
    manifest["config"] = ctx.config_json();
    manifest["seed"] = ctx.cfg.seed;
    auto wall_start = std::chrono::steady_clock::now();
    auto stage = [&](const std::string &name, auto &&body) {
        auto t0 = std::chrono::steady_clock::now();
        ctx.info("[reproduce] " + name);
        body();
        manifest["stages"][name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto add_file = [&](const std::string &file) { manifest["files"].push_back(file); };
    const RunConfig base = ctx.cfg;
    int exit_code = 0;

    stage("enumeration", [&] {
        Context c = ctx;
        c.format = "csv";
        c.cfg.ensemble = EnsembleKind::Symmetric;
        c.out = path("sets_sym.csv");
        run_enumerate_sets(c, "", true);
        c.cfg.ensemble = EnsembleKind::TwoQubitFull;
        c.out = path("sets_full2q.csv");
        run_enumerate_sets(c, "", true);
        c.out = path("paths_ordered_counts.csv");
        std::ostringstream os;
        os << c.header() << "k,ordered_paths\n";
        for (int k = 1; k <= 8; ++k) {
            os << k << ',' << enumerate_paths(k).size() << '\n';
        }
        write_text(c.out, os.str());
        std::ostringstream diag;
        diag << c.header() << "j,class_id,observable\n";
        for (int j = 1; j <= 5; ++j) {
            int id = 0;
            for (const auto &d : enumerate_diag(j)) {
                diag << j << ',' << ++id << ',' << d.label() << '\n';
            }
        }
        write_text(path("diag_classes.csv"), diag.str());
        for (auto f : {"sets_sym.csv", "sets_full2q.csv", "paths_ordered_counts.csv", "diag_classes.csv"}) {
            add_file(f);
        }
    });

    VerdictMatrix vm;
    SetProbabilityTable table;
    stage("probabilities_sym", [&] {
        Context c = ctx;
        c.format = "csv";
        c.cfg = base;
        c.cfg.ensemble = EnsembleKind::Symmetric;
        c.cfg.spin = SpinSize::from_qubits(2);
        c.cfg.samples = scaled(50000);
        manifest["inputs"]["probabilities_sym"] = {{"samples", c.cfg.samples}, {"universe", "sym"}};
        auto ec = estimation_config(c, canonical_sets_in_range(Universe::Symmetric, 1, 8), true);
        vm = cached_verdicts(ec, path("verdicts_sym.txt"));
        table = estimate_set_probabilities(vm, BootstrapConfig{c.cfg.resamples, 0.8, c.cfg.seed});
        c.command = "probabilities";
        write_text(path("probs_sym.csv"), probability_text(c, table, vm));
        for (int k = 1; k <= 8; ++k) {
            write_text(path("probs_sym_k" + std::to_string(k) + ".svg"), probability_svg(table, k, c.header("")));
        }
        manifest["summary"]["separable_fraction"] = vm.separable_fraction();
        manifest["summary"]["entangled_states"] = vm.num_states();
        manifest["summary"]["p_xx"] = table.lookup(MeasurementSet::parse(Universe::Symmetric, "xx")).p;
        manifest["summary"]["p_xx_yy"] = table.lookup(MeasurementSet::parse(Universe::Symmetric, "xx+yy")).p;
        manifest["summary"]["max_indeterminate_rate"] = table.max_indeterminate_rate();
        exit_code = std::max(exit_code, budget_exit(c, table.max_indeterminate_rate()));
        add_file("probs_sym.csv");
        add_file("verdicts_sym.txt");
    });

    stage("paths", [&] {
        Context c = ctx;
        c.format = "csv";
        c.command = "paths";
        auto res = best_path(table);
        write_text(path("paths.csv"), paths_text(c, res));
        write_path_svgs(c, res, path("d_histogram.svg"));
        manifest["summary"]["best_path"] = best_path_json(res);
        add_file("paths.csv");
        add_file("d_histogram.svg");
        add_file("d_histogram-best.svg");
    });

    stage("quantumness", [&] {
        Context c = ctx;
        c.format = "csv";
        c.command = "quantumness";
        auto rates = quantumness_from(c, vm, table, 4, 800);
        write_text(path("quantumness.csv"), quantumness_text(c, rates));
        write_text(path("quantumness.svg"), quantumness_svg(rates, c.header("")));
        add_file("quantumness.csv");
        add_file("quantumness.svg");
    });

    stage("probabilities_full2q", [&] {
        Context c = ctx;
        c.format = "csv";
        c.command = "probabilities";
        c.cfg = base;
        c.cfg.ensemble = EnsembleKind::TwoQubitFull;
        c.cfg.samples = scaled(10000);
        manifest["inputs"]["probabilities_full2q"] = {{"samples", c.cfg.samples}, {"universe", "full2q"}};
        std::vector<MeasurementSet> sets;
        for (auto label : {"x1x2+y1y2", "x1x2+y1y2+z1z2", "x1x2+x1y2+y1x2+z1z2", "x1x2+x1y2+y1x2+y1y2+z1z2"}) {
            sets.push_back(MeasurementSet::parse(Universe::TwoQubitFull, label));
        }
        auto ec = estimation_config(c, sets, false);
        auto vm2 = cached_verdicts(ec, path("verdicts_full2q.txt"));
        auto t2 = estimate_set_probabilities(vm2, BootstrapConfig{c.cfg.resamples, 0.8, c.cfg.seed});
        write_text(path("probs_full2q.csv"), probability_text(c, t2, vm2));
        exit_code = std::max(exit_code, budget_exit(c, t2.max_indeterminate_rate()));
        add_file("probs_full2q.csv");
        add_file("verdicts_full2q.txt");
    });

    stage("diag_witness", [&] {
        Context c = ctx;
        c.format = "csv";
        c.command = "diag-witness";
        c.cfg = base;
        c.cfg.samples = scaled(100000);
        manifest["inputs"]["diag_witness"] = {{"samples_per_j", c.cfg.samples}, {"j", "1..5"}};
        std::vector<DiagWitnessStats> all;
        for (int j = 1; j <= 5; ++j) {
            all.push_back(diag_stats_parallel(c, j, c.cfg.samples));
        }
        write_text(path("diag.csv"), diag_text(c, all));
        write_text(path("diag.svg"), diag_svg(all, c.header("")));
        for (const auto &st : all) {
            manifest["summary"]["diag_undetected"].push_back(st.undetected());
        }
        add_file("diag.csv");
        add_file("diag.svg");
    });

    stage("ppt32", [&] {
        Context c = ctx;
        c.format = "csv";
        c.command = "ppt32";
        c.cfg = base;
        c.cfg.samples = scaled(10000);
        manifest["inputs"]["ppt32"] = {{"samples", c.cfg.samples}};
        auto r = ppt32_compute(c, c.cfg.samples);
        write_text(path("ppt32.csv"), ppt32_text(c, r));
        write_text(path("ppt32.svg"), ppt32_svg(r, c.header("")));
        manifest["summary"]["ppt32_max_spectrum_error"] = r.max_spectrum_error;
        add_file("ppt32.csv");
        add_file("ppt32.svg");
    });

    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    write_text(path("manifest.json"), manifest.dump(1) + "\n");
    ctx.info("[reproduce] wrote " + dir);
    return exit_code;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Entanglement detection from partial measurements via truncated moment sequences"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    Context ctx;

    auto universe_flag = [&](CLI::App *sub) {
        config_flag(sub, ctx, "--universe,--ensemble", "ensemble", "sym or full2q");
    };

    auto *sample = app.add_subcommand("sample", "Draw Hilbert-Schmidt states and print their tensors");
    common_flags(sample, ctx);
    universe_flag(sample);
    config_flag(sample, ctx, "--spin", "spin", "spin j (symmetric ensemble)");
    config_flag(sample, ctx, "--samples,-n", "samples", "number of states");

    auto *esets = app.add_subcommand("enumerate-sets", "List non-equivalent measurement sets");
    common_flags(esets, ctx);
    universe_flag(esets);
    std::string k_text = "1";
    bool all_k = false;
    esets->add_option("--k", k_text, "set size K or range A..B");
    esets->add_flag("--all", all_k, "every set size");

    auto *epaths = app.add_subcommand("enumerate-paths", "List non-equivalent ordered measurement paths");
    common_flags(epaths, ctx);
    int path_k = 8;
    epaths->add_option("--k", path_k, "path length")->check(CLI::Range(1, 8));

    auto *det = app.add_subcommand("detect", "Run the moment hierarchy on one tensor");
    common_flags(det, ctx);
    universe_flag(det);
    std::string tensor_path;
    std::string set_text;
    bool full = false;
    bool no_flatness = false;
    det->add_option("--tensor", tensor_path, "CSV of 'index,value' rows (axis digits 0..3)")->required();
    det->add_option("--set", set_text, "measured observables, e.g. xx+yy");
    det->add_flag("--full", full, "use every moment of the tensor");
    det->add_flag("--no-flatness", no_flatness, "skip the flat-extension search");
    config_flag(det, ctx, "--k-max", "k_max", "highest extension order");
    config_flag(det, ctx, "--eps-feas", "eps_feas", "strict feasibility threshold");
    config_flag(det, ctx, "--eps-rank", "eps_rank", "relative rank threshold");

    auto *probs = app.add_subcommand("probabilities", "Estimate detection probabilities per measurement set");
    common_flags(probs, ctx);
    universe_flag(probs);
    std::string probs_k = "1..8";
    std::string probs_sets;
    bool no_symmetrize = false;
    std::string cache;
    probs->add_option("--k", probs_k, "set sizes K or A..B");
    probs->add_option("--sets", probs_sets, "comma-separated set labels instead of --k");
    probs->add_flag("--no-symmetrize", no_symmetrize, "score each set on its own moments only");
    probs->add_option("--cache", cache, "verdict matrix cache file");
    probs->add_option("--svg", ctx.svg, "bar chart output (one file per k)");
    config_flag(probs, ctx, "--samples,-n", "samples", "ensemble draws");
    config_flag(probs, ctx, "--resamples", "resamples", "bootstrap resamples");
    config_flag(probs, ctx, "--k-max", "k_max", "highest extension order");
    config_flag(probs, ctx, "--eps-feas", "eps_feas", "strict feasibility threshold");
    config_flag(probs, ctx, "--indeterminate-cap", "indeterminate_cap", "tolerated INDETERMINATE fraction");

    auto *paths = app.add_subcommand("paths", "Path statistics and the best path from a probability table");
    common_flags(paths, ctx);
    std::string probs_path;
    paths->add_option("--probs", probs_path, "CSV written by 'probabilities'")->required();
    paths->add_option("--svg", ctx.svg, "d histogram (best-path chart goes next to it)");

    auto *quant = app.add_subcommand("quantumness", "Detection rate of optimal sets binned by quantumness");
    common_flags(quant, ctx);
    int quant_k = 4;
    int grid = 800;
    quant->add_option("--k", quant_k, "largest optimal set size")->check(CLI::Range(1, 8));
    quant->add_option("--grid", grid, "coherent-state grid size")->check(CLI::Range(50, 100000));
    quant->add_option("--cache", cache, "verdict matrix cache file");
    quant->add_option("--svg", ctx.svg, "rate chart output");
    config_flag(quant, ctx, "--samples,-n", "samples", "ensemble draws");
    config_flag(quant, ctx, "--bin-width", "bin_width", "quantumness bin width");
    config_flag(quant, ctx, "--indeterminate-cap", "indeterminate_cap", "tolerated INDETERMINATE fraction");

    auto *diag = app.add_subcommand("diag-witness", "Diagonal witness statistics for integer spins");
    common_flags(diag, ctx);
    std::string j_text = "1..5";
    diag->add_option("--j", j_text, "spin J or range A..B");
    diag->add_option("--svg", ctx.svg, "undetected-fraction chart");
    config_flag(diag, ctx, "--samples,-n", "samples", "states per spin");

    auto *ppt = app.add_subcommand("ppt32", "Spin-3/2 partial-transpose matrix and pair witnesses");
    common_flags(ppt, ctx);
    ppt->add_option("--svg", ctx.svg, "best-subset chart");
    config_flag(ppt, ctx, "--samples,-n", "samples", "number of states");

    auto *repro = app.add_subcommand("reproduce", "Run the whole pipeline into a timestamped directory");
    common_flags(repro, ctx);
    double scale = 1.0;
    std::string out_dir;
    repro->add_option("--scale", scale, "sample-size multiplier");
    repro->add_option("--out-dir", out_dir, "output directory (default: reproduce-<timestamp>)");
    config_flag(repro, ctx, "--resamples", "resamples", "bootstrap resamples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        for (auto *sub : app.get_subcommands()) {
            ctx.command = sub->get_name();
        }
        // Reproduce picks its own sample counts; default the rest here.
        if (ctx.command == "diag-witness" && !ctx.overrides.count("samples")) {
            ctx.overrides["samples"] = "100000";
        }
        if (ctx.command == "ppt32" && !ctx.overrides.count("samples")) {
            ctx.overrides["samples"] = "1000";
        }
        finalize_config(ctx);
        if (ctx.command == "sample") {
            return run_sample(ctx);
        }
        if (ctx.command == "enumerate-sets") {
            return run_enumerate_sets(ctx, k_text, all_k);
        }
        if (ctx.command == "enumerate-paths") {
            return run_enumerate_paths(ctx, path_k);
        }
        if (ctx.command == "detect") {
            if (set_text.empty() == !full) {
                throw UsageError("detect needs exactly one of --set or --full");
            }
            return run_detect(ctx, tensor_path, set_text, full, !no_flatness);
        }
        if (ctx.command == "probabilities") {
            return run_probabilities(ctx, probs_k, probs_sets, no_symmetrize, cache);
        }
        if (ctx.command == "paths") {
            return run_paths(ctx, probs_path);
        }
        if (ctx.command == "quantumness") {
            return run_quantumness(ctx, quant_k, grid, cache);
        }
        if (ctx.command == "diag-witness") {
            return run_diag(ctx, j_text);
        }
        if (ctx.command == "ppt32") {
            return run_ppt32(ctx);
        }
        return run_reproduce(ctx, scale, out_dir);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::out_of_range &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitBudget;
    }
}
