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
#include <charconv>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tmsent/sampling.hpp"
#include "tmsent/spin_tensor.hpp"

namespace tmsent {

/// Run parameters shared by every subcommand. Sources are applied in the
/// order defaults, config file, environment, command-line flags.
struct RunConfig {
    std::uint64_t seed = 1;
    EnsembleKind ensemble = EnsembleKind::Symmetric;
    SpinSize spin = SpinSize::from_qubits(2);
    long samples = 50000;
    int k_max = 2;
    double eps_feas = 1e-8;
    double eps_rank = 1e-6;
    int workers = 0;
    std::string out_dir = ".";
    int resamples = 1000;
    double bin_width = 0.015;
    /// Largest tolerated INDETERMINATE fraction before exit code 2.
    double indeterminate_cap = 0.005;

    static constexpr const char *kEnvPrefix = "TMSENT_";

    static const std::vector<std::string> &keys() {
        static const std::vector<std::string> k = {"seed",     "ensemble",  "spin",      "samples",
                                                   "k_max",    "eps_feas",  "eps_rank",  "workers",
                                                   "out_dir",  "resamples", "bin_width", "indeterminate_cap"};
        return k;
    }

    void set(const std::string &key, const std::string &value) {
        if (key != "universe" && std::find(keys().begin(), keys().end(), key) == keys().end()) {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
        try {
            if (key == "seed") {
                seed = std::stoull(value);
            } else if (key == "ensemble" || key == "universe") {
                ensemble = parse_ensemble_kind(value);
            } else if (key == "spin") {
                spin = SpinSize::parse(value);
            } else if (key == "samples") {
                samples = std::stol(value);
            } else if (key == "k_max") {
                k_max = std::stoi(value);
            } else if (key == "eps_feas") {
                eps_feas = std::stod(value);
            } else if (key == "eps_rank") {
                eps_rank = std::stod(value);
            } else if (key == "workers") {
                workers = std::stoi(value);
            } else if (key == "out_dir") {
                out_dir = value;
            } else if (key == "resamples") {
                resamples = std::stoi(value);
            } else if (key == "bin_width") {
                bin_width = std::stod(value);
            } else {
                indeterminate_cap = std::stod(value);
            }
        } catch (const std::logic_error &) {
            throw std::invalid_argument("bad value '" + value + "' for " + key);
        }
    }

    std::string get(const std::string &key) const {
        // Shortest text that parses back to the same double.
        auto shortest = [](double v) {
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof(buf), v);
            return std::string(buf, res.ptr);
        };
        std::ostringstream os;
        if (key == "seed") {
            os << seed;
        } else if (key == "ensemble") {
            os << to_string(ensemble);
        } else if (key == "spin") {
            os << spin.to_string();
        } else if (key == "samples") {
            os << samples;
        } else if (key == "k_max") {
            os << k_max;
        } else if (key == "eps_feas") {
            os << shortest(eps_feas);
        } else if (key == "eps_rank") {
            os << shortest(eps_rank);
        } else if (key == "workers") {
            os << workers;
        } else if (key == "out_dir") {
            os << out_dir;
        } else if (key == "resamples") {
            os << resamples;
        } else if (key == "bin_width") {
            os << shortest(bin_width);
        } else if (key == "indeterminate_cap") {
            os << shortest(indeterminate_cap);
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
        return os.str();
    }

    void validate() const {
        if (samples < 1) {
            throw std::invalid_argument("samples must be positive");
        }
        if (k_max < 2) {
            throw std::invalid_argument("k_max must be at least 2");
        }
        if (!(eps_feas > 0.0) || !(eps_rank > 0.0)) {
            throw std::invalid_argument("tolerances must be positive");
        }
        if (workers < 0) {
            throw std::invalid_argument("workers must be non-negative (0 = all cores)");
        }
        if (resamples < 0) {
            throw std::invalid_argument("resamples must be non-negative");
        }
        if (!(bin_width > 0.0)) {
            throw std::invalid_argument("bin_width must be positive");
        }
        if (!(indeterminate_cap >= 0.0 && indeterminate_cap <= 1.0)) {
            throw std::invalid_argument("indeterminate_cap must lie in [0, 1]");
        }
    }

    /// Reads `key = value` lines; '#' starts a comment.
    void load(std::istream &in) {
        std::string line;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            auto hash = line.find('#');
            if (hash != std::string::npos) {
                line.erase(hash);
            }
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
            }
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    void load_file(const std::string &path) {
        std::ifstream in(path);
        if (!in) {
            throw std::invalid_argument("cannot open config file " + path);
        }
        load(in);
    }

    /// Applies TMSENT_<KEY> variables, e.g. TMSENT_SEED or TMSENT_EPS_FEAS.
    void apply_env() {
        for (const auto &key : keys()) {
            std::string name = kEnvPrefix;
            for (char c : key) {
                name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            }
            if (const char *v = std::getenv(name.c_str())) {
                set(key, v);
            }
        }
    }

    std::vector<std::pair<std::string, std::string>> entries() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto &key : keys()) {
            out.emplace_back(key, get(key));
        }
        return out;
    }

    /// Comment block echoed at the top of every artifact.
    std::string header(const std::string &command, const std::string &prefix = "# ") const {
        std::string s = prefix + "tmsent " + command + "\n";
        for (const auto &[k, v] : entries()) {
            s += prefix + k + " = " + v + "\n";
        }
        return s;
    }
};

}  // namespace tmsent
