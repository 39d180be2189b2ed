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

// Mixes the symmetric Bell state with white noise and asks, for a few
// measurement sets, from which visibility on the moments alone prove
// entanglement. The state is PPT exactly for v <= 1/4.

#include <cstdio>
#include <string>
#include <vector>

#include "tmsent/tmsent.hpp"

using namespace tmsent;

int main() {
    const SpinSize spin = SpinSize::from_qubits(2);
    // Triplet |T0> = (|01> + |10>)/sqrt(2) is the middle Dicke state.
    ComplexMatrix bell = ComplexMatrix::Zero(3, 3);
    bell(1, 1) = 1.0;
    const ComplexMatrix noise = ComplexMatrix::Identity(3, 3) / 3.0;

    const std::vector<std::string> sets{"xx", "xx+yy", "xx+xy+yy", "x+y+z+xx+xy+xz+yy+yz"};
    std::printf("%-24s %s\n", "set", "smallest certified visibility");
    for (const auto &label : sets) {
        auto set = MeasurementSet::parse(Universe::Symmetric, label);
        double found = -1.0;
        for (int step = 0; step <= 100; ++step) {
            double v = step / 100.0;
            DenseHermitian rho(v * bell + (1.0 - v) * noise);
            if (detect(tensor_from_density(rho, spin), set).detected()) {
                found = v;
                break;
            }
        }
        if (found < 0) {
            std::printf("%-24s never\n", label.c_str());
        } else {
            std::printf("%-24s %.2f\n", label.c_str(), found);
        }
    }
    return 0;
}
