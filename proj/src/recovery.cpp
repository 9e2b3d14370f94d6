// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/harness.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carbyne {

RecoveryResult RecoveryRate(double fraction_f, uint32_t peers_c, uint32_t trials, uint64_t seed, uint32_t universe)
{
    if (!(fraction_f > 0.0 && fraction_f <= 1.0)) throw std::invalid_argument("recovery: fraction must be in (0, 1]");
    if (peers_c == 0 || trials == 0 || universe == 0) {
        throw std::invalid_argument("recovery: peers, trials and universe must be positive");
    }

    Rng rng(seed);
    std::vector<uint8_t> covered(universe);
    // Retained positions of one peer are found by geometric skips over the universe.
    const bool keep_all = fraction_f >= 1.0;
    const double log_miss = keep_all ? 0.0 : std::log1p(-fraction_f);
    auto skip = [&]() -> uint64_t {
        if (keep_all) return 0;
        return static_cast<uint64_t>(std::floor(std::log(1.0 - rng.Uniform()) / log_miss));
    };

    double total = 0.0;
    for (uint32_t trial = 0; trial < trials; ++trial) {
        std::fill(covered.begin(), covered.end(), uint8_t{0});
        uint64_t count = 0;
        for (uint32_t peer = 0; peer < peers_c; ++peer) {
            for (uint64_t pos = skip(); pos < universe; pos += 1 + skip()) {
                count += covered[pos] ^ 1;
                covered[pos] = 1;
            }
        }
        total += static_cast<double>(count) / universe;
    }

    RecoveryResult r;
    r.monte_carlo = total / trials;
    r.analytic = 1.0 - std::pow(1.0 - fraction_f, peers_c);
    return r;
}

} // namespace carbyne
