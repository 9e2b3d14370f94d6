// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/random.h>

#include <cmath>
#include <limits>

namespace carbyne {

uint64_t Rng::Below(uint64_t bound)
{
    // Rejection sampling removes modulo bias.
    const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % bound;
    uint64_t x;
    do {
        x = m_engine();
    } while (x >= limit);
    return x % bound;
}

double Rng::Exponential(double mean)
{
    return -mean * std::log1p(-Uniform());
}

uint64_t Rng::Geometric(double p)
{
    if (p >= 1.0) return 0;
    const double u = 1.0 - Uniform(); // (0, 1]
    return static_cast<uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

uint64_t Rng::Poisson(double mean)
{
    const double limit = std::exp(-mean);
    uint64_t k = 0;
    double prod = Uniform();
    while (prod > limit) {
        ++k;
        prod *= Uniform();
    }
    return k;
}

uint64_t EntropySeed()
{
    std::random_device rd;
    return (static_cast<uint64_t>(rd()) << 32) ^ rd();
}

} // namespace carbyne
