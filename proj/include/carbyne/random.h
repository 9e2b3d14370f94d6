// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace carbyne {

/** 128-bit key for the seeded index hash. Kept private to the node that owns the filter. */
struct Seed128 {
    uint64_t lo{0};
    uint64_t hi{0};

    friend bool operator==(const Seed128&, const Seed128&) = default;
};

/**
 * Deterministic random source shared by the generator, the filters' seed
 * redraws and the Monte Carlo routines.
 *
 * The distributions are written out here instead of using <random>'s
 * distribution classes, whose output is implementation-defined; traces must be
 * byte-identical across standard libraries for a fixed seed.
 */
class Rng
{
public:
    explicit Rng(uint64_t seed) : m_engine(seed) {}

    uint64_t NextU64() { return m_engine(); }

    /** Uniform in [0, 1) with 53 bits of precision. */
    double Uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

    /** Uniform integer in [0, bound). bound must be nonzero. */
    uint64_t Below(uint64_t bound);

    bool Bernoulli(double p) { return Uniform() < p; }

    double Exponential(double mean);

    /** Number of failures before the first success, success probability p in (0, 1]. */
    uint64_t Geometric(double p);

    /** Knuth's multiplication method; intended for small means. */
    uint64_t Poisson(double mean);

    Seed128 NextSeed() { return Seed128{m_engine(), m_engine()}; }

private:
    std::mt19937_64 m_engine;
};

/** Draw a seed from the OS entropy source, for runs where none was supplied. */
uint64_t EntropySeed();

} // namespace carbyne
