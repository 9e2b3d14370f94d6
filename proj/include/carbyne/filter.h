// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/random.h>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace carbyne {

using KeyView = std::span<const uint8_t>;

/** Raised when a caller breaks an operation's precondition (e.g. removing an absent key). */
class ContractError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

constexpr uint32_t MAX_HASH_COUNT = 64;

struct FilterParams {
    uint64_t m{1};          //!< number of buckets
    uint32_t k{1};          //!< hash indices per key
    uint32_t bucket_bits{2}; //!< counter width: 2, 4 or 8

    /** Throws std::invalid_argument if the shape is unusable. */
    void Validate() const;
    uint32_t CounterMax() const { return (1u << bucket_bits) - 1; }
};

/** ceil(m * bucket_bits / 8). */
uint64_t MemoryBytes(const FilterParams& params);

/** Bucket count for n keys at target false-positive rate p: ceil(n * -ln p / (ln 2)^2). */
uint64_t DeriveBucketCount(uint64_t n, double p);

/** Hash count minimising the false-positive rate: max(1, round-half-even(m/n * ln 2)). */
uint32_t OptimalHashCount(uint64_t m, uint64_t n);

/** (1 - e^(-kn/m))^k */
double TheoreticalFpr(uint64_t m, uint32_t k, uint64_t n);

/**
 * Replaces the seeded hash in tests. Must return exactly k indices in [0, m).
 */
using IndexFunction = std::function<std::vector<uint64_t>(KeyView)>;

/**
 * Counting bloom filter with bucket_bits-wide packed counters.
 *
 * Indices come from double hashing over a 128-bit SipHash of the key:
 * index_i = (h1 + i*h2) mod m. Counters saturate at 2^bucket_bits - 1; a counter
 * that overflowed is flagged and never decremented until the next Clear().
 */
class CountingBloomFilter
{
public:
    CountingBloomFilter(FilterParams params, Seed128 seed, bool reseed_on_clear = true);

    void Insert(KeyView key);
    bool Contains(KeyView key, uint32_t threshold = 1) const;
    /** Throws ContractError if Contains(key) is false. */
    void Remove(KeyView key);
    void Clear();

    /** Indices for key in probe order. Duplicates are possible. */
    std::vector<uint64_t> BucketIndices(KeyView key) const;

    uint32_t Counter(uint64_t index) const;
    bool IsSaturated(uint64_t index) const { return m_saturated.count(index) != 0; }
    uint64_t CounterSum() const;

    const FilterParams& Params() const { return m_params; }
    const Seed128& Seed() const { return m_seed; }
    uint64_t LiveInserts() const { return m_live_inserts; }
    uint64_t MemoryBytes() const { return carbyne::MemoryBytes(m_params); }
    const std::vector<uint8_t>& RawCounters() const { return m_counters; }

    void SetIndexFunction(IndexFunction fn) { m_index_fn = std::move(fn); }

private:
    using IndexArray = std::array<uint64_t, MAX_HASH_COUNT>;

    void FillIndices(KeyView key, IndexArray& out) const;
    void SetCounter(uint64_t index, uint32_t value);

    FilterParams m_params;
    Seed128 m_seed;
    bool m_reseed_on_clear;
    Rng m_reseed_rng;
    std::vector<uint8_t> m_counters;
    std::unordered_set<uint64_t> m_saturated;
    uint64_t m_live_inserts{0};
    IndexFunction m_index_fn;
};

} // namespace carbyne
