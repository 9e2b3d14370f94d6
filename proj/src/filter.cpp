// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/filter.h>

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace carbyne {

void FilterParams::Validate() const
{
    if (m < 1) throw std::invalid_argument("filter: m must be >= 1");
    if (k < 1 || k > MAX_HASH_COUNT) throw std::invalid_argument("filter: k must be in [1, 64], got " + std::to_string(k));
    if (bucket_bits != 2 && bucket_bits != 4 && bucket_bits != 8) {
        throw std::invalid_argument("filter: bucket_bits must be 2, 4 or 8");
    }
}

uint64_t MemoryBytes(const FilterParams& params)
{
    return (params.m * params.bucket_bits + 7) / 8;
}

uint64_t DeriveBucketCount(uint64_t n, double p)
{
    if (n == 0) throw std::invalid_argument("derive_m: n must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("derive_m: p must be in (0, 1)");
    const double ln2 = std::numbers::ln2;
    return static_cast<uint64_t>(std::ceil(static_cast<double>(n) * -std::log(p) / (ln2 * ln2)));
}

uint32_t OptimalHashCount(uint64_t m, uint64_t n)
{
    if (n == 0) throw std::invalid_argument("optimal_k: n must be >= 1");
    if (m == 0) throw std::invalid_argument("optimal_k: m must be >= 1");
    // std::nearbyint honours the default rounding mode, round-half-to-even.
    const double k = std::nearbyint(static_cast<double>(m) / static_cast<double>(n) * std::numbers::ln2);
    return static_cast<uint32_t>(std::max(1.0, k));
}

double TheoreticalFpr(uint64_t m, uint32_t k, uint64_t n)
{
    if (m == 0 || k == 0) throw std::invalid_argument("theoretical_fpr: m and k must be >= 1");
    if (n == 0) return 0.0;
    const double fill = -std::expm1(-static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(m));
    return std::pow(fill, k);
}

CountingBloomFilter::CountingBloomFilter(FilterParams params, Seed128 seed, bool reseed_on_clear)
    : m_params(params),
      m_seed(seed),
      m_reseed_on_clear(reseed_on_clear),
      m_reseed_rng(seed.lo ^ (seed.hi * 0x9e3779b97f4a7c15ULL))
{
    m_params.Validate();
    m_counters.assign(carbyne::MemoryBytes(m_params), 0);
}

void CountingBloomFilter::FillIndices(KeyView key, IndexArray& out) const
{
    if (key.empty()) throw std::invalid_argument("filter: empty key");
    const uint64_t m = m_params.m;
    if (m_index_fn) {
        const auto forced = m_index_fn(key);
        if (forced.size() != m_params.k) throw std::logic_error("filter: index function returned wrong count");
        for (uint32_t i = 0; i < m_params.k; ++i) {
            if (forced[i] >= m) throw std::logic_error("filter: index function out of range");
            out[i] = forced[i];
        }
        return;
    }

    static_assert(crypto_shorthash_siphashx24_BYTES == 16);
    static_assert(crypto_shorthash_siphashx24_KEYBYTES == 16);
    uint8_t hash_key[16];
    for (int i = 0; i < 8; ++i) {
        hash_key[i] = static_cast<uint8_t>(m_seed.lo >> (8 * i));
        hash_key[8 + i] = static_cast<uint8_t>(m_seed.hi >> (8 * i));
    }
    uint8_t digest[16];
    crypto_shorthash_siphashx24(digest, key.data(), key.size(), hash_key);
    uint64_t h1 = 0, h2 = 0;
    for (int i = 0; i < 8; ++i) {
        h1 |= static_cast<uint64_t>(digest[i]) << (8 * i);
        h2 |= static_cast<uint64_t>(digest[8 + i]) << (8 * i);
    }

    uint64_t index = h1 % m;
    const uint64_t step = h2 % m;
    for (uint32_t i = 0; i < m_params.k; ++i) {
        out[i] = index;
        index += step;
        if (index >= m) index -= m;
    }
}

std::vector<uint64_t> CountingBloomFilter::BucketIndices(KeyView key) const
{
    IndexArray idx;
    FillIndices(key, idx);
    return {idx.begin(), idx.begin() + m_params.k};
}

uint32_t CountingBloomFilter::Counter(uint64_t index) const
{
    const uint64_t bit = index * m_params.bucket_bits;
    return (m_counters[bit / 8] >> (bit % 8)) & m_params.CounterMax();
}

void CountingBloomFilter::SetCounter(uint64_t index, uint32_t value)
{
    const uint64_t bit = index * m_params.bucket_bits;
    const uint32_t mask = m_params.CounterMax() << (bit % 8);
    uint8_t& byte = m_counters[bit / 8];
    byte = static_cast<uint8_t>((byte & ~mask) | ((value << (bit % 8)) & mask));
}

void CountingBloomFilter::Insert(KeyView key)
{
    IndexArray idx;
    FillIndices(key, idx);
    const uint32_t max = m_params.CounterMax();
    for (uint32_t i = 0; i < m_params.k; ++i) {
        const uint32_t c = Counter(idx[i]);
        if (c == max) {
            m_saturated.insert(idx[i]);
        } else {
            SetCounter(idx[i], c + 1);
        }
    }
    ++m_live_inserts;
}

bool CountingBloomFilter::Contains(KeyView key, uint32_t threshold) const
{
    if (threshold < 1 || threshold > m_params.CounterMax()) {
        throw std::invalid_argument("filter: threshold " + std::to_string(threshold) + " outside counter range");
    }
    IndexArray idx;
    FillIndices(key, idx);
    for (uint32_t i = 0; i < m_params.k; ++i) {
        if (Counter(idx[i]) < threshold) return false;
    }
    return true;
}

void CountingBloomFilter::Remove(KeyView key)
{
    IndexArray idx;
    FillIndices(key, idx);
    for (uint32_t i = 0; i < m_params.k; ++i) {
        if (Counter(idx[i]) == 0) throw ContractError("filter: remove of a key the filter does not contain");
    }
    const uint32_t max = m_params.CounterMax();
    for (uint32_t i = 0; i < m_params.k; ++i) {
        const uint32_t c = Counter(idx[i]);
        if (c == 0) continue; // repeated index already drained by this removal
        if (c == max && m_saturated.count(idx[i])) continue;
        SetCounter(idx[i], c - 1);
    }
    if (m_live_inserts > 0) --m_live_inserts;
}

void CountingBloomFilter::Clear()
{
    std::fill(m_counters.begin(), m_counters.end(), uint8_t{0});
    m_saturated.clear();
    m_live_inserts = 0;
    if (m_reseed_on_clear) m_seed = m_reseed_rng.NextSeed();
}

uint64_t CountingBloomFilter::CounterSum() const
{
    uint64_t sum = 0;
    for (uint64_t i = 0; i < m_params.m; ++i) sum += Counter(i);
    return sum;
}

} // namespace carbyne
