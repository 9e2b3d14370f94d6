// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/harness.h>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <ostream>
#include <stdexcept>

namespace carbyne {

namespace {

constexpr uint64_t BATCH = 1000;

using Clock = std::chrono::steady_clock;

std::vector<TxId> RandomIds(Rng& rng, uint64_t count)
{
    std::vector<TxId> ids(count);
    for (auto& id : ids) {
        for (size_t i = 0; i < id.bytes.size(); i += 8) {
            const uint64_t w = rng.NextU64();
            for (size_t j = 0; j < 8; ++j) id.bytes[i + j] = static_cast<uint8_t>(w >> (8 * j));
        }
    }
    return ids;
}

KeyView Key(const TxId& id) { return {id.bytes.data(), id.bytes.size()}; }

/** Runs op over [0, count) in batches and returns the median per-op time in ns. */
template <typename Op>
double MedianNs(uint64_t count, Op&& op)
{
    std::vector<double> per_op;
    per_op.reserve(count / BATCH + 1);
    for (uint64_t start = 0; start < count; start += BATCH) {
        const uint64_t end = std::min(count, start + BATCH);
        const auto t0 = Clock::now();
        for (uint64_t i = start; i < end; ++i) op(i);
        const auto t1 = Clock::now();
        per_op.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(end - start));
    }
    std::nth_element(per_op.begin(), per_op.begin() + per_op.size() / 2, per_op.end());
    return per_op[per_op.size() / 2];
}

// Keeps the optimiser from discarding lookups whose result is otherwise unused.
volatile uint64_t g_sink;

} // namespace

std::vector<BenchRow> BenchOps(const BenchConfig& config)
{
    if (config.iterations < 100'000) throw std::invalid_argument("bench: iterations must be >= 100000");
    Rng rng(config.seed);
    const uint64_t max_n = config.ns.empty() ? 0 : *std::max_element(config.ns.begin(), config.ns.end());
    const auto resident = RandomIds(rng, max_n);
    const auto fresh = RandomIds(rng, config.iterations);
    for (const uint64_t n : config.ns) {
        if (n == 0) throw std::invalid_argument("bench: preload sizes must be positive");
    }
    // Probed keys are copied out contiguously so key fetches cost the same at every n.
    std::vector<TxId> probe(config.iterations);

    std::vector<BenchRow> rows;
    for (const uint64_t n : config.ns) {
        for (auto& p : probe) p = resident[rng.Below(n)];

        for (const uint32_t k : config.ks) {
            FilterParams params = config.params;
            params.k = k;
            CountingBloomFilter filter(params, rng.NextSeed());
            for (uint64_t i = 0; i < n; ++i) filter.Insert(Key(resident[i]));

            uint64_t hits = 0;
            // Present keys, so every query reads all k counters.
            const double query_ns = MedianNs(config.iterations, [&](uint64_t i) {
                hits += filter.Contains(Key(probe[i]));
            });
            const double insert_ns = MedianNs(config.iterations, [&](uint64_t i) { filter.Insert(Key(fresh[i])); });
            const double remove_ns = MedianNs(config.iterations, [&](uint64_t i) { filter.Remove(Key(fresh[i])); });
            g_sink = hits;
            rows.push_back({"cbf", "query", k, n, query_ns});
            rows.push_back({"cbf", "insert", k, n, insert_ns});
            rows.push_back({"cbf", "remove", k, n, remove_ns});
        }

        if (config.include_map) {
            std::map<TxId, uint64_t> map;
            for (uint64_t i = 0; i < n; ++i) map.emplace(resident[i], i);
            uint64_t hits = 0;
            const double query_ns = MedianNs(config.iterations, [&](uint64_t i) {
                hits += map.count(probe[i]);
            });
            const double insert_ns = MedianNs(config.iterations, [&](uint64_t i) { map.emplace(fresh[i], i); });
            const double remove_ns = MedianNs(config.iterations, [&](uint64_t i) { map.erase(fresh[i]); });
            g_sink = hits;
            rows.push_back({"ordered_map", "query", 0, n, query_ns});
            rows.push_back({"ordered_map", "insert", 0, n, insert_ns});
            rows.push_back({"ordered_map", "remove", 0, n, remove_ns});
        }
    }
    return rows;
}

void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows)
{
    out << "structure,op,k,n,median_ns\n";
    for (const auto& r : rows) out << fmt::format("{},{},{},{},{:.3f}\n", r.structure, r.op, r.k, r.n, r.median_ns);
}

} // namespace carbyne
