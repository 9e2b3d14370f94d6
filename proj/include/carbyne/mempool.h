// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/expiry.h>
#include <carbyne/filter.h>
#include <carbyne/primitives.h>

#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>

namespace carbyne {

enum class InvDecision : uint8_t { Request, AlreadyHave };
enum class EntryDecision : uint8_t { Accept, DuplicateDrop, DoubleSpendDrop };
enum class ExitDecision : uint8_t { Removed, NotFound };

std::string_view ToString(InvDecision d);
std::string_view ToString(EntryDecision d);
std::string_view ToString(ExitDecision d);

enum class ExpiryStrategy : uint8_t { Rotating, Chain };

struct CarbyneConfig {
    FilterParams tx_params{2'400'000, 8, 2};
    FilterParams inputs_params{2'400'000, 8, 2};
    ExpiryStrategy strategy{ExpiryStrategy::Rotating};
    Timestamp rotation_interval_s{TWO_WEEKS_S};
    uint64_t chain_capacity{200'000};
    Timestamp link_expiry_s{TWO_WEEKS_S};
    Timestamp chain_spawn_interval_s{0};
    Timestamp inputs_reset_interval_s{3600};
    uint32_t rbf_threshold{1};
    bool reseed_on_clear{true};
    uint64_t seed{0};

    /** Test hook: back both filters with exact sets (no expiry, inputs still reset). */
    bool exact_filters{false};
    /** Test hook: forced indices for the transaction filter instances. */
    IndexFunction tx_index_fn;

    void Validate() const;
};

struct MemoryReport {
    uint64_t tx_filter_bytes{0};
    uint64_t inputs_filter_bytes{0};
    uint64_t Total() const { return tx_filter_bytes + inputs_filter_bytes; }
};

/** Exact stand-in for the transaction filter. */
class ExactKeySet
{
public:
    std::optional<size_t> Find(KeyView key) const;
    void Insert(KeyView key) { m_keys.emplace(Str(key)); }
    void RemoveFrom(size_t, KeyView key);
    size_t Size() const { return m_keys.size(); }

private:
    static std::string Str(KeyView key) { return {reinterpret_cast<const char*>(key.data()), key.size()}; }
    std::unordered_set<std::string> m_keys;
};

/** Exact stand-in for the inputs filter; counts insertions so thresholds behave like counters. */
class ExactKeyCounter
{
public:
    bool Contains(KeyView key, uint32_t threshold) const;
    void Insert(KeyView key) { ++m_counts[{reinterpret_cast<const char*>(key.data()), key.size()}]; }
    void Clear() { m_counts.clear(); }

private:
    std::unordered_map<std::string, uint32_t> m_counts;
};

/**
 * Mempool that keeps only fingerprints: a transaction filter keyed by txid
 * (rotating pair or dynamic chain) and an inputs filter keyed by serialized
 * outpoint that is cleared in bulk every inputs_reset_interval_s.
 */
class CarbynePool
{
public:
    explicit CarbynePool(const CarbyneConfig& config);

    /** Applies inputs resets and tx filter expiry up to now. Throws on time regression. */
    void Maintenance(Timestamp now);

    InvDecision OnInv(const TxId& txid, Timestamp now);
    EntryDecision OnEntry(const Transaction& tx, Timestamp now);
    /** reason is bookkeeping only; every exit is handled the same way. */
    ExitDecision OnExit(const TxId& txid, ExitReason reason, Timestamp now);

    bool ContainsTx(const TxId& txid) const;
    /** Transaction filter live_inserts summed over slots or links. */
    uint64_t ResidentEstimate() const;
    /** Filter instances currently backing the transaction filter. */
    size_t TxFilterInstances() const;
    MemoryReport Memory() const;
    uint64_t InputsResets() const { return m_inputs_resets; }

    const CarbyneConfig& Config() const { return m_config; }
    const RotatingFilter* Rotating() const { return std::get_if<RotatingFilter>(&m_tx_filter); }
    const DynamicFilterChain* Chain() const { return std::get_if<DynamicFilterChain>(&m_tx_filter); }

private:
    std::optional<size_t> FindTx(const TxId& txid) const;

    CarbyneConfig m_config;
    Rng m_seeds;
    std::variant<RotatingFilter, DynamicFilterChain, ExactKeySet> m_tx_filter;
    std::variant<CountingBloomFilter, ExactKeyCounter> m_inputs_filter;
    Timestamp m_last_time{0};
    Timestamp m_last_inputs_reset{0};
    uint64_t m_inputs_resets{0};
};

/** Exact mempool used as ground truth: txid set, spent outpoints, age-based expiry. */
class ReferencePool
{
public:
    explicit ReferencePool(Timestamp expiry_s = TWO_WEEKS_S) : m_expiry(expiry_s) {}

    /** Drops transactions older than the expiry period (strictly). Throws on time regression. */
    void Maintenance(Timestamp now);

    InvDecision OnInv(const TxId& txid, Timestamp now);
    EntryDecision OnEntry(const Transaction& tx, Timestamp now);
    ExitDecision OnExit(const TxId& txid, ExitReason reason, Timestamp now);

    bool Contains(const TxId& txid) const { return m_txs.count(txid) != 0; }
    bool IsSpent(const OutPoint& op) const { return m_spent.count(op) != 0; }
    size_t Size() const { return m_txs.size(); }
    size_t SpentCount() const { return m_spent.size(); }

private:
    struct Entry {
        std::vector<OutPoint> inputs;
        Timestamp entered_at;
    };

    void Erase(std::unordered_map<TxId, Entry, TxIdHasher>::iterator it);

    Timestamp m_expiry;
    std::unordered_map<TxId, Entry, TxIdHasher> m_txs;
    std::unordered_set<OutPoint, OutPointHasher> m_spent;
    std::deque<std::pair<Timestamp, TxId>> m_by_age; //!< lazily pruned
    Timestamp m_last_time{0};
};

} // namespace carbyne
