// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/mempool.h>

#include <stdexcept>

namespace carbyne {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

KeyView TxKey(const TxId& txid) { return {txid.bytes.data(), txid.bytes.size()}; }

void CheckMonotonic(Timestamp last, Timestamp now)
{
    if (now < last) {
        throw std::invalid_argument("mempool: time moved backwards: " + std::to_string(now) + " < " + std::to_string(last));
    }
}

} // namespace

std::string_view ToString(InvDecision d)
{
    return d == InvDecision::Request ? "request" : "already_have";
}

std::string_view ToString(EntryDecision d)
{
    switch (d) {
    case EntryDecision::Accept: return "accept";
    case EntryDecision::DuplicateDrop: return "duplicate_drop";
    case EntryDecision::DoubleSpendDrop: return "double_spend_drop";
    }
    return "unknown";
}

std::string_view ToString(ExitDecision d)
{
    return d == ExitDecision::Removed ? "removed" : "not_found";
}

void CarbyneConfig::Validate() const
{
    tx_params.Validate();
    inputs_params.Validate();
    if (rotation_interval_s <= 0) throw std::invalid_argument("rotation_interval_s must be positive");
    if (link_expiry_s <= 0) throw std::invalid_argument("link_expiry_s must be positive");
    if (chain_capacity == 0) throw std::invalid_argument("chain capacity must be positive");
    if (inputs_reset_interval_s <= 0) throw std::invalid_argument("inputs_reset_interval_s must be positive");
    if (rbf_threshold < 1 || rbf_threshold > inputs_params.CounterMax()) {
        throw std::invalid_argument("rbf_threshold must be in [1, inputs counter max]");
    }
}

std::optional<size_t> ExactKeySet::Find(KeyView key) const
{
    if (m_keys.count(Str(key))) return 0;
    return std::nullopt;
}

void ExactKeySet::RemoveFrom(size_t, KeyView key)
{
    if (m_keys.erase(Str(key)) == 0) throw ContractError("exact set: remove of absent key");
}

bool ExactKeyCounter::Contains(KeyView key, uint32_t threshold) const
{
    const auto it = m_counts.find({reinterpret_cast<const char*>(key.data()), key.size()});
    return it != m_counts.end() && it->second >= threshold;
}

namespace {

std::variant<RotatingFilter, DynamicFilterChain, ExactKeySet> MakeTxFilter(const CarbyneConfig& c, Rng& seeds)
{
    if (c.exact_filters) return ExactKeySet{};
    const FilterOptions options{c.tx_params, c.reseed_on_clear, c.tx_index_fn};
    if (c.strategy == ExpiryStrategy::Chain) {
        return DynamicFilterChain(options, seeds, c.chain_capacity, c.link_expiry_s, 0, c.chain_spawn_interval_s);
    }
    return RotatingFilter(options, seeds, c.rotation_interval_s, 0);
}

std::variant<CountingBloomFilter, ExactKeyCounter> MakeInputsFilter(const CarbyneConfig& c, Rng& seeds)
{
    if (c.exact_filters) return ExactKeyCounter{};
    return CountingBloomFilter(c.inputs_params, seeds.NextSeed(), c.reseed_on_clear);
}

} // namespace

CarbynePool::CarbynePool(const CarbyneConfig& config)
    : m_config((config.Validate(), config)),
      m_seeds(config.seed),
      m_tx_filter(MakeTxFilter(m_config, m_seeds)),
      m_inputs_filter(MakeInputsFilter(m_config, m_seeds))
{
}

void CarbynePool::Maintenance(Timestamp now)
{
    CheckMonotonic(m_last_time, now);
    m_last_time = now;

    const Timestamp elapsed = (now - m_last_inputs_reset) / m_config.inputs_reset_interval_s;
    if (elapsed > 0) {
        std::visit([](auto& f) { f.Clear(); }, m_inputs_filter);
        m_last_inputs_reset += elapsed * m_config.inputs_reset_interval_s;
        ++m_inputs_resets;
    }

    std::visit(Overloaded{
                   [now](RotatingFilter& f) { f.Advance(now); },
                   [now](DynamicFilterChain& f) { f.Advance(now); },
                   [](ExactKeySet&) {},
               },
               m_tx_filter);
}

std::optional<size_t> CarbynePool::FindTx(const TxId& txid) const
{
    return std::visit([&](const auto& f) { return f.Find(TxKey(txid)); }, m_tx_filter);
}

bool CarbynePool::ContainsTx(const TxId& txid) const
{
    return FindTx(txid).has_value();
}

InvDecision CarbynePool::OnInv(const TxId& txid, Timestamp now)
{
    Maintenance(now);
    return ContainsTx(txid) ? InvDecision::AlreadyHave : InvDecision::Request;
}

EntryDecision CarbynePool::OnEntry(const Transaction& tx, Timestamp now)
{
    Maintenance(now);
    if (ContainsTx(tx.txid)) return EntryDecision::DuplicateDrop;

    for (const auto& input : tx.inputs) {
        const auto key = input.Serialize();
        const bool spent = std::visit([&](const auto& f) { return f.Contains(key, m_config.rbf_threshold); },
                                      m_inputs_filter);
        if (spent) return EntryDecision::DoubleSpendDrop;
    }

    std::visit(Overloaded{
                   [&](RotatingFilter& f) { f.Insert(TxKey(tx.txid)); },
                   [&](DynamicFilterChain& f) { f.Insert(TxKey(tx.txid), now); },
                   [&](ExactKeySet& f) { f.Insert(TxKey(tx.txid)); },
               },
               m_tx_filter);
    for (const auto& input : tx.inputs) {
        const auto key = input.Serialize();
        std::visit([&](auto& f) { f.Insert(key); }, m_inputs_filter);
    }
    return EntryDecision::Accept;
}

ExitDecision CarbynePool::OnExit(const TxId& txid, ExitReason, Timestamp now)
{
    Maintenance(now);
    const auto slot = FindTx(txid);
    if (!slot) return ExitDecision::NotFound;
    std::visit([&](auto& f) { f.RemoveFrom(*slot, TxKey(txid)); }, m_tx_filter);
    return ExitDecision::Removed;
}

uint64_t CarbynePool::ResidentEstimate() const
{
    return std::visit(Overloaded{
                          [](const RotatingFilter& f) -> uint64_t { return f.LiveInserts(); },
                          [](const DynamicFilterChain& f) -> uint64_t { return f.LiveInserts(); },
                          [](const ExactKeySet& f) -> uint64_t { return f.Size(); },
                      },
                      m_tx_filter);
}

size_t CarbynePool::TxFilterInstances() const
{
    return std::visit(Overloaded{
                          [](const RotatingFilter&) -> size_t { return 2; },
                          [](const DynamicFilterChain& f) -> size_t { return f.LinkCount(); },
                          [](const ExactKeySet&) -> size_t { return 0; },
                      },
                      m_tx_filter);
}

MemoryReport CarbynePool::Memory() const
{
    MemoryReport r;
    r.tx_filter_bytes = std::visit(Overloaded{
                                       [](const RotatingFilter& f) -> uint64_t { return f.MemoryBytes(); },
                                       [](const DynamicFilterChain& f) -> uint64_t { return f.MemoryBytes(); },
                                       [](const ExactKeySet&) -> uint64_t { return 0; },
                                   },
                                   m_tx_filter);
    r.inputs_filter_bytes = std::visit(Overloaded{
                                           [](const CountingBloomFilter& f) -> uint64_t { return f.MemoryBytes(); },
                                           [](const ExactKeyCounter&) -> uint64_t { return 0; },
                                       },
                                       m_inputs_filter);
    return r;
}

void ReferencePool::Maintenance(Timestamp now)
{
    CheckMonotonic(m_last_time, now);
    m_last_time = now;
    while (!m_by_age.empty() && now - m_by_age.front().first > m_expiry) {
        const auto [entered, txid] = m_by_age.front();
        m_by_age.pop_front();
        const auto it = m_txs.find(txid);
        if (it != m_txs.end() && it->second.entered_at == entered) Erase(it);
    }
}

void ReferencePool::Erase(std::unordered_map<TxId, Entry, TxIdHasher>::iterator it)
{
    for (const auto& input : it->second.inputs) m_spent.erase(input);
    m_txs.erase(it);
}

InvDecision ReferencePool::OnInv(const TxId& txid, Timestamp now)
{
    Maintenance(now);
    return Contains(txid) ? InvDecision::AlreadyHave : InvDecision::Request;
}

EntryDecision ReferencePool::OnEntry(const Transaction& tx, Timestamp now)
{
    Maintenance(now);
    if (Contains(tx.txid)) return EntryDecision::DuplicateDrop;
    for (const auto& input : tx.inputs) {
        if (m_spent.count(input)) return EntryDecision::DoubleSpendDrop;
    }
    m_txs.emplace(tx.txid, Entry{tx.inputs, now});
    for (const auto& input : tx.inputs) m_spent.insert(input);
    m_by_age.emplace_back(now, tx.txid);
    return EntryDecision::Accept;
}

ExitDecision ReferencePool::OnExit(const TxId& txid, ExitReason, Timestamp now)
{
    Maintenance(now);
    const auto it = m_txs.find(txid);
    if (it == m_txs.end()) return ExitDecision::NotFound;
    Erase(it);
    return ExitDecision::Removed;
}

} // namespace carbyne
