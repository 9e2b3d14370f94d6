// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/trace.h>

#include <algorithm>
#include <cmath>

namespace carbyne {

namespace {
/** Late announcements land within this many seconds after the entry. */
constexpr Timestamp LATE_INV_WINDOW_S = 60;
constexpr double LATE_INV_MEAN_S = 20.0;
} // namespace

TraceGenerator::TraceGenerator(const WorkloadConfig& config)
    : m_config((config.Validate(), config)), m_rng(config.seed)
{
    m_next_arrival = m_rng.Exponential(1.0 / m_config.tx_rate_per_s);
}

TxId TraceGenerator::RandomTxId()
{
    TxId id;
    for (size_t i = 0; i < id.bytes.size(); i += 8) {
        const uint64_t word = m_rng.NextU64();
        for (size_t j = 0; j < 8; ++j) id.bytes[i + j] = static_cast<uint8_t>(word >> (8 * j));
    }
    return id;
}

void TraceGenerator::Schedule(Timestamp t, Action action, uint64_t tx)
{
    m_queue.push(Pending{t, m_seq++, action, tx});
    ++m_txs.at(tx).pending;
}

void TraceGenerator::Arrive(Timestamp t)
{
    const uint64_t id = m_next_id++;
    TxState& tx = m_txs[id];
    tx.txid = RandomTxId();
    const uint64_t n_inputs = 1 + m_rng.Geometric(1.0 / m_config.mean_inputs_per_tx);
    for (uint64_t i = 0; i < n_inputs; ++i) {
        tx.inputs.push_back(OutPoint{RandomTxId(), static_cast<uint32_t>(m_rng.Below(4))});
    }
    Schedule(t, Action::Inv, id);
    const Timestamp entry_t = t + 1;
    Schedule(entry_t, Action::Entry, id);
    const uint64_t late_invs = m_rng.Poisson(m_config.mean_invs_per_tx - 1.0);
    for (uint64_t i = 0; i < late_invs; ++i) {
        const auto delay = static_cast<Timestamp>(std::floor(m_rng.Exponential(LATE_INV_MEAN_S)));
        Schedule(entry_t + 1 + std::min(delay, LATE_INV_WINDOW_S - 1), Action::Inv, id);
    }
}

bool TraceGenerator::CongestionActive(Timestamp t) const
{
    return m_config.congestion && !m_release_t && t >= m_config.congestion->start_s;
}

TraceEvent TraceGenerator::Enter(Timestamp t, TxState& tx, uint64_t id)
{
    bool conflict = false;
    if (m_config.conflict_rate > 0 && !m_live.empty() && m_rng.Bernoulli(m_config.conflict_rate)) {
        const TxState& victim = m_txs.at(m_live[m_rng.Below(m_live.size())]);
        tx.inputs[0] = victim.inputs[m_rng.Below(victim.inputs.size())];
        conflict = true;
    }
    TraceEvent ev{t, EventKind::Entry, tx.txid, tx.inputs, ExitReason::Block};
    if (conflict) {
        // Rejected by any exact mempool; it never becomes live.
        tx.inputs.clear();
        return ev;
    }

    tx.live = true;
    tx.entered_at = t;
    tx.live_pos = m_live.size();
    m_live.push_back(id);
    m_peak_backlog = std::max<uint64_t>(m_peak_backlog, m_live.size());

    const double delay = m_rng.Exponential(m_config.mean_confirm_delay_s);
    if (delay >= static_cast<double>(m_config.unconfirmed_expiry_s)) {
        Schedule(t + m_config.unconfirmed_expiry_s, Action::ExpiryExit, id);
    } else {
        Schedule(t + std::max<Timestamp>(1, static_cast<Timestamp>(std::floor(delay))), Action::BlockExit, id);
    }
    if (CongestionActive(t) && m_live.size() >= m_config.congestion->target_backlog) Release(t);
    return ev;
}

void TraceGenerator::Release(Timestamp t)
{
    m_release_t = t;
    double drain_t = static_cast<double>(t);
    for (const uint64_t id : m_deferred) {
        const auto it = m_txs.find(id);
        if (it == m_txs.end() || !it->second.live) continue;
        drain_t += m_rng.Exponential(1.0 / m_config.tx_rate_per_s);
        Schedule(std::max<Timestamp>(t + 1, static_cast<Timestamp>(std::floor(drain_t))), Action::BlockExit, id);
    }
    m_deferred.clear();
    m_deferred.shrink_to_fit();
}

void TraceGenerator::MarkExited(TxState& tx)
{
    const uint64_t moved = m_live.back();
    m_live[tx.live_pos] = moved;
    m_txs.at(moved).live_pos = tx.live_pos;
    m_live.pop_back();
    tx.live = false;
}

std::optional<TraceEvent> TraceGenerator::Next()
{
    while (!m_done) {
        while (m_next_arrival < static_cast<double>(m_config.duration_s)) {
            const auto at = static_cast<Timestamp>(std::floor(m_next_arrival));
            if (!m_queue.empty() && m_queue.top().t < at) break;
            Arrive(at);
            m_next_arrival += m_rng.Exponential(1.0 / m_config.tx_rate_per_s);
        }
        if (m_queue.empty() || m_queue.top().t > m_config.duration_s) {
            m_done = true;
            break;
        }

        const Pending p = m_queue.top();
        m_queue.pop();
        const auto it = m_txs.find(p.tx);
        TxState& tx = it->second;
        --tx.pending;

        std::optional<TraceEvent> out;
        switch (p.action) {
        case Action::Inv:
            out = TraceEvent{p.t, EventKind::Inv, tx.txid, {}, ExitReason::Block};
            break;
        case Action::Entry:
            out = Enter(p.t, tx, p.tx);
            break;
        case Action::BlockExit:
            if (!tx.live) break;
            if (CongestionActive(p.t)) {
                m_deferred.push_back(p.tx);
                Schedule(tx.entered_at + m_config.unconfirmed_expiry_s, Action::ExpiryExit, p.tx);
                break;
            }
            out = TraceEvent{p.t, EventKind::Exit, tx.txid, {}, ExitReason::Block};
            MarkExited(tx);
            break;
        case Action::ExpiryExit:
            if (!tx.live) break;
            out = TraceEvent{p.t, EventKind::Exit, tx.txid, {}, ExitReason::Expired};
            MarkExited(tx);
            break;
        }
        if (tx.pending == 0 && !tx.live) m_txs.erase(it);
        if (out) return out;
    }
    m_queue = {};
    m_txs.clear();
    return std::nullopt;
}

std::vector<TraceEvent> GenerateTrace(const WorkloadConfig& config)
{
    TraceGenerator gen(config);
    std::vector<TraceEvent> events;
    while (auto ev = gen.Next()) events.push_back(std::move(*ev));
    return events;
}

} // namespace carbyne
