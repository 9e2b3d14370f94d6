// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/expiry.h>
#include <carbyne/primitives.h>
#include <carbyne/random.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace carbyne {

enum class EventKind : uint8_t { Inv, Entry, Exit };

std::string_view ToString(EventKind kind);

struct TraceEvent {
    Timestamp t_s{0};
    EventKind kind{EventKind::Inv};
    TxId txid;
    std::vector<OutPoint> inputs; //!< entry only
    ExitReason reason{ExitReason::Block}; //!< exit only

    Transaction ToTransaction() const
    {
        return Transaction{txid, inputs, Transaction::EstimateVsize(inputs.size())};
    }

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/** Malformed or inconsistent trace; line is 1-based, 0 when not tied to a line. */
class TraceError : public std::runtime_error
{
public:
    TraceError(uint64_t line, const std::string& what);
    uint64_t Line() const { return m_line; }

private:
    uint64_t m_line;
};

/** Pull-based event stream. */
class EventSource
{
public:
    virtual ~EventSource() = default;
    virtual std::optional<TraceEvent> Next() = 0;
};

class VectorSource : public EventSource
{
public:
    explicit VectorSource(const std::vector<TraceEvent>& events) : m_events(events) {}
    std::optional<TraceEvent> Next() override
    {
        if (m_pos == m_events.size()) return std::nullopt;
        return m_events[m_pos++];
    }

private:
    const std::vector<TraceEvent>& m_events;
    size_t m_pos{0};
};

/**
 * Checks the ordering invariants while a stream is consumed: timestamps
 * nondecreasing and every exit preceded by an entry of the same txid.
 */
class TraceValidator
{
public:
    /** Throws TraceError tagged with position. */
    void Check(const TraceEvent& ev, uint64_t position);

private:
    Timestamp m_last_t{0};
    std::unordered_set<TxId, TxIdHasher> m_entered;
};

/** One JSON object per line: {"t":..,"ev":..,"txid":..,"inputs":[{"txid":..,"idx":..}],"reason":..}. */
std::string FormatEvent(const TraceEvent& ev);
/** Parses a single line. Throws TraceError(line, ...) when malformed. */
TraceEvent ParseEvent(std::string_view text, uint64_t line);

void WriteTrace(std::ostream& out, EventSource& events);
void WriteTrace(std::ostream& out, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> ReadTrace(std::istream& in);
std::vector<TraceEvent> ReadTraceFile(const std::filesystem::path& path);

/** Streams and validates a trace file. */
class TraceReader : public EventSource
{
public:
    explicit TraceReader(const std::filesystem::path& path);
    explicit TraceReader(std::istream& in) : m_in(&in) {}
    std::optional<TraceEvent> Next() override;

private:
    std::ifstream m_file;
    std::istream* m_in;
    uint64_t m_line{0};
    TraceValidator m_validator;
};

struct CongestionConfig {
    Timestamp start_s{0};
    uint64_t target_backlog{600'000};
};

struct WorkloadConfig {
    uint64_t seed{1};
    Timestamp duration_s{86'400};
    double tx_rate_per_s{3.73};
    double mean_inputs_per_tx{3.0};
    double mean_invs_per_tx{3.0};
    double mean_confirm_delay_s{6240.0};
    Timestamp unconfirmed_expiry_s{TWO_WEEKS_S};
    std::optional<CongestionConfig> congestion;
    double conflict_rate{0.001};

    /** Throws std::invalid_argument. */
    void Validate() const;
};

/**
 * Flat JSON document with WorkloadConfig field names; congestion is given as
 * congestion_start_s / congestion_target_backlog. Unknown keys are rejected.
 */
WorkloadConfig ParseWorkloadConfig(std::string_view json_text);
WorkloadConfig LoadWorkloadConfig(const std::filesystem::path& path);
std::string FormatWorkloadConfig(const WorkloadConfig& config);

/**
 * Seeded synthetic workload: Poisson arrivals, one inv then the entry one
 * second later, late duplicate invs, and an exit per accepted transaction
 * (block after an exponential delay, or expired). During a congestion window
 * block exits are held back until the live backlog reaches the target, then
 * drained at the arrival rate.
 */
class TraceGenerator : public EventSource
{
public:
    explicit TraceGenerator(const WorkloadConfig& config);
    std::optional<TraceEvent> Next() override;

    /** Transactions entered and not yet exited, as of the last emitted event. */
    uint64_t LiveBacklog() const { return m_live.size(); }
    std::optional<Timestamp> ReleaseTime() const { return m_release_t; }
    uint64_t PeakBacklog() const { return m_peak_backlog; }

private:
    enum class Action : uint8_t { Inv, Entry, BlockExit, ExpiryExit };

    struct TxState {
        TxId txid;
        std::vector<OutPoint> inputs;
        Timestamp entered_at{0};
        uint32_t pending{0}; //!< queued actions referring to this tx
        bool live{false};
        size_t live_pos{0};
    };

    struct Pending {
        Timestamp t;
        uint64_t seq;
        Action action;
        uint64_t tx;
        bool operator>(const Pending& o) const { return t != o.t ? t > o.t : seq > o.seq; }
    };

    void Schedule(Timestamp t, Action action, uint64_t tx);
    void Arrive(Timestamp t);
    /** Emits the entry, possibly as a conflicting spend of a live transaction. */
    TraceEvent Enter(Timestamp t, TxState& tx, uint64_t id);
    void MarkExited(TxState& tx);
    bool CongestionActive(Timestamp t) const;
    void Release(Timestamp t);
    TxId RandomTxId();

    WorkloadConfig m_config;
    Rng m_rng;
    double m_next_arrival;
    uint64_t m_next_id{0};
    uint64_t m_seq{0};
    bool m_done{false};
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> m_queue;
    std::unordered_map<uint64_t, TxState> m_txs;
    std::vector<uint64_t> m_live; //!< tx ids, unordered
    std::vector<uint64_t> m_deferred;
    std::optional<Timestamp> m_release_t;
    uint64_t m_peak_backlog{0};
};

std::vector<TraceEvent> GenerateTrace(const WorkloadConfig& config);

} // namespace carbyne
