// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/mempool.h>
#include <carbyne/trace.h>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace carbyne {

constexpr size_t EVENT_KIND_COUNT = 3;

struct ConfusionCell {
    uint64_t tp{0}, tn{0}, fp{0}, fn{0};
    uint64_t Queries() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionCell&, const ConfusionCell&) = default;
};

/** Confusion matrix of the transaction filter's answers against the exact pool, per event kind. */
struct ConfusionCounters {
    std::array<ConfusionCell, EVENT_KIND_COUNT> cells{};

    ConfusionCell& operator[](EventKind k) { return cells[static_cast<size_t>(k)]; }
    const ConfusionCell& operator[](EventKind k) const { return cells[static_cast<size_t>(k)]; }
    void Record(EventKind kind, bool reference_present, bool carbyne_present);
    uint64_t Queries() const;
    uint64_t FalsePositives() const;
    friend bool operator==(const ConfusionCounters&, const ConfusionCounters&) = default;
};

struct Rates {
    double fpr{0};
    double discarded{0};
    double reprocessed{0};
    /** Set when a denominator was zero and the rate was reported as 0. */
    bool zero_queries{false};
};

Rates ComputeRates(const ConfusionCounters& c);

struct HourlyRow {
    uint64_t hour{0};
    uint64_t ref_resident{0};
    uint64_t carbyne_resident{0};
    ConfusionCounters window;
    uint64_t mem_bytes{0};

    double WindowFpr() const;
};

struct MetricsReport {
    uint64_t events{0};
    ConfusionCounters counters;
    Rates rates;
    std::vector<HourlyRow> hourly;
    MemoryReport memory; //!< at end of replay
    uint64_t peak_mem_bytes{0};
    size_t peak_tx_filter_instances{0};
    std::array<uint64_t, EXIT_REASON_COUNT> exits_by_reason{};
    uint64_t inputs_resets{0};
    uint64_t final_ref_resident{0};
    uint64_t final_carbyne_resident{0};
    /** Per-event decisions when forensics are enabled. */
    std::vector<std::string> decisions;
};

struct ReplayOptions {
    bool forensics{false};
    Timestamp reference_expiry_s{TWO_WEEKS_S};
};

/**
 * Drives both pools over the same event stream. Presence in the reference
 * pool is ground truth; the Carbyne transaction filter's answer at each event
 * is classified before either pool applies its decision.
 */
MetricsReport Replay(EventSource& events, const CarbyneConfig& config, const ReplayOptions& options = {});
MetricsReport Replay(const std::vector<TraceEvent>& events, const CarbyneConfig& config,
                     const ReplayOptions& options = {});

/** Aggregate FPR over hourly rows with hour in [begin, end). 0 if there were no queries. */
double WindowFpr(const MetricsReport& report, uint64_t begin_hour, uint64_t end_hour);

extern const char* const HOURLY_CSV_HEADER;
void WriteHourlyCsv(std::ostream& out, const MetricsReport& report);
/** key,value rows: confusion counts, rates, exit reasons, memory. */
void WriteSummaryCsv(std::ostream& out, const MetricsReport& report);
void WriteDecisionsLog(std::ostream& out, const MetricsReport& report);

struct RecoveryResult {
    double monte_carlo{0};
    double analytic{0};
};

/**
 * A new node pulls from peers_c sources that each keep every transaction
 * independently with probability fraction_f. Returns the mean covered
 * fraction over trials universes of `universe` transactions, and 1 - (1-f)^c.
 */
RecoveryResult RecoveryRate(double fraction_f, uint32_t peers_c, uint32_t trials, uint64_t seed,
                            uint32_t universe = 100'000);

struct BenchRow {
    std::string structure; //!< "cbf" or "ordered_map"
    std::string op;        //!< query, insert, remove
    uint32_t k{0};         //!< 0 for the map
    uint64_t n{0};
    double median_ns{0};
};

struct BenchConfig {
    std::vector<uint32_t> ks{14};
    std::vector<uint64_t> ns{1'000, 10'000, 100'000, 1'000'000};
    uint64_t iterations{100'000};
    FilterParams params{4'000'000, 14, 2}; //!< k is overridden per row
    uint64_t seed{1};
    bool include_map{true};
};

/** Median per-operation latency, measured over batches. Throws if iterations < 1e5. */
std::vector<BenchRow> BenchOps(const BenchConfig& config);
void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows);

} // namespace carbyne
