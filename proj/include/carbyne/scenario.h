// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/harness.h>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace carbyne {

/** "600KB", "1MB", "1.8MB", "4096B" → bytes, decimal units. Throws std::invalid_argument. */
uint64_t ParseSize(std::string_view text);
/** Buckets that fit in `bytes` at bucket_bits per counter. */
uint64_t BucketsForBytes(uint64_t bytes, uint32_t bucket_bits);

/** Filter shape for a given size, with k dimensioned for n keys. */
FilterParams SizedFilter(uint64_t bytes, uint64_t n, uint32_t bucket_bits = 2);

struct Preset {
    std::string name;
    CarbyneConfig config;
};

/** table1-600kb, table1-800kb, table1-1mb, table1-2mb, table1-3mb, table1-4mb, stress-preemptive-3x, stress-dynamic. */
std::optional<Preset> FindPreset(std::string_view name);
std::vector<std::string> PresetNames();

/**
 * Test hook: JSON object mapping 64-hex keys to index lists. Lookups of keys
 * missing from the map throw.
 */
IndexFunction LoadIndexMap(const std::filesystem::path& path);

/** Writes to a temporary sibling, then renames over path. */
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);

/**
 * Congestion run: exits halt from congestion_start_s until the backlog reaches
 * the target, then drain. `scale` divides the arrival rate, the chain capacity
 * and the backlog target; filter sizes are divided too when scale_filters is
 * set. k is always dimensioned at full scale.
 *
 * The default windows leave ten days before congestion and about two weeks
 * after the congestion-era filters have expired, so both window FPRs rest on
 * tens of thousands of transactions even at scale 100.
 */
struct StressConfig {
    ExpiryStrategy strategy{ExpiryStrategy::Chain};
    uint64_t filter_bytes{600'000};
    uint32_t bucket_bits{2};
    double scale{1.0};
    bool scale_filters{false};
    uint64_t seed{1};
    Timestamp duration_s{40 * 24 * 3600};
    Timestamp congestion_start_s{10 * 24 * 3600};
    double tx_rate_per_s{3.73};
    uint64_t capacity{200'000};
    uint64_t backlog{600'000};
    Timestamp expiry_s{TWO_WEEKS_S};
};

struct StressResult {
    CarbyneConfig carbyne;
    WorkloadConfig workload;
    MetricsReport report;
    std::optional<Timestamp> release_s;
    uint64_t peak_backlog{0};
    uint64_t pre_end_hour{0};
    uint64_t post_begin_hour{0};
    double pre_fpr{0};
    std::optional<double> post_fpr; //!< empty when the run ends before the congestion filters expire
};

StressResult RunStress(const StressConfig& config);
std::string FormatStressReport(const StressResult& result);

} // namespace carbyne
