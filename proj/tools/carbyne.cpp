// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/harness.h>
#include <carbyne/scenario.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

using namespace carbyne;
namespace fs = std::filesystem;

namespace {

const CLI::Range POSITIVE{uint64_t{1}, std::numeric_limits<uint64_t>::max(), "POSITIVE"};

/** Returns the --seed value, or draws one and reports it so the run can be repeated. */
uint64_t ResolveSeed(const std::optional<uint64_t>& flag)
{
    if (flag) return *flag;
    const uint64_t seed = EntropySeed();
    std::cerr << "seed=" << seed << '\n';
    return seed;
}

struct SizingFlags {
    std::optional<std::string> preset;
    std::optional<uint64_t> m;
    std::optional<std::string> size;
    std::optional<uint32_t> k;
    uint64_t n{200'000};
    uint32_t bucket_bits{2};
    std::optional<uint64_t> inputs_m;
    std::optional<std::string> inputs_size;
    std::optional<uint32_t> inputs_k;
    std::optional<std::string> strategy;
    std::optional<Timestamp> rotation_interval;
    std::optional<uint64_t> chain_capacity;
    std::optional<Timestamp> link_expiry;
    std::optional<Timestamp> inputs_reset;
    std::optional<uint32_t> rbf_threshold;
    std::optional<std::string> index_map;
    bool exact{false};

    void Add(CLI::App& cmd)
    {
        cmd.add_option("--preset", preset, "Named configuration")
            ->check(CLI::IsMember(PresetNames()));
        auto* mo = cmd.add_option("--m", m, "Transaction filter buckets")->check(POSITIVE);
        cmd.add_option("--size", size, "Transaction filter size, e.g. 600KB")->excludes(mo);
        cmd.add_option("--k", k, "Hash count override")->check(CLI::Range(1u, MAX_HASH_COUNT));
        cmd.add_option("--n", n, "Expected keys per filter, used to pick k")->check(POSITIVE);
        cmd.add_option("--bucket-bits", bucket_bits, "Counter width")->check(CLI::IsMember({2u, 4u, 8u}));
        auto* imo = cmd.add_option("--inputs-m", inputs_m, "Inputs filter buckets")->check(POSITIVE);
        cmd.add_option("--inputs-size", inputs_size, "Inputs filter size")->excludes(imo);
        cmd.add_option("--inputs-k", inputs_k, "Inputs filter hash count")->check(CLI::Range(1u, MAX_HASH_COUNT));
        cmd.add_option("--strategy", strategy, "Expiry strategy")->check(CLI::IsMember({"rotating", "chain"}));
        cmd.add_option("--rotation-interval", rotation_interval, "Rotation interval in seconds")
            ->check(POSITIVE);
        cmd.add_option("--chain-capacity", chain_capacity, "Keys per chain link")->check(POSITIVE);
        cmd.add_option("--link-expiry", link_expiry, "Chain link lifetime in seconds")->check(POSITIVE);
        cmd.add_option("--inputs-reset", inputs_reset, "Inputs filter reset interval in seconds")
            ->check(POSITIVE);
        cmd.add_option("--rbf-threshold", rbf_threshold, "Inputs filter hit threshold")->check(POSITIVE);
        cmd.add_option("--index-map", index_map, "JSON map of forced transaction filter indices")
            ->check(CLI::ExistingFile);
        cmd.add_flag("--exact", exact, "Back both filters with exact sets");
    }

    static FilterParams Shape(const std::optional<uint64_t>& m, const std::optional<std::string>& size,
                              const std::optional<uint32_t>& k, uint64_t n, uint32_t bits, FilterParams base)
    {
        if (size) {
            base = SizedFilter(ParseSize(*size), n, bits);
        } else if (m) {
            base.m = *m;
            base.bucket_bits = bits;
            base.k = std::min(MAX_HASH_COUNT, OptimalHashCount(*m, n));
        } else {
            base.bucket_bits = bits;
        }
        if (k) base.k = *k;
        base.Validate();
        return base;
    }

    CarbyneConfig Build(uint64_t seed) const
    {
        CarbyneConfig c = preset ? FindPreset(*preset)->config : CarbyneConfig{};
        c.tx_params = Shape(m, size, k, n, bucket_bits, c.tx_params);
        c.inputs_params = Shape(inputs_m, inputs_size, inputs_k, n, bucket_bits, c.inputs_params);
        if (strategy) c.strategy = *strategy == "chain" ? ExpiryStrategy::Chain : ExpiryStrategy::Rotating;
        if (rotation_interval) c.rotation_interval_s = *rotation_interval;
        if (chain_capacity) c.chain_capacity = *chain_capacity;
        if (link_expiry) c.link_expiry_s = *link_expiry;
        if (inputs_reset) c.inputs_reset_interval_s = *inputs_reset;
        if (rbf_threshold) c.rbf_threshold = *rbf_threshold;
        if (index_map) c.tx_index_fn = LoadIndexMap(*index_map);
        c.exact_filters = exact;
        c.seed = seed;
        c.Validate();
        return c;
    }
};

template <typename Writer>
std::string Render(Writer&& writer)
{
    std::ostringstream out;
    writer(out);
    return out.str();
}

void WriteReport(const fs::path& dir, const MetricsReport& report, bool forensics)
{
    fs::create_directories(dir);
    const auto summary = Render([&](std::ostream& o) { WriteSummaryCsv(o, report); });
    const auto hourly = Render([&](std::ostream& o) { WriteHourlyCsv(o, report); });
    std::string decisions;
    if (forensics) decisions = Render([&](std::ostream& o) { WriteDecisionsLog(o, report); });
    WriteFileAtomic(dir / "summary.csv", summary);
    WriteFileAtomic(dir / "hourly.csv", hourly);
    if (forensics) WriteFileAtomic(dir / "decisions.csv", decisions);
}

int RunDimension(uint64_t n, const std::optional<double>& p, const std::optional<uint64_t>& m,
                 const std::optional<std::string>& size, uint32_t bits)
{
    FilterParams params;
    params.bucket_bits = bits;
    if (p) {
        params.m = DeriveBucketCount(n, *p);
    } else if (m) {
        params.m = *m;
    } else {
        params.m = BucketsForBytes(ParseSize(*size), bits);
    }
    params.k = OptimalHashCount(params.m, n);
    std::cout << fmt::format("m={}\nk={}\nbytes={}\ntheoretical_fpr={:.6e}\n", params.m, params.k,
                             MemoryBytes(params), TheoreticalFpr(params.m, params.k, n));
    return 0;
}

WorkloadConfig LoadWorkload(const fs::path& path, const std::optional<uint64_t>& seed_flag)
{
    WorkloadConfig w = LoadWorkloadConfig(path);
    if (seed_flag) {
        w.seed = *seed_flag;
    } else {
        std::ifstream in(path);
        const auto doc = nlohmann::json::parse(in);
        if (!doc.contains("seed")) w.seed = ResolveSeed(std::nullopt);
    }
    return w;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Carbyne: probabilistic mempool simulator"};
    app.require_subcommand(1);

    // dimension
    auto* dim = app.add_subcommand("dimension", "Derive filter shape for n keys");
    uint64_t dim_n = 0;
    std::optional<double> dim_p;
    std::optional<uint64_t> dim_m;
    std::optional<std::string> dim_size;
    uint32_t dim_bits = 2;
    dim->add_option("--n", dim_n, "Expected keys")->required()->check(POSITIVE);
    auto* po = dim->add_option("--p", dim_p, "Target false-positive rate")->check(CLI::Bound(1e-300, 0.999999));
    auto* mo = dim->add_option("--m", dim_m, "Bucket count")->check(POSITIVE);
    auto* so = dim->add_option("--size", dim_size, "Filter size, e.g. 1MB");
    po->excludes(mo)->excludes(so);
    mo->excludes(so);
    dim->add_option("--bucket-bits", dim_bits, "Counter width")->check(CLI::IsMember({2u, 4u, 8u}));
    dim->callback([&] {
        if (!dim_p && !dim_m && !dim_size) throw CLI::RequiredError("one of --p, --m, --size");
    });

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic NDJSON trace");
    std::string gen_config, gen_out;
    std::optional<uint64_t> gen_seed;
    gen->add_option("--config", gen_config, "Workload config JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Trace output path")->required();
    gen->add_option("--seed", gen_seed, "Override the config seed");

    // replay
    auto* rep = app.add_subcommand("replay", "Replay a trace through both pools");
    std::optional<std::string> rep_trace, rep_workload;
    std::string rep_out;
    std::optional<uint64_t> rep_seed;
    bool rep_forensics = false;
    Timestamp rep_ref_expiry = TWO_WEEKS_S;
    SizingFlags rep_sizing;
    auto* to = rep->add_option("--trace", rep_trace, "NDJSON trace")->check(CLI::ExistingFile);
    auto* wo = rep->add_option("--workload", rep_workload, "Workload config to generate from")
                   ->check(CLI::ExistingFile);
    to->excludes(wo);
    rep->add_option("--out", rep_out, "Output directory")->required();
    rep->add_option("--seed", rep_seed, "Filter seed");
    rep->add_flag("--forensics", rep_forensics, "Write per-event decisions");
    rep->add_option("--reference-expiry", rep_ref_expiry, "Reference pool expiry in seconds")
        ->check(POSITIVE);
    rep_sizing.Add(*rep);
    rep->callback([&] {
        if (!rep_trace && !rep_workload) throw CLI::RequiredError("one of --trace, --workload");
    });

    // stress
    auto* st = app.add_subcommand("stress", "Congestion scenario: generate and replay");
    StressConfig st_cfg;
    st_cfg.scale = 100;
    std::string st_strategy = "chain", st_filter = "600KB";
    std::optional<std::string> st_out;
    std::optional<uint64_t> st_seed;
    st->add_option("--strategy", st_strategy, "Expiry strategy")->check(CLI::IsMember({"rotating", "chain"}));
    st->add_option("--filter", st_filter, "Per-filter size, e.g. 600KB");
    st->add_option("--bucket-bits", st_cfg.bucket_bits, "Counter width")->check(CLI::IsMember({2u, 4u, 8u}));
    st->add_option("--scale", st_cfg.scale, "Divides arrival rate, capacity and backlog")
        ->check(CLI::Range(1.0, 1e6));
    st->add_flag("--scale-filters", st_cfg.scale_filters, "Also divide the filter size by --scale");
    st->add_option("--duration", st_cfg.duration_s, "Trace length in seconds")->check(POSITIVE);
    st->add_option("--congestion-start", st_cfg.congestion_start_s, "Seconds before exits halt");
    st->add_option("--capacity", st_cfg.capacity, "Full-scale link capacity")->check(POSITIVE);
    st->add_option("--backlog", st_cfg.backlog, "Full-scale backlog target")->check(POSITIVE);
    st->add_option("--seed", st_seed, "Workload and filter seed");
    st->add_option("--out", st_out, "Output directory for report and CSVs");

    // bench
    auto* be = app.add_subcommand("bench", "Per-operation latency table");
    BenchConfig be_cfg;
    std::vector<uint32_t> be_k;
    std::vector<uint64_t> be_n;
    std::optional<std::string> be_out;
    bool be_no_map = false;
    std::optional<uint64_t> be_seed;
    be->add_option("--k", be_k, "Hash counts (repeatable)")->check(CLI::Range(1u, MAX_HASH_COUNT));
    be->add_option("--n", be_n, "Preloaded key counts (repeatable)")->check(POSITIVE);
    be->add_option("--iterations", be_cfg.iterations, "Operations per measurement")
        ->check(CLI::Range(uint64_t{100'000}, uint64_t{1'000'000'000}));
    be->add_option("--out", be_out, "CSV output path (default stdout)");
    be->add_flag("--no-map", be_no_map, "Skip the ordered-map baseline");
    be->add_option("--seed", be_seed, "Key seed");

    // recovery
    auto* rc = app.add_subcommand("recovery", "Monte Carlo recovery from partial peers");
    double rc_f = 0.10;
    std::vector<uint32_t> rc_c{4, 8, 12};
    uint32_t rc_trials = 10'000, rc_universe = 100'000;
    std::optional<uint64_t> rc_seed;
    rc->add_option("--f", rc_f, "Fraction each peer retains")->check(CLI::Range(1e-9, 1.0));
    rc->add_option("--c", rc_c, "Peer counts (repeatable)")->check(POSITIVE);
    rc->add_option("--trials", rc_trials, "Monte Carlo trials")->check(POSITIVE);
    rc->add_option("--universe", rc_universe, "Transactions per trial")->check(POSITIVE);
    rc->add_option("--seed", rc_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*dim) return RunDimension(dim_n, dim_p, dim_m, dim_size, dim_bits);

        if (*gen) {
            const WorkloadConfig w = LoadWorkload(gen_config, gen_seed);
            TraceGenerator source(w);
            const auto text = Render([&](std::ostream& o) { WriteTrace(o, source); });
            WriteFileAtomic(gen_out, text);
            if (w.congestion) {
                std::cerr << fmt::format("peak_backlog={} release_s={}\n", source.PeakBacklog(),
                                         source.ReleaseTime() ? std::to_string(*source.ReleaseTime()) : "none");
            }
            return 0;
        }

        if (*rep) {
            const CarbyneConfig config = rep_sizing.Build(ResolveSeed(rep_seed));
            ReplayOptions options;
            options.forensics = rep_forensics;
            options.reference_expiry_s = rep_ref_expiry;
            MetricsReport report;
            if (rep_trace) {
                TraceReader reader{fs::path(*rep_trace)};
                report = Replay(reader, config, options);
            } else {
                TraceGenerator source(LoadWorkload(*rep_workload, std::nullopt));
                report = Replay(source, config, options);
            }
            WriteReport(rep_out, report, rep_forensics);
            std::cout << fmt::format("events={} fpr={:.10f} discarded={:.10f} reprocessed={:.10f}\n", report.events,
                                     report.rates.fpr, report.rates.discarded, report.rates.reprocessed);
            return 0;
        }

        if (*st) {
            st_cfg.strategy = st_strategy == "chain" ? ExpiryStrategy::Chain : ExpiryStrategy::Rotating;
            st_cfg.filter_bytes = ParseSize(st_filter);
            st_cfg.seed = ResolveSeed(st_seed);
            const StressResult result = RunStress(st_cfg);
            const std::string text = FormatStressReport(result);
            std::cout << text;
            if (st_out) {
                WriteReport(*st_out, result.report, false);
                WriteFileAtomic(fs::path(*st_out) / "stress.csv", "key,value\n" + text);
            }
            return 0;
        }

        if (*be) {
            if (!be_k.empty()) be_cfg.ks = be_k;
            if (!be_n.empty()) be_cfg.ns = be_n;
            be_cfg.include_map = !be_no_map;
            be_cfg.seed = ResolveSeed(be_seed);
            const auto rows = BenchOps(be_cfg);
            const auto csv = Render([&](std::ostream& o) { WriteBenchCsv(o, rows); });
            if (be_out) {
                WriteFileAtomic(*be_out, csv);
            } else {
                std::cout << csv;
            }
            // Query-latency ratio of each n against the smallest n, per structure and k.
            std::ostream& notes = be_out ? std::cout : std::cerr;
            for (const auto& base : rows) {
                if (base.op != "query" || base.n != *std::min_element(be_cfg.ns.begin(), be_cfg.ns.end())) continue;
                for (const auto& r : rows) {
                    if (r.op == "query" && r.structure == base.structure && r.k == base.k && r.n != base.n) {
                        notes << fmt::format("query_ratio,{},k={},n={}/n={},{:.3f}\n", r.structure, r.k, r.n, base.n,
                                             r.median_ns / base.median_ns);
                    }
                }
            }
            return 0;
        }

        if (*rc) {
            const uint64_t seed = ResolveSeed(rc_seed);
            std::cout << "f,c,trials,monte_carlo,analytic\n";
            for (const uint32_t c : rc_c) {
                const auto r = RecoveryRate(rc_f, c, rc_trials, seed + c, rc_universe);
                std::cout << fmt::format("{:.6f},{},{},{:.6f},{:.6f}\n", rc_f, c, rc_trials, r.monte_carlo, r.analytic);
            }
            return 0;
        }
    } catch (const TraceError& e) {
        std::cerr << "trace error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
