// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/scenario.h>

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>
#include <unordered_map>

namespace carbyne {

uint64_t ParseSize(std::string_view text)
{
    static const std::regex pattern(R"(^\s*([0-9]+(?:\.[0-9]+)?)\s*([kKmMgG]?[bB]?)\s*$)");
    std::cmatch match;
    if (!std::regex_match(text.begin(), text.end(), match, pattern)) {
        throw std::invalid_argument("bad size \"" + std::string(text) + "\" (expected e.g. 600KB, 1.8MB)");
    }
    const double value = std::stod(match[1].str());
    std::string unit = match[2].str();
    for (auto& ch : unit) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    double mult = 1;
    if (unit == "K" || unit == "KB") mult = 1e3;
    else if (unit == "M" || unit == "MB") mult = 1e6;
    else if (unit == "G" || unit == "GB") mult = 1e9;
    else if (!unit.empty() && unit != "B") throw std::invalid_argument("bad size unit in \"" + std::string(text) + "\"");
    const double bytes = std::round(value * mult);
    if (bytes < 1) throw std::invalid_argument("size must be at least one byte");
    return static_cast<uint64_t>(bytes);
}

uint64_t BucketsForBytes(uint64_t bytes, uint32_t bucket_bits)
{
    return bytes * 8 / bucket_bits;
}

FilterParams SizedFilter(uint64_t bytes, uint64_t n, uint32_t bucket_bits)
{
    FilterParams p;
    p.bucket_bits = bucket_bits;
    p.m = BucketsForBytes(bytes, bucket_bits);
    p.k = std::min<uint32_t>(MAX_HASH_COUNT, OptimalHashCount(p.m, n));
    p.Validate();
    return p;
}

namespace {

CarbyneConfig RotatingPreset(uint64_t bytes, uint64_t n)
{
    CarbyneConfig c;
    c.tx_params = SizedFilter(bytes, n);
    c.inputs_params = c.tx_params;
    c.strategy = ExpiryStrategy::Rotating;
    return c;
}

} // namespace

std::vector<std::string> PresetNames()
{
    return {"table1-600kb", "table1-800kb", "table1-1mb", "table1-2mb", "table1-3mb",
            "table1-4mb", "stress-preemptive-3x", "stress-dynamic"};
}

std::optional<Preset> FindPreset(std::string_view name)
{
    static const std::vector<std::pair<std::string, uint64_t>> table1 = {
        {"table1-600kb", 600'000}, {"table1-800kb", 800'000}, {"table1-1mb", 1'000'000},
        {"table1-2mb", 2'000'000}, {"table1-3mb", 3'000'000}, {"table1-4mb", 4'000'000},
    };
    for (const auto& [preset, bytes] : table1) {
        if (preset == name) return Preset{preset, RotatingPreset(bytes, 200'000)};
    }
    if (name == "stress-preemptive-3x") return Preset{std::string(name), RotatingPreset(1'800'000, 600'000)};
    if (name == "stress-dynamic") {
        CarbyneConfig c = RotatingPreset(600'000, 200'000);
        c.strategy = ExpiryStrategy::Chain;
        c.chain_capacity = 200'000;
        c.link_expiry_s = TWO_WEEKS_S;
        return Preset{std::string(name), c};
    }
    return std::nullopt;
}

IndexFunction LoadIndexMap(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open index map " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("index map: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw std::invalid_argument("index map must be a JSON object");
    auto table = std::make_shared<std::unordered_map<std::string, std::vector<uint64_t>>>();
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_array()) throw std::invalid_argument("index map: value for " + key + " must be an array");
        std::vector<uint64_t> indices;
        for (const auto& v : value) {
            if (!v.is_number_unsigned()) throw std::invalid_argument("index map: indices must be non-negative integers");
            indices.push_back(v.get<uint64_t>());
        }
        (*table)[key] = std::move(indices);
    }
    return [table](KeyView key) {
        static constexpr char digits[] = "0123456789abcdef";
        std::string hex;
        hex.reserve(key.size() * 2);
        for (const uint8_t b : key) {
            hex += digits[b >> 4];
            hex += digits[b & 0xf];
        }
        const auto it = table->find(hex);
        if (it == table->end()) throw std::out_of_range("index map has no entry for key " + hex);
        return it->second;
    };
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

StressResult RunStress(const StressConfig& config)
{
    if (!(config.scale >= 1.0)) throw std::invalid_argument("stress: scale must be >= 1");
    StressResult result;

    WorkloadConfig& w = result.workload;
    w.seed = config.seed;
    w.duration_s = config.duration_s;
    w.tx_rate_per_s = config.tx_rate_per_s / config.scale;
    w.unconfirmed_expiry_s = config.expiry_s;
    w.congestion = CongestionConfig{config.congestion_start_s,
                                    static_cast<uint64_t>(std::llround(static_cast<double>(config.backlog) / config.scale))};

    const bool chain = config.strategy == ExpiryStrategy::Chain;
    FilterParams params = SizedFilter(config.filter_bytes, chain ? config.capacity : config.backlog, config.bucket_bits);
    if (config.scale_filters) {
        params.m = std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(static_cast<double>(params.m) / config.scale)));
    }

    CarbyneConfig& c = result.carbyne;
    c.tx_params = params;
    c.inputs_params = params;
    c.strategy = config.strategy;
    c.rotation_interval_s = config.expiry_s;
    c.link_expiry_s = config.expiry_s;
    c.chain_capacity = static_cast<uint64_t>(std::llround(static_cast<double>(config.capacity) / config.scale));
    c.seed = config.seed ^ 0x5eedf11e5ULL;

    TraceGenerator generator(w);
    result.report = Replay(generator, c);
    result.release_s = generator.ReleaseTime();
    result.peak_backlog = generator.PeakBacklog();

    result.pre_end_hour = static_cast<uint64_t>(config.congestion_start_s / 3600);
    result.pre_fpr = WindowFpr(result.report, 0, result.pre_end_hour);
    if (result.release_s) {
        const Timestamp settled = *result.release_s + (chain ? config.expiry_s : 2 * config.expiry_s);
        result.post_begin_hour = static_cast<uint64_t>((settled + 3599) / 3600) + 1;
        if (result.post_begin_hour < result.report.hourly.size()) {
            result.post_fpr = WindowFpr(result.report, result.post_begin_hour, result.report.hourly.size());
        }
    }
    return result;
}

std::string FormatStressReport(const StressResult& r)
{
    std::ostringstream out;
    const bool chain = r.carbyne.strategy == ExpiryStrategy::Chain;
    out << fmt::format("strategy,{}\n", chain ? "chain" : "rotating");
    out << fmt::format("filter_m,{}\nfilter_k,{}\nfilter_bytes,{}\n", r.carbyne.tx_params.m, r.carbyne.tx_params.k,
                       MemoryBytes(r.carbyne.tx_params));
    if (chain) out << fmt::format("chain_capacity,{}\n", r.carbyne.chain_capacity);
    out << fmt::format("tx_rate_per_s,{:.6f}\ntarget_backlog,{}\npeak_backlog,{}\n", r.workload.tx_rate_per_s,
                       r.workload.congestion->target_backlog, r.peak_backlog);
    out << fmt::format("release_s,{}\n", r.release_s ? std::to_string(*r.release_s) : std::string("none"));
    out << fmt::format("peak_tx_filter_instances,{}\n", r.report.peak_tx_filter_instances);
    out << fmt::format("peak_tx_filter_bytes,{}\n",
                       r.report.peak_tx_filter_instances * MemoryBytes(r.carbyne.tx_params));
    out << fmt::format("peak_mem_bytes,{}\n", r.report.peak_mem_bytes);
    out << fmt::format("pre_congestion_fpr,{:.10f}\n", r.pre_fpr);
    out << fmt::format("post_expiry_begin_hour,{}\n", r.post_begin_hour);
    out << fmt::format("post_expiry_fpr,{}\n", r.post_fpr ? fmt::format("{:.10f}", *r.post_fpr) : std::string("none"));
    out << fmt::format("overall_fpr,{:.10f}\n", r.report.rates.fpr);
    return out.str();
}

} // namespace carbyne
