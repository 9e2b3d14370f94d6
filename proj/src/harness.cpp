// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/harness.h>

#include <fmt/format.h>

#include <algorithm>
#include <ostream>

namespace carbyne {

void ConfusionCounters::Record(EventKind kind, bool reference_present, bool carbyne_present)
{
    ConfusionCell& c = (*this)[kind];
    if (reference_present) {
        ++(carbyne_present ? c.tp : c.fn);
    } else {
        ++(carbyne_present ? c.fp : c.tn);
    }
}

uint64_t ConfusionCounters::Queries() const
{
    uint64_t q = 0;
    for (const auto& c : cells) q += c.Queries();
    return q;
}

uint64_t ConfusionCounters::FalsePositives() const
{
    uint64_t fp = 0;
    for (const auto& c : cells) fp += c.fp;
    return fp;
}

Rates ComputeRates(const ConfusionCounters& c)
{
    Rates r;
    auto ratio = [&r](uint64_t num, uint64_t den) {
        if (den == 0) {
            r.zero_queries = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    const auto& inv = c[EventKind::Inv];
    const auto& entry = c[EventKind::Entry];
    r.fpr = ratio(c.FalsePositives(), c.Queries());
    r.discarded = ratio(inv.fp + entry.fp, inv.Queries() + entry.Queries());
    r.reprocessed = ratio(inv.fn, inv.Queries());
    return r;
}

double HourlyRow::WindowFpr() const
{
    const uint64_t q = window.Queries();
    return q ? static_cast<double>(window.FalsePositives()) / static_cast<double>(q) : 0.0;
}

namespace {

const char* ClassName(bool ref_present, bool cb_present)
{
    if (ref_present) return cb_present ? "tp" : "fn";
    return cb_present ? "fp" : "tn";
}

} // namespace

MetricsReport Replay(EventSource& events, const CarbyneConfig& config, const ReplayOptions& options)
{
    CarbynePool carbyne(config);
    ReferencePool reference(options.reference_expiry_s);
    TraceValidator validator;
    MetricsReport report;

    HourlyRow current;
    bool have_hour = false;
    auto flush = [&](uint64_t next_hour) {
        while (current.hour < next_hour) {
            current.ref_resident = reference.Size();
            current.carbyne_resident = carbyne.ResidentEstimate();
            current.mem_bytes = carbyne.Memory().Total();
            report.hourly.push_back(current);
            current = HourlyRow{};
            current.hour = report.hourly.back().hour + 1;
        }
    };

    while (auto next = events.Next()) {
        const TraceEvent& ev = *next;
        validator.Check(ev, report.events + 1);
        const auto hour = static_cast<uint64_t>(ev.t_s / 3600);
        if (!have_hour) {
            current.hour = 0;
            have_hour = true;
        }
        flush(hour);

        bool ref_present = false;
        bool cb_present = false;
        std::string_view ref_decision, cb_decision;
        switch (ev.kind) {
        case EventKind::Inv: {
            const auto r = reference.OnInv(ev.txid, ev.t_s);
            const auto c = carbyne.OnInv(ev.txid, ev.t_s);
            ref_present = r == InvDecision::AlreadyHave;
            cb_present = c == InvDecision::AlreadyHave;
            ref_decision = ToString(r);
            cb_decision = ToString(c);
            break;
        }
        case EventKind::Entry: {
            const Transaction tx = ev.ToTransaction();
            const auto r = reference.OnEntry(tx, ev.t_s);
            const auto c = carbyne.OnEntry(tx, ev.t_s);
            ref_present = r == EntryDecision::DuplicateDrop;
            cb_present = c == EntryDecision::DuplicateDrop;
            ref_decision = ToString(r);
            cb_decision = ToString(c);
            break;
        }
        case EventKind::Exit: {
            const auto r = reference.OnExit(ev.txid, ev.reason, ev.t_s);
            const auto c = carbyne.OnExit(ev.txid, ev.reason, ev.t_s);
            ref_present = r == ExitDecision::Removed;
            cb_present = c == ExitDecision::Removed;
            ref_decision = ToString(r);
            cb_decision = ToString(c);
            ++report.exits_by_reason[static_cast<size_t>(ev.reason)];
            break;
        }
        }
        report.counters.Record(ev.kind, ref_present, cb_present);
        current.window.Record(ev.kind, ref_present, cb_present);
        ++report.events;

        report.peak_tx_filter_instances = std::max(report.peak_tx_filter_instances, carbyne.TxFilterInstances());
        report.peak_mem_bytes = std::max(report.peak_mem_bytes, carbyne.Memory().Total());

        if (options.forensics) {
            report.decisions.push_back(fmt::format("{},{},{},{},{},{},{}", report.events, ev.t_s, ToString(ev.kind),
                                                   ev.txid.ToHex(), ref_decision, cb_decision,
                                                   ClassName(ref_present, cb_present)));
        }
    }
    if (have_hour) flush(current.hour + 1);

    report.rates = ComputeRates(report.counters);
    report.memory = carbyne.Memory();
    report.inputs_resets = carbyne.InputsResets();
    report.final_ref_resident = reference.Size();
    report.final_carbyne_resident = carbyne.ResidentEstimate();
    return report;
}

MetricsReport Replay(const std::vector<TraceEvent>& events, const CarbyneConfig& config, const ReplayOptions& options)
{
    VectorSource source(events);
    return Replay(source, config, options);
}

double WindowFpr(const MetricsReport& report, uint64_t begin_hour, uint64_t end_hour)
{
    uint64_t fp = 0, q = 0;
    for (const auto& row : report.hourly) {
        if (row.hour < begin_hour || row.hour >= end_hour) continue;
        fp += row.window.FalsePositives();
        q += row.window.Queries();
    }
    return q ? static_cast<double>(fp) / static_cast<double>(q) : 0.0;
}

const char* const HOURLY_CSV_HEADER =
    "hour,ref_resident,carbyne_resident,fp_entry,fn_entry,fp_inv,fn_inv,fp_exit,fn_exit,window_fpr,mem_bytes";

void WriteHourlyCsv(std::ostream& out, const MetricsReport& report)
{
    out << HOURLY_CSV_HEADER << '\n';
    for (const auto& row : report.hourly) {
        const auto& en = row.window[EventKind::Entry];
        const auto& inv = row.window[EventKind::Inv];
        const auto& ex = row.window[EventKind::Exit];
        out << fmt::format("{},{},{},{},{},{},{},{},{},{:.10f},{}\n", row.hour, row.ref_resident, row.carbyne_resident,
                           en.fp, en.fn, inv.fp, inv.fn, ex.fp, ex.fn, row.WindowFpr(), row.mem_bytes);
    }
}

void WriteSummaryCsv(std::ostream& out, const MetricsReport& report)
{
    out << "key,value\n";
    out << "events," << report.events << '\n';
    for (const EventKind kind : {EventKind::Entry, EventKind::Inv, EventKind::Exit}) {
        const auto& c = report.counters[kind];
        const auto name = ToString(kind);
        out << fmt::format("queries_{0},{1}\ntp_{0},{2}\ntn_{0},{3}\nfp_{0},{4}\nfn_{0},{5}\n", name, c.Queries(), c.tp,
                           c.tn, c.fp, c.fn);
    }
    out << fmt::format("fpr,{:.10f}\ndiscarded_rate,{:.10f}\nreprocessed_rate,{:.10f}\n", report.rates.fpr,
                       report.rates.discarded, report.rates.reprocessed);
    out << "zero_query_warning," << (report.rates.zero_queries ? 1 : 0) << '\n';
    for (size_t i = 0; i < EXIT_REASON_COUNT; ++i) {
        out << "exits_" << ToString(static_cast<ExitReason>(i)) << ',' << report.exits_by_reason[i] << '\n';
    }
    out << "inputs_resets," << report.inputs_resets << '\n';
    out << "final_ref_resident," << report.final_ref_resident << '\n';
    out << "final_carbyne_resident," << report.final_carbyne_resident << '\n';
    out << "tx_filter_bytes," << report.memory.tx_filter_bytes << '\n';
    out << "inputs_filter_bytes," << report.memory.inputs_filter_bytes << '\n';
    out << "mem_bytes," << report.memory.Total() << '\n';
    out << "peak_mem_bytes," << report.peak_mem_bytes << '\n';
    out << "peak_tx_filter_instances," << report.peak_tx_filter_instances << '\n';
}

void WriteDecisionsLog(std::ostream& out, const MetricsReport& report)
{
    out << "pos,t,ev,txid,ref_decision,carbyne_decision,class\n";
    for (const auto& line : report.decisions) out << line << '\n';
}

} // namespace carbyne
