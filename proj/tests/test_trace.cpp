// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/mempool.h>
#include <carbyne/trace.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <map>
#include <sstream>
#include <unordered_map>

using namespace carbyne;

namespace {

const std::string A(64, 'a');
const std::string B(64, 'b');

std::string Inv(Timestamp t, const std::string& txid)
{
    return "{\"t\":" + std::to_string(t) + ",\"ev\":\"inv\",\"txid\":\"" + txid + "\",\"inputs\":[],\"reason\":null}";
}

std::string Entry(Timestamp t, const std::string& txid, const std::string& prev)
{
    return "{\"t\":" + std::to_string(t) + ",\"ev\":\"entry\",\"txid\":\"" + txid + "\",\"inputs\":[{\"txid\":\"" +
           prev + "\",\"idx\":1}],\"reason\":null}";
}

std::string Exit(Timestamp t, const std::string& txid, const std::string& reason = "block")
{
    return "{\"t\":" + std::to_string(t) + ",\"ev\":\"exit\",\"txid\":\"" + txid + "\",\"inputs\":[],\"reason\":\"" +
           reason + "\"}";
}

/** Line number of the TraceError raised while reading text, or 0 if it parses. */
uint64_t ErrorLine(const std::string& text)
{
    std::istringstream in(text);
    try {
        ReadTrace(in);
    } catch (const TraceError& e) {
        return e.Line();
    }
    return 0;
}

std::string Serialize(const std::vector<TraceEvent>& events)
{
    std::ostringstream out;
    WriteTrace(out, events);
    return out.str();
}

WorkloadConfig Hour(uint64_t seed)
{
    WorkloadConfig w;
    w.seed = seed;
    w.duration_s = 3600;
    return w;
}

} // namespace

TEST_SUITE("trace format")
{
    TEST_CASE("record layout")
    {
        TraceEvent ev;
        ev.t_s = 7;
        ev.kind = EventKind::Entry;
        ev.txid = *TxId::FromHex(A);
        ev.inputs = {OutPoint{*TxId::FromHex(B), 1}};
        CHECK(FormatEvent(ev) == Entry(7, A, B));
        ev.kind = EventKind::Exit;
        ev.inputs.clear();
        ev.reason = ExitReason::SizeEvict;
        CHECK(FormatEvent(ev) == Exit(7, A, "size_evict"));
    }

    TEST_CASE("write then read gives back the same events")
    {
        const auto events = GenerateTrace(Hour(1));
        REQUIRE(events.size() > 1000);
        std::istringstream in(Serialize(events));
        CHECK(ReadTrace(in) == events);
    }

    TEST_CASE("empty input is an empty trace")
    {
        std::istringstream empty("");
        CHECK(ReadTrace(empty).empty());
        CHECK(ErrorLine(Inv(0, A) + "\n") == 0);
        CHECK(ErrorLine(Inv(0, A)) == 0);
    }

    TEST_CASE("malformed records report their line")
    {
        const std::string ok = Inv(0, A) + "\n";
        CHECK(ErrorLine(ok + Exit(1, B) + "\n") == 2);
        CHECK(ErrorLine(ok + "{not json\n") == 2);
        CHECK(ErrorLine(ok + ok + "\n" + ok) == 3);
        CHECK(ErrorLine(ok + "[1,2]\n") == 2);
        CHECK(ErrorLine(ok + R"({"t":1,"ev":"inv","txid":")" + A + R"(","inputs":[]})" + "\n") == 2);
        CHECK(ErrorLine(ok + R"({"t":1,"ev":"inv","txid":")" + A + R"(","inputs":[],"reason":null,"x":1})" + "\n") ==
              2);
        CHECK(ErrorLine(R"({"t":-1,"ev":"inv","txid":")" + A + R"(","inputs":[],"reason":null})") == 1);
        CHECK(ErrorLine(R"({"t":1.5,"ev":"inv","txid":")" + A + R"(","inputs":[],"reason":null})") == 1);
        CHECK(ErrorLine(Inv(0, std::string(64, 'A'))) == 1);
        CHECK(ErrorLine(Inv(0, std::string(62, 'a'))) == 1);
        CHECK(ErrorLine(R"({"t":0,"ev":"tx","txid":")" + A + R"(","inputs":[],"reason":null})") == 1);
        CHECK(ErrorLine(R"({"t":0,"ev":"entry","txid":")" + A + R"(","inputs":[],"reason":null})") == 1);
        CHECK(ErrorLine(R"({"t":0,"ev":"inv","txid":")" + A + R"(","inputs":[{"txid":")" + B +
                        R"(","idx":0}],"reason":null})") == 1);
        CHECK(ErrorLine(R"({"t":0,"ev":"entry","txid":")" + A + R"(","inputs":[{"txid":")" + B +
                        R"(","idx":0},{"txid":")" + B + R"(","idx":0}],"reason":null})") == 1);
        CHECK(ErrorLine(R"({"t":0,"ev":"inv","txid":")" + A + R"(","inputs":[],"reason":"block"})") == 1);
        CHECK(ErrorLine(Entry(0, A, B) + "\n" + Exit(1, A, "mined")) == 2);
        CHECK(ErrorLine(Entry(0, A, B) + "\n" + Exit(1, A, "expired")) == 0);
    }

    TEST_CASE("ordering invariants")
    {
        CHECK(ErrorLine(Inv(5, A) + "\n" + Inv(4, A) + "\n") == 2);
        CHECK(ErrorLine(Inv(5, A) + "\n" + Inv(5, A) + "\n") == 0);
        CHECK(ErrorLine(Entry(0, A, B) + "\n" + Exit(3, A) + "\n" + Exit(4, B) + "\n") == 3);
    }

    TEST_CASE("file reader")
    {
        CHECK_THROWS_AS(TraceReader("/nonexistent/trace.ndjson"), TraceError);
    }
}

TEST_SUITE("workload config")
{
    TEST_CASE("flat document")
    {
        const auto w = ParseWorkloadConfig(
            R"({"seed":9,"duration_s":7200,"tx_rate_per_s":2.5,"congestion_start_s":100,"congestion_target_backlog":50})");
        CHECK(w.seed == 9);
        CHECK(w.duration_s == 7200);
        CHECK(w.tx_rate_per_s == 2.5);
        REQUIRE(w.congestion.has_value());
        CHECK(w.congestion->start_s == 100);
        CHECK(w.congestion->target_backlog == 50);
        CHECK(w.mean_inputs_per_tx == 3.0);
        const auto again = ParseWorkloadConfig(FormatWorkloadConfig(w));
        CHECK(FormatWorkloadConfig(again) == FormatWorkloadConfig(w));
    }

    TEST_CASE("rejects bad documents")
    {
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"sed":1})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"seed":-1})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"tx_rate_per_s":0})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"mean_inputs_per_tx":0.5})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"conflict_rate":2})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig(R"({"duration_s":10,"congestion_start_s":10})"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig("[]"), std::invalid_argument);
        CHECK_THROWS_AS(ParseWorkloadConfig("{"), std::invalid_argument);
        CHECK_THROWS_AS(LoadWorkloadConfig("/nonexistent.json"), std::invalid_argument);
    }
}

TEST_SUITE("generator")
{
    TEST_CASE("fixed seed gives identical bytes")
    {
        CHECK(Serialize(GenerateTrace(Hour(5))) == Serialize(GenerateTrace(Hour(5))));
        CHECK(Serialize(GenerateTrace(Hour(5))) != Serialize(GenerateTrace(Hour(6))));
    }

    TEST_CASE("entry count is Poisson at the configured rate")
    {
        WorkloadConfig w = Hour(11);
        w.tx_rate_per_s = 1.0;
        size_t entries = 0;
        for (const auto& ev : GenerateTrace(w)) entries += ev.kind == EventKind::Entry;
        CHECK(entries >= 3600 - 180);
        CHECK(entries <= 3600 + 180);
    }

    TEST_CASE("hourly entry counts pass a chi-squared test")
    {
        // Ten independent days pooled into one statistic with 240 degrees of freedom.
        double stat = 0;
        size_t buckets = 0;
        for (uint64_t seed = 1; seed <= 10; ++seed) {
            WorkloadConfig w;
            w.seed = seed;
            w.duration_s = 24 * 3600;
            w.tx_rate_per_s = 1.0;
            std::vector<double> counts(24, 0.0);
            // Each entry trails its arrival by one second; dropping the first second keeps buckets aligned.
            for (const auto& ev : GenerateTrace(w)) {
                if (ev.kind == EventKind::Entry && ev.t_s >= 1 && ev.t_s <= 24 * 3600) {
                    counts[static_cast<size_t>((ev.t_s - 1) / 3600)] += 1;
                }
            }
            const double expected = 3600.0;
            for (const double c : counts) stat += (c - expected) * (c - expected) / expected;
            buckets += counts.size();
        }
        const boost::math::chi_squared dist(static_cast<double>(buckets));
        const double p = boost::math::cdf(boost::math::complement(dist, stat));
        INFO("chi2 = " << stat << ", p = " << p);
        CHECK(p > 0.001);
    }

    TEST_CASE("structural properties of a generated trace")
    {
        WorkloadConfig w = Hour(13);
        w.duration_s = 6 * 3600;
        const auto events = GenerateTrace(w);
        std::unordered_map<TxId, Timestamp, TxIdHasher> first_inv, entry;
        std::unordered_map<TxId, int, TxIdHasher> invs, exits;
        uint64_t inputs = 0, entries = 0;
        for (const auto& ev : events) {
            switch (ev.kind) {
            case EventKind::Inv:
                first_inv.emplace(ev.txid, ev.t_s);
                ++invs[ev.txid];
                break;
            case EventKind::Entry:
                CHECK(first_inv.count(ev.txid));
                CHECK(entry.emplace(ev.txid, ev.t_s).second);
                CHECK(ev.t_s == first_inv[ev.txid] + 1);
                CHECK_FALSE(ev.inputs.empty());
                for (const auto& op : ev.inputs) CHECK(op.index < 4);
                inputs += ev.inputs.size();
                ++entries;
                break;
            case EventKind::Exit:
                CHECK(entry.count(ev.txid));
                CHECK(ev.t_s > entry[ev.txid]);
                CHECK(++exits[ev.txid] == 1);
                break;
            }
        }
        uint64_t total_invs = 0;
        for (const auto& [id, n] : invs) total_invs += n;
        CHECK(static_cast<double>(inputs) / entries == doctest::Approx(3.0).epsilon(0.03));
        CHECK(static_cast<double>(total_invs) / entries == doctest::Approx(3.0).epsilon(0.03));
        std::istringstream in(Serialize(events));
        CHECK(ReadTrace(in).size() == events.size());
    }

    TEST_CASE("conflicts only occur when configured")
    {
        for (const double rate : {0.0, 0.01}) {
            WorkloadConfig w = Hour(14);
            w.duration_s = 4 * 3600;
            w.conflict_rate = rate;
            ReferencePool ref;
            size_t double_spends = 0;
            for (const auto& ev : GenerateTrace(w)) {
                if (ev.kind == EventKind::Entry) {
                    double_spends += ref.OnEntry(ev.ToTransaction(), ev.t_s) == EntryDecision::DoubleSpendDrop;
                } else if (ev.kind == EventKind::Exit) {
                    CHECK(ref.OnExit(ev.txid, ev.reason, ev.t_s) == ExitDecision::Removed);
                }
            }
            if (rate == 0.0) {
                CHECK(double_spends == 0);
            } else {
                CHECK(double_spends > 100);
            }
        }
    }

    TEST_CASE("backlog grows through congestion until the target")
    {
        WorkloadConfig w;
        w.seed = 15;
        w.duration_s = 12 * 3600;
        w.tx_rate_per_s = 1.0;
        w.congestion = CongestionConfig{3600, 10'000};
        ReferencePool ref;
        size_t last = 0;
        bool reached = false;
        bool shrank = false;
        for (const auto& ev : GenerateTrace(w)) {
            if (ev.kind == EventKind::Entry) ref.OnEntry(ev.ToTransaction(), ev.t_s);
            if (ev.kind == EventKind::Exit) ref.OnExit(ev.txid, ev.reason, ev.t_s);
            if (ev.t_s < 3600) {
                last = ref.Size();
                continue;
            }
            if (!reached) {
                shrank |= ref.Size() < last;
                reached = ref.Size() >= 10'000;
            }
            last = ref.Size();
        }
        CHECK(reached);
        CHECK_FALSE(shrank);
        CHECK(last < 10'000);
    }

    TEST_CASE("full-rate congestion reaches the 600k backlog after about 44.7 hours")
    {
        WorkloadConfig w;
        w.seed = 16;
        w.duration_s = 60 * 3600;
        w.congestion = CongestionConfig{0, 600'000};
        TraceGenerator gen(w);
        while (!gen.ReleaseTime() && gen.Next()) {
        }
        REQUIRE(gen.ReleaseTime().has_value());
        CHECK(gen.PeakBacklog() == 600'000);
        CHECK(static_cast<double>(*gen.ReleaseTime()) == doctest::Approx(160'858.0).epsilon(0.01));
    }
}
