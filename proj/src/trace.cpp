// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/trace.h>

#include <json.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace carbyne {

using nlohmann::json;

std::string_view ToString(EventKind kind)
{
    switch (kind) {
    case EventKind::Inv: return "inv";
    case EventKind::Entry: return "entry";
    case EventKind::Exit: return "exit";
    }
    return "unknown";
}

TraceError::TraceError(uint64_t line, const std::string& what)
    : std::runtime_error(line ? "trace line " + std::to_string(line) + ": " + what : "trace: " + what), m_line(line)
{
}

void TraceValidator::Check(const TraceEvent& ev, uint64_t position)
{
    if (ev.t_s < m_last_t) {
        throw TraceError(position, "timestamp " + std::to_string(ev.t_s) + " precedes " + std::to_string(m_last_t));
    }
    m_last_t = ev.t_s;
    if (ev.kind == EventKind::Entry) {
        m_entered.insert(ev.txid);
    } else if (ev.kind == EventKind::Exit && !m_entered.count(ev.txid)) {
        throw TraceError(position, "exit for " + ev.txid.ToHex() + " without a prior entry");
    }
}

std::string FormatEvent(const TraceEvent& ev)
{
    std::string out;
    out.reserve(160 + ev.inputs.size() * 90);
    out += "{\"t\":";
    out += std::to_string(ev.t_s);
    out += ",\"ev\":\"";
    out += ToString(ev.kind);
    out += "\",\"txid\":\"";
    out += ev.txid.ToHex();
    out += "\",\"inputs\":[";
    for (size_t i = 0; i < ev.inputs.size(); ++i) {
        if (i) out += ',';
        out += "{\"txid\":\"";
        out += ev.inputs[i].prev_txid.ToHex();
        out += "\",\"idx\":";
        out += std::to_string(ev.inputs[i].index);
        out += '}';
    }
    out += "],\"reason\":";
    if (ev.kind == EventKind::Exit) {
        out += '"';
        out += ToString(ev.reason);
        out += '"';
    } else {
        out += "null";
    }
    out += '}';
    return out;
}

namespace {

TxId ParseTxId(const json& v, uint64_t line, const char* what)
{
    if (!v.is_string()) throw TraceError(line, std::string(what) + " must be a string");
    const auto id = TxId::FromHex(v.get_ref<const std::string&>());
    if (!id) throw TraceError(line, std::string(what) + " must be 64 lowercase hex characters");
    return *id;
}

} // namespace

TraceEvent ParseEvent(std::string_view text, uint64_t line)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw TraceError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw TraceError(line, "record must be a JSON object");
    if (doc.size() != 5) throw TraceError(line, "record must have exactly the keys t, ev, txid, inputs, reason");
    for (const char* key : {"t", "ev", "txid", "inputs", "reason"}) {
        if (!doc.contains(key)) throw TraceError(line, std::string("missing key \"") + key + "\"");
    }

    TraceEvent ev;
    const json& t = doc["t"];
    if (!t.is_number_unsigned()) throw TraceError(line, "t must be a non-negative integer");
    ev.t_s = static_cast<Timestamp>(t.get<uint64_t>());

    const json& kind = doc["ev"];
    if (!kind.is_string()) throw TraceError(line, "ev must be a string");
    const auto& k = kind.get_ref<const std::string&>();
    if (k == "inv") {
        ev.kind = EventKind::Inv;
    } else if (k == "entry") {
        ev.kind = EventKind::Entry;
    } else if (k == "exit") {
        ev.kind = EventKind::Exit;
    } else {
        throw TraceError(line, "unknown ev \"" + k + "\"");
    }

    ev.txid = ParseTxId(doc["txid"], line, "txid");

    const json& inputs = doc["inputs"];
    if (!inputs.is_array()) throw TraceError(line, "inputs must be an array");
    for (const json& in : inputs) {
        if (!in.is_object() || in.size() != 2 || !in.contains("txid") || !in.contains("idx")) {
            throw TraceError(line, "input must be {\"txid\":...,\"idx\":...}");
        }
        OutPoint op;
        op.prev_txid = ParseTxId(in["txid"], line, "input txid");
        const json& idx = in["idx"];
        if (!idx.is_number_unsigned() || idx.get<uint64_t>() > 0xffffffffULL) {
            throw TraceError(line, "input idx must be an integer in [0, 2^32)");
        }
        op.index = static_cast<uint32_t>(idx.get<uint64_t>());
        ev.inputs.push_back(op);
    }
    if (ev.kind == EventKind::Entry) {
        if (ev.inputs.empty()) throw TraceError(line, "entry must have at least one input");
        std::unordered_set<OutPoint, OutPointHasher> seen;
        for (const auto& op : ev.inputs) {
            if (!seen.insert(op).second) throw TraceError(line, "entry spends the same outpoint twice");
        }
    } else if (!ev.inputs.empty()) {
        throw TraceError(line, "only entry records carry inputs");
    }

    const json& reason = doc["reason"];
    if (ev.kind == EventKind::Exit) {
        if (!reason.is_string()) throw TraceError(line, "exit reason must be a string");
        const auto r = ParseExitReason(reason.get_ref<const std::string&>());
        if (!r) throw TraceError(line, "unknown exit reason \"" + reason.get<std::string>() + "\"");
        ev.reason = *r;
    } else if (!reason.is_null()) {
        throw TraceError(line, "reason must be null for non-exit records");
    }
    return ev;
}

void WriteTrace(std::ostream& out, EventSource& events)
{
    while (auto ev = events.Next()) {
        out << FormatEvent(*ev) << '\n';
    }
}

void WriteTrace(std::ostream& out, const std::vector<TraceEvent>& events)
{
    VectorSource source(events);
    WriteTrace(out, source);
}

TraceReader::TraceReader(const std::filesystem::path& path) : m_file(path, std::ios::binary), m_in(&m_file)
{
    if (!m_file) throw TraceError(0, "cannot open " + path.string());
}

std::optional<TraceEvent> TraceReader::Next()
{
    std::string text;
    while (std::getline(*m_in, text)) {
        ++m_line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.empty()) {
            if (m_in->peek() == std::char_traits<char>::eof()) return std::nullopt;
            throw TraceError(m_line, "empty line");
        }
        TraceEvent ev = ParseEvent(text, m_line);
        m_validator.Check(ev, m_line);
        return ev;
    }
    return std::nullopt;
}

std::vector<TraceEvent> ReadTrace(std::istream& in)
{
    TraceReader reader(in);
    std::vector<TraceEvent> events;
    while (auto ev = reader.Next()) events.push_back(std::move(*ev));
    return events;
}

std::vector<TraceEvent> ReadTraceFile(const std::filesystem::path& path)
{
    TraceReader reader(path);
    std::vector<TraceEvent> events;
    while (auto ev = reader.Next()) events.push_back(std::move(*ev));
    return events;
}

void WorkloadConfig::Validate() const
{
    if (duration_s <= 0) throw std::invalid_argument("duration_s must be positive");
    if (!(tx_rate_per_s > 0)) throw std::invalid_argument("tx_rate_per_s must be positive");
    if (!(mean_inputs_per_tx >= 1)) throw std::invalid_argument("mean_inputs_per_tx must be >= 1");
    if (!(mean_invs_per_tx >= 1)) throw std::invalid_argument("mean_invs_per_tx must be >= 1");
    if (!(mean_confirm_delay_s > 0)) throw std::invalid_argument("mean_confirm_delay_s must be positive");
    if (unconfirmed_expiry_s <= 0) throw std::invalid_argument("unconfirmed_expiry_s must be positive");
    if (!(conflict_rate >= 0 && conflict_rate <= 1)) throw std::invalid_argument("conflict_rate must be in [0, 1]");
    if (congestion) {
        if (congestion->start_s < 0 || congestion->start_s >= duration_s) {
            throw std::invalid_argument("congestion_start_s must be in [0, duration_s)");
        }
        if (congestion->target_backlog == 0) throw std::invalid_argument("congestion_target_backlog must be positive");
    }
}

WorkloadConfig ParseWorkloadConfig(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("workload config: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("workload config must be a JSON object");

    WorkloadConfig c;
    std::optional<Timestamp> cong_start;
    std::optional<uint64_t> cong_target;
    auto number = [](const json& v, const std::string& key) {
        if (!v.is_number()) throw std::invalid_argument("workload config: " + key + " must be a number");
        return v.get<double>();
    };
    auto integer = [](const json& v, const std::string& key) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("workload config: " + key + " must be a non-negative integer");
        return v.get<uint64_t>();
    };
    for (const auto& [key, v] : doc.items()) {
        if (key == "seed") c.seed = integer(v, key);
        else if (key == "duration_s") c.duration_s = static_cast<Timestamp>(integer(v, key));
        else if (key == "tx_rate_per_s") c.tx_rate_per_s = number(v, key);
        else if (key == "mean_inputs_per_tx") c.mean_inputs_per_tx = number(v, key);
        else if (key == "mean_invs_per_tx") c.mean_invs_per_tx = number(v, key);
        else if (key == "mean_confirm_delay_s") c.mean_confirm_delay_s = number(v, key);
        else if (key == "unconfirmed_expiry_s") c.unconfirmed_expiry_s = static_cast<Timestamp>(integer(v, key));
        else if (key == "conflict_rate") c.conflict_rate = number(v, key);
        else if (key == "congestion_start_s") cong_start = static_cast<Timestamp>(integer(v, key));
        else if (key == "congestion_target_backlog") cong_target = integer(v, key);
        else throw std::invalid_argument("workload config: unknown key \"" + key + "\"");
    }
    if (cong_start || cong_target) {
        CongestionConfig cong;
        if (cong_start) cong.start_s = *cong_start;
        if (cong_target) cong.target_backlog = *cong_target;
        c.congestion = cong;
    }
    c.Validate();
    return c;
}

WorkloadConfig LoadWorkloadConfig(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open workload config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return ParseWorkloadConfig(buf.str());
}

std::string FormatWorkloadConfig(const WorkloadConfig& c)
{
    nlohmann::ordered_json doc;
    doc["seed"] = c.seed;
    doc["duration_s"] = c.duration_s;
    doc["tx_rate_per_s"] = c.tx_rate_per_s;
    doc["mean_inputs_per_tx"] = c.mean_inputs_per_tx;
    doc["mean_invs_per_tx"] = c.mean_invs_per_tx;
    doc["mean_confirm_delay_s"] = c.mean_confirm_delay_s;
    doc["unconfirmed_expiry_s"] = c.unconfirmed_expiry_s;
    doc["conflict_rate"] = c.conflict_rate;
    if (c.congestion) {
        doc["congestion_start_s"] = c.congestion->start_s;
        doc["congestion_target_backlog"] = c.congestion->target_backlog;
    }
    return doc.dump(2) + "\n";
}

} // namespace carbyne
