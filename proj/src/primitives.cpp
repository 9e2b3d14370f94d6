// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/primitives.h>

#include <algorithm>

namespace carbyne {

namespace {
constexpr char HEX_DIGITS[] = "0123456789abcdef";

int HexValue(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}
} // namespace

std::string TxId::ToHex() const
{
    std::string out(64, '0');
    for (size_t i = 0; i < bytes.size(); ++i) {
        out[2 * i] = HEX_DIGITS[bytes[i] >> 4];
        out[2 * i + 1] = HEX_DIGITS[bytes[i] & 0xf];
    }
    return out;
}

std::optional<TxId> TxId::FromHex(std::string_view s)
{
    if (s.size() != 64) return std::nullopt;
    TxId id;
    for (size_t i = 0; i < 32; ++i) {
        const int hi = HexValue(s[2 * i]);
        const int lo = HexValue(s[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        id.bytes[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return id;
}

std::array<uint8_t, OutPoint::SERIALIZED_SIZE> OutPoint::Serialize() const
{
    std::array<uint8_t, SERIALIZED_SIZE> out{};
    std::copy(prev_txid.bytes.begin(), prev_txid.bytes.end(), out.begin());
    out[32] = static_cast<uint8_t>(index >> 24);
    out[33] = static_cast<uint8_t>(index >> 16);
    out[34] = static_cast<uint8_t>(index >> 8);
    out[35] = static_cast<uint8_t>(index);
    return out;
}

std::string_view ToString(ExitReason reason)
{
    switch (reason) {
    case ExitReason::Block: return "block";
    case ExitReason::Conflict: return "conflict";
    case ExitReason::Replaced: return "replaced";
    case ExitReason::SizeEvict: return "size_evict";
    case ExitReason::Reorg: return "reorg";
    case ExitReason::Expired: return "expired";
    }
    return "unknown";
}

std::optional<ExitReason> ParseExitReason(std::string_view s)
{
    for (size_t i = 0; i < EXIT_REASON_COUNT; ++i) {
        const auto r = static_cast<ExitReason>(i);
        if (ToString(r) == s) return r;
    }
    return std::nullopt;
}

} // namespace carbyne
