// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace carbyne {

/** 32-byte transaction hash. Text form is 64 lowercase hex characters, byte order as stored. */
struct TxId {
    std::array<uint8_t, 32> bytes{};

    std::string ToHex() const;
    /** nullopt unless s is exactly 64 lowercase hex characters. */
    static std::optional<TxId> FromHex(std::string_view s);

    friend bool operator==(const TxId&, const TxId&) = default;
    friend auto operator<=>(const TxId&, const TxId&) = default;
};

struct OutPoint {
    TxId prev_txid;
    uint32_t index{0};

    static constexpr size_t SERIALIZED_SIZE = 36;
    /** prev_txid bytes followed by index as 4 bytes, most significant first. */
    std::array<uint8_t, SERIALIZED_SIZE> Serialize() const;

    friend bool operator==(const OutPoint&, const OutPoint&) = default;
    friend auto operator<=>(const OutPoint&, const OutPoint&) = default;
};

struct Transaction {
    TxId txid;
    std::vector<OutPoint> inputs;
    uint32_t vsize_bytes{0};

    /** Rough vsize for a segwit spend with two outputs; traces carry no size field. */
    static uint32_t EstimateVsize(size_t n_inputs) { return static_cast<uint32_t>(11 + 68 * n_inputs + 62); }
};

enum class ExitReason : uint8_t { Block, Conflict, Replaced, SizeEvict, Reorg, Expired };
constexpr size_t EXIT_REASON_COUNT = 6;

std::string_view ToString(ExitReason reason);
std::optional<ExitReason> ParseExitReason(std::string_view s);

struct TxIdHasher {
    size_t operator()(const TxId& id) const noexcept
    {
        uint64_t h;
        std::memcpy(&h, id.bytes.data(), sizeof(h));
        return static_cast<size_t>(h);
    }
};

struct OutPointHasher {
    size_t operator()(const OutPoint& op) const noexcept
    {
        return TxIdHasher{}(op.prev_txid) ^ (static_cast<size_t>(op.index) * 0x9e3779b97f4a7c15ULL);
    }
};

} // namespace carbyne
