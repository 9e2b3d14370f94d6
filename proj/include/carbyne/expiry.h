// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <carbyne/filter.h>

#include <cstdint>
#include <optional>
#include <vector>

namespace carbyne {

/** Seconds since trace start. All expiry timing is driven by event timestamps. */
using Timestamp = int64_t;

constexpr Timestamp TWO_WEEKS_S = 14 * 24 * 3600;

/** Shape shared by every filter instance an expiry wrapper creates. */
struct FilterOptions {
    FilterParams params;
    bool reseed_on_clear{true};
    IndexFunction index_fn; //!< test hook, applied to every instance
};

/**
 * Primary/secondary pair in rotation. Inserts go to the primary; queries try
 * the primary first. At every rotation boundary the secondary is cleared and
 * the roles swap, so a key is forgotten one to two intervals after insertion.
 */
class RotatingFilter
{
public:
    RotatingFilter(const FilterOptions& options, Rng& seeds, Timestamp rotation_interval_s = TWO_WEEKS_S,
                   Timestamp start_s = 0);

    /** Applies every rotation boundary in (last_rotation, now]. Throws on time moving backwards. */
    void Advance(Timestamp now);

    /** Slot that answers for key (primary first), or nullopt. */
    std::optional<size_t> Find(KeyView key) const;
    bool Contains(KeyView key) const { return Find(key).has_value(); }
    void Insert(KeyView key);
    /** Removes from the slot that answers for key. Throws ContractError if neither does. */
    void Remove(KeyView key);
    /** Removes from a slot previously returned by Find() in the same step. */
    void RemoveFrom(size_t slot, KeyView key);

    size_t PrimarySlot() const { return m_primary; }
    const CountingBloomFilter& Slot(size_t i) const { return m_slots[i]; }
    uint64_t RotationCount() const { return m_rotations; }
    Timestamp LastRotation() const { return m_last_rotation; }
    Timestamp Interval() const { return m_interval; }
    uint64_t LiveInserts() const { return m_slots[0].LiveInserts() + m_slots[1].LiveInserts(); }
    uint64_t MemoryBytes() const { return m_slots[0].MemoryBytes() + m_slots[1].MemoryBytes(); }

private:
    std::vector<CountingBloomFilter> m_slots;
    size_t m_primary{0};
    Timestamp m_interval;
    Timestamp m_last_rotation;
    uint64_t m_rotations{0};
};

/**
 * Ordered chain of filters that grows under load. A fresh link is spawned when
 * the newest one holds capacity_n live keys; links are dropped once they are
 * link_expiry_s old. The sole remaining link is cleared in place instead.
 *
 * With spawn_interval_s > 0 a fresh link is also started whenever the newest
 * link reaches that age, which makes the chain behave like a RotatingFilter
 * of that interval at low load.
 */
class DynamicFilterChain
{
public:
    struct Link {
        CountingBloomFilter filter;
        Timestamp created_at;
    };

    DynamicFilterChain(const FilterOptions& options, Rng& seeds, uint64_t capacity_n = 200'000,
                       Timestamp link_expiry_s = TWO_WEEKS_S, Timestamp start_s = 0, Timestamp spawn_interval_s = 0);

    /** Expire links by age (and apply timed spawns). Throws on time moving backwards. */
    void Advance(Timestamp now);

    /** Link index answering for key, queried newest to oldest. */
    std::optional<size_t> Find(KeyView key) const;
    bool Contains(KeyView key) const { return Find(key).has_value(); }
    void Insert(KeyView key, Timestamp now);
    void Remove(KeyView key);
    void RemoveFrom(size_t link, KeyView key);

    size_t LinkCount() const { return m_links.size(); }
    const Link& LinkAt(size_t i) const { return m_links[i]; }
    uint64_t Capacity() const { return m_capacity; }
    uint64_t LiveInserts() const;
    uint64_t MemoryBytes() const { return m_links.size() * carbyne::MemoryBytes(m_options.params); }

private:
    void Spawn(Timestamp created_at);

    FilterOptions m_options;
    Rng m_seeds;
    std::vector<Link> m_links; //!< oldest first
    uint64_t m_capacity;
    Timestamp m_link_expiry;
    Timestamp m_spawn_interval;
    Timestamp m_last_advance;
};

} // namespace carbyne
