// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include <carbyne/expiry.h>

#include <stdexcept>
#include <string>

namespace carbyne {

namespace {

CountingBloomFilter MakeFilter(const FilterOptions& options, Rng& seeds)
{
    CountingBloomFilter filter(options.params, seeds.NextSeed(), options.reseed_on_clear);
    if (options.index_fn) filter.SetIndexFunction(options.index_fn);
    return filter;
}

void CheckMonotonic(Timestamp last, Timestamp now)
{
    if (now < last) {
        throw std::invalid_argument("time moved backwards: " + std::to_string(now) + " < " + std::to_string(last));
    }
}

} // namespace

RotatingFilter::RotatingFilter(const FilterOptions& options, Rng& seeds, Timestamp rotation_interval_s, Timestamp start_s)
    : m_interval(rotation_interval_s), m_last_rotation(start_s)
{
    if (rotation_interval_s <= 0) throw std::invalid_argument("rotation interval must be positive");
    m_slots.push_back(MakeFilter(options, seeds));
    m_slots.push_back(MakeFilter(options, seeds));
}

void RotatingFilter::Advance(Timestamp now)
{
    CheckMonotonic(m_last_rotation, now);
    const Timestamp elapsed = (now - m_last_rotation) / m_interval;
    for (Timestamp i = 0; i < elapsed; ++i) {
        m_slots[1 - m_primary].Clear();
        m_primary = 1 - m_primary;
        ++m_rotations;
    }
    m_last_rotation += elapsed * m_interval;
}

std::optional<size_t> RotatingFilter::Find(KeyView key) const
{
    if (m_slots[m_primary].Contains(key)) return m_primary;
    if (m_slots[1 - m_primary].Contains(key)) return 1 - m_primary;
    return std::nullopt;
}

void RotatingFilter::Insert(KeyView key)
{
    m_slots[m_primary].Insert(key);
}

void RotatingFilter::Remove(KeyView key)
{
    const auto slot = Find(key);
    if (!slot) throw ContractError("rotating filter: remove of a key neither slot contains");
    RemoveFrom(*slot, key);
}

void RotatingFilter::RemoveFrom(size_t slot, KeyView key)
{
    m_slots.at(slot).Remove(key);
}

DynamicFilterChain::DynamicFilterChain(const FilterOptions& options, Rng& seeds, uint64_t capacity_n,
                                       Timestamp link_expiry_s, Timestamp start_s, Timestamp spawn_interval_s)
    : m_options(options),
      m_seeds(seeds.NextU64()),
      m_capacity(capacity_n),
      m_link_expiry(link_expiry_s),
      m_spawn_interval(spawn_interval_s),
      m_last_advance(start_s)
{
    if (capacity_n == 0) throw std::invalid_argument("chain capacity must be positive");
    if (link_expiry_s <= 0) throw std::invalid_argument("link expiry must be positive");
    if (spawn_interval_s < 0) throw std::invalid_argument("spawn interval must not be negative");
    Spawn(start_s);
}

void DynamicFilterChain::Spawn(Timestamp created_at)
{
    m_links.push_back(Link{MakeFilter(m_options, m_seeds), created_at});
}

void DynamicFilterChain::Advance(Timestamp now)
{
    CheckMonotonic(m_last_advance, now);
    m_last_advance = now;

    bool changed = true;
    while (changed) {
        changed = false;
        if (m_spawn_interval > 0 && m_links.back().created_at + m_spawn_interval <= now) {
            Spawn(m_links.back().created_at + m_spawn_interval);
            changed = true;
        }
        if (m_links.size() > 1 && now - m_links.front().created_at >= m_link_expiry) {
            m_links.erase(m_links.begin());
            changed = true;
        }
    }
    Link& sole = m_links.front();
    if (m_links.size() == 1 && now - sole.created_at >= m_link_expiry) {
        sole.filter.Clear();
        sole.created_at = now;
    }
}

std::optional<size_t> DynamicFilterChain::Find(KeyView key) const
{
    for (size_t i = m_links.size(); i-- > 0;) {
        if (m_links[i].filter.Contains(key)) return i;
    }
    return std::nullopt;
}

void DynamicFilterChain::Insert(KeyView key, Timestamp now)
{
    if (m_links.back().filter.LiveInserts() >= m_capacity) Spawn(now);
    m_links.back().filter.Insert(key);
}

void DynamicFilterChain::Remove(KeyView key)
{
    const auto link = Find(key);
    if (!link) throw ContractError("filter chain: remove of a key no link contains");
    RemoveFrom(*link, key);
}

void DynamicFilterChain::RemoveFrom(size_t link, KeyView key)
{
    m_links.at(link).filter.Remove(key);
}

uint64_t DynamicFilterChain::LiveInserts() const
{
    uint64_t total = 0;
    for (const auto& link : m_links) total += link.filter.LiveInserts();
    return total;
}

} // namespace carbyne
