// Copyright 2026 The Carbyne Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.h"

#include <carbyne/filter.h>

#include <doctest.h>

#include <set>

using namespace carbyne;
using carbyne::test::FilledTxId;
using carbyne::test::ForcedIndices;
using carbyne::test::Key;
using carbyne::test::RandomTxId;

namespace {

/** Keys x1..x4 of the four-key worked example on a 16-bucket, 3-hash filter. */
struct WorkedExample {
    TxId x1 = FilledTxId(1), x2 = FilledTxId(2), x3 = FilledTxId(3), x4 = FilledTxId(4);
    CountingBloomFilter filter{FilterParams{16, 3, 2}, Seed128{1, 2}};

    WorkedExample()
    {
        filter.SetIndexFunction(ForcedIndices({{1, {2, 9, 15}}, {2, {6, 10, 15}}, {3, {0, 4, 9}}, {4, {0, 2, 6}}}));
        filter.Insert(Key(x1));
        filter.Insert(Key(x2));
        filter.Insert(Key(x3));
    }
};

CountingBloomFilter Fresh(uint64_t m = 1 << 20, uint32_t k = 4, uint32_t bits = 2)
{
    return CountingBloomFilter(FilterParams{m, k, bits}, Seed128{0x1234, 0x5678});
}

/** Key whose k indices are pairwise distinct in f. */
TxId CollisionFreeKey(const CountingBloomFilter& f, Rng& rng)
{
    for (;;) {
        const TxId id = RandomTxId(rng);
        const auto idx = f.BucketIndices(Key(id));
        if (std::set<uint64_t>(idx.begin(), idx.end()).size() == idx.size()) return id;
    }
}

} // namespace

TEST_SUITE("dimensioning")
{
    TEST_CASE("bucket count from n and target rate")
    {
        CHECK(DeriveBucketCount(200'000, 0.5) == 288'540);
        CHECK(DeriveBucketCount(200'000, 1e-3) == 2'875'518);
        CHECK(DeriveBucketCount(1, 1e-3) == 15);
        CHECK_THROWS_AS(DeriveBucketCount(0, 0.1), std::invalid_argument);
        CHECK_THROWS_AS(DeriveBucketCount(10, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(DeriveBucketCount(10, 1.0), std::invalid_argument);
    }

    TEST_CASE("optimal hash count")
    {
        CHECK(OptimalHashCount(4'000'000, 200'000) == 14);
        CHECK(OptimalHashCount(2'400'000, 200'000) == 8);
        CHECK(OptimalHashCount(12345, 12345) == 1);
        CHECK(OptimalHashCount(1, 1'000'000) == 1);
        CHECK(OptimalHashCount(2'875'518, 200'000) == 10);
        CHECK_THROWS_AS(OptimalHashCount(10, 0), std::invalid_argument);
    }

    TEST_CASE("theoretical false-positive rate")
    {
        CHECK(TheoreticalFpr(4'000'000, 14, 200'000) == doctest::Approx(6.7e-5).epsilon(0.02));
        CHECK(TheoreticalFpr(2'400'000, 8, 200'000) == doctest::Approx(3.14e-3).epsilon(0.02));
        CHECK(TheoreticalFpr(977, 5, 0) == 0.0);
        Rng rng(7);
        for (int i = 0; i < 200; ++i) {
            const uint64_t m = 1000 + rng.Below(1'000'000);
            const auto k = static_cast<uint32_t>(1 + rng.Below(30));
            const uint64_t n = 1 + rng.Below(200'000);
            CHECK(TheoreticalFpr(m, k, n) <= TheoreticalFpr(m, k, n + 1 + rng.Below(1000)));
            CHECK(TheoreticalFpr(m + 1 + rng.Below(1000), k, n) <= TheoreticalFpr(m, k, n));
        }
    }

    TEST_CASE("memory footprint")
    {
        CHECK(MemoryBytes({4'000'000, 14, 2}) == 1'000'000);
        CHECK(MemoryBytes({2'400'000, 8, 2}) == 600'000);
        CHECK(MemoryBytes({16'000'000, 55, 2}) == 4'000'000);
        CHECK(MemoryBytes({17, 3, 2}) == 5);
        CHECK(MemoryBytes({3, 3, 8}) == 3);
    }

    TEST_CASE("parameter validation")
    {
        CHECK_THROWS_AS(CountingBloomFilter(FilterParams{0, 3, 2}, {}), std::invalid_argument);
        CHECK_THROWS_AS(CountingBloomFilter(FilterParams{16, 0, 2}, {}), std::invalid_argument);
        CHECK_THROWS_AS(CountingBloomFilter(FilterParams{16, 65, 2}, {}), std::invalid_argument);
        CHECK_THROWS_AS(CountingBloomFilter(FilterParams{16, 3, 3}, {}), std::invalid_argument);
    }
}

TEST_SUITE("counting bloom filter")
{
    TEST_CASE("indices are deterministic and seed dependent")
    {
        Rng rng(1);
        const TxId id = RandomTxId(rng);
        auto a = Fresh();
        CHECK(a.BucketIndices(Key(id)) == a.BucketIndices(Key(id)));
        CHECK(a.BucketIndices(Key(id)).size() == 4);
        for (const auto i : a.BucketIndices(Key(id))) CHECK(i < (1u << 20));

        int differ = 0;
        for (int trial = 0; trial < 100; ++trial) {
            CountingBloomFilter f1(FilterParams{1 << 20, 4, 2}, rng.NextSeed());
            CountingBloomFilter f2(FilterParams{1 << 20, 4, 2}, rng.NextSeed());
            differ += f1.BucketIndices(Key(id)) != f2.BucketIndices(Key(id));
        }
        CHECK(differ == 100);
    }

    TEST_CASE("worked example: false positive, then a false negative after removing it")
    {
        WorkedExample ex;
        CHECK(ex.filter.BucketIndices(Key(ex.x1)) == std::vector<uint64_t>{2, 9, 15});
        CHECK(ex.filter.Counter(15) == 2);
        CHECK(ex.filter.Counter(9) == 2);
        CHECK(ex.filter.Contains(Key(ex.x4)));
        ex.filter.Remove(Key(ex.x4));
        CHECK_FALSE(ex.filter.Contains(Key(ex.x2)));
        CHECK_FALSE(ex.filter.Contains(Key(ex.x1)));
        CHECK_FALSE(ex.filter.Contains(Key(ex.x3)));
    }

    TEST_CASE("insert and contains")
    {
        Rng rng(2);
        auto f = Fresh();
        const TxId x = CollisionFreeKey(f, rng);
        CHECK_FALSE(f.Contains(Key(x)));
        f.Insert(Key(x));
        CHECK(f.Contains(Key(x)));
        for (const auto i : f.BucketIndices(Key(x))) CHECK(f.Counter(i) == 1);
        CHECK_FALSE(f.Contains(Key(x), 2));
        CHECK(f.LiveInserts() == 1);
        CHECK_THROWS_AS(f.Contains(Key(x), 0), std::invalid_argument);
        CHECK_THROWS_AS(f.Contains(Key(x), 4), std::invalid_argument);
        CHECK_THROWS_AS(f.Insert(KeyView{}), std::invalid_argument);
    }

    TEST_CASE("counters saturate and stick")
    {
        Rng rng(3);
        auto f = Fresh();
        const TxId x = CollisionFreeKey(f, rng);
        for (int i = 0; i < 4; ++i) f.Insert(Key(x));
        for (const auto i : f.BucketIndices(Key(x))) {
            CHECK(f.Counter(i) == 3);
            CHECK(f.IsSaturated(i));
        }
        for (int i = 0; i < 4; ++i) f.Remove(Key(x));
        for (const auto i : f.BucketIndices(Key(x))) CHECK(f.Counter(i) == 3);
        f.Clear();
        for (const auto i : f.BucketIndices(Key(x))) CHECK_FALSE(f.IsSaturated(i));
    }

    TEST_CASE("wider counters hold more before saturating")
    {
        Rng rng(4);
        auto f = Fresh(1 << 16, 3, 4);
        const TxId x = CollisionFreeKey(f, rng);
        for (int i = 0; i < 15; ++i) f.Insert(Key(x));
        for (const auto i : f.BucketIndices(Key(x))) {
            CHECK(f.Counter(i) == 15);
            CHECK_FALSE(f.IsSaturated(i));
        }
        CHECK(f.Contains(Key(x), 15));
    }

    TEST_CASE("remove")
    {
        Rng rng(5);
        auto f = Fresh();
        const TxId x = CollisionFreeKey(f, rng);
        f.Insert(Key(x));
        f.Remove(Key(x));
        CHECK_FALSE(f.Contains(Key(x)));
        CHECK(f.CounterSum() == 0);
        CHECK(f.LiveInserts() == 0);
        CHECK_THROWS_AS(f.Remove(Key(x)), ContractError);
        auto empty = Fresh();
        CHECK_THROWS_AS(empty.Remove(Key(x)), ContractError);
    }

    TEST_CASE("clear")
    {
        Rng rng(6);
        auto f = Fresh();
        std::vector<TxId> keys;
        for (int i = 0; i < 1000; ++i) keys.push_back(RandomTxId(rng));
        for (const auto& k : keys) f.Insert(Key(k));
        const uint64_t bytes = f.MemoryBytes();
        const auto before = f.BucketIndices(Key(keys[0]));
        f.Clear();
        for (const auto& k : keys) CHECK_FALSE(f.Contains(Key(k)));
        CHECK(f.MemoryBytes() == bytes);
        CHECK(f.RawCounters().size() == bytes);
        CHECK(f.CounterSum() == 0);
        CHECK(f.BucketIndices(Key(keys[0])) != before);

        CountingBloomFilter keep(FilterParams{1 << 20, 4, 2}, Seed128{9, 9}, false);
        const auto fixed = keep.BucketIndices(Key(keys[0]));
        keep.Clear();
        CHECK(keep.BucketIndices(Key(keys[0])) == fixed);
    }

    TEST_CASE("no false negatives without removals")
    {
        Rng rng(8);
        auto f = Fresh(50'000, 6);
        std::vector<TxId> keys;
        for (int i = 0; i < 20'000; ++i) {
            keys.push_back(RandomTxId(rng));
            f.Insert(Key(keys.back()));
        }
        size_t missing = 0;
        for (const auto& k : keys) missing += !f.Contains(Key(k));
        CHECK(missing == 0);
    }

    TEST_CASE("counter sum tracks inserts minus removes")
    {
        Rng rng(9);
        auto f = Fresh(1 << 22, 5);
        std::vector<TxId> keys;
        for (int i = 0; i < 3000; ++i) {
            keys.push_back(RandomTxId(rng));
            f.Insert(Key(keys.back()));
        }
        for (int i = 0; i < 1000; ++i) f.Remove(Key(keys[i]));
        bool saturated = false;
        for (uint64_t i = 0; i < f.Params().m && !saturated; ++i) saturated = f.IsSaturated(i);
        REQUIRE_FALSE(saturated);
        CHECK(f.CounterSum() == 5ull * 2000);
    }

    TEST_CASE("identical seeds and operations give identical counters")
    {
        auto run = [] {
            Rng rng(10);
            CountingBloomFilter f(FilterParams{10'000, 5, 2}, Seed128{3, 4});
            std::vector<TxId> keys;
            for (int i = 0; i < 2000; ++i) {
                keys.push_back(RandomTxId(rng));
                f.Insert(Key(keys.back()));
                if (i % 3 == 0) f.Remove(Key(keys[i / 2]));
            }
            return f.RawCounters();
        };
        CHECK(run() == run());
    }

    TEST_CASE("observed false-positive rate tracks the formula")
    {
        const FilterParams p{100'000, 7, 2};
        const uint64_t n = 10'000, q = 20'000;
        Rng rng(11);
        CountingBloomFilter f(p, rng.NextSeed());
        for (uint64_t i = 0; i < n; ++i) f.Insert(Key(RandomTxId(rng)));
        uint64_t fp = 0;
        for (uint64_t i = 0; i < q; ++i) fp += f.Contains(Key(RandomTxId(rng)));
        const double expected = TheoreticalFpr(p.m, p.k, n);
        REQUIRE(expected * q >= 30);
        CHECK(static_cast<double>(fp) / q == doctest::Approx(expected).epsilon(0.5));
    }

    TEST_CASE("index function contract is enforced")
    {
        CountingBloomFilter f(FilterParams{16, 3, 2}, {});
        f.SetIndexFunction([](KeyView) { return std::vector<uint64_t>{1, 2}; });
        CHECK_THROWS_AS(f.Insert(Key(FilledTxId(1))), std::logic_error);
        f.SetIndexFunction([](KeyView) { return std::vector<uint64_t>{1, 2, 16}; });
        CHECK_THROWS_AS(f.Insert(Key(FilledTxId(1))), std::logic_error);
    }
}
