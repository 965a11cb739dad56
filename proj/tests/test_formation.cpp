#include <doctest.h>

#include <cmath>
#include <set>

#include "coalctl/formation.hpp"
#include "oracles.hpp"

using namespace coalctl;
using namespace coalctl::formation;
using game::CoalitionGame;
using game::PayoffMap;

namespace {

// v(C) = |C| * per_member + bonus * (|C| - 1)
CoalitionGame size_game(std::size_t n, double bonus) {
    CoalitionGame v(n);
    for_each_nonempty_subset(Coalition::grand(n), [&](Coalition c) {
        const double size = static_cast<double>(c.size());
        v.set(c, size + bonus * (size - 1.0));
    });
    return v;
}

PayoffMap random_payoff_map(oracle::Rng& rng, std::size_t n) {
    PayoffMap map(n);
    for_each_nonempty_subset(Coalition::grand(n), [&](Coalition c) {
        std::vector<double> shares;
        for (std::size_t i = 0; i < c.size(); ++i) shares.push_back(oracle::uniform(rng, -1.0, 1.0));
        map.set(c, std::move(shares));
    });
    return map;
}

}  // namespace

TEST_CASE("partition construction") {
    const Partition p({Coalition{3, 1}, Coalition{0}, Coalition{2}}, 4);
    REQUIRE(p.block_count() == 3);
    CHECK(p.blocks()[0] == Coalition{0});
    CHECK(p.blocks()[1] == Coalition{1, 3});
    CHECK(p.blocks()[2] == Coalition{2});
    CHECK(p.block_of(3) == Coalition{1, 3});
    CHECK(p.block_index(2) == 2);
    CHECK(p.to_string() == "{{0},{1,3},{2}}");
    CHECK(Partition::singletons(3).block_count() == 3);
    CHECK(Partition::grand(3).blocks() == std::vector<Coalition>{Coalition{0, 1, 2}});

    CHECK_THROWS_AS(Partition({Coalition{0, 1}, Coalition{1, 2}}, 3), std::invalid_argument);
    CHECK_THROWS_AS(Partition({Coalition{0}}, 2), std::invalid_argument);
    CHECK_THROWS_AS(Partition({Coalition{0, 1}, Coalition{}}, 2), std::invalid_argument);
    CHECK_FALSE(partition_violations({Coalition{1}, Coalition{0}}, 2).empty());
    CHECK(partition_violations({Coalition{0}, Coalition{1}}, 2).empty());
}

TEST_CASE("form_partition") {
    SUBCASE("everyone prefers to stand alone") {
        PayoffMap map(3);
        for_each_nonempty_subset(Coalition::grand(3), [&](Coalition c) {
            map.set(c, std::vector<double>(c.size(), c.size() == 1 ? 0.0 : 1.0));
        });
        CHECK(form_partition(map) == Partition::singletons(3));
    }
    SUBCASE("two-player mutual preference") {
        const PayoffMap map = game::payoff_map([] {
            CoalitionGame v(2);
            v.set(Coalition{0}, 4.0);
            v.set(Coalition{1}, 6.0);
            v.set(Coalition{0, 1}, 8.0);
            return v;
        }());
        CHECK(form_partition(map) == Partition::grand(2));
    }
    SUBCASE("one-sided preference is not enough") {
        PayoffMap map(2);
        map.set(Coalition{0}, {1.0});
        map.set(Coalition{1}, {1.0});
        map.set(Coalition{0, 1}, {0.0, 1.5});
        CHECK(form_partition(map) == Partition::singletons(2));
    }
    SUBCASE("largest aggregate improvement wins, then the rest") {
        PayoffMap map(3);
        for_each_nonempty_subset(Coalition::grand(3), [&](Coalition c) {
            map.set(c, std::vector<double>(c.size(), 0.0));
        });
        map.set(Coalition{0, 1}, {-1.0, -1.0});
        map.set(Coalition{1, 2}, {-0.5, -0.5});
        map.set(Coalition{0, 1, 2}, {-0.5, -0.5, -0.5});
        CHECK(form_partition(map) == Partition({Coalition{0, 1}, Coalition{2}}, 3));
    }
    SUBCASE("ties go to the smaller coalition") {
        PayoffMap map(3);
        for_each_nonempty_subset(Coalition::grand(3), [&](Coalition c) {
            map.set(c, std::vector<double>(c.size(), 0.0));
        });
        map.set(Coalition{1, 2}, {-1.0, -1.0});
        map.set(Coalition{0, 1, 2}, {-1.0, -0.5, -0.5});
        CHECK(form_partition(map) == Partition({Coalition{0}, Coalition{1, 2}}, 3));
    }
    SUBCASE("ties of equal size go to canonical order") {
        PayoffMap map(3);
        for_each_nonempty_subset(Coalition::grand(3), [&](Coalition c) {
            map.set(c, std::vector<double>(c.size(), 0.0));
        });
        map.set(Coalition{1, 2}, {-1.0, -1.0});
        map.set(Coalition{0, 2}, {-1.0, -1.0});
        CHECK(form_partition(map) == Partition({Coalition{0, 2}, Coalition{1}}, 3));
    }
}

TEST_CASE("form_partition on random payoff maps is valid and individually rational") {
    oracle::Rng rng(59);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 6;
        const PayoffMap map = random_payoff_map(rng, n);
        const Partition p = form_partition(map);
        CHECK(partition_violations(p.blocks(), n).empty());
        for (AgentId i = 0; i < n; ++i) {
            CHECK(map(i, p.block_of(i)) <= map(i, Coalition::singleton(i)) + 1e-12);
        }
        // Exhaustive check: no remaining IR coalition of strictly better
        // aggregate improvement was available when the first block was chosen.
        double best = 0.0;
        for_each_nonempty_subset(Coalition::grand(n), [&](Coalition c) {
            double gain = 0.0;
            for (AgentId i : c.members()) {
                const double d = map(i, c) - map(i, Coalition::singleton(i));
                if (d > 0.0) return;
                gain += d;
            }
            best = std::min(best, gain);
        });
        double chosen = 1.0;
        for (const Coalition block : p.blocks()) {
            double gain = 0.0;
            for (AgentId i : block.members()) gain += map(i, block) - map(i, Coalition::singleton(i));
            chosen = std::min(chosen, gain);
        }
        CHECK(chosen <= best + 1e-12);
    }
}

TEST_CASE("settlement efficiency of the formed structure") {
    oracle::Rng rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 6;
        const CoalitionGame v = oracle::random_game(rng, n);
        const PayoffMap map = game::payoff_map(v);
        const Partition p = form_partition(map);
        double from_shares = 0.0;
        for (AgentId i = 0; i < n; ++i) from_shares += map(i, p.block_of(i));
        const double formed = structure_value(p, v).value;
        CHECK(std::abs(formed - from_shares) <= 1e-9);
        CHECK(formed <= structure_value(Partition::singletons(n), v).value + 1e-9);
    }
}

TEST_CASE("partition enumeration counts") {
    CHECK(enumerate_partitions(1).size() == 1);
    CHECK(enumerate_partitions(3).size() == 5);
    CHECK(enumerate_partitions(8).size() == 4140);
    for (std::size_t n = 1; n <= 9; ++n) {
        std::size_t count = 0;
        for_each_partition(n, [&](const Partition&) { ++count; });
        CHECK(count == oracle::bell_number(n));
    }
}

TEST_CASE("partition enumeration is exhaustive, unique and ordered") {
    for (std::size_t n = 1; n <= 6; ++n) {
        std::set<std::vector<Coalition::Bits>> seen;
        for (const auto& p : enumerate_partitions(n)) {
            CHECK(partition_violations(p.blocks(), n).empty());
            std::vector<Coalition::Bits> key;
            for (Coalition c : p.blocks()) key.push_back(c.bits());
            CHECK(seen.insert(key).second);
        }
        std::set<std::vector<Coalition::Bits>> reference;
        for (const auto& blocks : oracle::all_partitions_recursive(n)) {
            std::vector<Coalition::Bits> key;
            for (Coalition c : blocks) key.push_back(c.bits());
            reference.insert(key);
        }
        CHECK(seen == reference);

        PartitionEnumerator it(n);
        std::vector<std::size_t> previous = it.current();
        CHECK(previous == std::vector<std::size_t>(n, 0));
        while (it.next()) {
            CHECK(std::lexicographical_compare(previous.begin(), previous.end(), it.current().begin(),
                                               it.current().end()));
            previous = it.current();
        }
    }
}

TEST_CASE("restricted growth strings") {
    CHECK(Partition::from_restricted_growth({0, 1, 0, 2}) ==
          Partition({Coalition{0, 2}, Coalition{1}, Coalition{3}}, 4));
    CHECK_THROWS_AS(Partition::from_restricted_growth({1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Partition::from_restricted_growth({0, 2}), std::invalid_argument);
}

TEST_CASE("structure value") {
    oracle::Rng rng(67);
    const CoalitionGame v = oracle::random_game(rng, 5);
    double singletons = 0.0;
    for (AgentId i = 0; i < 5; ++i) singletons += v.value(Coalition::singleton(i));
    CHECK(structure_value(Partition::singletons(5), v).value == doctest::Approx(singletons));
    CHECK(structure_value(Partition::grand(5), v).value == v.value(Coalition::grand(5)));
    for_each_partition(5, [&](const Partition& p) {
        double sum = 0.0;
        for (Coalition c : p.blocks()) sum += v.value(c);
        CHECK(std::abs(structure_value(p, v).value - sum) <= 1e-9);
    });
    CoalitionGame partial(2);
    partial.set(Coalition{0}, 1.0);
    CHECK_THROWS_AS(structure_value(Partition::singletons(2), partial), game::MissingCoalitionError);
}

TEST_CASE("optimal structure") {
    SUBCASE("merging always helps") { CHECK(optimal_structure(size_game(5, -0.1)).partition == Partition::grand(5)); }
    SUBCASE("merging always hurts") {
        CHECK(optimal_structure(size_game(5, 0.1)).partition == Partition::singletons(5));
    }
    SUBCASE("ties keep the first enumerated partition") {
        // Additive game: every partition has the same value; the first RGS is all zeros.
        CHECK(optimal_structure(size_game(4, 0.0)).partition == Partition::grand(4));
    }
    SUBCASE("matches independent brute force") {
        oracle::Rng rng(71);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + trial % 5;
            const CoalitionGame v = oracle::random_game(rng, n);
            const auto found = optimal_structure(v);
            const auto [blocks, value] = oracle::brute_force_optimal_structure(v);
            CHECK(found.partition.blocks() == blocks);
            CHECK(found.value == value);
            for_each_partition(n, [&](const Partition& p) { CHECK(found.value <= structure_value(p, v).value); });
        }
    }
    SUBCASE("size cap") { CHECK_THROWS_AS(optimal_structure(size_game(11, 0.0)), std::invalid_argument); }
}
