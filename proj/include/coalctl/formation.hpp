#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coalctl/coalition.hpp"
#include "coalctl/game.hpp"

namespace coalctl::formation {

// Disjoint cover of agents 0..n-1. Blocks are kept in canonical order
// (ascending smallest member).
class Partition {
public:
    Partition() = default;

    // Canonicalizes; throws std::invalid_argument unless the blocks form a
    // partition of 0..n-1.
    Partition(std::vector<Coalition> blocks, std::size_t n);

    static Partition singletons(std::size_t n);
    static Partition grand(std::size_t n);
    // Block ids must form a restricted growth string.
    static Partition from_restricted_growth(const std::vector<std::size_t>& rgs);

    std::size_t agents() const noexcept { return agents_; }
    const std::vector<Coalition>& blocks() const noexcept { return blocks_; }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    Coalition block_of(AgentId agent) const;
    std::size_t block_index(AgentId agent) const;

    std::string to_string() const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::size_t agents_{0};
    std::vector<Coalition> blocks_;
};

// Empty when `blocks` is a canonical partition of 0..n-1.
std::vector<std::string> partition_violations(const std::vector<Coalition>& blocks, std::size_t n);

// Greedy top-coalition formation over Phi. Each round picks, among the
// still-unassigned agents, the individually rational coalition with the
// largest aggregate improvement over standing alone (ties: fewer members,
// then canonical set order).
Partition form_partition(const game::PayoffMap& payoffs);

// Restricted-growth-string enumerator; visits every set partition of n
// elements once, in lexicographic order of the strings.
class PartitionEnumerator {
public:
    explicit PartitionEnumerator(std::size_t n);

    const std::vector<std::size_t>& current() const noexcept { return rgs_; }
    Partition partition() const { return Partition::from_restricted_growth(rgs_); }
    // Advances; false once the last partition has been visited.
    bool next();

private:
    std::vector<std::size_t> rgs_;
    std::vector<std::size_t> prefix_max_;
};

std::vector<Partition> enumerate_partitions(std::size_t n);

template <typename Fn>
void for_each_partition(std::size_t n, Fn&& fn) {
    PartitionEnumerator it(n);
    do {
        fn(it.partition());
    } while (it.next());
}

inline constexpr std::size_t kMaxStructureSearchAgents = 10;

struct StructureValue {
    Partition partition;
    double value{0.0};
};

StructureValue structure_value(const Partition& p, const game::CoalitionGame& v);
inline StructureValue structure_value(const Partition& p, const game::CharacteristicFunction& cf) {
    return structure_value(p, cf.game());
}

// Lowest-cost coalition structure; the first partition in enumeration order
// wins ties.
StructureValue optimal_structure(const game::CoalitionGame& v);
inline StructureValue optimal_structure(const game::CharacteristicFunction& cf) {
    return optimal_structure(cf.game());
}

}  // namespace coalctl::formation
