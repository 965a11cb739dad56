#include "coalctl/formation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace coalctl::formation {

std::vector<std::string> partition_violations(const std::vector<Coalition>& blocks, std::size_t n) {
    std::vector<std::string> issues;
    Coalition covered;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const Coalition block = blocks[b];
        if (block.empty()) {
            issues.push_back("block " + std::to_string(b) + " is empty");
            continue;
        }
        if (!covered.disjoint(block)) issues.push_back("block " + block.to_string() + " overlaps an earlier block");
        if (block.bits() >> n) issues.push_back("block " + block.to_string() + " names an agent outside 0..n-1");
        if (b > 0 && !blocks[b - 1].empty() && blocks[b - 1].lowest() > block.lowest()) {
            issues.push_back("blocks are not ordered by smallest member");
        }
        covered = covered | block;
    }
    if (n <= kMaxAgents && covered != Coalition::grand(n)) issues.push_back("blocks do not cover every agent");
    return issues;
}

Partition::Partition(std::vector<Coalition> blocks, std::size_t n) : agents_(n), blocks_(std::move(blocks)) {
    if (n == 0 || n > kMaxAgents) throw std::invalid_argument("partition size out of range");
    std::sort(blocks_.begin(), blocks_.end(), [](Coalition a, Coalition b) {
        if (a.empty() || b.empty()) return a.empty() && !b.empty();
        return a.lowest() < b.lowest();
    });
    if (auto issues = partition_violations(blocks_, n); !issues.empty()) {
        throw std::invalid_argument("not a partition: " + issues.front());
    }
}

Partition Partition::singletons(std::size_t n) {
    std::vector<Coalition> blocks;
    for (AgentId a = 0; a < n; ++a) blocks.push_back(Coalition::singleton(a));
    return Partition(std::move(blocks), n);
}

Partition Partition::grand(std::size_t n) { return Partition({Coalition::grand(n)}, n); }

Partition Partition::from_restricted_growth(const std::vector<std::size_t>& rgs) {
    std::vector<Coalition> blocks;
    for (AgentId a = 0; a < rgs.size(); ++a) {
        if (rgs[a] > blocks.size()) throw std::invalid_argument("not a restricted growth string");
        if (rgs[a] == blocks.size()) blocks.emplace_back();
        blocks[rgs[a]] = blocks[rgs[a]].with(a);
    }
    return Partition(std::move(blocks), rgs.size());
}

Coalition Partition::block_of(AgentId agent) const { return blocks_.at(block_index(agent)); }

std::size_t Partition::block_index(AgentId agent) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (blocks_[b].contains(agent)) return b;
    }
    throw std::out_of_range("agent " + std::to_string(agent) + " not in partition");
}

std::string Partition::to_string() const {
    std::string out = "{";
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (b) out += ',';
        out += blocks_[b].to_string();
    }
    return out + "}";
}

Partition form_partition(const game::PayoffMap& payoffs) {
    const std::size_t n = payoffs.players();
    Coalition unassigned = Coalition::grand(n);
    std::vector<Coalition> blocks;
    while (!unassigned.empty()) {
        Coalition best;
        double best_gain = std::numeric_limits<double>::infinity();
        for_each_nonempty_subset(unassigned, [&](Coalition s) {
            double gain = 0.0;
            for (AgentId i : s.members()) {
                const double inside = payoffs(i, s);
                const double alone = payoffs(i, Coalition::singleton(i));
                if (!(inside <= alone)) return;
                gain += inside - alone;
            }
            const bool better = gain < best_gain ||
                                (gain == best_gain &&
                                 (s.size() < best.size() || (s.size() == best.size() && canonical_less(s, best))));
            if (better) {
                best = s;
                best_gain = gain;
            }
        });
        blocks.push_back(best);
        unassigned = Coalition(unassigned.bits() & ~best.bits());
    }
    return Partition(std::move(blocks), n);
}

PartitionEnumerator::PartitionEnumerator(std::size_t n) : rgs_(n, 0), prefix_max_(n, 0) {
    if (n == 0) throw std::invalid_argument("cannot enumerate partitions of an empty set");
}

bool PartitionEnumerator::next() {
    // prefix_max_[i] = max(rgs_[0..i]).
    for (std::size_t i = rgs_.size(); i-- > 1;) {
        if (rgs_[i] <= prefix_max_[i - 1]) {
            ++rgs_[i];
            prefix_max_[i] = std::max(prefix_max_[i - 1], rgs_[i]);
            for (std::size_t j = i + 1; j < rgs_.size(); ++j) {
                rgs_[j] = 0;
                prefix_max_[j] = prefix_max_[i];
            }
            return true;
        }
    }
    return false;
}

std::vector<Partition> enumerate_partitions(std::size_t n) {
    std::vector<Partition> out;
    for_each_partition(n, [&](Partition p) { out.push_back(std::move(p)); });
    return out;
}

StructureValue structure_value(const Partition& p, const game::CoalitionGame& v) {
    StructureValue result{p, 0.0};
    for (Coalition block : p.blocks()) result.value += v.value(block);
    return result;
}

StructureValue optimal_structure(const game::CoalitionGame& v) {
    const std::size_t n = v.players();
    if (n == 0 || n > kMaxStructureSearchAgents) {
        throw std::invalid_argument("exhaustive structure search supports 1.." +
                                    std::to_string(kMaxStructureSearchAgents) + " agents");
    }
    // Work on masks directly; build the Partition only for the winner.
    PartitionEnumerator it(n);
    std::vector<std::size_t> best_rgs;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Coalition::Bits> blocks(n);
    do {
        const auto& rgs = it.current();
        std::fill(blocks.begin(), blocks.end(), 0);
        std::size_t count = 0;
        for (std::size_t a = 0; a < n; ++a) {
            blocks[rgs[a]] |= Coalition::Bits{1} << a;
            count = std::max(count, rgs[a] + 1);
        }
        double value = 0.0;
        for (std::size_t b = 0; b < count; ++b) value += v.value(Coalition(blocks[b]));
        if (value < best) {
            best = value;
            best_rgs = rgs;
        }
    } while (it.next());
    return StructureValue{Partition::from_restricted_growth(best_rgs), best};
}

}  // namespace coalctl::formation
