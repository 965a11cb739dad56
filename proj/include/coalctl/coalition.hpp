#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace coalctl {

using AgentId = std::size_t;

inline constexpr std::size_t kMaxAgents = 16;

// A set of agents encoded as a bit mask (bit i set iff agent i is a member).
class Coalition {
public:
    using Bits = std::uint32_t;

    constexpr Coalition() = default;
    constexpr explicit Coalition(Bits bits) : bits_(bits) {}
    Coalition(std::initializer_list<AgentId> members) {
        for (AgentId a : members) bits_ |= Bits{1} << a;
    }

    static constexpr Coalition singleton(AgentId agent) { return Coalition(Bits{1} << agent); }
    static constexpr Coalition grand(std::size_t n) { return Coalition((Bits{1} << n) - 1); }
    static Coalition from_members(const std::vector<AgentId>& members) {
        Coalition c;
        for (AgentId a : members) c.bits_ |= Bits{1} << a;
        return c;
    }

    constexpr Bits bits() const noexcept { return bits_; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool contains(AgentId agent) const noexcept { return (bits_ >> agent) & 1U; }
    constexpr bool contains(Coalition other) const noexcept { return (bits_ & other.bits_) == other.bits_; }
    constexpr bool disjoint(Coalition other) const noexcept { return (bits_ & other.bits_) == 0; }

    constexpr Coalition with(AgentId agent) const noexcept { return Coalition(bits_ | (Bits{1} << agent)); }
    constexpr Coalition without(AgentId agent) const noexcept { return Coalition(bits_ & ~(Bits{1} << agent)); }
    constexpr Coalition operator|(Coalition o) const noexcept { return Coalition(bits_ | o.bits_); }
    constexpr Coalition operator&(Coalition o) const noexcept { return Coalition(bits_ & o.bits_); }

    // Smallest member; undefined for the empty set.
    constexpr AgentId lowest() const noexcept { return static_cast<AgentId>(std::countr_zero(bits_)); }

    // Members in ascending order.
    std::vector<AgentId> members() const {
        std::vector<AgentId> out;
        out.reserve(size());
        for (Bits b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<AgentId>(std::countr_zero(b)));
        return out;
    }

    // Rendered as "{0,3,5}".
    std::string to_string() const {
        std::string out = "{";
        bool first = true;
        for (AgentId a : members()) {
            if (!first) out += ',';
            out += std::to_string(a);
            first = false;
        }
        return out + "}";
    }

    friend constexpr bool operator==(Coalition, Coalition) = default;

private:
    Bits bits_{0};
};

// Canonical set order: lexicographic on the ascending member lists.
inline bool canonical_less(Coalition a, Coalition b) {
    const auto ma = a.members();
    const auto mb = b.members();
    return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
}

// Calls fn(sub) for every nonempty subset of `set`, including `set` itself,
// in increasing mask order.
template <typename Fn>
void for_each_nonempty_subset(Coalition set, Fn&& fn) {
    const Coalition::Bits full = set.bits();
    Coalition::Bits sub = 0;
    do {
        sub = (sub - full) & full;
        if (sub != 0) fn(Coalition(sub));
    } while (sub != 0);
}

}  // namespace coalctl
