#include "coalctl/game.hpp"

#include <cmath>
#include <sstream>

namespace coalctl::game {

namespace {

std::vector<double> shapley_weights(std::size_t players) {
    // weight[c] = c! (s - c - 1)! / s!
    std::vector<double> factorial(players + 1, 1.0);
    for (std::size_t i = 1; i <= players; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
    std::vector<double> weight(players, 0.0);
    for (std::size_t c = 0; c < players; ++c) {
        weight[c] = factorial[c] * factorial[players - c - 1] / factorial[players];
    }
    return weight;
}

void check_players(std::size_t players) {
    if (players > kMaxAgents) {
        throw std::invalid_argument("at most " + std::to_string(kMaxAgents) + " players are supported");
    }
}

}  // namespace

CoalitionGame::CoalitionGame(std::size_t players) : players_(players) {
    check_players(players);
    values_.assign(std::size_t{1} << players, 0.0);
    defined_.assign(std::size_t{1} << players, false);
    defined_[0] = true;
}

void CoalitionGame::set(Coalition c, double value) {
    if (c.empty()) throw std::invalid_argument("the empty coalition is fixed at zero");
    if (c.bits() >= values_.size()) throw std::out_of_range("coalition " + c.to_string() + " outside the game");
    values_[c.bits()] = value;
    defined_[c.bits()] = true;
}

bool CoalitionGame::has(Coalition c) const noexcept {
    return c.bits() < defined_.size() && defined_[c.bits()];
}

double CoalitionGame::value(Coalition c) const {
    if (!has(c)) throw MissingCoalitionError(c);
    return values_[c.bits()];
}

CharacteristicFunction::CharacteristicFunction(std::size_t players)
    : game_(players), evaluations_(std::size_t{1} << players) {}

void CharacteristicFunction::record(Coalition c, dispatch::CoalitionEvaluation evaluation) {
    game_.set(c, evaluation.breakdown.total);
    if (!evaluations_[c.bits()]) ++recorded_;
    evaluations_[c.bits()] = std::move(evaluation);
}

const dispatch::CoalitionEvaluation& CharacteristicFunction::evaluation(Coalition c) const {
    if (c.bits() >= evaluations_.size() || !evaluations_[c.bits()]) throw MissingCoalitionError(c);
    return *evaluations_[c.bits()];
}

CoalitionGame CharacteristicFunction::first_step_game() const {
    CoalitionGame one_step(players());
    for (std::size_t bits = 1; bits < evaluations_.size(); ++bits) {
        if (evaluations_[bits]) {
            one_step.set(Coalition(static_cast<Coalition::Bits>(bits)), evaluations_[bits]->breakdown.first_step_total());
        }
    }
    return one_step;
}

CharacteristicFunction characteristic_function(std::span<const double> storage, const Scenario& scenario,
                                               std::size_t k, const dispatch::DispatchParams& params) {
    const std::size_t n = scenario.n_nodes();
    check_players(n);
    std::vector<Coalition> all;
    all.reserve((std::size_t{1} << n) - 1);
    for (Coalition::Bits bits = 1; bits < (Coalition::Bits{1} << n); ++bits) all.emplace_back(bits);
    return characteristic_function(storage, scenario, k, params, all);
}

CharacteristicFunction characteristic_function(std::span<const double> storage, const Scenario& scenario,
                                               std::size_t k, const dispatch::DispatchParams& params,
                                               std::span<const Coalition> coalitions) {
    CharacteristicFunction cf(scenario.n_nodes());
    for (Coalition c : coalitions) {
        if (cf.has(c)) continue;
        try {
            cf.record(c, dispatch::coalition_value(c, storage, scenario, k, params));
        } catch (const dispatch::DispatchError& e) {
            std::ostringstream out;
            out << e.what() << " [mask 0x" << std::hex << c.bits() << "]";
            throw dispatch::DispatchError(out.str(), e.status());
        }
    }
    return cf;
}

std::vector<double> shapley_value(const CoalitionGame& v, Coalition s) {
    if (s.empty()) return {};
    const std::vector<AgentId> members = s.members();
    const std::vector<double> weight = shapley_weights(members.size());
    std::vector<double> phi(members.size(), 0.0);
    for (std::size_t idx = 0; idx < members.size(); ++idx) {
        const Coalition others = s.without(members[idx]);
        // The empty subset contributes weight[0] * v({i}).
        double sum = weight[0] * v.value(Coalition::singleton(members[idx]));
        for_each_nonempty_subset(others, [&](Coalition c) {
            sum += weight[c.size()] * (v.value(c.with(members[idx])) - v.value(c));
        });
        phi[idx] = sum;
    }
    return phi;
}

PayoffMap::PayoffMap(std::size_t players) : players_(players), shares_(std::size_t{1} << players) {}

double PayoffMap::operator()(AgentId agent, Coalition s) const {
    if (!s.contains(agent)) {
        throw std::invalid_argument("agent " + std::to_string(agent) + " is not in coalition " + s.to_string());
    }
    const auto& sh = shares(s);
    const Coalition::Bits below = s.bits() & ((Coalition::Bits{1} << agent) - 1);
    return sh[static_cast<std::size_t>(std::popcount(below))];
}

void PayoffMap::set(Coalition s, std::vector<double> shares) {
    if (shares.size() != s.size()) throw std::invalid_argument("one share per member required");
    shares_.at(s.bits()) = std::move(shares);
}

bool PayoffMap::has(Coalition s) const noexcept {
    return !s.empty() && s.bits() < shares_.size() && !shares_[s.bits()].empty();
}

const std::vector<double>& PayoffMap::shares(Coalition s) const {
    if (!has(s)) throw MissingCoalitionError(s);
    return shares_[s.bits()];
}

PayoffMap payoff_map(const CoalitionGame& v) {
    PayoffMap map(v.players());
    for (Coalition::Bits bits = 1; bits < (Coalition::Bits{1} << v.players()); ++bits) {
        map.set(Coalition(bits), shapley_value(v, Coalition(bits)));
    }
    return map;
}

std::optional<double> equivalent_price(double charge, double net_energy) {
    if (!(std::abs(net_energy) > kPriceEnergyThreshold)) return std::nullopt;
    return charge / net_energy;
}

}  // namespace coalctl::game
