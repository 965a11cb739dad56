#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coalctl/coalition.hpp"
#include "coalctl/dispatch.hpp"
#include "coalctl/scenario.hpp"

namespace coalctl::game {

class MissingCoalitionError : public std::out_of_range {
public:
    explicit MissingCoalitionError(Coalition c)
        : std::out_of_range("no value recorded for coalition " + c.to_string()), coalition_(c) {}
    Coalition coalition() const noexcept { return coalition_; }

private:
    Coalition coalition_;
};

// Transferable-utility game in cost form: lower values are better. The empty
// coalition is worth zero.
class CoalitionGame {
public:
    CoalitionGame() = default;
    explicit CoalitionGame(std::size_t players);

    std::size_t players() const noexcept { return players_; }
    void set(Coalition c, double value);
    bool has(Coalition c) const noexcept;
    double value(Coalition c) const;
    double operator()(Coalition c) const { return value(c); }

private:
    std::size_t players_{0};
    std::vector<double> values_;
    std::vector<bool> defined_;
};

// Values v(C) for one simulation step, with the dispatch that produced each.
class CharacteristicFunction {
public:
    CharacteristicFunction() = default;
    explicit CharacteristicFunction(std::size_t players);

    std::size_t players() const noexcept { return game_.players(); }
    const CoalitionGame& game() const noexcept { return game_; }
    double value(Coalition c) const { return game_.value(c); }
    bool has(Coalition c) const noexcept { return game_.has(c); }

    void record(Coalition c, dispatch::CoalitionEvaluation evaluation);
    const dispatch::CoalitionEvaluation& evaluation(Coalition c) const;

    // One-step game: each coalition's first-step cost under its own plan.
    CoalitionGame first_step_game() const;

    std::size_t size() const noexcept { return recorded_; }

private:
    CoalitionGame game_;
    std::vector<std::optional<dispatch::CoalitionEvaluation>> evaluations_;
    std::size_t recorded_{0};
};

// Evaluates every nonempty coalition of the scenario's agents.
CharacteristicFunction characteristic_function(std::span<const double> storage, const Scenario& scenario,
                                               std::size_t k, const dispatch::DispatchParams& params);

// Evaluates only the listed coalitions.
CharacteristicFunction characteristic_function(std::span<const double> storage, const Scenario& scenario,
                                               std::size_t k, const dispatch::DispatchParams& params,
                                               std::span<const Coalition> coalitions);

// Shapley allocation of v(S) among the members of S, in ascending member order.
std::vector<double> shapley_value(const CoalitionGame& v, Coalition s);

// Phi(i, S): Shapley share of agent i inside every coalition S that contains it.
class PayoffMap {
public:
    PayoffMap() = default;
    explicit PayoffMap(std::size_t players);

    std::size_t players() const noexcept { return players_; }
    double operator()(AgentId agent, Coalition s) const;
    void set(Coalition s, std::vector<double> shares);
    bool has(Coalition s) const noexcept;
    const std::vector<double>& shares(Coalition s) const;

private:
    std::size_t players_{0};
    std::vector<std::vector<double>> shares_;
};

PayoffMap payoff_map(const CoalitionGame& v);
inline PayoffMap payoff_map(const CharacteristicFunction& cf) { return payoff_map(cf.game()); }

inline constexpr double kPriceEnergyThreshold = 1e-6;

// charge / net_energy, or nullopt when |net_energy| <= 1e-6 kWh.
std::optional<double> equivalent_price(double charge, double net_energy);

struct PriceRecord {
    AgentId agent{0};
    std::size_t step{0};
    double charge{0.0};
    double net_energy{0.0};
    std::optional<double> equivalent_price;
};

}  // namespace coalctl::game
