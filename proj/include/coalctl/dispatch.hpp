#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coalctl/coalition.hpp"
#include "coalctl/lp.hpp"
#include "coalctl/scenario.hpp"

namespace coalctl::dispatch {

inline constexpr double kDefaultEpsilonReg = 1e-9;

// Planned flows of one node over the horizon. coal_buy/coal_sell are zero for
// grid-only problems.
struct NodeDispatch {
    std::vector<double> storage_delta;
    std::vector<double> storage_level;  // level after applying storage_delta
    std::vector<double> grid_buy;
    std::vector<double> grid_sell;
    std::vector<double> coal_buy;
    std::vector<double> coal_sell;
};

struct DispatchSolution {
    std::vector<AgentId> agents;
    std::vector<NodeDispatch> nodes;  // parallel to agents
    double market_cost{0.0};          // regularizer excluded
};

struct CoalitionValueBreakdown {
    double market_cost{0.0};
    double loss_cost{0.0};
    double total{0.0};
    double mean_distance_km{0.0};
    // Same decomposition restricted to the first horizon step.
    double first_step_market_cost{0.0};
    double first_step_loss_cost{0.0};

    double first_step_total() const noexcept { return first_step_market_cost + first_step_loss_cost; }
};

struct CoalitionEvaluation {
    CoalitionValueBreakdown breakdown;
    DispatchSolution solution;
};

struct DispatchParams {
    std::size_t horizon{5};
    double rho{0.0};
    double epsilon_reg{kDefaultEpsilonReg};
    // false clamps every s_max to zero (grid-only baseline).
    bool storage{true};
    // A one-member coalition program has d_excoal = p_excoal forced and
    // penalized, so its transfer columns are omitted unless this is set.
    bool transfer_columns_for_singletons{false};
};

class DispatchError : public std::runtime_error {
public:
    DispatchError(const std::string& what, lp::Status status)
        : std::runtime_error(what), status_(status) {}
    lp::Status status() const noexcept { return status_; }

private:
    lp::Status status_;
};

// Column positions inside the dispatch programs.
enum class Field : std::size_t { StorageDelta, StorageLevel, GridBuy, GridSell, CoalBuy, CoalSell };

struct Layout {
    std::size_t members{1};
    std::size_t horizon{1};
    bool transfers{false};

    std::size_t fields() const noexcept { return transfers ? 6 : 4; }
    std::size_t num_vars() const noexcept { return members * horizon * fields(); }
    std::size_t index(std::size_t member, std::size_t t, Field f) const noexcept {
        return (member * horizon + t) * fields() + static_cast<std::size_t>(f);
    }
};

// Objective: sum_t buy*d_red - sell*p_red, plus epsilon_reg per kWh held in
// storage at the end of each step (tie-break only; excluded from reported costs).
lp::LinearProgram build_individual_lp(const NodeSlice& slice, double s0, double s_max,
                                      double epsilon_reg = kDefaultEpsilonReg);

Layout coalition_layout(std::size_t members, std::size_t horizon, bool transfer_columns_for_singletons = false);

// As the individual program per member, plus epsilon_reg per kWh of internal
// transfer (both directions) and the per-step pool balance.
lp::LinearProgram build_coalition_lp(std::span<const NodeSlice> slices, std::span<const double> s0s,
                                     std::span<const double> s_maxs, double epsilon_reg,
                                     bool transfer_columns_for_singletons = false);

// Unpacks an optimal point; market_cost is recomputed without the regularizer.
DispatchSolution extract_dispatch(const lp::LpSolution& solution, const Layout& layout,
                                  std::span<const NodeSlice> slices, std::vector<AgentId> agents);

double mean_pairwise_distance(std::span<const Position> positions);

// rho * mean_distance * sum over members and horizon steps of coal_buy^2.
double evaluate_loss_cost(const DispatchSolution& solution, double mean_distance_km, double rho);

CoalitionEvaluation coalition_value(Coalition members, std::span<const double> storage,
                                    const Scenario& scenario, std::size_t k, const DispatchParams& params);

// Grid-only program of one agent (no transfer variables).
CoalitionEvaluation individual_value(AgentId agent, std::span<const double> storage,
                                     const Scenario& scenario, std::size_t k, const DispatchParams& params);

// Structural checks on a returned solution; empty when all invariants hold.
std::vector<std::string> dispatch_violations(const DispatchSolution& solution, std::span<const NodeSlice> slices,
                                             std::span<const double> s0s, std::span<const double> s_maxs);

}  // namespace coalctl::dispatch
