#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coalctl/dispatch.hpp"
#include "coalctl/formation.hpp"
#include "coalctl/game.hpp"
#include "coalctl/scenario.hpp"

namespace coalctl::sim {

enum class Mode { GridOnly, GridStorage, Coalitional };

const char* to_string(Mode mode) noexcept;
std::optional<Mode> parse_mode(const std::string& text);

struct SimConfig {
    std::size_t horizon{5};
    double rho{0.0};
    Mode mode{Mode::Coalitional};
    double epsilon_reg{dispatch::kDefaultEpsilonReg};
    std::size_t reform_period{1};
    // Also search all coalition structures at every re-formation step.
    bool benchmark_structures{false};

    // Throws std::invalid_argument on an invalid combination.
    void validate() const;
    dispatch::DispatchParams dispatch_params() const;
    // "grid-only", "grid-storage" or "coalitional:rho=1e-05".
    std::string label() const;
};

struct SystemState {
    std::size_t step{0};
    std::vector<double> storage;  // kWh per agent
    // Partition carried between re-formation steps.
    std::optional<formation::Partition> partition;

    static SystemState initial(const Scenario& scenario);
};

// Inputs applied at t = 0|k.
struct AppliedFlows {
    double grid_buy{0.0};
    double grid_sell{0.0};
    double coal_buy{0.0};
    double coal_sell{0.0};
    double storage_delta{0.0};
    double storage_after{0.0};

    double net_energy() const noexcept { return (grid_buy - grid_sell) + (coal_buy - coal_sell); }
};

struct BlockRecord {
    Coalition block;
    dispatch::CoalitionValueBreakdown planned;
    double realized_cost{0.0};  // first-step cost of the block's plan
};

// Formation diagnostics for a re-formation step.
struct FormationRecord {
    std::vector<double> payoff_in_block;  // Phi(i, block(i))
    std::vector<double> payoff_alone;     // Phi(i, {i})
    double formed_value{0.0};             // sum of v over formed blocks
    double singleton_value{0.0};          // sum of v({i})
    std::optional<formation::StructureValue> optimal;
};

struct StepResult {
    std::size_t step{0};
    formation::Partition partition;
    bool reformed{false};
    std::vector<AppliedFlows> flows;
    std::vector<double> charges;
    std::vector<game::PriceRecord> prices;
    std::vector<BlockRecord> blocks;
    std::optional<FormationRecord> formation;
};

struct SimulationTrace {
    SimConfig config;
    std::vector<StepResult> steps;
    std::vector<double> cumulative_cost;
    std::vector<double> final_storage;
};

// Per-agent charges: Shapley split of the one-step game inside each block.
std::vector<double> settle_step(const formation::Partition& partition, const game::CoalitionGame& one_step);

std::pair<StepResult, SystemState> step(const SystemState& state, const Scenario& scenario, const SimConfig& config);

SimulationTrace run(const Scenario& scenario, const SimConfig& config);

}  // namespace coalctl::sim
