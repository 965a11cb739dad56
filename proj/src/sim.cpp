#include "coalctl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace coalctl::sim {

namespace {

AppliedFlows first_step_flows(const dispatch::NodeDispatch& plan, double storage_before, double s_max) {
    AppliedFlows f;
    f.grid_buy = plan.grid_buy[0];
    f.grid_sell = plan.grid_sell[0];
    f.coal_buy = plan.coal_buy[0];
    f.coal_sell = plan.coal_sell[0];
    f.storage_delta = plan.storage_delta[0];
    f.storage_after = std::clamp(storage_before + f.storage_delta, 0.0, s_max);
    return f;
}

std::vector<Coalition> subsets_of_blocks(const formation::Partition& partition) {
    std::vector<Coalition> out;
    for (Coalition block : partition.blocks()) {
        for_each_nonempty_subset(block, [&](Coalition s) { out.push_back(s); });
    }
    return out;
}

}  // namespace

const char* to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::GridOnly: return "grid-only";
        case Mode::GridStorage: return "grid-storage";
        case Mode::Coalitional: return "coalitional";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(const std::string& text) {
    for (Mode m : {Mode::GridOnly, Mode::GridStorage, Mode::Coalitional}) {
        if (text == to_string(m)) return m;
    }
    return std::nullopt;
}

void SimConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be finite and nonnegative");
    if (!(epsilon_reg >= 0.0) || !std::isfinite(epsilon_reg)) {
        throw std::invalid_argument("epsilon_reg must be finite and nonnegative");
    }
    if (reform_period < 1) throw std::invalid_argument("reform_period must be at least 1");
}

dispatch::DispatchParams SimConfig::dispatch_params() const {
    dispatch::DispatchParams p;
    p.horizon = horizon;
    p.rho = rho;
    p.epsilon_reg = epsilon_reg;
    p.storage = mode != Mode::GridOnly;
    return p;
}

std::string SimConfig::label() const {
    if (mode != Mode::Coalitional) return to_string(mode);
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "coalitional:rho=%g", rho);
    return buffer;
}

SystemState SystemState::initial(const Scenario& scenario) {
    SystemState s;
    s.step = 0;
    for (const NodeProfile& node : scenario.nodes) s.storage.push_back(node.s0_kwh);
    return s;
}

std::vector<double> settle_step(const formation::Partition& partition, const game::CoalitionGame& one_step) {
    std::vector<double> charges(partition.agents(), 0.0);
    for (Coalition block : partition.blocks()) {
        const std::vector<double> shares = game::shapley_value(one_step, block);
        const std::vector<AgentId> members = block.members();
        for (std::size_t m = 0; m < members.size(); ++m) charges[members[m]] = shares[m];
    }
    return charges;
}

std::pair<StepResult, SystemState> step(const SystemState& state, const Scenario& scenario, const SimConfig& config) {
    const std::size_t n = scenario.n_nodes();
    const std::size_t k = state.step;
    if (k >= scenario.n_steps) throw std::out_of_range("step " + std::to_string(k) + " beyond the scenario");
    if (state.storage.size() != n) throw std::invalid_argument("state does not match the scenario's agents");
    const dispatch::DispatchParams params = config.dispatch_params();

    StepResult result;
    result.step = k;
    game::CharacteristicFunction cf(n);

    if (config.mode == Mode::Coalitional) {
        result.reformed = !state.partition || k % config.reform_period == 0;
        if (result.reformed) {
            cf = game::characteristic_function(state.storage, scenario, k, params);
            const game::PayoffMap payoffs = game::payoff_map(cf);
            result.partition = formation::form_partition(payoffs);

            FormationRecord record;
            for (AgentId i = 0; i < n; ++i) {
                record.payoff_in_block.push_back(payoffs(i, result.partition.block_of(i)));
                record.payoff_alone.push_back(payoffs(i, Coalition::singleton(i)));
            }
            record.formed_value = formation::structure_value(result.partition, cf).value;
            record.singleton_value = formation::structure_value(formation::Partition::singletons(n), cf).value;
            if (config.benchmark_structures) record.optimal = formation::optimal_structure(cf);
            result.formation = std::move(record);
        } else {
            result.partition = *state.partition;
            const auto needed = subsets_of_blocks(result.partition);
            cf = game::characteristic_function(state.storage, scenario, k, params, needed);
        }
    } else {
        result.partition = formation::Partition::singletons(n);
        for (AgentId i = 0; i < n; ++i) {
            cf.record(Coalition::singleton(i), dispatch::individual_value(i, state.storage, scenario, k, params));
        }
    }

    SystemState next;
    next.step = k + 1;
    next.storage = state.storage;
    next.partition = result.partition;
    result.flows.resize(n);
    for (Coalition block : result.partition.blocks()) {
        const dispatch::CoalitionEvaluation& eval = cf.evaluation(block);
        const auto& agents = eval.solution.agents;
        for (std::size_t m = 0; m < agents.size(); ++m) {
            const AgentId a = agents[m];
            const double s_max = params.storage ? scenario.nodes[a].s_max_kwh : 0.0;
            result.flows[a] = first_step_flows(eval.solution.nodes[m], state.storage[a], s_max);
            next.storage[a] = result.flows[a].storage_after;
        }
        result.blocks.push_back(BlockRecord{block, eval.breakdown, eval.breakdown.first_step_total()});
    }

    result.charges = settle_step(result.partition, cf.first_step_game());
    for (AgentId i = 0; i < n; ++i) {
        game::PriceRecord price;
        price.agent = i;
        price.step = k;
        price.charge = result.charges[i];
        price.net_energy = result.flows[i].net_energy();
        price.equivalent_price = game::equivalent_price(price.charge, price.net_energy);
        result.prices.push_back(price);
    }
    return {std::move(result), std::move(next)};
}

SimulationTrace run(const Scenario& scenario, const SimConfig& config) {
    config.validate();
    validate_scenario(scenario);
    SimulationTrace trace;
    trace.config = config;
    trace.cumulative_cost.assign(scenario.n_nodes(), 0.0);

    SystemState state = SystemState::initial(scenario);
    for (std::size_t k = 0; k < scenario.n_steps; ++k) {
        try {
            auto [result, next] = step(state, scenario, config);
            for (AgentId i = 0; i < scenario.n_nodes(); ++i) trace.cumulative_cost[i] += result.charges[i];
            trace.steps.push_back(std::move(result));
            state = std::move(next);
        } catch (const dispatch::DispatchError& e) {
            throw dispatch::DispatchError("step " + std::to_string(k) + ": " + e.what(), e.status());
        }
    }
    trace.final_storage = state.storage;
    return trace;
}

}  // namespace coalctl::sim
