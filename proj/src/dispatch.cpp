#include "coalctl/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coalctl::dispatch {

namespace {

const char* field_name(Field f) {
    switch (f) {
        case Field::StorageDelta: return "ds";
        case Field::StorageLevel: return "s";
        case Field::GridBuy: return "d_red";
        case Field::GridSell: return "p_red";
        case Field::CoalBuy: return "d_excoal";
        case Field::CoalSell: return "p_excoal";
    }
    return "?";
}

lp::LinearProgram build_program(const Layout& layout, std::span<const NodeSlice> slices,
                                std::span<const double> s0s, std::span<const double> s_maxs,
                                double epsilon_reg) {
    const std::size_t horizon = layout.horizon;
    const std::size_t n = layout.num_vars();
    lp::LinearProgram problem;
    problem.objective.assign(n, 0.0);
    problem.lower.assign(n, 0.0);
    problem.upper.assign(n, lp::kInfinity);
    problem.var_names.resize(n);

    for (std::size_t m = 0; m < layout.members; ++m) {
        const NodeSlice& slice = slices[m];
        const double s_max = s_maxs[m];
        for (std::size_t t = 0; t < horizon; ++t) {
            auto set = [&](Field f, double cost, double lo, double hi) {
                const std::size_t j = layout.index(m, t, f);
                problem.objective[j] = cost;
                problem.lower[j] = lo;
                problem.upper[j] = hi;
                std::ostringstream name;
                name << field_name(f) << '[' << m << "][" << t << ']';
                problem.var_names[j] = name.str();
            };
            set(Field::StorageDelta, 0.0, -s_max, s_max);
            // Holding energy carries the regularizer too, so flat padded prices
            // do not leave energy parked in storage for nothing.
            set(Field::StorageLevel, epsilon_reg, 0.0, s_max);
            set(Field::GridBuy, slice.buy_price[t], 0.0, lp::kInfinity);
            set(Field::GridSell, -slice.sell_price[t], 0.0, lp::kInfinity);
            if (layout.transfers) {
                set(Field::CoalBuy, epsilon_reg, 0.0, lp::kInfinity);
                set(Field::CoalSell, epsilon_reg, 0.0, lp::kInfinity);
            }
        }
    }

    for (std::size_t m = 0; m < layout.members; ++m) {
        const NodeSlice& slice = slices[m];
        for (std::size_t t = 0; t < horizon; ++t) {
            // s(t+1) - s(t) - ds(t) = 0, with s(0) = s0 moved to the rhs.
            std::vector<double> storage(n, 0.0);
            storage[layout.index(m, t, Field::StorageLevel)] = 1.0;
            storage[layout.index(m, t, Field::StorageDelta)] = -1.0;
            double rhs = 0.0;
            if (t == 0) {
                rhs = s0s[m];
            } else {
                storage[layout.index(m, t - 1, Field::StorageLevel)] = -1.0;
            }
            problem.eq_matrix.push_back(std::move(storage));
            problem.eq_rhs.push_back(rhs);

            // demand + ds + p_red + p_excoal = generation + d_red + d_excoal
            std::vector<double> balance(n, 0.0);
            balance[layout.index(m, t, Field::StorageDelta)] = 1.0;
            balance[layout.index(m, t, Field::GridSell)] = 1.0;
            balance[layout.index(m, t, Field::GridBuy)] = -1.0;
            if (layout.transfers) {
                balance[layout.index(m, t, Field::CoalSell)] = 1.0;
                balance[layout.index(m, t, Field::CoalBuy)] = -1.0;
            }
            problem.eq_matrix.push_back(std::move(balance));
            problem.eq_rhs.push_back(slice.generation[t] - slice.demand[t]);
        }
    }

    if (layout.transfers) {
        for (std::size_t t = 0; t < horizon; ++t) {
            std::vector<double> pool(n, 0.0);
            for (std::size_t m = 0; m < layout.members; ++m) {
                pool[layout.index(m, t, Field::CoalSell)] = 1.0;
                pool[layout.index(m, t, Field::CoalBuy)] = -1.0;
            }
            problem.eq_matrix.push_back(std::move(pool));
            problem.eq_rhs.push_back(0.0);
        }
    }
    return problem;
}

std::string describe(Coalition members, std::size_t k) {
    std::ostringstream out;
    out << "coalition " << members.to_string() << " at step " << k;
    return out.str();
}

// An unbounded dispatch program means some tariff pair allows arbitrage:
// buy > sell must hold per node, and inside a coalition every member's sell
// price must stay below every member's buy price.
[[noreturn]] void report_unbounded(Coalition members, std::span<const AgentId> agents,
                                   std::span<const NodeSlice> slices, std::size_t k) {
    const std::size_t horizon = slices.empty() ? 0 : slices.front().horizon();
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t m = 0; m < agents.size(); ++m) {
            for (std::size_t o = 0; o < agents.size(); ++o) {
                if (slices[m].buy_price[t] > slices[o].sell_price[t]) continue;
                std::ostringstream out;
                if (m == o) {
                    out << "node " << agents[m] << ", step " << (k + t) << ": sell_price " << slices[m].sell_price[t]
                        << " must be below buy_price " << slices[m].buy_price[t] << " (dispatch unbounded)";
                } else {
                    out << "node " << agents[o] << ", step " << (k + t) << ": sell_price " << slices[o].sell_price[t]
                        << " is not below node " << agents[m] << " buy_price " << slices[m].buy_price[t]
                        << " (coalition " << members.to_string() << " dispatch unbounded)";
                }
                throw ScenarioValidationError(out.str());
            }
        }
    }
    throw DispatchError("dispatch program unbounded for " + describe(members, k), lp::Status::Unbounded);
}

double first_step_market_cost(const DispatchSolution& solution, std::span<const NodeSlice> slices) {
    double cost = 0.0;
    for (std::size_t m = 0; m < solution.nodes.size(); ++m) {
        cost += slices[m].buy_price[0] * solution.nodes[m].grid_buy[0] -
                slices[m].sell_price[0] * solution.nodes[m].grid_sell[0];
    }
    return cost;
}

CoalitionEvaluation evaluate(Coalition members, std::span<const double> storage, const Scenario& scenario,
                             std::size_t k, const DispatchParams& params, bool transfer_columns) {
    if (members.empty()) throw std::invalid_argument("coalition must be nonempty");
    const std::vector<AgentId> agents = members.members();
    std::vector<NodeSlice> slices;
    std::vector<double> s0s;
    std::vector<double> s_maxs;
    std::vector<Position> positions;
    for (AgentId a : agents) {
        if (a >= scenario.n_nodes()) throw std::out_of_range("agent index outside scenario");
        const NodeProfile& node = scenario.nodes[a];
        slices.push_back(slice_node(node, k, params.horizon));
        const double s_max = params.storage ? node.s_max_kwh : 0.0;
        s_maxs.push_back(s_max);
        s0s.push_back(std::clamp(storage[a], 0.0, s_max));
        positions.push_back(node.position);
    }

    const Layout layout{agents.size(), params.horizon, transfer_columns};
    const lp::LinearProgram problem = build_program(layout, slices, s0s, s_maxs, params.epsilon_reg);
    const lp::LpSolution solved = lp::solve_lp(problem);
    if (solved.status == lp::Status::Unbounded) report_unbounded(members, agents, slices, k);
    if (solved.status != lp::Status::Optimal) {
        throw DispatchError("dispatch program infeasible for " + describe(members, k) +
                                " (storage state outside its bounds?)",
                            solved.status);
    }

    CoalitionEvaluation result;
    result.solution = extract_dispatch(solved, layout, slices, agents);
    auto& b = result.breakdown;
    b.mean_distance_km = mean_pairwise_distance(positions);
    b.market_cost = result.solution.market_cost;
    b.loss_cost = evaluate_loss_cost(result.solution, b.mean_distance_km, params.rho);
    b.total = b.market_cost + b.loss_cost;
    b.first_step_market_cost = first_step_market_cost(result.solution, slices);
    double first_sq = 0.0;
    for (const NodeDispatch& node : result.solution.nodes) first_sq += node.coal_buy[0] * node.coal_buy[0];
    b.first_step_loss_cost = params.rho * b.mean_distance_km * first_sq;
    return result;
}

}  // namespace

lp::LinearProgram build_individual_lp(const NodeSlice& slice, double s0, double s_max, double epsilon_reg) {
    const Layout layout{1, slice.horizon(), false};
    return build_program(layout, std::span(&slice, 1), std::span(&s0, 1), std::span(&s_max, 1), epsilon_reg);
}

Layout coalition_layout(std::size_t members, std::size_t horizon, bool transfer_columns_for_singletons) {
    return Layout{members, horizon, members > 1 || transfer_columns_for_singletons};
}

lp::LinearProgram build_coalition_lp(std::span<const NodeSlice> slices, std::span<const double> s0s,
                                     std::span<const double> s_maxs, double epsilon_reg,
                                     bool transfer_columns_for_singletons) {
    if (slices.empty()) throw std::invalid_argument("coalition program needs at least one member");
    if (s0s.size() != slices.size() || s_maxs.size() != slices.size()) {
        throw std::invalid_argument("storage parameters must match the member count");
    }
    const std::size_t horizon = slices.front().horizon();
    for (const NodeSlice& s : slices) {
        if (s.horizon() != horizon) throw std::invalid_argument("member slices differ in horizon length");
    }
    const Layout layout = coalition_layout(slices.size(), horizon, transfer_columns_for_singletons);
    return build_program(layout, slices, s0s, s_maxs, epsilon_reg);
}

DispatchSolution extract_dispatch(const lp::LpSolution& solution, const Layout& layout,
                                  std::span<const NodeSlice> slices, std::vector<AgentId> agents) {
    DispatchSolution out;
    out.agents = std::move(agents);
    out.nodes.resize(layout.members);
    const auto& x = solution.point;
    for (std::size_t m = 0; m < layout.members; ++m) {
        NodeDispatch& node = out.nodes[m];
        for (std::size_t t = 0; t < layout.horizon; ++t) {
            node.storage_delta.push_back(x[layout.index(m, t, Field::StorageDelta)]);
            node.storage_level.push_back(x[layout.index(m, t, Field::StorageLevel)]);
            node.grid_buy.push_back(x[layout.index(m, t, Field::GridBuy)]);
            node.grid_sell.push_back(x[layout.index(m, t, Field::GridSell)]);
            node.coal_buy.push_back(layout.transfers ? x[layout.index(m, t, Field::CoalBuy)] : 0.0);
            node.coal_sell.push_back(layout.transfers ? x[layout.index(m, t, Field::CoalSell)] : 0.0);
            out.market_cost += slices[m].buy_price[t] * node.grid_buy[t] - slices[m].sell_price[t] * node.grid_sell[t];
        }
    }
    return out;
}

double mean_pairwise_distance(std::span<const Position> positions) {
    if (positions.size() < 2) return 0.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            sum += distance_km(positions[i], positions[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

double evaluate_loss_cost(const DispatchSolution& solution, double mean_distance_km, double rho) {
    double squares = 0.0;
    for (const NodeDispatch& node : solution.nodes) {
        for (double d : node.coal_buy) squares += d * d;
    }
    return rho * mean_distance_km * squares;
}

CoalitionEvaluation coalition_value(Coalition members, std::span<const double> storage, const Scenario& scenario,
                                    std::size_t k, const DispatchParams& params) {
    const bool transfers = members.size() > 1 || params.transfer_columns_for_singletons;
    return evaluate(members, storage, scenario, k, params, transfers);
}

CoalitionEvaluation individual_value(AgentId agent, std::span<const double> storage, const Scenario& scenario,
                                     std::size_t k, const DispatchParams& params) {
    return evaluate(Coalition::singleton(agent), storage, scenario, k, params, false);
}

std::vector<std::string> dispatch_violations(const DispatchSolution& solution, std::span<const NodeSlice> slices,
                                             std::span<const double> s0s, std::span<const double> s_maxs) {
    std::vector<std::string> issues;
    auto complain = [&](std::size_t m, std::size_t t, const std::string& what) {
        std::ostringstream out;
        out << "member " << m << ", t=" << t << ": " << what;
        issues.push_back(out.str());
    };
    if (solution.nodes.empty()) return issues;
    const std::size_t horizon = solution.nodes.front().grid_buy.size();
    for (std::size_t t = 0; t < horizon; ++t) {
        double pool = 0.0;
        for (std::size_t m = 0; m < solution.nodes.size(); ++m) {
            const NodeDispatch& n = solution.nodes[m];
            if (n.grid_buy[t] < -1e-10 || n.grid_sell[t] < -1e-10 || n.coal_buy[t] < -1e-10 ||
                n.coal_sell[t] < -1e-10) {
                complain(m, t, "negative flow");
            }
            if (n.storage_level[t] < -1e-8 || n.storage_level[t] > s_maxs[m] + 1e-8) {
                complain(m, t, "storage level outside [0, s_max]");
            }
            const double previous = t == 0 ? s0s[m] : n.storage_level[t - 1];
            if (std::abs(n.storage_level[t] - previous - n.storage_delta[t]) > 1e-8) {
                complain(m, t, "storage recursion violated");
            }
            const double residual = slices[m].demand[t] + n.storage_delta[t] + n.grid_sell[t] + n.coal_sell[t] -
                                    slices[m].generation[t] - n.grid_buy[t] - n.coal_buy[t];
            if (std::abs(residual) > 1e-8) complain(m, t, "node energy balance violated");
            pool += n.coal_sell[t] - n.coal_buy[t];
        }
        if (std::abs(pool) > 1e-8) complain(0, t, "coalition transfer balance violated");
    }
    return issues;
}

}  // namespace coalctl::dispatch
