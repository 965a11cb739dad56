#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace coalctl {

// Raised for malformed or invalid input documents.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScenarioParseError : public InputError {
public:
    using InputError::InputError;
};

class ScenarioValidationError : public InputError {
public:
    using InputError::InputError;
};

struct Position {
    double x_km{0.0};
    double y_km{0.0};

    friend bool operator==(const Position&, const Position&) = default;
};

double distance_km(const Position& a, const Position& b);

// One prosumer: geometry, storage and per-step series.
struct NodeProfile {
    std::size_t id{0};
    Position position;
    double s_max_kwh{0.0};
    double s0_kwh{0.0};
    std::vector<double> demand_kwh;
    std::vector<double> generation_kwh;
    std::vector<double> buy_price;   // CU/kWh paid to the grid
    std::vector<double> sell_price;  // CU/kWh received from the grid

    friend bool operator==(const NodeProfile&, const NodeProfile&) = default;
};

struct Scenario {
    double step_hours{1.0};
    double start_hour{0.0};
    std::size_t n_steps{0};
    std::vector<NodeProfile> nodes;

    std::size_t n_nodes() const noexcept { return nodes.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Series of one node over a prediction horizon.
struct NodeSlice {
    std::vector<double> demand;
    std::vector<double> generation;
    std::vector<double> buy_price;
    std::vector<double> sell_price;

    std::size_t horizon() const noexcept { return demand.size(); }
};

struct HorizonSlice {
    std::size_t step{0};
    std::vector<NodeSlice> nodes;
};

// Throws ScenarioValidationError naming the first offending field.
void validate_scenario(const Scenario& scenario);

Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);

// Deterministic in `seed`. Start hour 7, one-hour steps, nodes in two rows
// 0.5 km apart with 0.5 km spacing along each row.
Scenario generate_synthetic_scenario(std::uint64_t seed, std::size_t n_nodes, std::size_t n_steps);

// Entries past the end of the scenario repeat the last step.
HorizonSlice slice_horizon(const Scenario& scenario, std::size_t k, std::size_t horizon);
NodeSlice slice_node(const NodeProfile& node, std::size_t k, std::size_t horizon);

}  // namespace coalctl
