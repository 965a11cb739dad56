#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coalctl/sim.hpp"

namespace coalctl::report {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ManifestEntry {
    std::string file;
    std::uintmax_t bytes{0};
    std::string sha256;
};

struct RunManifest {
    std::string scenario_source;
    std::vector<std::string> configs;
    std::filesystem::path output_dir;
    std::vector<ManifestEntry> files;
};

// Mean equivalent price over the steps where the agent is a net buyer;
// nullopt for agents that never buy.
std::vector<std::optional<double>> summarize_prices(const sim::SimulationTrace& trace);

// 17 significant digits, dot decimal separator.
std::string format_number(double value);

std::string partitions_csv(std::span<const sim::SimulationTrace> traces);
std::string costs_csv(std::span<const sim::SimulationTrace> traces);
std::string prices_csv(std::span<const sim::SimulationTrace> traces);
std::string flows_csv(std::span<const sim::SimulationTrace> traces);

// Writes partitions.csv, costs.csv, prices.csv, flows.csv and manifest.json.
// Throws std::invalid_argument on an empty trace list (nothing is written)
// and ReportError when the directory cannot be written.
RunManifest write_reports(std::span<const sim::SimulationTrace> traces, const std::filesystem::path& output_dir,
                          const std::string& scenario_source);

std::string sha256_hex(const std::string& bytes);

}  // namespace coalctl::report
