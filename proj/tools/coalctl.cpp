// Command-line front end: load or generate a scenario, run the closed loop in
// one or more modes, and write the CSV reports.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coalctl/report.hpp"
#include "coalctl/scenario.hpp"
#include "coalctl/sim.hpp"
#include "oracles.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kRuntime = 3 };

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream in(item);
        std::string part;
        while (std::getline(in, part, ',')) {
            if (!part.empty()) out.push_back(part);
        }
    }
    return out;
}

double mean_block_size(const coalctl::sim::SimulationTrace& trace) {
    double sum = 0.0;
    std::size_t samples = 0;
    for (const auto& step : trace.steps) {
        for (coalctl::AgentId a = 0; a < step.partition.agents(); ++a) {
            sum += static_cast<double>(step.partition.block_of(a).size());
            ++samples;
        }
    }
    return samples ? sum / static_cast<double>(samples) : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coalitional receding-horizon control of prosumer microgrids"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Run the closed loop and write reports");
    std::string scenario_path;
    bool generate = false;
    std::uint64_t seed = 1;
    std::size_t nodes = 8;
    std::size_t steps = 17;
    std::vector<std::string> modes_raw;
    double rho = 1e-5;
    std::vector<std::string> sweep_raw;
    std::size_t horizon = 5;
    std::size_t reform_period = 1;
    double epsilon_reg = coalctl::dispatch::kDefaultEpsilonReg;
    std::string out_dir = "out";
    bool oracle_check = false;
    bool benchmark = false;

    auto* scenario_opt = simulate->add_option("--scenario", scenario_path, "Scenario document (JSON)");
    auto* generate_flag = simulate->add_flag("--generate", generate, "Synthesize a scenario instead of loading one");
    scenario_opt->excludes(generate_flag);
    simulate->add_option("--seed", seed, "Generator seed")->needs(generate_flag);
    simulate->add_option("--nodes", nodes, "Generated node count")->needs(generate_flag)->check(CLI::Range(1, 16));
    simulate->add_option("--steps", steps, "Generated step count")->needs(generate_flag)->check(CLI::PositiveNumber);
    simulate->add_option("--mode", modes_raw, "grid-only, grid-storage, coalitional (comma list allowed)");
    simulate->add_option("--rho", rho, "Loss weight for coalitional runs")->check(CLI::NonNegativeNumber);
    simulate->add_option("--sweep-rho", sweep_raw, "Comma list of loss weights for coalitional runs");
    simulate->add_option("--horizon", horizon, "Prediction horizon in steps")->check(CLI::PositiveNumber);
    simulate->add_option("--reform-period", reform_period, "Steps between partition re-formations")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--epsilon-reg", epsilon_reg, "Transfer-volume regularizer (CU/kWh)")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", out_dir, "Output directory");
    simulate->add_flag("--oracle-check", oracle_check, "Run the small-instance oracle cross-checks and exit");
    simulate->add_flag("--benchmark-structures", benchmark, "Report the optimal structure at every re-formation");

    auto* gen = app.add_subcommand("generate", "Write a synthetic scenario document");
    std::string gen_out;
    gen->add_option("--seed", seed, "Generator seed");
    gen->add_option("--nodes", nodes, "Node count")->check(CLI::Range(1, 16));
    gen->add_option("--steps", steps, "Step count")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (gen->parsed()) {
        const auto scenario = coalctl::generate_synthetic_scenario(seed, nodes, steps);
        const std::string text = coalctl::serialize_scenario(scenario);
        if (gen_out.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(gen_out, std::ios::binary);
            if (!out || !(out << text)) {
                std::cerr << "error [output]: cannot write '" << gen_out << "'\n";
                return kRuntime;
            }
        }
        return kOk;
    }

    if (oracle_check) {
        const auto report = coalctl::oracle::run_oracle_checks(std::cout);
        std::cout << report.checks - report.failures << "/" << report.checks << " oracle checks passed\n";
        return report.ok() ? kOk : kRuntime;
    }

    std::vector<coalctl::sim::Mode> modes;
    for (const auto& text : split_list(modes_raw)) {
        const auto mode = coalctl::sim::parse_mode(text);
        if (!mode) {
            std::cerr << "error [usage]: unknown mode '" << text << "'\n";
            return kUsage;
        }
        modes.push_back(*mode);
    }
    if (modes.empty()) modes.push_back(coalctl::sim::Mode::Coalitional);

    std::vector<double> rhos;
    for (const auto& text : split_list(sweep_raw)) {
        try {
            std::size_t used = 0;
            const double value = std::stod(text, &used);
            if (used != text.size() || !(value >= 0.0)) throw std::invalid_argument(text);
            rhos.push_back(value);
        } catch (const std::exception&) {
            std::cerr << "error [usage]: invalid --sweep-rho entry '" << text << "'\n";
            return kUsage;
        }
    }
    if (rhos.empty()) rhos.push_back(rho);

    if (scenario_path.empty() && !generate) {
        std::cerr << "error [usage]: pass --scenario PATH or --generate\n";
        return kUsage;
    }

    coalctl::Scenario scenario;
    std::string source;
    try {
        if (generate) {
            scenario = coalctl::generate_synthetic_scenario(seed, nodes, steps);
            source = "generated:seed=" + std::to_string(seed) + ",nodes=" + std::to_string(nodes) +
                     ",steps=" + std::to_string(steps);
        } else {
            scenario = coalctl::load_scenario_file(scenario_path);
            source = scenario_path;
        }
    } catch (const coalctl::InputError& e) {
        std::cerr << "error [input]: " << e.what() << '\n';
        return kInput;
    }

    std::vector<coalctl::sim::SimulationTrace> traces;
    try {
        for (const auto mode : modes) {
            coalctl::sim::SimConfig config;
            config.mode = mode;
            config.horizon = horizon;
            config.reform_period = reform_period;
            config.epsilon_reg = epsilon_reg;
            config.benchmark_structures = benchmark && mode == coalctl::sim::Mode::Coalitional;
            if (mode == coalctl::sim::Mode::Coalitional) {
                for (double r : rhos) {
                    config.rho = r;
                    traces.push_back(coalctl::sim::run(scenario, config));
                }
            } else {
                config.rho = 0.0;
                traces.push_back(coalctl::sim::run(scenario, config));
            }
        }
    } catch (const coalctl::InputError& e) {
        std::cerr << "error [input]: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error [simulation]: " << e.what() << '\n';
        return kRuntime;
    }

    try {
        const auto manifest = coalctl::report::write_reports(traces, out_dir, source);
        for (const auto& trace : traces) {
            double total = 0.0;
            for (double c : trace.cumulative_cost) total += c;
            std::cout << trace.config.label() << ": total cost " << coalctl::report::format_number(total)
                      << " CU, mean coalition size " << mean_block_size(trace) << '\n';
            for (const auto& step : trace.steps) {
                if (step.formation && step.formation->optimal) {
                    std::cout << "  step " << step.step << ": formed " << step.formation->formed_value
                              << ", optimal " << step.formation->optimal->value << " (gap "
                              << step.formation->formed_value - step.formation->optimal->value << ")\n";
                }
            }
        }
        std::cout << "wrote " << manifest.files.size() << " reports to " << manifest.output_dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error [output]: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
