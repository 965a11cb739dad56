#include "coalctl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

namespace coalctl::report {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ReportError("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) throw ReportError("failed while writing '" + path.string() + "'");
}

}  // namespace

std::string format_number(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw ReportError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::vector<std::optional<double>> summarize_prices(const sim::SimulationTrace& trace) {
    const std::size_t n = trace.cumulative_cost.size();
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (const sim::StepResult& step : trace.steps) {
        for (const game::PriceRecord& price : step.prices) {
            if (price.net_energy > game::kPriceEnergyThreshold && price.equivalent_price) {
                sum[price.agent] += *price.equivalent_price;
                ++count[price.agent];
            }
        }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] > 0) out[i] = sum[i] / static_cast<double>(count[i]);
    }
    return out;
}

std::string partitions_csv(std::span<const sim::SimulationTrace> traces) {
    std::ostringstream out;
    out << "run,step,agent,block_id\n";
    for (const auto& trace : traces) {
        const std::string label = trace.config.label();
        for (const auto& step : trace.steps) {
            for (AgentId a = 0; a < step.partition.agents(); ++a) {
                out << label << ',' << step.step << ',' << a << ',' << step.partition.block_index(a) << '\n';
            }
        }
    }
    return out.str();
}

std::string costs_csv(std::span<const sim::SimulationTrace> traces) {
    std::ostringstream out;
    out << "agent,run,cumulative_cost\n";
    for (const auto& trace : traces) {
        const std::string label = trace.config.label();
        for (AgentId a = 0; a < trace.cumulative_cost.size(); ++a) {
            out << a << ',' << label << ',' << format_number(trace.cumulative_cost[a]) << '\n';
        }
    }
    return out.str();
}

std::string prices_csv(std::span<const sim::SimulationTrace> traces) {
    std::ostringstream out;
    out << "agent";
    std::size_t agents = 0;
    std::vector<std::vector<std::optional<double>>> columns;
    for (const auto& trace : traces) {
        out << ",avg_buyer_price[" << trace.config.label() << ']';
        columns.push_back(summarize_prices(trace));
        agents = std::max(agents, columns.back().size());
    }
    out << '\n';
    for (AgentId a = 0; a < agents; ++a) {
        out << a;
        for (const auto& column : columns) {
            out << ',';
            if (a < column.size() && column[a]) out << format_number(*column[a]);
        }
        out << '\n';
    }
    return out.str();
}

std::string flows_csv(std::span<const sim::SimulationTrace> traces) {
    std::ostringstream out;
    out << "run,step,agent,block_id,grid_buy,grid_sell,coal_buy,coal_sell,storage_delta,storage_after,"
           "charge,net_energy,equivalent_price\n";
    for (const auto& trace : traces) {
        const std::string label = trace.config.label();
        for (const auto& step : trace.steps) {
            for (AgentId a = 0; a < step.flows.size(); ++a) {
                const auto& f = step.flows[a];
                const auto& p = step.prices[a];
                out << label << ',' << step.step << ',' << a << ',' << step.partition.block_index(a) << ','
                    << format_number(f.grid_buy) << ',' << format_number(f.grid_sell) << ','
                    << format_number(f.coal_buy) << ',' << format_number(f.coal_sell) << ','
                    << format_number(f.storage_delta) << ',' << format_number(f.storage_after) << ','
                    << format_number(step.charges[a]) << ',' << format_number(p.net_energy) << ',';
                if (p.equivalent_price) out << format_number(*p.equivalent_price);
                out << '\n';
            }
        }
    }
    return out.str();
}

RunManifest write_reports(std::span<const sim::SimulationTrace> traces, const std::filesystem::path& output_dir,
                          const std::string& scenario_source) {
    if (traces.empty()) throw std::invalid_argument("write_reports needs at least one trace");

    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec || !std::filesystem::is_directory(output_dir)) {
        throw ReportError("cannot create output directory '" + output_dir.string() + "'");
    }

    RunManifest manifest;
    manifest.scenario_source = scenario_source;
    manifest.output_dir = output_dir;
    for (const auto& trace : traces) manifest.configs.push_back(trace.config.label());

    const std::pair<const char*, std::string> files[] = {
        {"partitions.csv", partitions_csv(traces)},
        {"costs.csv", costs_csv(traces)},
        {"prices.csv", prices_csv(traces)},
        {"flows.csv", flows_csv(traces)},
    };
    for (const auto& [name, content] : files) {
        write_file(output_dir / name, content);
        manifest.files.push_back(ManifestEntry{name, content.size(), sha256_hex(content)});
    }

    nlohmann::ordered_json doc;
    doc["scenario_source"] = manifest.scenario_source;
    doc["price_averaging"] = "mean equivalent price over steps where the agent is a net buyer (> 1e-6 kWh)";
    doc["runs"] = nlohmann::ordered_json::array();
    for (const auto& trace : traces) {
        const auto& c = trace.config;
        doc["runs"].push_back({{"label", c.label()},
                               {"mode", sim::to_string(c.mode)},
                               {"rho", c.rho},
                               {"horizon", c.horizon},
                               {"epsilon_reg", c.epsilon_reg},
                               {"reform_period", c.reform_period},
                               {"steps", trace.steps.size()}});
    }
    doc["files"] = nlohmann::ordered_json::array();
    for (const auto& entry : manifest.files) {
        doc["files"].push_back({{"file", entry.file}, {"bytes", entry.bytes}, {"sha256", entry.sha256}});
    }
    write_file(output_dir / "manifest.json", doc.dump(2) + "\n");
    return manifest;
}

}  // namespace coalctl::report
