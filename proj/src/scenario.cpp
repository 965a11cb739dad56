#include "coalctl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace coalctl {

namespace {

using nlohmann::json;

constexpr double kRowSpacingKm = 0.5;
constexpr double kNodeSpacingKm = 0.5;
constexpr double kMinTariffSpread = 0.005;

template <typename... Parts>
std::string concat(Parts&&... parts) {
    std::ostringstream out;
    (out << ... << parts);
    return out.str();
}

void reject_unknown(const json& object, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : object.items()) {
        if (!known.contains(key)) {
            throw ScenarioParseError(concat(where, ": unknown field '", key, "'"));
        }
    }
}

const json& require(const json& object, const char* key, const std::string& where) {
    const auto it = object.find(key);
    if (it == object.end()) {
        throw ScenarioParseError(concat(where, ": missing field '", key, "'"));
    }
    return *it;
}

double number(const json& value, const std::string& where) {
    if (!value.is_number()) throw ScenarioParseError(concat(where, ": expected a number"));
    return value.get<double>();
}

std::vector<double> series(const json& value, const std::string& where) {
    if (!value.is_array()) throw ScenarioParseError(concat(where, ": expected an array"));
    std::vector<double> out;
    out.reserve(value.size());
    for (std::size_t t = 0; t < value.size(); ++t) {
        out.push_back(number(value[t], concat(where, "[", t, "]")));
    }
    return out;
}

NodeProfile parse_node(const json& doc, std::size_t index) {
    const std::string where = concat("nodes[", index, "]");
    if (!doc.is_object()) throw ScenarioParseError(where + ": expected an object");
    reject_unknown(doc,
                   {"id", "position", "s_max_kwh", "s0_kwh", "demand_kwh", "generation_kwh",
                    "buy_price", "sell_price"},
                   where);
    NodeProfile node;
    const json& id = require(doc, "id", where);
    if (!id.is_number_integer() || id.get<std::int64_t>() < 0) {
        throw ScenarioParseError(where + ".id: expected a nonnegative integer");
    }
    node.id = id.get<std::size_t>();

    const json& pos = require(doc, "position", where);
    if (!pos.is_object()) throw ScenarioParseError(where + ".position: expected an object");
    reject_unknown(pos, {"x_km", "y_km"}, where + ".position");
    node.position.x_km = number(require(pos, "x_km", where + ".position"), where + ".position.x_km");
    node.position.y_km = number(require(pos, "y_km", where + ".position"), where + ".position.y_km");

    node.s_max_kwh = number(require(doc, "s_max_kwh", where), where + ".s_max_kwh");
    node.s0_kwh = number(require(doc, "s0_kwh", where), where + ".s0_kwh");
    node.demand_kwh = series(require(doc, "demand_kwh", where), where + ".demand_kwh");
    node.generation_kwh = series(require(doc, "generation_kwh", where), where + ".generation_kwh");
    node.buy_price = series(require(doc, "buy_price", where), where + ".buy_price");
    node.sell_price = series(require(doc, "sell_price", where), where + ".sell_price");
    return node;
}

// Portable uniform draw in [lo, hi); independent of the standard library's
// distribution implementations.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : engine_(seed) {}
    double operator()(double lo, double hi) {
        const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * unit;
    }

private:
    std::mt19937_64 engine_;
};

double bump(double hour, double centre, double width) {
    const double z = (hour - centre) / width;
    return std::exp(-0.5 * z * z);
}

}  // namespace

double distance_km(const Position& a, const Position& b) {
    return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
}

void validate_scenario(const Scenario& scenario) {
    if (scenario.nodes.empty()) throw ScenarioValidationError("scenario has no nodes");
    if (scenario.nodes.size() > 16) {
        throw ScenarioValidationError(concat("scenario has ", scenario.nodes.size(),
                                             " nodes; at most 16 are supported"));
    }
    if (!(scenario.step_hours > 0.0) || !std::isfinite(scenario.step_hours)) {
        throw ScenarioValidationError("step_hours must be positive");
    }
    if (!std::isfinite(scenario.start_hour)) throw ScenarioValidationError("start_hour must be finite");
    if (scenario.n_steps == 0) throw ScenarioValidationError("scenario has no steps");

    for (std::size_t i = 0; i < scenario.nodes.size(); ++i) {
        const NodeProfile& node = scenario.nodes[i];
        const std::string where = concat("node ", node.id);
        if (node.id != i) {
            throw ScenarioValidationError(concat("nodes[", i, "] has id ", node.id, "; ids must be 0..N-1 in order"));
        }
        if (!std::isfinite(node.position.x_km) || !std::isfinite(node.position.y_km)) {
            throw ScenarioValidationError(where + ": position must be finite");
        }
        if (!(node.s_max_kwh >= 0.0) || !std::isfinite(node.s_max_kwh)) {
            throw ScenarioValidationError(where + ": s_max_kwh must be a finite nonnegative number");
        }
        if (!(node.s0_kwh >= 0.0 && node.s0_kwh <= node.s_max_kwh)) {
            throw ScenarioValidationError(concat(where, ": s0_kwh ", node.s0_kwh,
                                                 " outside [0, s_max_kwh = ", node.s_max_kwh, "]"));
        }
        const std::pair<const char*, const std::vector<double>*> columns[] = {
            {"demand_kwh", &node.demand_kwh},
            {"generation_kwh", &node.generation_kwh},
            {"buy_price", &node.buy_price},
            {"sell_price", &node.sell_price},
        };
        for (const auto& [name, values] : columns) {
            if (values->size() != scenario.n_steps) {
                throw ScenarioValidationError(concat(where, ": ", name, " has length ", values->size(),
                                                     ", expected ", scenario.n_steps));
            }
            for (std::size_t t = 0; t < values->size(); ++t) {
                const double x = (*values)[t];
                if (!std::isfinite(x) || x < 0.0) {
                    throw ScenarioValidationError(concat(where, ", step ", t, ": ", name,
                                                         " must be finite and nonnegative, got ", x));
                }
            }
        }
        for (std::size_t t = 0; t < scenario.n_steps; ++t) {
            if (!(node.buy_price[t] > node.sell_price[t])) {
                throw ScenarioValidationError(concat(where, ", step ", t, ": sell_price ", node.sell_price[t],
                                                     " must be below buy_price ", node.buy_price[t]));
            }
        }
    }
}

Scenario load_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError(concat("malformed scenario document: ", e.what()));
    }
    if (!doc.is_object()) throw ScenarioParseError("scenario document must be an object");
    reject_unknown(doc, {"step_hours", "start_hour", "nodes"}, "scenario");

    Scenario scenario;
    scenario.step_hours = number(require(doc, "step_hours", "scenario"), "step_hours");
    scenario.start_hour = number(require(doc, "start_hour", "scenario"), "start_hour");
    const json& nodes = require(doc, "nodes", "scenario");
    if (!nodes.is_array()) throw ScenarioParseError("nodes: expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) scenario.nodes.push_back(parse_node(nodes[i], i));
    scenario.n_steps = scenario.nodes.empty() ? 0 : scenario.nodes.front().demand_kwh.size();

    validate_scenario(scenario);
    return scenario;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(concat("cannot read scenario file '", path.string(), "'"));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return load_scenario(buffer.str());
    } catch (const ScenarioParseError& e) {
        throw ScenarioParseError(concat(path.string(), ": ", e.what()));
    } catch (const ScenarioValidationError& e) {
        throw ScenarioValidationError(concat(path.string(), ": ", e.what()));
    }
}

std::string serialize_scenario(const Scenario& scenario) {
    json doc;
    doc["step_hours"] = scenario.step_hours;
    doc["start_hour"] = scenario.start_hour;
    doc["nodes"] = json::array();
    for (const NodeProfile& node : scenario.nodes) {
        json n;
        n["id"] = node.id;
        n["position"] = {{"x_km", node.position.x_km}, {"y_km", node.position.y_km}};
        n["s_max_kwh"] = node.s_max_kwh;
        n["s0_kwh"] = node.s0_kwh;
        n["demand_kwh"] = node.demand_kwh;
        n["generation_kwh"] = node.generation_kwh;
        n["buy_price"] = node.buy_price;
        n["sell_price"] = node.sell_price;
        doc["nodes"].push_back(std::move(n));
    }
    return doc.dump(2) + "\n";
}

Scenario generate_synthetic_scenario(std::uint64_t seed, std::size_t n_nodes, std::size_t n_steps) {
    Scenario scenario;
    scenario.step_hours = 1.0;
    scenario.start_hour = 7.0;
    scenario.n_steps = n_steps;

    Uniform draw(seed);
    const std::size_t per_row = (n_nodes + 1) / 2;

    // Shared time-of-use shape; each node sees it through its own utility.
    std::vector<double> tou(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double hour = scenario.start_hour + static_cast<double>(k) * scenario.step_hours;
        tou[k] = 0.55 * bump(hour, 9.0, 1.5) + bump(hour, 20.0, 2.0);
    }

    for (std::size_t i = 0; i < n_nodes; ++i) {
        NodeProfile node;
        node.id = i;
        node.position = {static_cast<double>(i % per_row) * kNodeSpacingKm,
                         static_cast<double>(i / per_row) * kRowSpacingKm};
        node.s_max_kwh = draw(2.0, 6.0);
        node.s0_kwh = 0.0;

        const double base_load = draw(0.3, 0.7);
        const double morning = draw(0.6, 1.6);
        const double evening = draw(1.2, 2.8);
        const double evening_centre = draw(19.0, 21.0);
        const double solar_peak = draw(0.5, 4.5);
        const double solar_centre = draw(12.5, 14.0);
        const double buy_offset = draw(-0.008, 0.008);
        const double sell_level = draw(0.030, 0.048);

        for (std::size_t k = 0; k < n_steps; ++k) {
            const double hour = scenario.start_hour + static_cast<double>(k) * scenario.step_hours;
            const double demand = (base_load + morning * bump(hour, 8.0, 1.2) +
                                   evening * bump(hour, evening_centre, 1.8)) *
                                  draw(0.9, 1.1);
            double generation = solar_peak * bump(hour, solar_centre, 2.3) * draw(0.85, 1.0);
            if (generation < 1e-3) generation = 0.0;

            const double buy = 0.074 + buy_offset + 0.016 * tou[k] + draw(-0.002, 0.002);
            double sell = sell_level + 0.006 * tou[k] + draw(-0.002, 0.002);
            sell = std::clamp(sell, 0.0, buy - kMinTariffSpread);

            node.demand_kwh.push_back(demand);
            node.generation_kwh.push_back(generation);
            node.buy_price.push_back(buy);
            node.sell_price.push_back(sell);
        }
        scenario.nodes.push_back(std::move(node));
    }
    validate_scenario(scenario);
    return scenario;
}

NodeSlice slice_node(const NodeProfile& node, std::size_t k, std::size_t horizon) {
    const std::size_t n_steps = node.demand_kwh.size();
    if (k >= n_steps) {
        throw std::out_of_range(concat("step ", k, " outside scenario of ", n_steps, " steps"));
    }
    NodeSlice slice;
    auto take = [&](const std::vector<double>& src, std::vector<double>& dst) {
        dst.resize(horizon);
        for (std::size_t t = 0; t < horizon; ++t) dst[t] = src[std::min(k + t, n_steps - 1)];
    };
    take(node.demand_kwh, slice.demand);
    take(node.generation_kwh, slice.generation);
    take(node.buy_price, slice.buy_price);
    take(node.sell_price, slice.sell_price);
    return slice;
}

HorizonSlice slice_horizon(const Scenario& scenario, std::size_t k, std::size_t horizon) {
    if (k >= scenario.n_steps) {
        throw std::out_of_range(concat("step ", k, " outside scenario of ", scenario.n_steps, " steps"));
    }
    HorizonSlice slice;
    slice.step = k;
    slice.nodes.reserve(scenario.nodes.size());
    for (const NodeProfile& node : scenario.nodes) slice.nodes.push_back(slice_node(node, k, horizon));
    return slice;
}

}  // namespace coalctl
