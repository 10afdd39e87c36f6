#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsteady/potentials.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

// git-describe style identifier baked in at build time
std::string build_id();

extern const std::vector<std::string> kCommands;  // height ... geometry (report is not a scenario)

// One experiment. Unset numbers fall back to per-command defaults.
struct Scenario {
    std::string name;
    std::string command;
    double m = 2.0;
    int n = 1;
    nlohmann::json potential = "quadratic";  // object spec or shorthand string
    nlohmann::json init;                     // density spec, see make_density
    nlohmann::json init1;                    // second endpoint (interpolate, certify, energy flatness)
    nlohmann::json options = nlohmann::json::object();
    std::string out;  // empty: ./out/<name>
    std::uint64_t seed = 1;

    // Throws InvalidInput naming the offending field path, e.g. "scenario.m".
    static Scenario from_json(const nlohmann::json& j, const std::string& path = "scenario");
    nlohmann::json to_json() const;
    std::string out_dir() const { return out.empty() ? "out/" + name : out; }
};

// Density specs: "tent", "tent:radius=2", or an object
//   {"family": "uniform"|"tent"|"power_cap"|"quadratic_cap"|"random"|"barenblatt"|"steady",
//    "radius", "p", "q", "t", "nodes", "rMax"}  or  {"csv": "path"}.
// "random" draws from the scenario seed; "steady" solves for the scenario's m and W.
RadialDensity make_density(const nlohmann::json& spec, int n, std::uint64_t seed, double m = 2.0,
                           const Potential& w = Potential::quadratic(), const std::string& path = "init");

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    nlohmann::json to_json() const;
};

struct RunResult {
    std::string name;
    std::string command;
    std::string out_dir;
    std::vector<Check> checks;
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> artifacts;
    std::string error;  // set when the run threw; checks then hold a single failure
    bool pass() const;
    nlohmann::json summary(const Scenario& s) const;
};

// Runs the scenario, writes its artifacts and summary.json under out_dir().
RunResult run_scenario(const Scenario& s, std::size_t jobs = 1);
// Scenario-level parallelism; results keep the input order.
std::vector<RunResult> run_scenarios(const std::vector<Scenario>& list, std::size_t jobs = 1);

// Reads a config holding one scenario object or {"scenarios": [...]}. An empty
// or scenario-free config is a usage error (InvalidInput).
std::vector<Scenario> load_config(const nlohmann::json& config);

std::vector<std::string> builtin_names();
Scenario builtin(const std::string& name);  // InvalidInput for unknown names

// Consolidated index of run summaries: index.csv and index.json in out_dir.
// Each input is a summary.json file or a directory searched recursively.
struct IndexReport {
    nlohmann::json rows = nlohmann::json::array();
    std::string csv;
    nlohmann::json to_json() const;
};
IndexReport build_index(const std::vector<std::string>& inputs);
void write_index(const IndexReport& index, const std::string& out_dir);

}  // namespace aggsteady
