#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggsteady/error.hpp"
#include "aggsteady/scenario.hpp"

using namespace aggsteady;
using nlohmann::json;

namespace {

struct Flags {
    std::string config, builtin, name, potential, init, init1, out;
    std::vector<std::string> set;
    double m = 0.0;
    int n = 0;
    long long seed = -1;
    std::size_t tgrid = 0;
    double tmax = 0.0;
    std::vector<double> times;
};

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("--config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw InvalidInput("--config: " + path + " is empty");
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput("--config: " + path + ": " + e.what());
    }
}

// fills the subcommand into scenarios that do not name one
void default_command(json& j, const std::string& command) {
    if (j.is_object() && !j.empty() && !j.contains("command")) j["command"] = command;
}

// a density flag is either a CSV path or a family spec
json density_flag(const std::string& text) {
    if (text.size() > 4 && text.substr(text.size() - 4) == ".csv") return json{{"csv", text}};
    return text;
}

std::vector<Scenario> scenarios_for(const std::string& command, const Flags& f) {
    std::vector<Scenario> list;
    if (!f.config.empty()) {
        json cfg = read_config(f.config);
        if (cfg.is_object() && cfg.contains("scenarios") && cfg["scenarios"].is_array())
            for (auto& s : cfg["scenarios"]) default_command(s, command);
        else default_command(cfg, command);
        list = load_config(cfg);
    } else if (!f.builtin.empty()) {
        list.push_back(builtin(f.builtin));
    } else {
        list.push_back(Scenario::from_json({{"command", command}, {"name", f.name.empty() ? command : f.name}}));
    }
    for (auto& s : list) {
        if (s.command != command)
            throw InvalidInput("scenario '" + s.name + "' is a " + s.command + " scenario, not " + command);
        json j = s.to_json();
        j.erase("out");
        if (!s.out.empty()) j["out"] = s.out;
        if (!f.name.empty() && list.size() == 1) j["name"] = f.name;
        if (f.m != 0.0) j["m"] = f.m;
        if (f.n != 0) j["n"] = f.n;
        if (!f.potential.empty()) j["potential"] = f.potential;
        if (!f.init.empty()) j["init"] = density_flag(f.init);
        if (!f.init1.empty()) j["init1"] = density_flag(f.init1);
        if (f.seed >= 0) j["seed"] = f.seed;
        if (f.tgrid != 0) j["options"]["tgrid"] = f.tgrid;
        if (!f.times.empty()) j["options"]["times"] = f.times;
        if (f.tmax != 0.0) j["options"]["tMax"] = f.tmax;
        for (const auto& kv : f.set) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InvalidInput("--set: expected key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
            try {
                j["options"][key] = json::parse(value);
            } catch (const json::exception&) {
                j["options"][key] = value;
            }
        }
        if (!f.out.empty()) j["out"] = list.size() == 1 ? f.out : f.out + "/" + s.name;
        s = Scenario::from_json(j);
    }
    return list;
}

int run(const std::string& command, const Flags& f, std::size_t jobs) {
    const std::vector<Scenario> list = scenarios_for(command, f);
    const auto results = run_scenarios(list, jobs);
    bool all = true;
    for (const auto& r : results) {
        std::cout << r.name << ": " << (r.pass() ? "PASS" : "FAIL");
        for (const auto& c : r.checks)
            if (!c.pass) std::cout << " [" << c.name << " " << c.value << " vs " << c.threshold << "]";
        std::cout << " -> " << r.out_dir << "/summary.json\n";
        if (!r.error.empty()) std::cerr << r.name << ": " << r.error << '\n';
        all = all && r.pass();
    }
    if (command == "certify") std::cout << (all ? "PASS" : "FAIL") << '\n';
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial aggregation-diffusion steady states: height functions, energies, steady states, evolution.\n"
                  "`aggsteady --list-builtins` prints the builtin scenario presets."};
    app.require_subcommand(1);
    std::size_t jobs = 1;
    app.add_option("--jobs", jobs, "Worker threads (0: all cores)")->capture_default_str();

    Flags f;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"height", "Height function round trip and h' identity"},
        {"interpolate", "Interpolation curve between two densities"},
        {"energy", "Entropy, interaction and free energy of a density"},
        {"certify", "Convexity certificate along an interpolation curve"},
        {"steady", "Steady state by damped fixed point and Newton polish"},
        {"scan", "Uniqueness scan over diverse initializations"},
        {"evolve", "Finite-volume evolution with dissipation diagnostics"},
        {"forge", "Iterated tail modification producing extra steady states"},
        {"geometry", "Ball-pair identities behind the interaction convexity"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", f.config, "Scenario JSON: one scenario or {\"scenarios\": [...]}");
        sub->add_option("--builtin", f.builtin, "Builtin scenario preset");
        sub->add_option("--name", f.name, "Scenario name (default: the subcommand)");
        sub->add_option("--m", f.m, "Diffusion exponent m > 1");
        sub->add_option("--n", f.n, "Dimension 1..3");
        sub->add_option("--potential", f.potential, "Potential: shorthand such as riesz:k=2 or quadratic, or a .json file");
        sub->add_option("--rho,--rho0,--init", f.init, "Density: CSV path or family spec such as tent:radius=1");
        sub->add_option("--rho1,--init1", f.init1, "Second density (interpolate, certify, energy flatness)");
        sub->add_option("--tgrid", f.tgrid, "Number of t points");
        sub->add_option("--times", f.times, "Curve times, e.g. 0,0.25,1 (interpolate)")->delimiter(',');
        sub->add_option("--tmax", f.tmax, "Final time (evolve)");
        sub->add_option("--seed", f.seed, "Seed for randomized families");
        sub->add_option("--set", f.set, "Scenario option key=value (value parsed as JSON when possible)");
        sub->add_option("--out", f.out, "Output directory (default ./out/<scenario-name>)");
        sub->add_option("--jobs", jobs, "Worker threads (0: all cores)");
    }
    std::vector<std::string> inputs;
    std::string report_out = "out";
    CLI::App* report = app.add_subcommand("report", "Index of run summaries (summary.json files or directories)");
    report->add_option("inputs", inputs, "summary.json files or directories to search");
    report->add_option("--out", report_out, "Directory for index.csv and index.json")->capture_default_str();

    if (argc == 2 && std::string(argv[1]) == "--list-builtins") {
        for (const auto& b : builtin_names()) std::cout << b << '\n';
        return 0;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (report->parsed()) {
            const IndexReport idx = build_index(inputs);
            write_index(idx, report_out);
            std::cout << idx.rows.size() << " runs indexed -> " << report_out << "/index.csv\n";
            return 0;
        }
        for (const auto& [name, help] : commands)
            if (app.get_subcommand(name)->parsed()) return run(name, f, jobs);
    } catch (const InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
