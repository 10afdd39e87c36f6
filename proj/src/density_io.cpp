#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aggsteady/height_function.hpp"
#include "aggsteady/radial_core.hpp"

namespace aggsteady {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::vector<std::vector<double>> read_csv(const std::string& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expected;
    for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
    require(line == expected, path + ": expected header '" + expected + "'");
    std::vector<std::vector<double>> cols(header.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t c = 0; c < header.size(); ++c) {
            require(static_cast<bool>(std::getline(ss, cell, ',')), path + ":" + std::to_string(lineno) + ": missing column");
            try {
                cols[c].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInput(path + ":" + std::to_string(lineno) + ": not a number: " + cell);
            }
        }
    }
    return cols;
}

nlohmann::json read_sidecar(const std::string& csv_path) {
    std::ifstream in(sidecar_path(csv_path));
    if (!in) return nlohmann::json::object();
    return nlohmann::json::parse(in);
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".json");
    return p.string();
}

void write_density_csv(const std::string& path, const RadialDensity& rho) {
    ensure_parent(path);
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    out << "r,rho\n";
    for (std::size_t i = 0; i < rho.size(); ++i) out << fmt(rho.grid().r(i)) << ',' << fmt(rho.value(i)) << '\n';
    nlohmann::json meta = {{"dimension", rho.dimension()},
                           {"mass", rho.mass()},
                           {"linf", rho.linf()},
                           {"supportRadius", rho.support_radius()},
                           {"nodes", rho.size()}};
    std::ofstream(sidecar_path(path)) << meta.dump(2) << '\n';
}

RadialDensity read_density_csv(const std::string& path, int dimension_if_no_sidecar) {
    const auto cols = read_csv(path, {"r", "rho"});
    const auto meta = read_sidecar(path);
    int n = meta.contains("dimension") ? meta["dimension"].get<int>() : dimension_if_no_sidecar;
    require(n >= 1, path + ": dimension unknown (no sidecar and none given)");
    return RadialDensity(RadialGrid(n, cols[0]), cols[1]);
}

void write_height_csv(const std::string& path, const HeightFunction& h) {
    ensure_parent(path);
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    out << "s,h,hprime\n";
    for (std::size_t j = 0; j < h.size(); ++j)
        out << fmt(h.s()[j]) << ',' << fmt(h.h()[j]) << ',' << fmt(h.hprime()[j]) << '\n';
    nlohmann::json meta = {{"dimension", h.dimension()},
                           {"mass", 1.0},
                           {"hprimeAtZero", h.hprime_at_zero()},
                           {"supportRadius", h.support_radius()},
                           {"strict", h.strict()}};
    std::ofstream(sidecar_path(path)) << meta.dump(2) << '\n';
}

HeightFunction read_height_csv(const std::string& path) {
    const auto cols = read_csv(path, {"s", "h", "hprime"});
    const auto meta = read_sidecar(path);
    require(meta.contains("dimension") && meta.contains("hprimeAtZero"), path + ": sidecar missing dimension/hprimeAtZero");
    return HeightFunction(meta["dimension"].get<int>(), cols[0], cols[1], cols[2], meta["hprimeAtZero"].get<double>(),
                          meta.value("strict", true));
}

}  // namespace aggsteady
