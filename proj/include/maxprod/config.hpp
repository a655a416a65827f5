#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "maxprod/common.hpp"
#include "maxprod/modular.hpp"

namespace maxprod {

using json = nlohmann::json;

struct GridSettings {
    double sup_step = 1e-3;   // grid step for sup/inf searches
    int h_steps = 32;         // shift grid per modulus evaluation
    int density = 8;          // initial segments per operator cell = max(1, density/8)
    double quad_tol = 1e-9;
    int deriv_grid = 1 << 14; // derivative sup-norm measurement grid
};

/// Declarative description of one experiment; every name resolves through
/// the kernel/phi/signal registries at run time.
struct ExperimentConfig {
    std::string kernel = "fejer";
    std::string phi = "p:1";
    std::string signal = "hat";
    std::string domain = "real:R=4";
    double alpha = 0.5;
    std::vector<double> lambda_ladder = default_lambda_ladder();
    std::vector<long> n_grid = {4, 8, 16, 32, 64, 128, 256};
    std::string out_dir = "out";
    std::string csv_name;   // empty: no CSV emitted
    std::string json_name;  // empty: no JSON emitted
    unsigned long seed = 20250810;
    GridSettings grid;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0,1)");
        if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()))
            throw InputError("config: n_grid must be non-empty and increasing");
        for (double l : lambda_ladder)
            if (!(l > 0.0)) throw InputError("config: lambda ladder must be positive");
        if (grid.h_steps < 1 || grid.density < 1 || !(grid.quad_tol > 0.0))
            throw InputError("config: bad grid settings");
    }
};

inline std::vector<long> dyadic_n_grid(long lo, long hi) {
    if (lo < 1 || hi < lo) throw InputError("bad dyadic n range");
    std::vector<long> out;
    for (long n = lo; n <= hi; n *= 2) out.push_back(n);
    return out;
}

inline void to_json(json& j, const GridSettings& g) {
    j = json{{"sup_step", g.sup_step},
             {"h_steps", g.h_steps},
             {"density", g.density},
             {"quad_tol", g.quad_tol},
             {"deriv_grid", g.deriv_grid}};
}

inline void from_json(const json& j, GridSettings& g) {
    g.sup_step = j.value("sup_step", g.sup_step);
    g.h_steps = j.value("h_steps", g.h_steps);
    g.density = j.value("density", g.density);
    g.quad_tol = j.value("quad_tol", g.quad_tol);
    g.deriv_grid = j.value("deriv_grid", g.deriv_grid);
}

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"kernel", c.kernel},   {"phi", c.phi},
             {"signal", c.signal},   {"domain", c.domain},
             {"alpha", c.alpha},     {"lambda_ladder", c.lambda_ladder},
             {"n_grid", c.n_grid},   {"out_dir", c.out_dir},
             {"csv_name", c.csv_name}, {"json_name", c.json_name},
             {"seed", c.seed},       {"grid", c.grid}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
    c.kernel = j.value("kernel", c.kernel);
    c.phi = j.value("phi", c.phi);
    c.signal = j.value("signal", c.signal);
    c.domain = j.value("domain", c.domain);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("lambda_ladder")) c.lambda_ladder = j.at("lambda_ladder").get<std::vector<double>>();
    if (j.contains("n_grid")) {
        if (j.at("n_grid").is_string()) {
            const std::string s = j.at("n_grid").get<std::string>();
            if (s.rfind("dyadic:", 0) != 0)
                throw InputError("config: n_grid string must be 'dyadic:<lo>:<hi>'");
            auto rest = s.substr(7);
            auto colon = rest.find(':');
            if (colon == std::string::npos) throw InputError("config: bad dyadic n_grid spec");
            c.n_grid = dyadic_n_grid(std::stol(rest.substr(0, colon)),
                                     std::stol(rest.substr(colon + 1)));
        } else {
            c.n_grid = j.at("n_grid").get<std::vector<long>>();
        }
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.csv_name = j.value("csv_name", c.csv_name);
    c.json_name = j.value("json_name", c.json_name);
    c.seed = j.value("seed", c.seed);
    if (j.contains("grid")) c.grid = j.at("grid").get<GridSettings>();
}

// ---------------------------------------------------------------------------
// Minimal TOML subset reader: top-level and [section] tables, key = value
// with strings, numbers, booleans and flat arrays. Enough for experiment
// configs without pulling in a full TOML dependency.

namespace config_detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline json toml_scalar(const std::string& raw) {
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        size_t used = 0;
        if (v.find('.') == std::string::npos && v.find('e') == std::string::npos &&
            v.find('E') == std::string::npos) {
            long l = std::stol(v, &used);
            if (used == v.size()) return l;
        }
        double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw IoError("cannot parse TOML value '" + v + "'");
}

inline json toml_value(const std::string& raw) {
    std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw IoError("unterminated TOML array: " + v);
        json arr = json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_str = false;
        for (char ch : body) {
            if (ch == '"') in_str = !in_str;
            if (ch == ',' && !in_str) {
                if (!trim(cur).empty()) arr.push_back(toml_scalar(cur));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!trim(cur).empty()) arr.push_back(toml_scalar(cur));
        return arr;
    }
    return toml_scalar(v);
}

}  // namespace config_detail

inline json parse_toml_subset(std::istream& in) {
    json root = json::object();
    json* table = &root;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            // keep '#' inside quoted strings
            bool in_str = false;
            for (size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') in_str = !in_str;
                if (line[i] == '#' && !in_str) {
                    line = line.substr(0, i);
                    break;
                }
            }
        }
        std::string t = config_detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw IoError("bad TOML section at line " + std::to_string(lineno));
            std::string name = config_detail::trim(t.substr(1, t.size() - 2));
            root[name] = json::object();
            table = &root[name];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw IoError("expected key = value at line " + std::to_string(lineno));
        std::string key = config_detail::trim(t.substr(0, eq));
        (*table)[key] = config_detail::toml_value(t.substr(eq + 1));
    }
    return root;
}

/// Load an experiment config from a .json or .toml file. The output
/// directory can be overridden with the MAXPROD_OUT_DIR environment
/// variable.
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json j;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
        j = parse_toml_subset(in);
    } else {
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw IoError("config '" + path + "': " + e.what());
        }
    }
    ExperimentConfig cfg = j.get<ExperimentConfig>();
    if (const char* env = std::getenv("MAXPROD_OUT_DIR"); env && *env) cfg.out_dir = env;
    cfg.validate();
    return cfg;
}

}  // namespace maxprod
