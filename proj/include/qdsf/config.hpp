#pragma once

// Flat key=value run configuration with section-prefixed keys
// (coupling.gamma=0.314...).  '#' starts a comment; CLI flags override file
// keys; unknown keys are rejected.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdsf/io.hpp"

namespace qdsf::config {

struct RunConfig {
    // coupling
    std::string family = "power-law-exponential";
    double gamma = 0.31415926535897931;  // 0.1*pi
    double lambda = 5.0;
    double s = 1.0;
    // modes
    double m = 1.0;
    std::vector<double> k_values{0.0};
    // quadrature / grid
    double tol_static = 1e-10;
    double tol_osc = 1e-6;
    double sum_rule_threshold = 1e-6;
    double panel_tol = 1e-8;
    long grid_max_points = 200000;
    // oracle
    long oracle_n = 4000;
    double oracle_omega_max = 0.0;  // 0 -> 20*lambda
    std::string oracle_scheme = "uniform";
    std::vector<long> oracle_scan{};
    double oracle_tol_var = 0.01;
    double oracle_tol_kernel = 1e-3;
    double oracle_tol_thermal = 0.01;
    double oracle_kernel_t_max = 50.0;
    // thermal / time evolution
    std::vector<double> temperatures{2.0};
    double t_max = 50.0;
    long t_points = 201;
    double phi0 = 1.0;
    double pi0 = 0.0;
    bool trajectory = false;
    // spatial mean-square field / characteristic function
    double field_x = 0.0;
    double field_kmax = 0.0;  // 0 -> 50*max(m, lambda)
    int field_nk = 48;
    std::vector<double> field_scan{};
    double chi_extent = 0.0;  // 0 -> no chi grid
    int chi_points = 9;
    // run control
    std::string variant = "first-principles";
    std::string out_dir = "out";
    bool force = false;
    int jobs = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::runtime_error("config: bad number for " + key + ": " + v);
    return d;
}

inline long to_long(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long l = std::stol(v, &pos);
    if (pos != v.size()) throw std::runtime_error("config: bad integer for " + key + ": " + v);
    return l;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F&& conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(conv(key, item));
    }
    if (out.empty()) throw std::runtime_error("config: empty list for " + key);
    return out;
}

}  // namespace detail

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key=value");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Applies one key; throws on unknown keys or malformed values.
inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "coupling.family") c.family = value;
    else if (key == "coupling.gamma") c.gamma = to_double(key, value);
    else if (key == "coupling.lambda") c.lambda = to_double(key, value);
    else if (key == "coupling.s") c.s = to_double(key, value);
    else if (key == "mode.m") c.m = to_double(key, value);
    else if (key == "mode.k") c.k_values = to_list<double>(key, value, to_double);
    else if (key == "mode.k_min" || key == "mode.k_max" || key == "mode.k_count")
        throw std::runtime_error("config: mode.k_min/k_max/k_count are file-only keys handled as a group");
    else if (key == "quad.tol_static") c.tol_static = to_double(key, value);
    else if (key == "quad.tol_osc") c.tol_osc = to_double(key, value);
    else if (key == "grid.sum_rule_threshold") c.sum_rule_threshold = to_double(key, value);
    else if (key == "grid.panel_tol") c.panel_tol = to_double(key, value);
    else if (key == "grid.max_points") c.grid_max_points = to_long(key, value);
    else if (key == "oracle.n") c.oracle_n = to_long(key, value);
    else if (key == "oracle.omega_max") c.oracle_omega_max = to_double(key, value);
    else if (key == "oracle.scheme") c.oracle_scheme = value;
    else if (key == "oracle.scan") c.oracle_scan = to_list<long>(key, value, to_long);
    else if (key == "oracle.tol_var") c.oracle_tol_var = to_double(key, value);
    else if (key == "oracle.tol_kernel") c.oracle_tol_kernel = to_double(key, value);
    else if (key == "oracle.tol_thermal") c.oracle_tol_thermal = to_double(key, value);
    else if (key == "oracle.kernel_t_max") c.oracle_kernel_t_max = to_double(key, value);
    else if (key == "thermal.temperatures") c.temperatures = to_list<double>(key, value, to_double);
    else if (key == "time.t_max") c.t_max = to_double(key, value);
    else if (key == "time.points") c.t_points = to_long(key, value);
    else if (key == "evolve.phi0") c.phi0 = to_double(key, value);
    else if (key == "evolve.pi0") c.pi0 = to_double(key, value);
    else if (key == "evolve.trajectory") c.trajectory = to_bool(key, value);
    else if (key == "field.x") c.field_x = to_double(key, value);
    else if (key == "field.k_max") c.field_kmax = to_double(key, value);
    else if (key == "field.n_k") c.field_nk = int(to_long(key, value));
    else if (key == "field.scan") c.field_scan = to_list<double>(key, value, to_double);
    else if (key == "chi.extent") c.chi_extent = to_double(key, value);
    else if (key == "chi.points") c.chi_points = int(to_long(key, value));
    else if (key == "variant") c.variant = value;
    else if (key == "output.dir") c.out_dir = value;
    else if (key == "output.force") c.force = to_bool(key, value);
    else if (key == "jobs") c.jobs = int(to_long(key, value));
    else throw std::runtime_error("config: unknown key: " + key);
}

inline RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    auto kv = parse_key_values(f);
    RunConfig c;
    // k-range expansion first so mode.k can still override
    auto kmin = kv.find("mode.k_min"), kmax = kv.find("mode.k_max"), kcount = kv.find("mode.k_count");
    if (kmin != kv.end() || kmax != kv.end() || kcount != kv.end()) {
        if (kmin == kv.end() || kmax == kv.end() || kcount == kv.end())
            throw std::runtime_error("config: mode.k_min/k_max/k_count must be given together");
        const double a = detail::to_double("mode.k_min", kmin->second);
        const double b = detail::to_double("mode.k_max", kmax->second);
        const long n = detail::to_long("mode.k_count", kcount->second);
        if (n < 1 || b < a) throw std::runtime_error("config: bad k range");
        c.k_values.clear();
        for (long i = 0; i < n; ++i)
            c.k_values.push_back(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
        kv.erase(kmin);
        kv.erase(kmax);
        kv.erase(kcount);
    }
    for (const auto& [k, v] : kv) apply_key(c, k, v);
    return c;
}

/// Canonical serialization of the effective configuration; hashing it gives
/// the provenance id embedded in every output.
inline std::string canonical_text(const RunConfig& c) {
    std::string s;
    auto add = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    auto addf = [&](const std::string& k, double v) { add(k, io::format_float(v)); };
    add("coupling.family", c.family);
    addf("coupling.gamma", c.gamma);
    addf("coupling.lambda", c.lambda);
    addf("coupling.s", c.s);
    addf("mode.m", c.m);
    for (std::size_t i = 0; i < c.k_values.size(); ++i)
        addf("mode.k." + std::to_string(i), c.k_values[i]);
    addf("quad.tol_static", c.tol_static);
    addf("quad.tol_osc", c.tol_osc);
    addf("grid.sum_rule_threshold", c.sum_rule_threshold);
    addf("grid.panel_tol", c.panel_tol);
    add("grid.max_points", std::to_string(c.grid_max_points));
    add("oracle.n", std::to_string(c.oracle_n));
    addf("oracle.omega_max", c.oracle_omega_max);
    add("oracle.scheme", c.oracle_scheme);
    for (std::size_t i = 0; i < c.oracle_scan.size(); ++i)
        add("oracle.scan." + std::to_string(i), std::to_string(c.oracle_scan[i]));
    addf("oracle.tol_var", c.oracle_tol_var);
    addf("oracle.tol_kernel", c.oracle_tol_kernel);
    addf("oracle.tol_thermal", c.oracle_tol_thermal);
    addf("oracle.kernel_t_max", c.oracle_kernel_t_max);
    for (std::size_t i = 0; i < c.temperatures.size(); ++i)
        addf("thermal.temperatures." + std::to_string(i), c.temperatures[i]);
    addf("time.t_max", c.t_max);
    add("time.points", std::to_string(c.t_points));
    addf("evolve.phi0", c.phi0);
    addf("evolve.pi0", c.pi0);
    add("evolve.trajectory", c.trajectory ? "true" : "false");
    addf("field.x", c.field_x);
    addf("field.k_max", c.field_kmax);
    add("field.n_k", std::to_string(c.field_nk));
    for (std::size_t i = 0; i < c.field_scan.size(); ++i)
        addf("field.scan." + std::to_string(i), c.field_scan[i]);
    addf("chi.extent", c.chi_extent);
    add("chi.points", std::to_string(c.chi_points));
    add("variant", c.variant);
    return s;  // output.dir/force/jobs do not affect computed content
}

inline std::string config_hash(const RunConfig& c) { return io::fnv1a_hex(canonical_text(c)); }

}  // namespace qdsf::config
