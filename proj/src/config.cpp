#include "ebc/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace ebc {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// section -> allowed keys; "" is the top level
const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"", {"seed"}},
        {"grid", {"d", "n", "lo", "hi", "x0"}},
        {"material",
         {"rho", "rho_value", "rho_base", "rho_amp", "rho_width", "rho_center", "rho_csv",
          "mu", "mu_value", "mu_base", "mu_amp", "mu_width", "mu_center", "mu_csv",
          "lambda", "lambda_value", "lambda_base", "lambda_amp", "lambda_width",
          "lambda_center", "lambda_csv", "rho1", "mu0", "mu1", "lambda0", "lambda1"}},
        {"time", {"T", "cfl"}},
        {"basis", {"atoms", "margin_frac"}},
        {"probe", {"gamma"}},
        {"regularization", {"method", "param"}},
        {"carleman", {"c0", "c1", "rho2", "tau"}},
        {"observability", {"T", "ensemble"}},
        {"stability",
         {"delta", "delta_amp", "delta_width", "delta_center", "delta_csv", "eps_start",
          "eps_factor", "eps_count", "lambda_stride", "sobolev_s", "sobolev_bound"}},
        {"output", {"dir"}},
    };
    return table;
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(section))
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": unknown section [" + section + "]");
            cfg.sections_[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = known_keys().find(section);
        if (it == known_keys().end() || !it->second.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key " +
                              (section.empty() ? key : section + "." + key));
        if (cfg.sections_[section].count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " +
                              (section.empty() ? key : section + "." + key));
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key);
}

std::string Config::get(const std::string& section, const std::string& key) const {
    if (!has(section, key))
        throw ConfigError("missing key " + (section.empty() ? key : section + "." + key));
    return sections_.at(section).at(key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (trim(v.substr(pos)).size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("key " + section + "." + key + " is not a number: " + v);
    }
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
    double x = get_double(section, key);
    int i = static_cast<int>(std::lround(x));
    if (std::abs(x - i) > 1e-9)
        throw ConfigError("key " + section + "." + key + " is not an integer");
    return i;
}

int Config::get_int_or(const std::string& section, const std::string& key,
                       int fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
    std::string v = get(section, key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ConfigError("key " + section + "." + key + " has a bad list entry: " + item);
        }
    }
    return out;
}

std::string Config::digest() const {
    // FNV-1a over the canonical "section.key=value" lines
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (const auto& [sec, kv] : sections_)
        for (const auto& [k, v] : kv) {
            feed(sec);
            feed(".");
            feed(k);
            feed("=");
            feed(v);
            feed("\n");
        }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Eigen::VectorXd field_from_config(const Config& cfg, const Grid& g,
                                  const std::string& section, const std::string& prefix) {
    std::string preset = cfg.get_or(section, prefix, "constant");
    auto key = [&](const std::string& suffix) { return prefix + "_" + suffix; };

    if (preset == "csv") return load_field_csv(cfg.get(section, key("csv")), g);

    Eigen::VectorXd f(g.node_count);
    if (preset == "constant") {
        double fallback = (prefix == "lambda" || prefix == "delta") ? 0.0 : 1.0;
        f.setConstant(cfg.get_double_or(section, key("value"), fallback));
        return f;
    }
    if (preset == "bump") {
        double base = cfg.get_double_or(section, key("base"), 1.0);
        double amp = cfg.get_double_or(section, key("amp"), 0.2);
        double width = cfg.get_double_or(section, key("width"), 0.15);
        std::vector<double> center =
            cfg.has(section, key("center"))
                ? cfg.get_list(section, key("center"))
                : std::vector<double>(static_cast<std::size_t>(g.d), 0.5 * (g.lo + g.hi));
        if (static_cast<int>(center.size()) != g.d)
            throw ConfigError("key " + section + "." + key("center") + " needs " +
                              std::to_string(g.d) + " coordinates");
        for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
            auto x = g.point(idx);
            double r2 = 0.0;
            for (int a = 0; a < g.d; ++a)
                r2 += (x[a] - center[static_cast<std::size_t>(a)]) *
                      (x[a] - center[static_cast<std::size_t>(a)]);
            f[idx] = base + amp * std::exp(-r2 / (width * width));
        }
        return f;
    }
    throw ConfigError("unknown preset for " + section + "." + prefix + ": " + preset);
}

Eigen::VectorXd load_field_csv(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open field CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty field CSV: " + path);
    Eigen::VectorXd f(g.node_count);
    std::int64_t idx = 0;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (idx >= g.node_count) throw ConfigError("field CSV has too many rows: " + path);
        auto last = line.find_last_of(',');
        if (last == std::string::npos)
            throw ConfigError("field CSV row lacks columns: " + path);
        f[idx++] = std::stod(line.substr(last + 1));
    }
    if (idx != g.node_count)
        throw ConfigError("field CSV row count " + std::to_string(idx) + " != node count " +
                          std::to_string(g.node_count));
    return f;
}

void save_field_csv(const std::string& path, const Grid& g, const Eigen::VectorXd& field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write field CSV: " + path);
    for (int a = 0; a < g.d; ++a) out << "x" << (a + 1) << ",";
    out << "value\n";
    char buf[64];
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto x = g.point(idx);
        for (int a = 0; a < g.d; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", field[idx]);
        out << buf;
    }
}

Experiment build_experiment(const Config& cfg) {
    Experiment e;
    e.config = cfg;

    int d = cfg.get_int("grid", "d");
    int n = cfg.get_int("grid", "n");
    double lo = cfg.get_double_or("grid", "lo", 0.0);
    double hi = cfg.get_double_or("grid", "hi", 1.0);
    if (!cfg.has("grid", "x0")) throw ConfigError("missing key grid.x0");
    auto x0v = cfg.get_list("grid", "x0");
    if (static_cast<int>(x0v.size()) != d)
        throw ConfigError("key grid.x0 needs " + std::to_string(d) + " coordinates");
    std::array<double, 3> x0{};
    for (int a = 0; a < d; ++a) x0[static_cast<std::size_t>(a)] = x0v[static_cast<std::size_t>(a)];
    e.grid = build_grid(d, n, lo, hi, x0);

    e.material.rho = field_from_config(cfg, e.grid, "material", "rho");
    e.material.mu = field_from_config(cfg, e.grid, "material", "mu");
    e.material.lambda = field_from_config(cfg, e.grid, "material", "lambda");
    e.material.bounds.rho1 =
        cfg.get_double_or("material", "rho1", e.material.rho.maxCoeff());
    e.material.bounds.mu0 = cfg.get_double_or("material", "mu0", e.material.mu.minCoeff());
    e.material.bounds.mu1 = cfg.get_double_or("material", "mu1", e.material.mu.maxCoeff());
    e.material.bounds.lambda0 =
        cfg.get_double_or("material", "lambda0", e.material.lambda.minCoeff());
    e.material.bounds.lambda1 =
        cfg.get_double_or("material", "lambda1", e.material.lambda.maxCoeff());

    e.T = cfg.get_double_or("time", "T", 2.0);
    e.cfl = cfg.get_double_or("time", "cfl", 0.5);
    e.atoms = cfg.get_int_or("basis", "atoms", 4);
    e.margin_frac = cfg.get_double_or("basis", "margin_frac", 0.05);
    e.gamma = cfg.get_double_or("probe", "gamma", 2.0 * M_PI / (hi - lo) * 1.0001);
    e.reg_method = cfg.get_or("regularization", "method", "truncated");
    if (e.reg_method != "truncated" && e.reg_method != "tikhonov")
        throw ConfigError("regularization.method must be truncated or tikhonov");
    e.reg_param = cfg.get_double_or("regularization", "param", 1e-6);
    e.seed = static_cast<unsigned>(cfg.get_int_or("", "seed", 0));
    e.output_dir = cfg.get_or("output", "dir", "out");
    return e;
}

}  // namespace ebc
