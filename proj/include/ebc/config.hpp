#ifndef EBC_CONFIG_HPP
#define EBC_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "ebc/grid.hpp"
#include "ebc/material.hpp"

namespace ebc {

// Parse error carrying the offending section.key (and line when known).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Flat-sectioned key-value configuration with strict unknown-key rejection.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    int get_int(const std::string& section, const std::string& key) const;
    int get_int_or(const std::string& section, const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

    // canonical digest of the parsed content (order-independent)
    std::string digest() const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string origin_;
};

// Experiment assembled from the configuration: grid, material, and the
// numeric blocks the subcommands share.
struct Experiment {
    Grid grid;
    MaterialModel material;
    double T = 0.0;
    double cfl = 0.5;
    int atoms = 4;
    double margin_frac = 0.05;
    double gamma = 0.0;
    std::string reg_method = "truncated";
    double reg_param = 1e-6;
    unsigned seed = 0;
    std::string output_dir = "out";
    Config config;
};

Experiment build_experiment(const Config& cfg);

// material field presets named in the configuration
Eigen::VectorXd field_from_config(const Config& cfg, const Grid& g,
                                  const std::string& section, const std::string& prefix);

// node-ordered CSV with header x1,...,xd,value
Eigen::VectorXd load_field_csv(const std::string& path, const Grid& g);
void save_field_csv(const std::string& path, const Grid& g, const Eigen::VectorXd& field);

}  // namespace ebc

#endif
