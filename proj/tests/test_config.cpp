#include "doctest.h"
#include "ebc/config.hpp"
#include "ebc/artifacts.hpp"

#include <cstdio>
#include <fstream>

using namespace ebc;

namespace {

const char* kMinimal = R"(
seed = 7
[grid]
d = 2
n = 12
x0 = -1, -1
[material]
rho = constant
rho_value = 1.0
[time]
T = 0.5
)";

}  // namespace

TEST_CASE("minimal configuration parses and builds") {
    Config cfg = Config::parse_string(kMinimal);
    Experiment e = build_experiment(cfg);
    CHECK(e.grid.n == 12);
    CHECK(e.material.rho[0] == 1.0);
    CHECK(e.T == 0.5);
    CHECK(e.seed == 7);
}

TEST_CASE("unknown keys and sections are rejected with names") {
    CHECK_THROWS_WITH_AS(Config::parse_string("[grid]\nd = 2\nwidth = 3\n"),
                         doctest::Contains("grid.width"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[gird]\nd = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[grid]\nd = 2\nd = 3\n"), ConfigError);
}

TEST_CASE("missing x0 is named in the error") {
    const char* text = "[grid]\nd = 2\nn = 12\n";
    Config cfg = Config::parse_string(text);
    CHECK_THROWS_WITH_AS(build_experiment(cfg), doctest::Contains("grid.x0"), ConfigError);
}

TEST_CASE("digest is stable under reordering and sensitive to values") {
    Config a = Config::parse_string("[grid]\nd = 2\nn = 12\nx0 = -1,-1\n");
    Config b = Config::parse_string("[grid]\nn = 12\nd = 2\nx0 = -1,-1\n");
    Config c = Config::parse_string("[grid]\nd = 2\nn = 16\nx0 = -1,-1\n");
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
}

TEST_CASE("bump preset and bounds defaults") {
    const char* text = R"(
[grid]
d = 2
n = 17
x0 = -1, -1
[material]
rho = bump
rho_base = 1.0
rho_amp = 0.5
rho_width = 0.2
rho_center = 0.5, 0.5
)";
    Experiment e = build_experiment(Config::parse_string(text));
    CHECK(e.material.rho.maxCoeff() == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(e.material.bounds.rho1 == doctest::Approx(e.material.rho.maxCoeff()));
    CHECK(validate_material(e.material, e.grid).admissible());
}

TEST_CASE("field CSV round trip") {
    Grid g = build_grid(2, 9, 0.0, 1.0, {-1.0, -1.0, 0.0});
    Eigen::VectorXd f(g.node_count);
    for (std::int64_t i = 0; i < g.node_count; ++i) f[i] = std::sin(0.1 * i) + 2.0;
    std::string path = "/tmp/ebc_test_field.csv";
    save_field_csv(path, g, f);
    Eigen::VectorXd f2 = load_field_csv(path, g);
    CHECK((f - f2).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("csv writer emits header and reproducible rows") {
    std::string path = "/tmp/ebc_test_table.csv";
    {
        CsvWriter w(path, {"a", "b"});
        w.row({1.0, 0.1});
        w.row({2.0, 1.0 / 3.0});
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,b");
    std::getline(in, line);
    CHECK(line == "1,0.10000000000000001");
    std::remove(path.c_str());
}
