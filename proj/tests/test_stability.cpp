#include "doctest.h"
#include "ebc/stability.hpp"

#include <random>

using namespace ebc;

namespace {

Grid unit_grid(int n) { return build_grid(2, n, 0.0, 1.0, {-1.0, -1.0, 0.0}); }

Eigen::VectorXd collar_bump(const Grid& g, double w, double cx, double cy) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(g.node_count);
    for (std::int64_t i = 0; i < g.node_count; ++i) {
        auto c = g.coords(i);
        int depth = g.n;
        for (int a = 0; a < g.d; ++a) depth = std::min({depth, c[a], g.n - 1 - c[a]});
        if (depth <= 2) continue;
        auto x = g.point(i);
        double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
        f[i] = std::exp(-r2 / (w * w));
    }
    return f;
}

}  // namespace

TEST_CASE("operator norms by power iteration agree with dense decompositions") {
    // spectrum with a clear dominant eigenvalue (power iteration needs a gap)
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-0.05, 0.05);
    Eigen::VectorXd diag(9);
    diag << 3.0, 1.4, -1.1, 0.9, 0.5, -0.4, 0.2, 0.1, 0.0;
    Eigen::MatrixXd S = diag.asDiagonal();
    for (int r = 0; r < 9; ++r)
        for (int c = r + 1; c < 9; ++c) S(r, c) = S(c, r) = U(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    double want = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(symmetric_operator_norm(S) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("dtn distance vanishes on identical media and adds up") {
    Grid g = unit_grid(10);
    MaterialModel m = constant_material(g, 1.0, 1.0, 0.0);
    TimeGrid tg = make_time_grid(1.0, cfl_dt_limit(m, g, 0.5));
    BoundaryBasis basis = make_boundary_basis(g, make_temporal_atoms(tg, 2));

    OperatorSet base = assemble_operator_set(m, g, basis, {}, 1, 0.5, 2);
    Eigen::MatrixXd h1 = basis.h1_gram();
    CHECK(dtn_distance(base, base, h1) == 0.0);

    MaterialModel mp = m;
    mp.rho = m.rho.array() + 0.05;
    mp.bounds.rho1 = 1.05;
    OperatorSet pert = assemble_operator_set(mp, g, basis, {}, 1, 0.5, 2);
    double e1 = dtn_distance(base, pert, h1);
    CHECK(e1 > 0.0);
    // triangle inequality against an intermediate medium
    MaterialModel mh = m;
    mh.rho = m.rho.array() + 0.025;
    mh.bounds.rho1 = 1.025;
    OperatorSet half = assemble_operator_set(mh, g, basis, {}, 1, 0.5, 2);
    double ab = dtn_distance(base, half, h1);
    double bc = dtn_distance(half, pert, h1);
    CHECK(e1 <= ab + bc + 1e-10);
}

TEST_CASE("enclosing radius and collar checks") {
    Grid g = unit_grid(12);
    CHECK(enclosing_radius(g) == doctest::Approx(std::sqrt(2.0)));
    Eigen::VectorXd ok = collar_bump(g, 0.1, 0.5, 0.5);
    CHECK(collar_condition(g, ok));
    Eigen::VectorXd bad = ok;
    bad[g.boundary_nodes[3]] = 0.5;
    CHECK(!collar_condition(g, bad));
}

TEST_CASE("gamma formula and out-of-regime threshold arithmetic") {
    // E = e^{-10}, R = 1 gives gamma = 2 exactly
    double R = 1.0, E = std::exp(-10.0);
    double gamma = -std::log(E) / (4.0 * R + 1.0);
    CHECK(gamma == doctest::Approx(2.0).epsilon(1e-14));
    // threshold: out of regime iff E >= e^{-8R-2}, equivalent to gamma <= 2
    CHECK(E >= std::exp(-8.0 * R - 2.0));
    double E2 = std::exp(-10.0 - 1e-6);
    CHECK(!(E2 >= std::exp(-8.0 * R - 2.0)));
}

TEST_CASE("log-log slope fit recovers exact power laws") {
    std::vector<double> x, y;
    for (int i = 1; i <= 5; ++i) {
        double e = std::pow(10.0, -i);
        x.push_back(e);
        y.push_back(3.0 * e);  // slope 1
    }
    CHECK(loglog_slope(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    for (auto& v : y) v = v * v;
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sobolev norm: zero field, monotone in s, gaussian reference") {
    Grid g = unit_grid(64);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count);
    CHECK(sobolev_class_check(zero, g, 0.0, 1.0).norm == 0.0);

    double a = 1.0, w = 0.12;
    Eigen::VectorXd gauss = collar_bump(g, w, 0.5, 0.5) * a;
    auto s0 = sobolev_class_check(gauss, g, 0.0, 1e9);
    auto s1 = sobolev_class_check(gauss, g, 1.0, 1e9);
    CHECK(s1.norm >= s0.norm);

    // closed-form H^2 norm of a Gaussian in 2d:
    // |F|^2 = a^2 pi^2 w^4 e^{-w^2 |xi|^2 / 2}, alpha = w^2/2,
    // norm^2 = (2pi)^-2 a^2 pi^2 w^4 * pi (1/alpha + 2/alpha^2 + 2/alpha^3)
    double alpha = w * w / 2.0;
    double want2 = a * a * M_PI * w * w * w * w / 4.0 *
                   (1.0 / alpha + 2.0 / (alpha * alpha) +
                    2.0 / (alpha * alpha * alpha));
    CHECK(s0.norm == doctest::Approx(std::sqrt(want2)).epsilon(0.05));

    auto bounded = sobolev_class_check(gauss, g, 0.0, std::sqrt(want2) * 1.1);
    CHECK(bounded.holds);
    auto unbounded = sobolev_class_check(gauss, g, 0.0, std::sqrt(want2) * 0.9);
    CHECK(!unbounded.holds);
}

TEST_CASE("perturbation experiment: linear response and co-decrease") {
    Grid g = unit_grid(16);
    TimeGrid tg = make_time_grid(1.6, cfl_dt_limit(constant_material(g, 1.0, 1.0, 0.0),
                                                   g, 0.5), 2);
    BoundaryBasis basis = make_boundary_basis(g, make_temporal_atoms(tg, 2, 0.05, 2));

    PerturbationExperiment pe;
    pe.rho_base = Eigen::VectorXd::Ones(g.node_count);
    pe.delta_rho = collar_bump(g, 0.14, 0.45, 0.55);
    pe.epsilons = {1e-1, 1e-2, 1e-3};
    pe.bounds = MaterialBounds{1.2, 1.0, 1.0, 0.0, 0.0};

    std::vector<Eigen::VectorXd> xis;
    xis.push_back(Eigen::VectorXd::Zero(2));
    Eigen::VectorXd xi1(2);
    xi1 << 2.0 * M_PI, 0.0;
    xis.push_back(xi1);

    StabilityOptions opt;
    opt.threads = 2;
    opt.lambda_stride = 2;
    StabilityReport rep = run_perturbation_experiment(g, basis, pe, xis, opt);

    REQUIRE(rep.records.size() == 3);
    // E decreases with epsilon and responds linearly
    CHECK(rep.records[0].E > rep.records[1].E);
    CHECK(rep.records[1].E > rep.records[2].E);
    double ratio = rep.records[0].E / rep.records[1].E;
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);

    // slopes near 1 for both routes
    for (std::size_t q = 0; q < xis.size(); ++q) {
        CHECK(rep.slope_oracle[q] > 0.8);
        CHECK(rep.slope_oracle[q] < 1.2);
        CHECK(rep.slope_op[q] > 0.7);
        CHECK(rep.slope_op[q] < 1.3);
    }

    // log-stability pair co-decreases
    for (std::size_t i = 1; i < rep.records.size(); ++i) {
        CHECK(rep.records[i].l2_diff < rep.records[i - 1].l2_diff);
        CHECK(rep.records[i].log_bound < rep.records[i - 1].log_bound);
    }

    // bound ratio stays finite
    for (double b : rep.bound_ratio_max) CHECK(std::isfinite(b));
}
