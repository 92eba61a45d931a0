#include "doctest.h"
#include "ebc/boundary_operator.hpp"
#include "ebc/pipeline.hpp"
#include "ebc/cgo.hpp"
#include "ebc/static_solver.hpp"
#include "identity_support.hpp"

#include <random>

using namespace ebc;

namespace {

struct Fixture {
    Grid g;
    MaterialModel m;
    TimeGrid tg;
    BoundaryBasis basis;

    Fixture(int n, double T, int K, double rho_amp = 0.0)
        : g(build_grid(2, n, 0.0, 1.0, {-1.0, -1.0, 0.0})),
          m(constant_material(g, 1.0, 1.0, 0.0)) {
        if (rho_amp != 0.0) {
            for (std::int64_t i = 0; i < g.node_count; ++i) {
                auto x = g.point(i);
                double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
                m.rho[i] = 1.0 + rho_amp * std::exp(-r2 / 0.0225);
            }
            m.bounds.rho1 = 1.0 + rho_amp;
        }
        tg = make_time_grid(T, cfl_dt_limit(m, g, 0.5));
        basis = make_boundary_basis(g, make_temporal_atoms(tg, K));
    }
};

}  // namespace

TEST_CASE("adjoint satisfies the weighted pairing identity and is involutive") {
    BoundaryOperator op;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(0.1, 2.0);
    op.matrix.resize(7, 4);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 4; ++c) op.matrix(r, c) = U(rng) - 1.0;
    op.w_in.resize(4);
    op.w_out.resize(7);
    for (int i = 0; i < 4; ++i) op.w_in[i] = U(rng);
    for (int i = 0; i < 7; ++i) op.w_out[i] = U(rng);

    BoundaryOperator adj = adjoint(op);
    Eigen::VectorXd f(4), h(7);
    for (int i = 0; i < 4; ++i) f[i] = U(rng) - 1.0;
    for (int i = 0; i < 7; ++i) h[i] = U(rng) - 1.0;
    double lhs = (op.matrix * f).cwiseProduct(op.w_out).dot(h);
    double rhs = f.cwiseProduct(op.w_in).dot(adj.matrix * h);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    BoundaryOperator addj = adjoint(adj);
    CHECK((addj.matrix - op.matrix).cwiseAbs().maxCoeff() < 1e-12);

    // identity with equal weights is self-adjoint
    BoundaryOperator id;
    id.matrix = Eigen::MatrixXd::Identity(3, 3);
    id.w_in = id.w_out = Eigen::VectorXd::Constant(3, 0.7);
    CHECK((adjoint(id).matrix - id.matrix).cwiseAbs().maxCoeff() < 1e-14);

    id.w_in[1] = 0.0;
    CHECK_THROWS_AS(adjoint(id), std::invalid_argument);
}

TEST_CASE("dtn columns: zero source, linearity, causality across horizons") {
    Fixture fx(10, 1.0, 2);
    DtnOptions opt;
    opt.threads = 2;
    BoundaryOperator lamT = assemble_dtn(fx.m, fx.g, fx.basis, 1.0, opt);
    BoundaryOperator lam2T = assemble_dtn(fx.m, fx.g, fx.basis, 2.0, opt);

    // linearity: matrix action is linear by construction; check the zero map
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(fx.basis.size());
    CHECK((lamT.matrix * zero).cwiseAbs().maxCoeff() == 0.0);

    // causality: the 2T assembly restricted to the (0,T) rows equals the T
    // assembly, exactly (same recursion, same sources)
    std::int64_t rowsT = lamT.matrix.rows();
    double diff = (lam2T.matrix.topRows(rowsT) - lamT.matrix).cwiseAbs().maxCoeff();
    CHECK(diff == 0.0);
}

TEST_CASE("explicit connecting operator matches the streaming assembly") {
    Fixture fx(9, 1.0, 2);
    DtnOptions opt;
    opt.threads = 1;
    BoundaryOperator lamT = assemble_dtn(fx.m, fx.g, fx.basis, 1.0, opt);
    BoundaryOperator lam2T = assemble_dtn(fx.m, fx.g, fx.basis, 2.0, opt);
    ConnectingOperator explicit_route = connecting_operator(lamT, lam2T, fx.basis);

    AssemblyRequest req;
    req.threads = 1;
    Assembly streamed = assemble_all(fx.m, fx.g, fx.basis, req);

    double scale = explicit_route.op.matrix.cwiseAbs().maxCoeff();
    CHECK((explicit_route.op.matrix - streamed.connecting.op.matrix).cwiseAbs().maxCoeff() <
          1e-10 * scale);
    CHECK(explicit_route.asymmetry_defect ==
          doctest::Approx(streamed.connecting.asymmetry_defect).epsilon(1e-6));
}

TEST_CASE("probe operator through the explicit route matches the pipeline") {
    Fixture fx(9, 1.0, 2);
    Eigen::VectorXd xi(2);
    xi << 2.0 * M_PI, 0.0;
    CgoProbe probe = make_probe(xi, fx.g, fx.m);

    DtnOptions opt;
    opt.threads = 1;
    BoundaryOperator lamT = assemble_dtn(fx.m, fx.g, fx.basis, 1.0, opt);
    Eigen::VectorXcd p_explicit = apply_probe_operator(lamT, fx.basis, probe.phi_traces);

    AssemblyRequest req;
    req.threads = 1;
    req.probes = {probe.phi_traces};
    Assembly a = assemble_all(fx.m, fx.g, fx.basis, req);
    Eigen::VectorXcd p_stream = a.probe_pairings.row(0).transpose();

    CHECK((p_explicit - p_stream).cwiseAbs().maxCoeff() <
          1e-10 * p_stream.cwiseAbs().maxCoeff());
}

TEST_CASE("zero probe gives the zero functional") {
    Fixture fx(9, 1.0, 2);
    DtnOptions opt;
    BoundaryOperator lamT = assemble_dtn(fx.m, fx.g, fx.basis, 1.0, opt);
    ProbeTraces traces;
    traces.t0 = Eigen::VectorXcd::Zero(fx.g.boundary_count() * 2);
    traces.t1 = Eigen::VectorXcd::Zero(fx.g.boundary_count() * 2);
    Eigen::VectorXcd p = apply_probe_operator(lamT, fx.basis, traces);
    CHECK(p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("connecting operator is PSD and pairs states to a few percent") {
    Fixture fx(16, 2.0, 3, 0.2);
    AssemblyRequest req;
    req.threads = 2;
    req.tracked = {11, 73, 160, 294};
    Assembly a = assemble_all(fx.m, fx.g, fx.basis, req);

    CHECK(a.connecting.asymmetry_defect < 0.08);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.connecting.op.matrix);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());

    // <f, J f> = ||u_f(T)||^2 in rho measure
    for (int t = 0; t < 4; ++t) {
        double lhs = a.connecting.op.matrix(req.tracked[t], req.tracked[t]);
        double rhs = volume_rho_pairing(fx.m, fx.g, a.tracked_states[t],
                                        a.tracked_states[t]);
        CHECK(lhs == doctest::Approx(rhs).epsilon(0.10));
        CHECK(lhs >= 0.0);
    }
}

TEST_CASE("smooth-source identity converges under refinement") {
    // Blagoveshchenskii residual with fixed smooth separable sources,
    // measured on two grids one refinement apart
    auto residual = [](int n) {
        Grid g = build_grid(2, n, 0.0, 1.0, {-1.0, -1.0, 0.0});
        MaterialModel m = constant_material(g, 1.0, 1.0, 0.0);
        for (std::int64_t i = 0; i < g.node_count; ++i) {
            auto x = g.point(i);
            double r2 = (x[0] - 0.45) * (x[0] - 0.45) + (x[1] - 0.6) * (x[1] - 0.6);
            m.rho[i] = 1.0 + 0.2 * std::exp(-r2 / 0.04);
        }
        m.bounds.rho1 = 1.2;
        return testsupport::smooth_pair_identity(m, g, 1.6).rel();
    };

    double r1 = residual(25);
    double r2 = residual(49);
    CHECK(r1 < 0.05);
    double order = std::log2(r1 / r2);
    CHECK(order >= 1.0);
}

TEST_CASE("3d smooth-source identity holds and converges") {
    auto residual = [](int n) {
        Grid g = build_grid(3, n, 0.0, 1.0, {-1.0, -1.0, -1.0});
        MaterialModel m = constant_material(g, 1.0, 1.0, 0.0);
        for (std::int64_t i = 0; i < g.node_count; ++i) {
            auto x = g.point(i);
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
            m.rho[i] = 1.0 + 0.2 * std::exp(-r2 / 0.04);
        }
        m.bounds.rho1 = 1.2;
        return testsupport::smooth_pair_identity(m, g, 1.8).rel();
    };
    double r1 = residual(9);
    double r2 = residual(17);
    CHECK(r2 < 0.06);
    CHECK(r1 / r2 > 2.0);
}

TEST_CASE("smooth-source identity holds for variable Lame fields") {
    Grid g = build_grid(2, 25, 0.0, 1.0, {-1.0, -1.0, 0.0});
    MaterialModel m = constant_material(g, 1.0, 1.0, 0.0);
    for (std::int64_t i = 0; i < g.node_count; ++i) {
        auto x = g.point(i);
        m.mu[i] = 1.0 + 0.25 * x[0];
        m.lambda[i] = 0.3 * (1.0 - x[1]);
        double r2 = (x[0] - 0.55) * (x[0] - 0.55) + (x[1] - 0.45) * (x[1] - 0.45);
        m.rho[i] = 1.0 + 0.15 * std::exp(-r2 / 0.05);
    }
    m.bounds = MaterialBounds{1.15, 1.0, 1.25, 0.0, 0.3};
    REQUIRE(validate_material(m, g).admissible());
    double rel = testsupport::smooth_pair_identity(m, g, 1.6).rel();
    CHECK(rel < 0.06);
}
