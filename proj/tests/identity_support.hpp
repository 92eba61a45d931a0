#ifndef EBC_TESTS_IDENTITY_SUPPORT_HPP
#define EBC_TESTS_IDENTITY_SUPPORT_HPP

// Sample-level Blagoveshchenskii residual with smooth separable boundary
// sources; shared between the unit tests and the acceptance suite.

#include "ebc/boundary_operator.hpp"
#include "ebc/static_solver.hpp"

namespace ebc::testsupport {

struct SmoothPairResult {
    double lhs = 0.0;  // <f, J h> through the boundary operators
    double rhs = 0.0;  // (u_f(T), u_h(T)) in the rho-weighted volume pairing
    double rel() const { return std::abs(lhs - rhs) / std::abs(rhs); }
};

// residual of the connecting identity for two fixed smooth sources
// (spatial Gaussian bumps centered on the boundary, C2 time bump)
inline SmoothPairResult smooth_pair_identity(const MaterialModel& m, const Grid& g,
                                             double T, double cfl = 0.4) {
    const int d = g.d;
    TimeGrid tg = make_time_grid(T, cfl_dt_limit(m, g, cfl));
    TimeGrid tg2{tg.dt, 2 * tg.steps};
    ElastostaticSolver statics(m, g);

    auto source = [&](std::array<double, 3> center, int comp) {
        Eigen::VectorXd prof = Eigen::VectorXd::Zero(g.boundary_count() * d);
        for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
            auto x = g.point(g.boundary_nodes[static_cast<std::size_t>(b)]);
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
            prof[b * d + comp] = std::exp(-r2 / 0.08);
        }
        return prof;
    };
    auto beta = [&](int k) { return c2_bump(double(k) / tg.steps * 2.4 - 0.1); };

    auto scattered = [&](const Eigen::VectorXd& prof) {
        BoundaryField src(g, tg2);
        for (int k = 0; k <= tg2.steps; ++k)
            for (Eigen::Index j = 0; j < prof.size(); ++j)
                src.values(k, j) = beta(k) * prof[j];
        Eigen::VectorXd kappa(prof.size());
        Eigen::VectorXd st = statics.solve(prof);
        traction_row(m, g, st.data(), kappa.data());
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count * d);
        BoundaryField R(g, tg2);
        Eigen::VectorXd row(prof.size());
        Eigen::VectorXd uT;
        leapfrog_march(m, g, zero, zero, &src, tg2, [&](int k, const Eigen::VectorXd& u) {
            traction_row(m, g, u.data(), row.data());
            R.values.row(k) = row - beta(k) * kappa;
            if (k == tg.steps) uT = u;
        });
        return std::make_pair(R, uT);
    };

    Eigen::VectorXd prof_f = source({0.3, 0.0, 0.4}, 0);
    Eigen::VectorXd prof_h = source({1.0, 0.55, 0.6}, 1);
    auto [Rf, uf] = scattered(prof_f);
    auto [Rh, uh] = scattered(prof_h);

    BoundaryField f(g, tg), h(g, tg);
    for (int k = 0; k <= tg.steps; ++k)
        for (Eigen::Index j = 0; j < prof_f.size(); ++j) {
            f.values(k, j) = beta(k) * prof_f[j];
            h.values(k, j) = beta(k) * prof_h[j];
        }

    BoundaryField RfT;
    RfT.tg = tg;
    RfT.values = Rf.values.topRows(tg.steps + 1);

    SmoothPairResult out;
    out.lhs = boundary_inner(g, RfT, half_window_integral(extend_by_zero(h))) -
              boundary_inner(g, f, half_window_integral(Rh));
    out.rhs = volume_rho_pairing(m, g, uf, uh);
    return out;
}

inline MaterialModel bump_density_material(const Grid& g, double amp = 0.2,
                                           double width = 0.15) {
    MaterialModel m = constant_material(g, 1.0, 1.0, 0.0);
    for (std::int64_t i = 0; i < g.node_count; ++i) {
        auto x = g.point(i);
        double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
        m.rho[i] = 1.0 + amp * std::exp(-r2 / (width * width));
    }
    m.bounds.rho1 = 1.0 + amp;
    return m;
}

}  // namespace ebc::testsupport

#endif
