#include "ebc/solver.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <string>

namespace ebc {

double cfl_dt_limit(const MaterialModel& m, const Grid& g, double cfl) {
    double cmax = m.pressure_speed_max(m.rho);
    if (!(cmax > 0.0))
        throw std::runtime_error("cfl_dt_limit: degenerate material (c_max = 0)");
    return cfl * g.h / cmax;
}

double Trajectory::value(int k, std::int64_t node, int c, int d) const {
    if (policy == StoragePolicy::All) return snapshots[static_cast<std::size_t>(k)][node * d + c];
    if (policy == StoragePolicy::BoundaryStencil) {
        std::int64_t s = node_to_stencil[static_cast<std::size_t>(node)];
        if (s < 0)
            throw std::runtime_error("Trajectory::value: node not stored under BoundaryStencil policy");
        return stencil_values(k, s * d + c);
    }
    throw std::runtime_error("Trajectory::value: FinalTwo policy stores no interior history");
}

void leapfrog_march(const MaterialModel& m, const Grid& g,
                    const Eigen::VectorXd& u0, const Eigen::VectorXd& v0,
                    const BoundaryField* bc, const TimeGrid& tg,
                    const std::function<void(int, const Eigen::VectorXd&)>& on_step) {
    const int d = g.d;
    const std::int64_t dof = g.node_count * d;
    if (u0.size() != dof || v0.size() != dof)
        throw std::invalid_argument("leapfrog_march: state size mismatch");
    if (bc && (bc->tg.steps != tg.steps || std::abs(bc->tg.dt - tg.dt) > 1e-12 * tg.dt))
        throw std::invalid_argument("leapfrog_march: boundary data time grid mismatch");

    const double dt = tg.dt;
    const double dt2 = dt * dt;

    Eigen::VectorXd prev = u0, cur(dof), work(dof);

    auto impose_bc = [&](Eigen::VectorXd& u, int k) {
        if (bc) {
            for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
                std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
                for (int c = 0; c < d; ++c) u[node * d + c] = bc->values(k, b * d + c);
            }
        } else {
            for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
                std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
                for (int c = 0; c < d; ++c) u[node * d + c] = 0.0;
            }
        }
    };

    impose_bc(prev, 0);
    on_step(0, prev);
    if (tg.steps == 0) return;

    // first step: u1 = u0 + dt v0 + dt^2/2 L u0
    apply_elastic_operator(m, g, prev.data(), work.data());
    cur = prev + dt * v0;
    for (std::int64_t idx = 0; idx < g.node_count; ++idx)
        for (int c = 0; c < d; ++c)
            cur[idx * d + c] += 0.5 * dt2 * work[idx * d + c] / m.rho[idx];
    impose_bc(cur, 1);
    on_step(1, cur);

    for (int k = 2; k <= tg.steps; ++k) {
        apply_elastic_operator(m, g, cur.data(), work.data());
        for (std::int64_t idx = 0; idx < g.node_count; ++idx)
            for (int c = 0; c < d; ++c) {
                std::int64_t j = idx * d + c;
                double next = 2.0 * cur[j] - prev[j] + dt2 * work[j] / m.rho[idx];
                prev[j] = next;  // prev becomes next, swap below
            }
        prev.swap(cur);
        impose_bc(cur, k);
        on_step(k, cur);
    }
}

namespace {

void build_stencil_index(const Grid& g, std::vector<std::int64_t>& nodes,
                         std::vector<std::int64_t>& node_to_slot) {
    nodes.clear();
    node_to_slot.assign(static_cast<std::size_t>(g.node_count), -1);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        int depth = g.n;
        for (int a = 0; a < g.d; ++a)
            depth = std::min({depth, c[a], g.n - 1 - c[a]});
        if (depth < kStencilDepth) {
            node_to_slot[static_cast<std::size_t>(idx)] =
                static_cast<std::int64_t>(nodes.size());
            nodes.push_back(idx);
        }
    }
}

Trajectory record_march(const MaterialModel& m, const Grid& g, const Eigen::VectorXd& u0,
                        const Eigen::VectorXd& v0, const BoundaryField* bc,
                        const TimeGrid& tg, const SolveOptions& opt,
                        Eigen::VectorXd* first_step_state = nullptr) {
    Trajectory traj;
    traj.policy = opt.policy;
    traj.tg = tg;
    const int d = g.d;

    if (opt.policy == StoragePolicy::All) {
        traj.snapshots.reserve(static_cast<std::size_t>(tg.steps) + 1);
    } else if (opt.policy == StoragePolicy::BoundaryStencil) {
        build_stencil_index(g, traj.stencil_nodes, traj.node_to_stencil);
        traj.stencil_values.resize(tg.steps + 1,
                                   static_cast<Eigen::Index>(traj.stencil_nodes.size()) * d);
    }

    Eigen::VectorXd last, second_last;
    leapfrog_march(m, g, u0, v0, bc, tg, [&](int k, const Eigen::VectorXd& u) {
        if (opt.policy == StoragePolicy::All) traj.snapshots.push_back(u);
        else if (opt.policy == StoragePolicy::BoundaryStencil) {
            for (std::size_t s = 0; s < traj.stencil_nodes.size(); ++s) {
                std::int64_t node = traj.stencil_nodes[s];
                for (int c = 0; c < d; ++c)
                    traj.stencil_values(k, static_cast<Eigen::Index>(s) * d + c) =
                        u[node * d + c];
            }
        }
        if (k == 1 && first_step_state) *first_step_state = u;
        if (k == tg.steps) last = u;
        if (k == tg.steps - 1) second_last = u;
    });
    if (tg.steps == 0) second_last = last;
    traj.final_state = last;
    traj.penultimate = second_last;
    return traj;
}

}  // namespace

Trajectory solve_ibvp(const MaterialModel& m, const Grid& g, const BoundaryField& f,
                      const SolveOptions& opt) {
    double dt_max = cfl_dt_limit(m, g, opt.cfl);
    if (f.tg.dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument("solve_ibvp: CFL violation, need dt <= " +
                                    std::to_string(dt_max) + " got " + std::to_string(f.tg.dt));
    if (f.values.rows() > 0 && f.values.row(0).cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("solve_ibvp: incompatible boundary data, f(0,.) != 0");

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count * g.d);
    return record_march(m, g, zero, zero, &f, f.tg, opt);
}

Trajectory solve_dual(const MaterialModel& m, const Grid& g, const Eigen::VectorXd& phi,
                      const TimeGrid& tg, const SolveOptions& opt) {
    double dt_max = cfl_dt_limit(m, g, opt.cfl);
    if (tg.dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument("solve_dual: CFL violation, need dt <= " +
                                    std::to_string(dt_max));
    double phi_max = phi.cwiseAbs().maxCoeff();
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
        for (int c = 0; c < g.d; ++c)
            if (std::abs(phi[node * g.d + c]) > 1e-12 * phi_max)
                throw std::invalid_argument(
                    "solve_dual: terminal velocity must vanish on the boundary");
    }

    // time reversal: q(s) = p(T - s) solves the same system with q(0) = 0,
    // dq/dt(0) = -phi
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count * g.d);
    Eigen::VectorXd q1;
    Trajectory q = record_march(m, g, zero, -phi, nullptr, tg, opt, &q1);

    Trajectory p;
    p.policy = q.policy;
    p.tg = q.tg;
    if (q.policy == StoragePolicy::All) {
        p.snapshots.assign(q.snapshots.rbegin(), q.snapshots.rend());
    } else if (q.policy == StoragePolicy::BoundaryStencil) {
        p.stencil_nodes = q.stencil_nodes;
        p.node_to_stencil = q.node_to_stencil;
        p.stencil_values = q.stencil_values.colwise().reverse();
    }
    // p(T) = q(0) = 0, p(T - dt) = q(dt)
    p.final_state = Eigen::VectorXd::Zero(g.node_count * g.d);
    p.penultimate = q1;
    return p;
}

template <typename Scalar>
void traction_row(const MaterialModel& m, const Grid& g, const Scalar* u, Scalar* out) {
    const int d = g.d;
    const double inv_2h = 1.0 / (2.0 * g.h);
    Scalar grad[3][3];  // grad[j][i] = d_j u_i

    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        const std::int64_t idx = g.boundary_nodes[static_cast<std::size_t>(b)];
        const auto cidx = g.coords(idx);
        for (int a = 0; a < d; ++a) {
            const std::int64_t s = g.stride[a];
            for (int i = 0; i < d; ++i) {
                if (cidx[a] == 0) {
                    grad[a][i] = (-3.0 * u[idx * d + i] + 4.0 * u[(idx + s) * d + i] -
                                  u[(idx + 2 * s) * d + i]) * inv_2h;
                } else if (cidx[a] == g.n - 1) {
                    grad[a][i] = (3.0 * u[idx * d + i] - 4.0 * u[(idx - s) * d + i] +
                                  u[(idx - 2 * s) * d + i]) * inv_2h;
                } else {
                    grad[a][i] = (u[(idx + s) * d + i] - u[(idx - s) * d + i]) * inv_2h;
                }
            }
        }
        Scalar div{};
        for (int j = 0; j < d; ++j) div += grad[j][j];

        const int face = g.boundary_face[static_cast<std::size_t>(b)];
        const int a = Grid::face_axis(face);
        const double sgn = Grid::face_sign(face);
        const double mu = m.mu[idx];
        const double la = m.lambda[idx];
        for (int i = 0; i < d; ++i) {
            Scalar t = mu * (grad[a][i] + grad[i][a]);
            if (i == a) t += la * div;
            out[b * d + i] = sgn * t;
        }
    }
}

template void traction_row<double>(const MaterialModel&, const Grid&, const double*, double*);
template void traction_row<std::complex<double>>(const MaterialModel&, const Grid&,
                                                 const std::complex<double>*,
                                                 std::complex<double>*);

BoundaryField traction(const Trajectory& traj, const MaterialModel& m, const Grid& g) {
    if (traj.policy == StoragePolicy::FinalTwo)
        throw std::runtime_error("traction: FinalTwo storage does not keep boundary stencils");
    BoundaryField out(g, traj.tg);
    const int d = g.d;

    if (traj.policy == StoragePolicy::All) {
        for (int k = 0; k <= traj.tg.steps; ++k)
            traction_row(m, g, traj.snapshots[static_cast<std::size_t>(k)].data(),
                         out.values.row(k).data());
        return out;
    }

    // BoundaryStencil: expand each stored row into a sparse state vector once
    Eigen::VectorXd state = Eigen::VectorXd::Zero(g.node_count * d);
    for (int k = 0; k <= traj.tg.steps; ++k) {
        for (std::size_t s = 0; s < traj.stencil_nodes.size(); ++s) {
            std::int64_t node = traj.stencil_nodes[s];
            for (int c = 0; c < d; ++c)
                state[node * d + c] = traj.stencil_values(k, static_cast<Eigen::Index>(s) * d + c);
        }
        traction_row(m, g, state.data(), out.values.row(k).data());
    }
    return out;
}

Eigen::VectorXd volume_weights(const Grid& g) {
    Eigen::VectorXd w(g.node_count);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) w[idx] = g.volume_weight(idx);
    return w;
}

double state_l2(const Grid& g, const Eigen::VectorXd& u) {
    Eigen::VectorXd w = volume_weights(g);
    double acc = 0.0;
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        double dot = 0.0;
        for (int c = 0; c < g.d; ++c) dot += u[idx * g.d + c] * u[idx * g.d + c];
        acc += w[idx] * dot;
    }
    return std::sqrt(acc);
}

namespace {

// full Jacobian at a node: centered interior, one-sided second order at faces
inline void jacobian_at(const Grid& g, const double* u, std::int64_t idx,
                        const std::array<int, 3>& c, double grad[3][3]) {
    const int d = g.d;
    const double inv_2h = 1.0 / (2.0 * g.h);
    for (int a = 0; a < d; ++a) {
        const std::int64_t s = g.stride[a];
        for (int i = 0; i < d; ++i) {
            if (c[a] == 0)
                grad[a][i] = (-3.0 * u[idx * d + i] + 4.0 * u[(idx + s) * d + i] -
                              u[(idx + 2 * s) * d + i]) * inv_2h;
            else if (c[a] == g.n - 1)
                grad[a][i] = (3.0 * u[idx * d + i] - 4.0 * u[(idx - s) * d + i] +
                              u[(idx - 2 * s) * d + i]) * inv_2h;
            else
                grad[a][i] = (u[(idx + s) * d + i] - u[(idx - s) * d + i]) * inv_2h;
        }
    }
}

}  // namespace

double state_h1(const Grid& g, const Eigen::VectorXd& u) {
    Eigen::VectorXd w = volume_weights(g);
    double acc = 0.0;
    double grad[3][3];
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        jacobian_at(g, u.data(), idx, c, grad);
        double s = 0.0;
        for (int a = 0; a < g.d; ++a)
            for (int i = 0; i < g.d; ++i) s += grad[a][i] * grad[a][i];
        acc += w[idx] * s;
    }
    return std::sqrt(acc);
}

EnergySeries energy(const Trajectory& traj, const MaterialModel& m, const Grid& g) {
    if (traj.policy != StoragePolicy::All)
        throw std::runtime_error("energy: needs StoragePolicy::All");
    const int N = static_cast<int>(traj.snapshots.size());
    if (N < 3) throw std::runtime_error("energy: needs at least 3 snapshots");

    const int d = g.d;
    const double dt = traj.tg.dt;
    const double cellw = std::pow(g.h, d);
    EnergySeries series;
    series.values.resize(N);

    // strain part via the scheme's own stress divergence: the half-node
    // coefficient products are the midpoint quadrature of the integrand, and
    // summation by parts gives -<Au, u> for homogeneous Dirichlet states
    Eigen::VectorXd ut(g.node_count * d), Au(g.node_count * d);
    for (int k = 0; k < N; ++k) {
        if (k == 0)
            ut = (-3.0 * traj.snapshots[0] + 4.0 * traj.snapshots[1] - traj.snapshots[2]) /
                 (2.0 * dt);
        else if (k == N - 1)
            ut = (3.0 * traj.snapshots[k] - 4.0 * traj.snapshots[k - 1] +
                  traj.snapshots[k - 2]) / (2.0 * dt);
        else
            ut = (traj.snapshots[k + 1] - traj.snapshots[k - 1]) / (2.0 * dt);

        const Eigen::VectorXd& u = traj.snapshots[static_cast<std::size_t>(k)];
        apply_elastic_operator(m, g, u.data(), Au.data());
        double kin = 0.0;
        for (std::int64_t idx = 0; idx < g.node_count; ++idx)
            for (int c = 0; c < d; ++c)
                kin += m.rho[idx] * ut[idx * d + c] * ut[idx * d + c];
        series.values[k] = cellw * (kin - Au.dot(u));
    }

    double e0 = series.values[0];
    double drift = 0.0;
    if (e0 != 0.0)
        for (int k = 0; k < N; ++k)
            drift = std::max(drift, std::abs(series.values[k] - e0) / std::abs(e0));
    series.max_relative_drift = drift;
    return series;
}

}  // namespace ebc
