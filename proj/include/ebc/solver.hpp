#ifndef EBC_SOLVER_HPP
#define EBC_SOLVER_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "ebc/boundary_field.hpp"
#include "ebc/elastic_operator.hpp"
#include "ebc/grid.hpp"
#include "ebc/material.hpp"

namespace ebc {

enum class StoragePolicy { All, BoundaryStencil, FinalTwo };

// depth of boundary-adjacent layers kept by the BoundaryStencil policy;
// enough for one-sided second-order normal derivatives
inline constexpr int kStencilDepth = 3;

struct Trajectory {
    StoragePolicy policy = StoragePolicy::All;
    TimeGrid tg;

    std::vector<Eigen::VectorXd> snapshots;  // policy All: steps+1 states

    std::vector<std::int64_t> stencil_nodes;      // policy BoundaryStencil
    std::vector<std::int64_t> node_to_stencil;    // -1 when not stored
    Eigen::MatrixXd stencil_values;               // (steps+1) x (#stencil * d)

    Eigen::VectorXd final_state;   // u(T), all policies
    Eigen::VectorXd penultimate;   // u(T - dt), all policies

    // nodal value at time sample k (All or BoundaryStencil with node stored)
    double value(int k, std::int64_t node, int c, int d) const;

    // discrete velocity at T from the last two stored steps
    Eigen::VectorXd terminal_velocity() const {
        return (final_state - penultimate) / tg.dt;
    }
};

struct SolveOptions {
    double cfl = 0.5;
    StoragePolicy policy = StoragePolicy::All;
};

double cfl_dt_limit(const MaterialModel& m, const Grid& g, double cfl);

// Core leapfrog march. Starts from u0 with initial velocity v0; when bc is
// given the boundary nodes follow bc row k each step, otherwise they stay
// zero (homogeneous Dirichlet). Calls on_step(k, state) for k = 0..steps.
void leapfrog_march(const MaterialModel& m, const Grid& g,
                    const Eigen::VectorXd& u0, const Eigen::VectorXd& v0,
                    const BoundaryField* bc, const TimeGrid& tg,
                    const std::function<void(int, const Eigen::VectorXd&)>& on_step);

// Forward problem: zero initial state, Dirichlet data f on the boundary.
// Refuses when f(0,.) != 0 or when f's dt violates the CFL bound.
Trajectory solve_ibvp(const MaterialModel& m, const Grid& g, const BoundaryField& f,
                      const SolveOptions& opt = {});

// Dual problem: homogeneous Dirichlet, terminal state p(T) = 0 and terminal
// velocity phi (flat node*d layout, zero on the boundary). Realized by the
// time-reversed forward march; returned snapshots are ordered in t.
Trajectory solve_dual(const MaterialModel& m, const Grid& g, const Eigen::VectorXd& phi,
                      const TimeGrid& tg, const SolveOptions& opt = {});

// Surface traction mu dnu u + mu (grad u)^T nu + lambda (div u) nu per
// boundary node and time sample. One-sided second-order differences along
// the normal, centered along tangents (one-sided at box edges).
BoundaryField traction(const Trajectory& traj, const MaterialModel& m, const Grid& g);

// traction of a single state into a preallocated row of nb*d entries
template <typename Scalar>
void traction_row(const MaterialModel& m, const Grid& g, const Scalar* u, Scalar* out);

struct EnergySeries {
    Eigen::VectorXd values;   // energy per time sample
    double max_relative_drift = 0.0;
};

// Energy int |sqrt(rho) du/dt|^2 + (mu(grad u + grad u^T) + lambda div u I) : grad u,
// tensor-trapezoid quadrature in space, centered time differences (one-sided
// second order at the series ends). Needs policy All and >= 3 snapshots.
EnergySeries energy(const Trajectory& traj, const MaterialModel& m, const Grid& g);

// Volume quadrature weights, one entry per node.
Eigen::VectorXd volume_weights(const Grid& g);

// Plain L2(Omega) norm of a flat vector state.
double state_l2(const Grid& g, const Eigen::VectorXd& u);

// H^1_0 seminorm ||grad u||_{L2} with centered interior differences.
double state_h1(const Grid& g, const Eigen::VectorXd& u);

// rho-weighted unconjugated pairing int (u . v) rho dx.
template <typename SA, typename SB>
auto state_rho_pairing(const MaterialModel& m, const Grid& g,
                       const Eigen::Matrix<SA, Eigen::Dynamic, 1>& u,
                       const Eigen::Matrix<SB, Eigen::Dynamic, 1>& v)
    -> decltype(SA{} * SB{}) {
    Eigen::VectorXd w = volume_weights(g);
    decltype(SA{} * SB{}) acc{};
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        decltype(SA{} * SB{}) dot{};
        for (int c = 0; c < g.d; ++c) dot += u[idx * g.d + c] * v[idx * g.d + c];
        acc += w[idx] * m.rho[idx] * dot;
    }
    return acc;
}

}  // namespace ebc

#endif
