#ifndef EBC_STATIC_SOLVER_HPP
#define EBC_STATIC_SOLVER_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ebc/grid.hpp"
#include "ebc/material.hpp"

namespace ebc {

// Elastostatic Dirichlet solver on the wave solver's stencil:
//   div(mu (grad u + grad u^T)) + grad(lambda div u) = 0 in the interior,
//   u given on the boundary.
// The factorization is computed once and reused across right-hand sides.
// Statics depend only on the Lame fields, never on the density.
class ElastostaticSolver {
  public:
    ElastostaticSolver(const MaterialModel& m, const Grid& g);

    // boundary_values: nb*d flat vector; returns the full node*d state with
    // the data imposed on the boundary
    Eigen::VectorXd solve(const Eigen::VectorXd& boundary_values) const;

    // max interior residual of the stencil on a solved state (diagnostic)
    double residual(const Eigen::VectorXd& state) const;

  private:
    const MaterialModel& m_;
    const Grid& g_;
    std::vector<std::int64_t> interior_index_;  // node -> interior slot, -1 on boundary
    std::vector<std::int64_t> interior_nodes_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

}  // namespace ebc

#endif
