#ifndef EBC_BOUNDARY_OPERATOR_HPP
#define EBC_BOUNDARY_OPERATOR_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "ebc/basis.hpp"
#include "ebc/boundary_field.hpp"
#include "ebc/grid.hpp"
#include "ebc/material.hpp"
#include "ebc/solver.hpp"

namespace ebc {

// Dense operator between weighted coefficient/sample spaces. Columns are
// indexed by boundary-basis coefficients; rows either by basis coefficients
// (square operators like the connecting operator) or by space-time traction
// samples, flattened as (k*nb + b)*d + c on `out_tg`.
struct BoundaryOperator {
    Eigen::MatrixXd matrix;   // N_out x N_in
    Eigen::VectorXd w_in;     // inner-product weights of the input space
    Eigen::VectorXd w_out;    // inner-product weights of the output space
    double horizon = 0.0;     // T or 2T tag
    TimeGrid out_tg;          // meaningful for sample-space outputs

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x; }

    // weighted pairing <y1, y2>_out
    double pair_out(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2) const {
        return y1.cwiseProduct(w_out).dot(y2);
    }
};

// Adjoint in the weighted inner products: A* = W_in^-1 A^T W_out, so that
// <A f, h>_out = <f, A* h>_in exactly.
BoundaryOperator adjoint(const BoundaryOperator& op);

struct DtnOptions {
    double cfl = 0.5;
    int output_stride = 1;   // subsample traction rows in time
    int threads = 0;         // 0: hardware concurrency
    bool scattered = true;   // subtract the elastostatic response per column
};

// Flattened sample weights of a boundary field space (time x space).
Eigen::VectorXd sample_weights(const Grid& g, const TimeGrid& tg);

// Discrete displacement-to-traction map at the given horizon: column j is
// the traction of the forward solve driven by basis element j, sampled on
// the (possibly strided) output grid. For horizon 2T the basis sources are
// zero-extended. One forward solve per (node, component) group; the
// remaining atoms are exact time shifts.
//
// In scattered mode (default) each column carries the wave response only:
// the instantaneous elastostatic traction of its source, which depends on
// the Lame fields but never on the density, is subtracted. The connecting
// and probe operators assume scattered columns; the subtraction cancels
// identically in the continuum identities and removes the near-singular
// self response of the nodal sources from the discrete pairings.
BoundaryOperator assemble_dtn(const MaterialModel& m, const Grid& g,
                              const BoundaryBasis& basis, double horizon,
                              const DtnOptions& opt = {});

struct ConnectingOperator {
    BoundaryOperator op;                 // symmetric PSD N x N on basis coefficients
    double asymmetry_defect = 0.0;       // pre-symmetrization relative defect
    double indefiniteness_defect = 0.0;  // |most negative eigenvalue| / sigma_max
};

// Connecting operator via the boundary route: J_ij = <Lambda_T f_i, B Theta f_j>
// - <f_i, B Lambda_2T Theta f_j>. The continuum operator is exactly symmetric
// positive semidefinite; both properties are enforced after assembly
// (symmetrization, negative-eigenvalue floor at zero) with the repair
// magnitudes reported.
ConnectingOperator connecting_operator(const BoundaryOperator& lambda_T,
                                       const BoundaryOperator& lambda_2T,
                                       const BoundaryBasis& basis);

// symmetrize + PSD floor + defect bookkeeping shared by both assembly routes
ConnectingOperator finalize_connecting(const Eigen::MatrixXd& raw, double horizon,
                                       const TimeGrid& tg);

// Static probe traces on the boundary: value trace T0 and traction trace T1,
// one complex d-vector per boundary node each.
struct ProbeTraces {
    Eigen::VectorXcd t0;  // nb*d
    Eigen::VectorXcd t1;  // nb*d
};

// Probe functional coefficients p_i = <f_i, K phi>. Expects a scattered
// Lambda_T: the probe operator's -I(T1 phi) counter-term and the subtracted
// static response cancel exactly for elastostatic probes, leaving
// p_i = <Lambda f_i, I T0 phi> alone.
Eigen::VectorXcd apply_probe_operator(const BoundaryOperator& lambda_T,
                                      const BoundaryBasis& basis,
                                      const ProbeTraces& traces);

// Time-extended trace fields (I T0 phi)(t) = (T-t) T0 phi and likewise for
// T1, sampled on the given grid (exact: trapezoid integrates constants).
BoundaryFieldC probe_time_fields(const Grid& g, const TimeGrid& tg,
                                 const Eigen::VectorXcd& trace);

// --- volume oracles -------------------------------------------------------
// Ground-truth pairings through interior quadrature; the identities they
// certify are the only independent checks available for the boundary route.

// u_f(T) for a sampled boundary source
Eigen::VectorXd control_state(const MaterialModel& m, const Grid& g,
                              const BoundaryField& f, double cfl = 0.5);

// int u .v rho dx for flat states
double volume_rho_pairing(const MaterialModel& m, const Grid& g,
                          const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// int u . phi rho dx with a complex probe field (unconjugated)
std::complex<double> volume_rho_pairing_complex(const MaterialModel& m, const Grid& g,
                                                const Eigen::VectorXd& u,
                                                const Eigen::VectorXcd& phi);

}  // namespace ebc

#endif
