#ifndef EBC_CGO_HPP
#define EBC_CGO_HPP

#include <Eigen/Dense>
#include <complex>

#include "ebc/boundary_operator.hpp"
#include "ebc/grid.hpp"
#include "ebc/material.hpp"

namespace ebc {

// Complex-exponential probe pair phi = iota e^{i theta.x}, psi = conj(iota)
// e^{i conj(theta).x} with theta = (xi + i eta)/2, |eta| = |xi|, eta _|_ xi,
// and iota.theta = 0 (unconjugated dot). Valid for constant shear modulus.
struct CgoProbe {
    Eigen::VectorXd xi;    // d
    Eigen::VectorXd eta;   // d
    Eigen::VectorXcd theta;  // d
    Eigen::VectorXcd iota;   // d, |iota| = 1
    Eigen::VectorXcd phi;    // node*d
    Eigen::VectorXcd psi;    // node*d
    ProbeTraces phi_traces;  // T0, T1 on the boundary (analytic)
    ProbeTraces psi_traces;
};

// Deterministic construction: eta is the counterclockwise perpendicular in
// 2d, Gram-Schmidt of the first standard axis not parallel to xi in 3d;
// iota is the lowest-index ordered-elimination null vector of theta.
// Requires constant mu (else directs to certify_condition).
CgoProbe make_probe(const Eigen::VectorXd& xi, const Grid& g, const MaterialModel& m);

// Max norm over nodes of
//   i(theta iota^T + iota theta^T) grad mu + i (iota.theta) grad lambda
//   - mu (theta.theta) iota - (lambda + mu)(iota.theta) theta,
// the compatibility condition for general Lame fields.
double certify_condition(const CgoProbe& probe, const MaterialModel& m, const Grid& g);

// Max norm over interior nodes of the discrete elastostatic operator applied
// to phi, normalized by |xi|^2 |iota| (0 normalizer falls back to 1).
double elastostatic_residual(const CgoProbe& probe, const MaterialModel& m, const Grid& g);

// Analytic traces of a complex exponential field a e^{i k.x} on the boundary
ProbeTraces exponential_traces(const Grid& g, const MaterialModel& m,
                               const Eigen::VectorXcd& amplitude,
                               const Eigen::VectorXcd& wavevec);

}  // namespace ebc

#endif
