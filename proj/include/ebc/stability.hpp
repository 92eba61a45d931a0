#ifndef EBC_STABILITY_HPP
#define EBC_STABILITY_HPP

#include <complex>
#include <vector>

#include "ebc/basis.hpp"
#include "ebc/boundary_operator.hpp"
#include "ebc/cgo.hpp"
#include "ebc/pipeline.hpp"
#include "ebc/reconstruction.hpp"

namespace ebc {

// Operator data of one medium used by the perturbation experiments.
struct OperatorSet {
    ConnectingOperator connecting;
    BoundaryOperator lambda_T;        // explicit scattered map, strided output
    Eigen::MatrixXcd probe_pairings;  // 2 rows (phi, psi) per probe
};

OperatorSet assemble_operator_set(const MaterialModel& m, const Grid& g,
                                  const BoundaryBasis& basis,
                                  const std::vector<const CgoProbe*>& probes,
                                  int lambda_stride, double cfl = 0.5, int threads = 0);

// Operator norm of the symmetric difference J~ - J by power iteration
// (50 iterations or 1e-8 relative change).
double symmetric_operator_norm(const Eigen::MatrixXd& delta, unsigned seed = 1);

// ||Lambda~ - Lambda||_{H^1_0 -> L^2}: generalized power iteration with the
// basis H^1 Gram on the source side and sample weights on the output side.
double lambda_operator_norm(const BoundaryOperator& a, const BoundaryOperator& b,
                            const Eigen::MatrixXd& h1_gram, unsigned seed = 1);

// E := ||J~ - J||_{L2->L2} + ||Lambda~ - Lambda||_{H^1_0 -> L2}
double dtn_distance(const OperatorSet& base, const OperatorSet& pert,
                    const Eigen::MatrixXd& h1_gram);

// radius of the origin-centered ball containing the box
double enclosing_radius(const Grid& g);

struct PerturbationExperiment {
    Eigen::VectorXd rho_base;   // node field
    Eigen::VectorXd delta_rho;  // direction, vanishing on a 2-cell collar
    Eigen::VectorXd mu;         // Lame fields shared by the whole schedule;
    Eigen::VectorXd lambda;     // empty means constants 1 and 0
    std::vector<double> epsilons;
    MaterialBounds bounds;      // bounds valid across the schedule
};

// checks the collar condition: delta vanishes within 2 cells of the boundary
bool collar_condition(const Grid& g, const Eigen::VectorXd& delta, int cells = 2);

struct EpsilonRecord {
    double epsilon = 0.0;
    double E = 0.0;                     // DtN distance
    double l2_diff = 0.0;               // ||rho~ - rho||_{L2}
    double gamma = 0.0;                 // -ln(E) / (4R + 1)
    bool out_of_regime = false;         // E >= e^{-8R-2}
    double log_bound = 0.0;             // (-ln E)^{-2}
    double jdag_diff = 0.0;             // ||J~^dag - J^dag|| (report only)
    double j_diff = 0.0;                // ||J~ - J||
    std::vector<std::complex<double>> f_diff_op;      // per xi, operator route
    std::vector<std::complex<double>> f_diff_oracle;  // per xi, quadrature route
    double band_recon_l2 = -1.0;        // recon of rho~ - rho with cutoff gamma
};

struct StabilityReport {
    std::vector<Eigen::VectorXd> xi_set;
    std::vector<EpsilonRecord> records;   // ordered by the epsilon schedule
    std::vector<double> slope_op;         // per xi, dlog|F| / dlog E (operator route)
    std::vector<double> slope_oracle;     // per xi, same for the oracle route
    std::vector<double> bound_ratio_max;  // per xi, max |F| / (e^{2R|xi|} E)
    double R = 0.0;
    double empirical_cobs = -1.0;         // filled by the caller when available
};

struct StabilityOptions {
    double cfl = 0.5;
    int threads = 0;
    int lambda_stride = 1;
    double trunc = 1e-6;  // truncation for the per-medium pseudo-inverses
};

// Full perturbation experiment: assembles the base operators once and one
// perturbed set per epsilon; records E, Fourier differences through the
// reconstruction formula and through the volume oracle, the log-stability
// quantities, and fitted log-log slopes.
StabilityReport run_perturbation_experiment(const Grid& g, const BoundaryBasis& basis,
                                            const PerturbationExperiment& exp,
                                            const std::vector<Eigen::VectorXd>& xi_set,
                                            const StabilityOptions& opt = {});

struct SobolevReport {
    double norm = 0.0;
    double s = 0.0;
    double bound = 0.0;
    bool holds = false;
};

// Discrete H^{s+2} norm through lattice transform weights (1+|xi|^2)^{(s+2)/2},
// lattice truncated at the grid Nyquist index.
SobolevReport sobolev_class_check(const Eigen::VectorXd& rho_field, const Grid& g,
                                  double s, double bound);

// least-squares slope of log|y| against log|x|
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ebc

#endif
