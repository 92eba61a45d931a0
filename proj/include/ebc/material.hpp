#ifndef EBC_MATERIAL_HPP
#define EBC_MATERIAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ebc/grid.hpp"

namespace ebc {

struct MaterialBounds {
    double rho1 = 1.0;     // 0 < rho <= rho1
    double mu0 = 1.0;      // mu0 <= mu <= mu1
    double mu1 = 1.0;
    double lambda0 = 0.0;  // lambda0 <= lambda <= lambda1
    double lambda1 = 0.0;
};

// Scalar material fields sampled at grid nodes, plus the declared bound
// constants used by the observability machinery.
struct MaterialModel {
    Eigen::VectorXd rho;
    Eigen::VectorXd mu;
    Eigen::VectorXd lambda;
    MaterialBounds bounds;

    bool mu_constant(double tol = 1e-14) const {
        return (mu.maxCoeff() - mu.minCoeff()) <= tol * std::max(1.0, mu.cwiseAbs().maxCoeff());
    }
    double pressure_speed_max(const Eigen::VectorXd& r) const;
};

MaterialModel constant_material(const Grid& g, double rho, double mu, double lambda,
                                const MaterialBounds* bounds = nullptr);

struct Violation {
    std::int64_t node;
    std::string constraint;  // e.g. "rho > 0", "d*lambda + 2*mu > 0"
    double value;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool admissible() const { return violations.empty(); }
};

// Pointwise admissibility of (rho, mu, lambda): positivity of rho, the
// declared bounds, and d*lambda + 2*mu > 0 at every node.
ValidationReport validate_material(const MaterialModel& m, const Grid& g);

enum class FormMode { Literal, SymmetricRestricted };

struct AdmissibilityReport {
    // per node, minimum eigenvalue of the two quadratic forms over
    // unit-Frobenius-norm gradient matrices
    Eigen::VectorXd min_eig_first;
    Eigen::VectorXd min_eig_second;
    double c0 = 0.0, c1 = 0.0;
    bool first_holds = false;   // min over nodes of first form  >= c0
    bool second_holds = false;  // min over nodes of second form >= c1
    double first_min = 0.0, second_min = 0.0;
};

// Evaluates the two pointwise coercivity conditions on the Lame fields:
// the form A -> (mu(A + A^T) + lambda tr(A) I) : A and the variant with
// the gradient correction -sum_i ((d_i mu (A+A^T) + d_i lambda tr(A) I) : A) d_i l,
// minimized over unit-Frobenius matrices A (Literal) or over symmetric A
// only (SymmetricRestricted). Gradients of mu, lambda, l are taken by
// centered differences (one-sided second order at the boundary).
AdmissibilityReport check_admissible_H(const MaterialModel& m, const Grid& g,
                                       const Eigen::VectorXd& l_field,
                                       double c0, double c1, FormMode mode);

// d^2 x d^2 symmetric matrix of the first form for given coefficients;
// exposed for the admissibility tests' independent cross-checks.
Eigen::MatrixXd isotropic_form_matrix(int d, double mu, double lambda);

// Centered-difference gradient of a scalar node field (second-order
// one-sided at the boundary). Returns node x axis.
Eigen::MatrixXd scalar_gradient(const Eigen::VectorXd& field, const Grid& g);

}  // namespace ebc

#endif
