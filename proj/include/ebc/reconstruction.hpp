#ifndef EBC_RECONSTRUCTION_HPP
#define EBC_RECONSTRUCTION_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ebc/boundary_operator.hpp"
#include "ebc/grid.hpp"

namespace ebc {

enum class RegMethod { TruncatedEig, Tikhonov };

// Regularized pseudo-inverse of a symmetric PSD operator through its
// eigen-decomposition. Truncation keeps eigenvalues above eps_rel * sigma_max;
// Tikhonov shifts the whole spectrum by alpha.
struct RegularizedInverse {
    Eigen::MatrixXd vectors;    // eigenvectors, orthonormal columns
    Eigen::VectorXd values;     // eigenvalues, ascending
    Eigen::VectorXd inv_values; // regularized reciprocals (0 where truncated)
    RegMethod method = RegMethod::TruncatedEig;
    double param = 1e-6;
    int effective_rank = 0;

    // J^dagger applied to a projection vector
    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply(
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& p) const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q = vectors.transpose() * p;
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] *= inv_values[i];
        return vectors * q;
    }

    // ||J Jd J - J|| / ||J|| restricted to the retained spectrum
    double moore_penrose_defect() const;
};

// Decomposes the symmetrized PSD matrix. Throws when an eigenvalue drops
// below -1e-6 * sigma_max (assembly-quality error) or when the relative
// asymmetry exceeds 1e-6.
RegularizedInverse pseudo_inverse(const Eigen::MatrixXd& J, RegMethod method,
                                  double param);

inline RegularizedInverse pseudo_inverse(const BoundaryOperator& J, RegMethod method,
                                         double param) {
    return pseudo_inverse(J.matrix, method, param);
}

// Fourier sample of the density from the reconstruction pairing:
// |iota|^-2 <Jd K phi, K psi> under the unconjugated bilinear pairing.
std::complex<double> fourier_sample(const RegularizedInverse& jinv,
                                    const Eigen::VectorXcd& k_phi,
                                    const Eigen::VectorXcd& k_psi,
                                    const Eigen::VectorXcd& iota);

// Trapezoid quadrature of int_Omega e^{i xi . x} rho(x) dx (extension of rho
// by zero outside the box).
std::complex<double> oracle_fourier(const Eigen::VectorXd& rho_field, const Grid& g,
                                    const Eigen::VectorXd& xi);

// Symmetric lattice {2 pi k / L : |2 pi k / L| <= gamma}, ordered
// lexicographically in k.
std::vector<Eigen::VectorXd> xi_lattice(const Grid& g, double gamma);

struct FourierSample {
    Eigen::VectorXd xi;
    std::complex<double> value;
};

struct ReconstructionResult {
    std::vector<FourierSample> samples;   // after Hermitian averaging
    double gamma = 0.0;
    Eigen::VectorXd rho_rec;              // real field on grid nodes
    double max_imag_ratio = 0.0;          // pre-cast imaginary remainder
    bool symmetrized_warning = false;     // input set lacked a -xi partner
    // filled when a truth field is supplied
    double rel_l2_vs_truth = -1.0;        // vs band-limited truth
    double rel_l2_vs_full_truth = -1.0;   // vs the raw truth field
};

// Band-limited inverse synthesis of the sample set on the grid. Samples must
// cover the symmetric lattice; missing partners are Hermitian-averaged with a
// warning flag. When `truth` is given, the result carries relative L2 errors
// against the band-limited truth (same lattice, oracle samples) and the full
// truth.
ReconstructionResult reconstruct_density(const std::vector<FourierSample>& samples,
                                         double gamma, const Grid& g,
                                         const Eigen::VectorXd* truth = nullptr);

}  // namespace ebc

#endif
