#include "ebc/material.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ebc {

double MaterialModel::pressure_speed_max(const Eigen::VectorXd& r) const {
    double cmax = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        double c2 = (lambda[i] + 2.0 * mu[i]) / r[i];
        cmax = std::max(cmax, std::sqrt(std::max(c2, 0.0)));
    }
    return cmax;
}

MaterialModel constant_material(const Grid& g, double rho, double mu, double lambda,
                                const MaterialBounds* bounds) {
    MaterialModel m;
    m.rho = Eigen::VectorXd::Constant(g.node_count, rho);
    m.mu = Eigen::VectorXd::Constant(g.node_count, mu);
    m.lambda = Eigen::VectorXd::Constant(g.node_count, lambda);
    if (bounds) {
        m.bounds = *bounds;
    } else {
        m.bounds = MaterialBounds{rho, mu, mu, lambda, lambda};
    }
    return m;
}

ValidationReport validate_material(const MaterialModel& m, const Grid& g) {
    if (m.rho.size() != g.node_count || m.mu.size() != g.node_count ||
        m.lambda.size() != g.node_count)
        throw std::invalid_argument("validate_material: field shape does not match grid");

    ValidationReport rep;
    const auto& b = m.bounds;
    for (std::int64_t i = 0; i < g.node_count; ++i) {
        if (!(m.rho[i] > 0.0))
            rep.violations.push_back({i, "rho > 0", m.rho[i]});
        else if (m.rho[i] > b.rho1)
            rep.violations.push_back({i, "rho <= rho1", m.rho[i]});
        if (m.mu[i] < b.mu0 || !(b.mu0 > 0.0))
            rep.violations.push_back({i, "0 < mu0 <= mu", m.mu[i]});
        if (m.mu[i] > b.mu1)
            rep.violations.push_back({i, "mu <= mu1", m.mu[i]});
        if (m.lambda[i] < b.lambda0)
            rep.violations.push_back({i, "lambda0 <= lambda", m.lambda[i]});
        if (m.lambda[i] > b.lambda1)
            rep.violations.push_back({i, "lambda <= lambda1", m.lambda[i]});
        double ell = g.d * m.lambda[i] + 2.0 * m.mu[i];
        if (!(ell > 0.0))
            rep.violations.push_back({i, "d*lambda + 2*mu > 0", ell});
    }
    return rep;
}

Eigen::MatrixXd scalar_gradient(const Eigen::VectorXd& field, const Grid& g) {
    if (field.size() != g.node_count)
        throw std::invalid_argument("scalar_gradient: field shape does not match grid");
    Eigen::MatrixXd grad(g.node_count, g.d);
    const double inv2h = 1.0 / (2.0 * g.h);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        for (int a = 0; a < g.d; ++a) {
            std::int64_t s = g.stride[a];
            if (c[a] == 0) {
                grad(idx, a) = (-3.0 * field[idx] + 4.0 * field[idx + s] - field[idx + 2 * s]) * inv2h;
            } else if (c[a] == g.n - 1) {
                grad(idx, a) = (3.0 * field[idx] - 4.0 * field[idx - s] + field[idx - 2 * s]) * inv2h;
            } else {
                grad(idx, a) = (field[idx + s] - field[idx - s]) * inv2h;
            }
        }
    }
    return grad;
}

Eigen::MatrixXd isotropic_form_matrix(int d, double mu, double lambda) {
    // form on vec(A): mu(|A|^2 + A:A^T) + lambda tr(A)^2
    const int dd = d * d;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dd, dd);
    auto at = [d](int i, int j) { return i * d + j; };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            M(at(i, j), at(i, j)) += mu;      // |A|^2
            M(at(i, j), at(j, i)) += mu;      // A : A^T
        }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            M(at(i, i), at(j, j)) += lambda;  // tr(A)^2
    return M;
}

namespace {

// orthonormal basis of symmetric d x d matrices, vectorized
Eigen::MatrixXd symmetric_basis(int d) {
    const int dd = d * d;
    const int m = d * (d + 1) / 2;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dd, m);
    int col = 0;
    auto at = [d](int i, int j) { return i * d + j; };
    for (int i = 0; i < d; ++i) B(at(i, i), col++) = 1.0;
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            B(at(i, j), col) = s;
            B(at(j, i), col) = s;
            ++col;
        }
    return B;
}

}  // namespace

AdmissibilityReport check_admissible_H(const MaterialModel& m, const Grid& g,
                                       const Eigen::VectorXd& l_field,
                                       double c0, double c1, FormMode mode) {
    if (m.mu.size() != g.node_count || m.lambda.size() != g.node_count ||
        l_field.size() != g.node_count)
        throw std::invalid_argument("check_admissible_H: field shape does not match grid");

    Eigen::MatrixXd grad_mu = scalar_gradient(m.mu, g);
    Eigen::MatrixXd grad_lambda = scalar_gradient(m.lambda, g);
    Eigen::MatrixXd grad_l = scalar_gradient(l_field, g);

    AdmissibilityReport rep;
    rep.c0 = c0;
    rep.c1 = c1;
    rep.min_eig_first.resize(g.node_count);
    rep.min_eig_second.resize(g.node_count);

    const Eigen::MatrixXd P = (mode == FormMode::SymmetricRestricted)
                                  ? symmetric_basis(g.d)
                                  : Eigen::MatrixXd::Identity(g.d * g.d, g.d * g.d);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        Eigen::MatrixXd M1 = isotropic_form_matrix(g.d, m.mu[idx], m.lambda[idx]);
        double mu_corr = grad_mu.row(idx).head(g.d).dot(grad_l.row(idx).head(g.d));
        double la_corr = grad_lambda.row(idx).head(g.d).dot(grad_l.row(idx).head(g.d));
        Eigen::MatrixXd M2 = M1 - isotropic_form_matrix(g.d, mu_corr, la_corr);

        es.compute(P.transpose() * M1 * P);
        rep.min_eig_first[idx] = es.eigenvalues().minCoeff();
        es.compute(P.transpose() * M2 * P);
        rep.min_eig_second[idx] = es.eigenvalues().minCoeff();
    }
    rep.first_min = rep.min_eig_first.minCoeff();
    rep.second_min = rep.min_eig_second.minCoeff();
    rep.first_holds = rep.first_min >= c0;
    rep.second_holds = rep.second_min >= c1;
    return rep;
}

}  // namespace ebc
