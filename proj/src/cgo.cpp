#include "ebc/cgo.hpp"

#include <cmath>

namespace ebc {

namespace {

using Cplx = std::complex<double>;

Eigen::VectorXcd sample_exponential(const Grid& g, const Eigen::VectorXcd& amplitude,
                                    const Eigen::VectorXcd& wavevec) {
    Eigen::VectorXcd field(g.node_count * g.d);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto x = g.point(idx);
        Cplx phase{};
        for (int a = 0; a < g.d; ++a) phase += wavevec[a] * x[a];
        Cplx e = std::exp(Cplx(0.0, 1.0) * phase);
        for (int c = 0; c < g.d; ++c) field[idx * g.d + c] = amplitude[c] * e;
    }
    return field;
}

}  // namespace

ProbeTraces exponential_traces(const Grid& g, const MaterialModel& m,
                               const Eigen::VectorXcd& amplitude,
                               const Eigen::VectorXcd& wavevec) {
    // grad phi = i phi k^T; traction terms follow in closed form
    const int d = g.d;
    ProbeTraces tr;
    tr.t0.resize(g.boundary_count() * d);
    tr.t1.resize(g.boundary_count() * d);
    const Cplx I(0.0, 1.0);

    Cplx div_amp{};  // i k . a factor of div
    for (int c = 0; c < d; ++c) div_amp += wavevec[c] * amplitude[c];

    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
        auto x = g.point(node);
        auto nu = g.normal(b);
        Cplx phase{};
        for (int a = 0; a < d; ++a) phase += wavevec[a] * x[a];
        Cplx e = std::exp(I * phase);

        Cplx k_nu{}, a_nu{};
        for (int a = 0; a < d; ++a) {
            k_nu += wavevec[a] * nu[a];
            a_nu += amplitude[a] * nu[a];
        }
        double mu = m.mu[node];
        double la = m.lambda[node];
        for (int c = 0; c < d; ++c) {
            tr.t0[b * d + c] = amplitude[c] * e;
            Cplx t = mu * I * (k_nu * amplitude[c] + a_nu * wavevec[c]) +
                     la * I * div_amp * nu[c];
            tr.t1[b * d + c] = t * e;
        }
    }
    return tr;
}

CgoProbe make_probe(const Eigen::VectorXd& xi, const Grid& g, const MaterialModel& m) {
    const int d = g.d;
    if (xi.size() != d) throw std::invalid_argument("make_probe: xi dimension mismatch");
    if (!m.mu_constant())
        throw std::invalid_argument(
            "make_probe: non-constant mu is unsupported; use certify_condition for "
            "general fields");

    CgoProbe p;
    p.xi = xi;
    p.eta.setZero(d);
    p.theta.setZero(d);
    p.iota.setZero(d);

    double k = xi.norm();
    const Cplx I(0.0, 1.0);

    if (k == 0.0) {
        p.iota[0] = 1.0;  // constant probe, zero frequency
    } else {
        if (d == 2) {
            p.eta[0] = -xi[1];
            p.eta[1] = xi[0];
        } else {
            // Gram-Schmidt of the first standard axis not parallel to xi
            Eigen::VectorXd xhat = xi / k;
            int pick = 0;
            for (; pick < d; ++pick) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
                e[pick] = 1.0;
                if (std::abs(std::abs(e.dot(xhat)) - 1.0) > 1e-12) break;
            }
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e[pick] = 1.0;
            Eigen::VectorXd w = e - e.dot(xhat) * xhat;
            p.eta = w / w.norm() * k;
        }
        for (int c = 0; c < d; ++c) p.theta[c] = 0.5 * (xi[c] + I * p.eta[c]);

        // ordered elimination: pivot on the largest |theta| entry (lowest
        // index on ties), null vector from the lowest remaining index
        int pivot = 0;
        for (int c = 1; c < d; ++c)
            if (std::abs(p.theta[c]) > std::abs(p.theta[pivot]) + 1e-15) pivot = c;
        if (std::abs(p.theta[pivot]) == 0.0)
            throw std::runtime_error("make_probe: degenerate theta");
        int free_idx = (pivot == 0) ? 1 : 0;
        p.iota[free_idx] = 1.0;
        p.iota[pivot] = -p.theta[free_idx] / p.theta[pivot];
        p.iota /= std::sqrt(p.iota.squaredNorm());
    }

    Eigen::VectorXcd theta_bar = p.theta.conjugate();
    Eigen::VectorXcd iota_bar = p.iota.conjugate();
    p.phi = sample_exponential(g, p.iota, p.theta);
    p.psi = sample_exponential(g, iota_bar, theta_bar);
    p.phi_traces = exponential_traces(g, m, p.iota, p.theta);
    p.psi_traces = exponential_traces(g, m, iota_bar, theta_bar);
    return p;
}

double certify_condition(const CgoProbe& probe, const MaterialModel& m, const Grid& g) {
    const int d = g.d;
    Eigen::MatrixXd grad_mu = scalar_gradient(m.mu, g);
    Eigen::MatrixXd grad_la = scalar_gradient(m.lambda, g);

    Cplx it{};  // iota . theta (unconjugated)
    Cplx tt{};  // theta . theta
    for (int c = 0; c < d; ++c) {
        it += probe.iota[c] * probe.theta[c];
        tt += probe.theta[c] * probe.theta[c];
    }
    const Cplx I(0.0, 1.0);

    double worst = 0.0;
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        Cplx gm_dot_iota{}, gm_dot_theta{};
        for (int a = 0; a < d; ++a) {
            gm_dot_iota += grad_mu(idx, a) * probe.iota[a];
            gm_dot_theta += grad_mu(idx, a) * probe.theta[a];
        }
        double nrm2 = 0.0;
        for (int c = 0; c < d; ++c) {
            // i(theta iota^T + iota theta^T) grad mu
            Cplx term = I * (probe.theta[c] * gm_dot_iota + probe.iota[c] * gm_dot_theta);
            term += I * it * grad_la(idx, c);
            term -= m.mu[idx] * tt * probe.iota[c];
            term -= (m.lambda[idx] + m.mu[idx]) * it * probe.theta[c];
            nrm2 += std::norm(term);
        }
        worst = std::max(worst, std::sqrt(nrm2));
    }
    return worst;
}

double elastostatic_residual(const CgoProbe& probe, const MaterialModel& m, const Grid& g) {
    Eigen::VectorXcd out(g.node_count * g.d);
    apply_elastic_operator(m, g, probe.phi.data(), out.data());

    double worst = 0.0;
    const int d = g.d;
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        bool interior = true;
        for (int a = 0; a < d; ++a)
            if (c[a] == 0 || c[a] == g.n - 1) interior = false;
        if (!interior) continue;
        double nrm2 = 0.0;
        for (int cc = 0; cc < d; ++cc) nrm2 += std::norm(out[idx * d + cc]);
        worst = std::max(worst, std::sqrt(nrm2));
    }
    double k2 = probe.xi.squaredNorm();
    double denom = k2 * std::sqrt(probe.iota.squaredNorm());
    return denom > 0.0 ? worst / denom : worst;
}

}  // namespace ebc
