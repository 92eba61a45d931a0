#include "ebc/reconstruction.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>

namespace ebc {

double RegularizedInverse::moore_penrose_defect() const {
    // on the retained spectrum J Jd J - J vanishes identically; evaluate it
    // through the decomposition to expose numerical residue
    double smax = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
    if (smax == 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (inv_values[i] == 0.0) continue;  // truncated direction
        double lhs = values[i] * inv_values[i] * values[i];
        worst = std::max(worst, std::abs(lhs - values[i]));
    }
    return worst / smax;
}

RegularizedInverse pseudo_inverse(const Eigen::MatrixXd& J, RegMethod method, double param) {
    if (J.rows() != J.cols()) throw std::invalid_argument("pseudo_inverse: square matrix required");
    double nrm = J.norm();
    if (nrm > 0.0) {
        double asym = (J - J.transpose()).norm() / nrm;
        if (asym > 1e-6)
            throw std::invalid_argument("pseudo_inverse: asymmetry defect " +
                                        std::to_string(asym) + " exceeds 1e-6");
    }
    Eigen::MatrixXd S = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("pseudo_inverse: eigen-decomposition failed");

    RegularizedInverse inv;
    inv.vectors = es.eigenvectors();
    inv.values = es.eigenvalues();
    inv.method = method;
    inv.param = param;

    double smax = inv.values.size() ? inv.values.maxCoeff() : 0.0;
    if (inv.values.size() && inv.values.minCoeff() < -1e-6 * std::max(smax, 0.0))
        throw std::runtime_error(
            "pseudo_inverse: negative eigenvalue beyond tolerance, assembly quality "
            "is suspect (min " + std::to_string(inv.values.minCoeff()) + ")");

    inv.inv_values.setZero(inv.values.size());
    inv.effective_rank = 0;
    for (Eigen::Index i = 0; i < inv.values.size(); ++i) {
        double s = inv.values[i];
        if (method == RegMethod::TruncatedEig) {
            if (s > param * smax && s > 0.0) {
                inv.inv_values[i] = 1.0 / s;
                ++inv.effective_rank;
            }
        } else {
            inv.inv_values[i] = 1.0 / (std::max(s, 0.0) + param);
            ++inv.effective_rank;
        }
    }
    return inv;
}

std::complex<double> fourier_sample(const RegularizedInverse& jinv,
                                    const Eigen::VectorXcd& k_phi,
                                    const Eigen::VectorXcd& k_psi,
                                    const Eigen::VectorXcd& iota) {
    double i2 = iota.squaredNorm();
    if (!(i2 > 0.0)) throw std::invalid_argument("fourier_sample: zero iota");
    Eigen::VectorXcd jk = jinv.apply(k_phi);
    // unconjugated bilinear pairing
    std::complex<double> acc{};
    for (Eigen::Index i = 0; i < jk.size(); ++i) acc += jk[i] * k_psi[i];
    return acc / i2;
}

std::complex<double> oracle_fourier(const Eigen::VectorXd& rho_field, const Grid& g,
                                    const Eigen::VectorXd& xi) {
    if (rho_field.size() != g.node_count)
        throw std::invalid_argument("oracle_fourier: field shape mismatch");
    std::complex<double> acc{};
    const std::complex<double> I(0.0, 1.0);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto x = g.point(idx);
        double phase = 0.0;
        for (int a = 0; a < g.d; ++a) phase += xi[a] * x[a];
        acc += g.volume_weight(idx) * rho_field[idx] * std::exp(I * phase);
    }
    return acc;
}

std::vector<Eigen::VectorXd> xi_lattice(const Grid& g, double gamma) {
    double L = g.hi - g.lo;
    double base = 2.0 * M_PI / L;
    int kmax = static_cast<int>(std::floor(gamma / base * (1.0 + 1e-12)));
    std::vector<Eigen::VectorXd> out;
    auto push = [&](const Eigen::VectorXd& xi) {
        if (xi.norm() <= gamma * (1.0 + 1e-12)) out.push_back(xi);
    };
    if (g.d == 2) {
        for (int k0 = -kmax; k0 <= kmax; ++k0)
            for (int k1 = -kmax; k1 <= kmax; ++k1) {
                Eigen::VectorXd xi(2);
                xi << base * k0, base * k1;
                push(xi);
            }
    } else {
        for (int k0 = -kmax; k0 <= kmax; ++k0)
            for (int k1 = -kmax; k1 <= kmax; ++k1)
                for (int k2 = -kmax; k2 <= kmax; ++k2) {
                    Eigen::VectorXd xi(3);
                    xi << base * k0, base * k1, base * k2;
                    push(xi);
                }
    }
    return out;
}

namespace {

std::vector<long> lattice_key(const Eigen::VectorXd& xi, double base, int d) {
    std::vector<long> k(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) k[static_cast<std::size_t>(a)] = std::lround(xi[a] / base);
    return k;
}

}  // namespace

ReconstructionResult reconstruct_density(const std::vector<FourierSample>& samples,
                                         double gamma, const Grid& g,
                                         const Eigen::VectorXd* truth) {
    ReconstructionResult res;
    res.gamma = gamma;

    const double L = g.hi - g.lo;
    const double base = 2.0 * M_PI / L;
    const int d = g.d;

    std::map<std::vector<long>, std::complex<double>> table;
    for (const auto& s : samples) {
        if (s.xi.norm() > gamma * (1.0 + 1e-12))
            throw std::invalid_argument("reconstruct_density: sample beyond gamma");
        table[lattice_key(s.xi, base, d)] = s.value;
    }

    // Hermitian averaging: F(-xi) and conj(F(xi)) agree for a real density
    std::map<std::vector<long>, std::complex<double>> sym;
    for (const auto& [k, v] : table) {
        std::vector<long> nk = k;
        for (auto& x : nk) x = -x;
        auto it = table.find(nk);
        if (it == table.end()) {
            res.symmetrized_warning = true;
            sym[k] = v;
            sym[nk] = std::conj(v);
        } else {
            sym[k] = 0.5 * (v + std::conj(it->second));
        }
    }

    res.samples.clear();
    for (const auto& [k, v] : sym) {
        Eigen::VectorXd xi(d);
        for (int a = 0; a < d; ++a) xi[a] = base * k[static_cast<std::size_t>(a)];
        res.samples.push_back({xi, v});
    }

    // inverse synthesis: rho(x) = L^-d sum_k F(xi_k) e^{-i xi_k . x}
    const std::complex<double> I(0.0, 1.0);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(g.node_count);
    double Ld = std::pow(L, d);
    for (const auto& s : res.samples) {
        for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
            auto x = g.point(idx);
            double phase = 0.0;
            for (int a = 0; a < d; ++a) phase += s.xi[a] * x[a];
            acc[idx] += s.value * std::exp(-I * phase);
        }
    }
    acc /= Ld;

    double max_abs = acc.cwiseAbs().maxCoeff();
    double max_imag = acc.imag().cwiseAbs().maxCoeff();
    res.max_imag_ratio = max_abs > 0.0 ? max_imag / max_abs : 0.0;
    res.rho_rec = acc.real();

    if (truth) {
        // band-limited truth from the oracle on the same lattice
        Eigen::VectorXcd tacc = Eigen::VectorXcd::Zero(g.node_count);
        for (const auto& s : res.samples) {
            std::complex<double> tv = oracle_fourier(*truth, g, s.xi);
            for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
                auto x = g.point(idx);
                double phase = 0.0;
                for (int a = 0; a < d; ++a) phase += s.xi[a] * x[a];
                tacc[idx] += tv * std::exp(-I * phase);
            }
        }
        tacc /= Ld;
        Eigen::VectorXd tband = tacc.real();

        Eigen::VectorXd w(g.node_count);
        for (std::int64_t idx = 0; idx < g.node_count; ++idx) w[idx] = g.volume_weight(idx);
        auto wl2 = [&](const Eigen::VectorXd& v) {
            return std::sqrt((v.array().square() * w.array()).sum());
        };
        double nb = wl2(tband);
        res.rel_l2_vs_truth = nb > 0.0 ? wl2(res.rho_rec - tband) / nb : -1.0;
        double nf = wl2(*truth);
        res.rel_l2_vs_full_truth = nf > 0.0 ? wl2(res.rho_rec - *truth) / nf : -1.0;
    }
    return res;
}

}  // namespace ebc
