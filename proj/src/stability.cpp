#include "ebc/stability.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

namespace ebc {

OperatorSet assemble_operator_set(const MaterialModel& m, const Grid& g,
                                  const BoundaryBasis& basis,
                                  const std::vector<const CgoProbe*>& probes,
                                  int lambda_stride, double cfl, int threads) {
    AssemblyRequest req;
    req.cfl = cfl;
    req.threads = threads;
    req.build_lambda_T = true;
    req.lambda_stride = lambda_stride;
    for (const CgoProbe* p : probes) {
        req.probes.push_back(p->phi_traces);
        req.probes.push_back(p->psi_traces);
    }
    Assembly a = assemble_all(m, g, basis, req);
    OperatorSet set;
    set.connecting = std::move(a.connecting);
    set.lambda_T = std::move(*a.lambda_T);
    set.probe_pairings = std::move(a.probe_pairings);
    return set;
}

namespace {

Eigen::VectorXd seeded_unit(Eigen::Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    v.normalize();
    return v;
}

}  // namespace

double symmetric_operator_norm(const Eigen::MatrixXd& delta, unsigned seed) {
    if (delta.rows() == 0) return 0.0;
    Eigen::VectorXd v = seeded_unit(delta.rows(), seed);
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd w = delta * v;
        double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        w /= nrm;
        double next = std::abs(w.dot(delta * w));
        bool settled = std::abs(next - lambda) <= 1e-8 * std::max(next, 1e-300);
        lambda = next;
        v = w;
        if (settled) break;
    }
    return lambda;
}

double lambda_operator_norm(const BoundaryOperator& a, const BoundaryOperator& b,
                            const Eigen::MatrixXd& h1_gram, unsigned seed) {
    if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols())
        throw std::invalid_argument("lambda_operator_norm: operator shapes differ");
    Eigen::MatrixXd delta = a.matrix - b.matrix;
    Eigen::LLT<Eigen::MatrixXd> llt(h1_gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("lambda_operator_norm: H^1 Gram not positive definite");

    Eigen::VectorXd v = seeded_unit(delta.cols(), seed);
    double sigma2 = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd y = delta * v;
        Eigen::VectorXd My = delta.transpose() * a.w_out.cwiseProduct(y);
        Eigen::VectorXd w = llt.solve(My);
        double scale = std::sqrt(w.dot(h1_gram * w));
        if (scale == 0.0) return 0.0;
        w /= scale;
        Eigen::VectorXd yw = delta * w;
        double next = yw.cwiseProduct(a.w_out).dot(yw);  // Rayleigh in H-normalized w
        bool settled = std::abs(next - sigma2) <= 1e-8 * std::max(next, 1e-300);
        sigma2 = next;
        v = w;
        if (settled) break;
    }
    return std::sqrt(std::max(sigma2, 0.0));
}

double dtn_distance(const OperatorSet& base, const OperatorSet& pert,
                    const Eigen::MatrixXd& h1_gram) {
    Eigen::MatrixXd dj = pert.connecting.op.matrix - base.connecting.op.matrix;
    double j_norm = symmetric_operator_norm(dj);
    double l_norm = lambda_operator_norm(pert.lambda_T, base.lambda_T, h1_gram);
    return j_norm + l_norm;
}

double enclosing_radius(const Grid& g) {
    double best = 0.0;
    for (int mask = 0; mask < (1 << g.d); ++mask) {
        double v = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double xa = (mask >> a & 1) ? g.hi : g.lo;
            v += xa * xa;
        }
        best = std::max(best, v);
    }
    return std::sqrt(best);
}

bool collar_condition(const Grid& g, const Eigen::VectorXd& delta, int cells) {
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        int depth = g.n;
        for (int a = 0; a < g.d; ++a) depth = std::min({depth, c[a], g.n - 1 - c[a]});
        if (depth <= cells && delta[idx] != 0.0) return false;
    }
    return true;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need matching series of length >= 2");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("loglog_slope: fewer than 2 positive points");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

StabilityReport run_perturbation_experiment(const Grid& g, const BoundaryBasis& basis,
                                            const PerturbationExperiment& exp,
                                            const std::vector<Eigen::VectorXd>& xi_set,
                                            const StabilityOptions& opt) {
    if (!collar_condition(g, exp.delta_rho))
        throw std::invalid_argument(
            "run_perturbation_experiment: delta_rho must vanish on a 2-cell collar");

    StabilityReport rep;
    rep.xi_set = xi_set;
    rep.R = enclosing_radius(g);

    MaterialModel base = constant_material(g, 1.0, 1.0, 0.0, &exp.bounds);
    base.rho = exp.rho_base;
    if (exp.mu.size()) base.mu = exp.mu;
    if (exp.lambda.size()) base.lambda = exp.lambda;
    {
        auto v = validate_material(base, g);
        if (!v.admissible())
            throw std::invalid_argument("run_perturbation_experiment: base density invalid");
    }

    std::vector<CgoProbe> probes;
    std::vector<const CgoProbe*> probe_ptrs;
    probes.reserve(xi_set.size());
    for (const auto& xi : xi_set) probes.push_back(make_probe(xi, g, base));
    for (const auto& p : probes) probe_ptrs.push_back(&p);

    Eigen::MatrixXd h1 = basis.h1_gram();
    OperatorSet base_set = assemble_operator_set(base, g, basis, probe_ptrs,
                                                 opt.lambda_stride, opt.cfl, opt.threads);
    RegularizedInverse base_inv =
        pseudo_inverse(base_set.connecting.op.matrix, RegMethod::TruncatedEig, opt.trunc);

    auto fourier_all = [&](const OperatorSet& set, const RegularizedInverse& inv,
                           std::vector<std::complex<double>>& out) {
        out.clear();
        for (std::size_t q = 0; q < xi_set.size(); ++q) {
            Eigen::VectorXcd kphi = set.probe_pairings.row(2 * q).transpose();
            Eigen::VectorXcd kpsi = set.probe_pairings.row(2 * q + 1).transpose();
            out.push_back(fourier_sample(inv, kphi, kpsi, probes[q].iota));
        }
    };
    std::vector<std::complex<double>> f_base;
    fourier_all(base_set, base_inv, f_base);

    Eigen::VectorXd vw(g.node_count);
    for (std::int64_t i = 0; i < g.node_count; ++i) vw[i] = g.volume_weight(i);

    for (double eps : exp.epsilons) {
        MaterialModel pert = base;
        pert.rho = exp.rho_base + eps * exp.delta_rho;
        auto v = validate_material(pert, g);
        if (!v.admissible())
            throw std::invalid_argument(
                "run_perturbation_experiment: perturbed density leaves the bounds at "
                "epsilon = " + std::to_string(eps));

        OperatorSet pert_set = assemble_operator_set(pert, g, basis, probe_ptrs,
                                                     opt.lambda_stride, opt.cfl, opt.threads);
        RegularizedInverse pert_inv = pseudo_inverse(pert_set.connecting.op.matrix,
                                                     RegMethod::TruncatedEig, opt.trunc);
        // report-only pseudo-inverse sensitivity, paired with ||J~ - J||
        Eigen::MatrixXd jdag_base = base_inv.vectors *
                                    base_inv.inv_values.asDiagonal() *
                                    base_inv.vectors.transpose();
        Eigen::MatrixXd jdag_pert = pert_inv.vectors *
                                    pert_inv.inv_values.asDiagonal() *
                                    pert_inv.vectors.transpose();

        EpsilonRecord rec;
        rec.epsilon = eps;
        rec.E = dtn_distance(base_set, pert_set, h1);
        rec.jdag_diff = symmetric_operator_norm(jdag_pert - jdag_base);
        rec.j_diff = symmetric_operator_norm(pert_set.connecting.op.matrix -
                                             base_set.connecting.op.matrix);
        if (rec.E <= 0.0 && eps != 0.0)
            throw std::runtime_error(
                "run_perturbation_experiment: degenerate measurement, E = 0 for a "
                "nonzero perturbation");
        Eigen::VectorXd diff = eps * exp.delta_rho;
        rec.l2_diff = std::sqrt((diff.array().square() * vw.array()).sum());

        std::vector<std::complex<double>> f_pert;
        fourier_all(pert_set, pert_inv, f_pert);
        for (std::size_t q = 0; q < xi_set.size(); ++q) {
            rec.f_diff_op.push_back(f_pert[q] - f_base[q]);
            rec.f_diff_oracle.push_back(oracle_fourier(diff, g, xi_set[q]));
        }

        if (rec.E > 0.0) {
            rec.gamma = -std::log(rec.E) / (4.0 * rep.R + 1.0);
            rec.out_of_regime = rec.E >= std::exp(-8.0 * rep.R - 2.0);
            double le = std::log(rec.E);
            rec.log_bound = 1.0 / (le * le);
            if (rec.gamma > 0.0) {
                std::vector<FourierSample> samples;
                for (const auto& xi : xi_lattice(g, rec.gamma))
                    samples.push_back({xi, oracle_fourier(diff, g, xi)});
                if (!samples.empty()) {
                    auto r = reconstruct_density(samples, rec.gamma, g, &diff);
                    rec.band_recon_l2 = r.rel_l2_vs_full_truth;
                }
            }
        } else {
            rec.out_of_regime = false;
            rec.gamma = std::numeric_limits<double>::infinity();
            rec.log_bound = 0.0;
        }
        rep.records.push_back(std::move(rec));
    }

    // per-xi slopes and bound constants
    for (std::size_t q = 0; q < xi_set.size(); ++q) {
        std::vector<double> es, fo, fq;
        double worst = 0.0;
        for (const auto& rec : rep.records) {
            es.push_back(rec.E);
            fo.push_back(std::abs(rec.f_diff_op[q]));
            fq.push_back(std::abs(rec.f_diff_oracle[q]));
            if (rec.E > 0.0)
                worst = std::max(worst, std::abs(rec.f_diff_op[q]) /
                                            (std::exp(2.0 * rep.R * xi_set[q].norm()) * rec.E));
        }
        rep.slope_op.push_back(loglog_slope(es, fo));
        rep.slope_oracle.push_back(loglog_slope(es, fq));
        rep.bound_ratio_max.push_back(worst);
    }
    return rep;
}

SobolevReport sobolev_class_check(const Eigen::VectorXd& rho_field, const Grid& g,
                                  double s, double bound) {
    SobolevReport rep;
    rep.s = s;
    rep.bound = bound;

    const double L = g.hi - g.lo;
    const double base = 2.0 * M_PI / L;
    const int kmax = (g.n - 1) / 2;
    const int d = g.d;
    const std::complex<double> I(0.0, 1.0);

    // per-axis phase tables E[a](k + kmax, i) = w1d-free e^{i xi_k x_i}
    std::vector<Eigen::MatrixXcd> phases(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        phases[static_cast<std::size_t>(a)].resize(2 * kmax + 1, g.n);
        for (int k = -kmax; k <= kmax; ++k)
            for (int i = 0; i < g.n; ++i)
                phases[static_cast<std::size_t>(a)](k + kmax, i) =
                    std::exp(I * (base * k * g.position(i)));
    }

    double acc = 0.0;
    auto weight = [&](double xi2) { return std::pow(1.0 + xi2, s + 2.0); };

    if (d == 2) {
        // separable contraction: F(k0,k1) = sum_ij w_ij rho_ij e^{i xi.x}
        Eigen::MatrixXcd wrho(g.n, g.n);
        for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
            auto c = g.coords(idx);
            wrho(c[0], c[1]) = g.volume_weight(idx) * rho_field[idx];
        }
        Eigen::MatrixXcd F = phases[0] * wrho * phases[1].transpose();
        for (int k0 = -kmax; k0 <= kmax; ++k0)
            for (int k1 = -kmax; k1 <= kmax; ++k1) {
                double xi2 = base * base * (k0 * k0 + k1 * k1);
                acc += weight(xi2) * std::norm(F(k0 + kmax, k1 + kmax));
            }
    } else {
        for (int k0 = -kmax; k0 <= kmax; ++k0)
            for (int k1 = -kmax; k1 <= kmax; ++k1)
                for (int k2 = -kmax; k2 <= kmax; ++k2) {
                    std::complex<double> f{};
                    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
                        auto c = g.coords(idx);
                        f += g.volume_weight(idx) * rho_field[idx] *
                             phases[0](k0 + kmax, c[0]) * phases[1](k1 + kmax, c[1]) *
                             phases[2](k2 + kmax, c[2]);
                    }
                    double xi2 = base * base * (k0 * k0 + k1 * k1 + k2 * k2);
                    acc += weight(xi2) * std::norm(f);
                }
    }
    rep.norm = std::sqrt(acc / std::pow(L, d));
    rep.holds = rep.norm <= bound;
    return rep;
}

}  // namespace ebc
