#include "ebc/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ebc {

double CarlemanConfig::prefactor(double T) const {
    double denom = T * C0 - 2.0 * C2 * C3;
    if (!(denom > 0.0))
        throw std::invalid_argument("CarlemanConfig::prefactor: T <= T_min = " +
                                    std::to_string(T_min));
    return C1 * C3 / denom;
}

CarlemanConfig carleman_constants(const MaterialModel& m, const Grid& g,
                                  double c0, double c1, double rho2, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("carleman_constants: tau must be positive");
    CarlemanConfig cfg;
    cfg.tau = tau;
    cfg.script_c = g.d - 1;
    cfg.c0 = c0;
    cfg.c1 = c1;
    cfg.rho2 = rho2;

    cfg.l.resize(g.node_count);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto x = g.point(idx);
        double v = 0.0;
        for (int a = 0; a < g.d; ++a) v += (x[a] - g.x0[a]) * (x[a] - g.x0[a]);
        cfg.l[idx] = 0.5 * v;
    }

    // max |grad l| = max |x - x0| over the closed box, attained at a corner
    double best = 0.0;
    for (int mask = 0; mask < (1 << g.d); ++mask) {
        double v = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double xa = (mask >> a & 1) ? g.hi : g.lo;
            v += (xa - g.x0[a]) * (xa - g.x0[a]);
        }
        best = std::max(best, v);
    }
    cfg.max_grad_l = std::sqrt(best);

    const auto& b = m.bounds;
    cfg.C0 = std::min(rho2, c1);
    cfg.C1 = std::max({std::sqrt(2.0), std::sqrt(1.0 + b.mu0) / (2.0 * b.mu0),
                       std::sqrt(5.0 / (4.0 * b.mu0))}) *
             cfg.max_grad_l;
    cfg.C2 = std::max(b.rho1 / 2.0, 2.0 / c0 * cfg.max_grad_l * cfg.max_grad_l);
    cfg.C3 = std::max(1.0, 2.0 * b.mu1 + std::max(std::abs(b.lambda0), std::abs(b.lambda1)));
    cfg.T_min = 2.0 * cfg.C2 * cfg.C3 / cfg.C0;
    cfg.gamma_mask = gamma_region(g);
    for (int f = 0; f < 2 * g.d; ++f) {
        int a = Grid::face_axis(f);
        int sgn = Grid::face_sign(f);
        double coord = sgn > 0 ? g.hi : g.lo;
        if (sgn * (coord - g.x0[a]) == 0.0) cfg.gamma_degenerate = true;
    }
    return cfg;
}

std::vector<bool> gamma_region(const Grid& g) {
    std::vector<bool> mask(static_cast<std::size_t>(g.boundary_count()));
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
        auto x = g.point(node);
        auto nu = g.normal(b);
        double dot = 0.0;
        for (int a = 0; a < g.d; ++a) dot += (x[a] - g.x0[a]) * nu[a];
        mask[static_cast<std::size_t>(b)] = dot > 0.0;
    }
    return mask;
}

std::array<bool, 6> gamma_faces(const Grid& g) {
    std::array<bool, 6> faces{};
    for (int f = 0; f < 2 * g.d; ++f) {
        int a = Grid::face_axis(f);
        int s = Grid::face_sign(f);
        double coord = s > 0 ? g.hi : g.lo;
        faces[static_cast<std::size_t>(f)] = s * (coord - g.x0[a]) > 0.0;
    }
    return faces;
}

RhoConditionReport check_rho_condition(const MaterialModel& m, const Grid& g,
                                       const CarlemanConfig& cfg) {
    Eigen::MatrixXd grad_rho = scalar_gradient(m.rho, g);
    RhoConditionReport rep;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto x = g.point(idx);
        double dot = 0.0;
        for (int a = 0; a < g.d; ++a) dot += grad_rho(idx, a) * (x[a] - g.x0[a]);
        double v = 1.0 + dot / m.rho[idx];
        if (v < rep.min_value) {
            rep.min_value = v;
            rep.argmin = idx;
        }
    }
    rep.holds = rep.min_value > cfg.rho2;
    return rep;
}

CarlemanDecomposition carleman_decomposition(const Eigen::VectorXd& w_prev,
                                             const Eigen::VectorXd& w_mid,
                                             const Eigen::VectorXd& w_next, double dt,
                                             const MaterialModel& m, const Grid& g,
                                             const CarlemanConfig& cfg) {
    if (!(cfg.tau > 0.0)) throw std::invalid_argument("carleman_decomposition: tau <= 0");
    const int d = g.d;
    const std::int64_t dof = g.node_count * d;
    if (w_prev.size() != dof || w_mid.size() != dof || w_next.size() != dof)
        throw std::invalid_argument("carleman_decomposition: state size mismatch");

    const double tau = cfg.tau;
    const double C = cfg.script_c;

    // v = e^{tau l} w at the three levels
    Eigen::VectorXd vp(dof), vm(dof), vn(dof);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        double e = std::exp(tau * cfg.l[idx]);
        for (int c = 0; c < d; ++c) {
            vp[idx * d + c] = e * w_prev[idx * d + c];
            vm[idx * d + c] = e * w_mid[idx * d + c];
            vn[idx * d + c] = e * w_next[idx * d + c];
        }
    }

    Eigen::VectorXd Av(dof), Aw(dof);
    apply_elastic_operator(m, g, vm.data(), Av.data());
    apply_elastic_operator(m, g, w_mid.data(), Aw.data());
    Eigen::MatrixXd grad_mu = scalar_gradient(m.mu, g);
    Eigen::MatrixXd grad_la = scalar_gradient(m.lambda, g);

    CarlemanDecomposition out;
    out.s1.setZero(dof);
    out.s2.setZero(dof);
    out.defect = 0.0;
    out.sos_margin = std::numeric_limits<double>::infinity();

    const double inv_2h = 1.0 / (2.0 * g.h);
    const double inv_dt2 = 1.0 / (dt * dt);

    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto ci = g.coords(idx);
        bool interior = true;
        for (int a = 0; a < d; ++a)
            if (ci[a] == 0 || ci[a] == g.n - 1) interior = false;
        if (!interior) continue;
        out.evaluated.push_back(idx);

        auto x = g.point(idx);
        double gl[3];
        double gl2 = 0.0;
        for (int a = 0; a < d; ++a) {
            gl[a] = x[a] - g.x0[a];
            gl2 += gl[a] * gl[a];
        }
        double mu = m.mu[idx], la = m.lambda[idx], rho = m.rho[idx];
        double el = std::exp(tau * cfg.l[idx]);

        // centered Jacobian of v and divergence
        double gv[3][3];
        double div_v = 0.0;
        for (int a = 0; a < d; ++a) {
            std::int64_t s = g.stride[a];
            for (int i = 0; i < d; ++i)
                gv[a][i] = (vm[(idx + s) * d + i] - vm[(idx - s) * d + i]) * inv_2h;
            div_v += gv[a][a];
        }

        double gl_dot_v = 0.0, gmu_dot_v = 0.0, gmu_dot_gl = 0.0;
        for (int a = 0; a < d; ++a) {
            gl_dot_v += gl[a] * vm[idx * d + a];
            gmu_dot_v += grad_mu(idx, a) * vm[idx * d + a];
            gmu_dot_gl += grad_mu(idx, a) * gl[a];
        }

        double max_ps = 0.0;
        double s1s2 = 0.0, n1 = 0.0, n2 = 0.0, nsum = 0.0;
        for (int i = 0; i < d; ++i) {
            double vtt = (vn[idx * d + i] - 2.0 * vm[idx * d + i] + vp[idx * d + i]) * inv_dt2;
            double wtt = (w_next[idx * d + i] - 2.0 * w_mid[idx * d + i] +
                          w_prev[idx * d + i]) * inv_dt2;

            double gradv_gl = 0.0;   // (grad v . grad l)_i
            double gradvT_gl = 0.0;  // (grad v^T . grad l)_i
            for (int a = 0; a < d; ++a) {
                gradv_gl += gv[a][i] * gl[a];
                gradvT_gl += gv[i][a] * gl[a];
            }

            double s1 = rho * vtt - Av[idx * d + i];
            s1 += mu * tau * d * vm[idx * d + i];          // mu tau (Lap l) v, Lap l = d
            s1 -= mu * tau * tau * gl2 * vm[idx * d + i];  // -mu tau^2 |grad l|^2 v
            s1 += (la + mu) * tau * vm[idx * d + i];       // (la+mu) tau Hess(l) v = v
            s1 -= (la + mu) * tau * tau * gl[i] * gl_dot_v;
            s1 += tau * (gmu_dot_v * gl[i] + gmu_dot_gl * vm[idx * d + i]);
            s1 += tau * gl_dot_v * grad_la(idx, i);
            s1 += 2.0 * (mu - 1.0) * tau * gradv_gl;
            s1 += (la + mu) * tau * gradvT_gl;
            s1 += (la + mu) * tau * div_v * gl[i];
            s1 -= tau * C * vm[idx * d + i];

            double s2 = tau * (2.0 * gradv_gl + C * vm[idx * d + i]);

            out.s1[idx * d + i] = s1;
            out.s2[idx * d + i] = s2;

            double pw = el * (rho * wtt - Aw[idx * d + i]);
            max_ps = std::max(max_ps, std::abs(s1 + s2 - pw));

            s1s2 += s1 * s2;
            n1 += s1 * s1;
            n2 += s2 * s2;
            nsum += (s1 + s2) * (s1 + s2);
        }
        out.defect = std::max(out.defect, max_ps);
        out.sos_margin = std::min(out.sos_margin, 0.5 * nsum - s1s2);
    }
    return out;
}

Eigen::VectorXd random_smooth_state(const Grid& g, unsigned seed, int max_mode) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(g.node_count * g.d);
    double L = g.hi - g.lo;
    const int d = g.d;

    auto add_mode = [&](const std::array<int, 3>& mode, int comp, double amp) {
        for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
            auto x = g.point(idx);
            double v = amp;
            for (int a = 0; a < d; ++a)
                v *= std::sin(mode[a] * M_PI * (x[a] - g.lo) / L);
            u[idx * d + comp] += v;
        }
    };

    std::array<int, 3> mode{1, 1, 1};
    for (int m0 = 1; m0 <= max_mode; ++m0)
        for (int m1 = 1; m1 <= max_mode; ++m1) {
            if (d == 2) {
                mode = {m0, m1, 1};
                double decay = 1.0 / ((m0 + m1) * (m0 + m1));
                for (int c = 0; c < d; ++c) add_mode(mode, c, U(rng) * decay);
            } else {
                for (int m2 = 1; m2 <= max_mode; ++m2) {
                    mode = {m0, m1, m2};
                    double decay = 1.0 / ((m0 + m1 + m2) * (m0 + m1 + m2));
                    for (int c = 0; c < d; ++c) add_mode(mode, c, U(rng) * decay);
                }
            }
        }
    // exact zeros on the boundary
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
        for (int c = 0; c < d; ++c) u[node * d + c] = 0.0;
    }
    return u;
}

ObservabilityStatistics empirical_observability(const MaterialModel& m, const Grid& g,
                                                const CarlemanConfig& cfg, double T,
                                                int ensemble_size, unsigned seed,
                                                double cfl) {
    if (!(T > 0.0)) throw std::invalid_argument("empirical_observability: T must be positive");
    TimeGrid tg = make_time_grid(T, cfl_dt_limit(m, g, cfl));
    const int d = g.d;

    // Gamma-restricted space weights
    Eigen::VectorXd wg = Eigen::VectorXd::Zero(g.boundary_count() * d);
    for (std::int64_t b = 0; b < g.boundary_count(); ++b)
        if (cfg.gamma_mask[static_cast<std::size_t>(b)])
            for (int c = 0; c < d; ++c)
                wg[b * d + c] = g.boundary_weight[static_cast<std::size_t>(b)];

    ObservabilityStatistics stats;
    Eigen::VectorXd tr(g.boundary_count() * d);
    for (int s = 0; s < ensemble_size; ++s) {
        Eigen::VectorXd u0 = random_smooth_state(g, seed + 2 * s, 3);
        Eigen::VectorXd v0 = random_smooth_state(g, seed + 2 * s + 1, 3);

        double denom2 = 0.0;
        Eigen::VectorXd last, second_last;
        leapfrog_march(m, g, u0, v0, nullptr, tg, [&](int k, const Eigen::VectorXd& u) {
            traction_row(m, g, u.data(), tr.data());
            denom2 += tg.weight(k) * tr.cwiseAbs2().dot(wg);
            if (k == tg.steps) last = u;
            if (k == tg.steps - 1) second_last = u;
        });

        ObservabilitySample sample;
        Eigen::VectorXd ut = (last - second_last) / tg.dt;
        sample.numerator = state_l2(g, ut) + state_h1(g, last);
        sample.denominator = std::sqrt(denom2);
        if (sample.denominator <= 0.0) {
            sample.unobservable = true;
        } else {
            sample.ratio = sample.numerator / sample.denominator;
        }
        stats.samples.push_back(sample);
    }

    std::vector<double> ratios;
    for (auto& s : stats.samples)
        if (!s.unobservable) ratios.push_back(s.ratio);
    if (!ratios.empty()) {
        stats.max_ratio = *std::max_element(ratios.begin(), ratios.end());
        std::vector<double> sorted = ratios;
        std::sort(sorted.begin(), sorted.end());
        stats.median_ratio = sorted[sorted.size() / 2];
        std::size_t half = std::max<std::size_t>(1, ratios.size() / 2);
        stats.max_ratio_half = *std::max_element(ratios.begin(), ratios.begin() + half);
    }
    return stats;
}

}  // namespace ebc
