#include "ebc/pipeline.hpp"

#include "ebc/static_solver.hpp"

#include <cmath>
#include <atomic>
#include <mutex>
#include <thread>

namespace ebc {

namespace {

// runs fn over [0, count) on worker threads; the first failure is rethrown
// on the caller with the offending column group named
void run_chunked(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
    int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    nt = std::max(1, std::min<int>(nt, static_cast<int>(count)));
    std::exception_ptr error;
    std::int64_t error_group = -1;
    std::mutex error_mutex;
    std::atomic<bool> failed{false};
    auto guarded = [&](std::int64_t i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) {
                error = std::current_exception();
                error_group = i;
            }
            failed = true;
        }
    };
    if (nt == 1) {
        for (std::int64_t i = 0; i < count && !failed; ++i) guarded(i);
    } else {
        std::vector<std::thread> pool;
        std::int64_t chunk = (count + nt - 1) / nt;
        for (int t = 0; t < nt; ++t) {
            std::int64_t lo = t * chunk, hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (std::int64_t i = lo; i < hi && !failed; ++i) guarded(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    if (error) {
        try {
            std::rethrow_exception(error);
        } catch (const std::exception& e) {
            throw std::runtime_error("column group " + std::to_string(error_group) +
                                     ": " + e.what());
        }
    }
}

// half-window integral along one column profile on (0,2T) restricted to (0,T)
Eigen::VectorXd profile_half_window(const Eigen::VectorXd& prof2T, double dt) {
    const int M2 = static_cast<int>(prof2T.size()) - 1;
    const int M = M2 / 2;
    Eigen::VectorXd prefix = prof2T;
    for (int k = 1; k <= M2; ++k) prefix[k] += prefix[k - 1];
    Eigen::VectorXd out = Eigen::VectorXd::Zero(M + 1);
    for (int k = 0; k < M; ++k) {
        int m = M2 - k;
        double sum = prefix[m] - (k > 0 ? prefix[k - 1] : 0.0);
        sum -= 0.5 * (prof2T[k] + prof2T[m]);
        out[k] = 0.5 * dt * sum;
    }
    return out;
}

}  // namespace

Assembly assemble_all(const MaterialModel& m, const Grid& g, const BoundaryBasis& basis,
                      const AssemblyRequest& req) {
    const TimeGrid& tgT = basis.atoms.tg;
    const TimeGrid tg2{tgT.dt, 2 * tgT.steps};
    const int d = g.d;
    const std::int64_t nb = g.boundary_count();
    const std::int64_t n_space = nb * d;
    const std::int64_t N = basis.size();
    const int K = basis.atoms.count;
    const int n_probes = static_cast<int>(req.probes.size());
    const double T = tgT.horizon();

    double dt_max = cfl_dt_limit(m, g, req.cfl);
    if (tgT.dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument("assemble_all: CFL violation, need dt <= " +
                                    std::to_string(dt_max));

    // columns carry the scattered wave response: the instantaneous
    // elastostatic part (density-independent) is subtracted per source
    ElastostaticSolver statics(m, g);

    // Theta-extended, half-window-integrated atom profiles on (0,T)
    Eigen::MatrixXd btheta(tgT.steps + 1, K);
    for (int a = 0; a < K; ++a) {
        Eigen::VectorXd prof = Eigen::VectorXd::Zero(tg2.steps + 1);
        for (int k = 0; k <= tgT.steps; ++k) prof[k] = basis.atoms.sample(a, k);
        btheta.col(a) = profile_half_window(prof, tgT.dt);
    }

    Eigen::VectorXd wspace = boundary_space_weights(g);

    Assembly out;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
    out.probe_pairings.setZero(n_probes, N);
    out.tracked_states.resize(req.tracked.size());

    int lam_stride = std::max(req.lambda_stride, 1);
    if (req.build_lambda_T) {
        if (tgT.steps % lam_stride != 0)
            throw std::invalid_argument("assemble_all: lambda stride must divide step count");
        for (int a = 1; a < K; ++a)
            if ((basis.atoms.shifts[static_cast<std::size_t>(a)] - basis.atoms.shifts[0]) %
                    lam_stride != 0)
                throw std::invalid_argument(
                    "assemble_all: atom shifts must be multiples of the lambda stride");
        BoundaryOperator lam;
        lam.horizon = T;
        lam.out_tg = TimeGrid{tgT.dt * lam_stride, tgT.steps / lam_stride};
        lam.w_in = Eigen::VectorXd::Ones(N);
        lam.w_out = sample_weights(g, lam.out_tg);
        lam.matrix.setZero((lam.out_tg.steps + 1) * n_space, N);
        out.lambda_T = std::move(lam);
    }

    run_chunked(nb * d, req.threads, [&](std::int64_t group) {
        std::int64_t b = group / d;
        int c = static_cast<int>(group % d);
        double scale = basis.spatial_scale(b);
        double wb = g.boundary_weight[static_cast<std::size_t>(b)];

        BoundaryField src(g, tg2);
        for (int k = 0; k <= tgT.steps; ++k)
            src.values(k, b * d + c) = scale * basis.atoms.sample(0, k);

        // capture steps for tracked atoms of this group: u_a(T) equals the
        // mother state at step T_steps - shift_a
        std::vector<std::pair<int, std::size_t>> captures;  // (step, tracked slot)
        for (std::size_t t = 0; t < req.tracked.size(); ++t) {
            auto key = basis.decode(req.tracked[t]);
            if (key.bnode == b && key.comp == c) {
                int shift = basis.atoms.shifts[static_cast<std::size_t>(key.atom)] -
                            basis.atoms.shifts[0];
                captures.emplace_back(tgT.steps - shift, t);
            }
        }

        // static response of the spatial profile and its traction
        Eigen::VectorXd profile = Eigen::VectorXd::Zero(n_space);
        profile[b * d + c] = scale;
        Eigen::VectorXd static_state = statics.solve(profile);
        Eigen::VectorXd kappa(n_space);
        traction_row(m, g, static_state.data(), kappa.data());

        Eigen::MatrixXd R(tg2.steps + 1, n_space);  // scattered traction, full rate
        Eigen::VectorXd row(n_space);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count * d);
        leapfrog_march(m, g, zero, zero, &src, tg2, [&](int k, const Eigen::VectorXd& u) {
            traction_row(m, g, u.data(), row.data());
            double beta = basis.atoms.sample(0, k);
            if (beta != 0.0) row -= beta * kappa;
            R.row(k) = row;
            for (auto& cap : captures)
                if (cap.first == k) out.tracked_states[cap.second] = u;
        });

        // prefix sums over time for O(1) window integrals of R
        Eigen::MatrixXd P = R;
        for (int k = 1; k <= tg2.steps; ++k) P.row(k) += P.row(k - 1);

        // boundary pairings of the mother traction with each probe trace
        Eigen::MatrixXcd probe_dot(tg2.steps + 1, n_probes);
        for (int k = 0; k <= tg2.steps; ++k)
            for (int q = 0; q < n_probes; ++q) {
                std::complex<double> dot{};
                for (std::int64_t s = 0; s < n_space; ++s)
                    dot += wspace[s] * R(k, s) * req.probes[q].t0[s];
                probe_dot(k, q) = dot;
            }

        // per-atom consumers; column i = (b, c, a)
        for (int a = 0; a < K; ++a) {
            std::int64_t i = basis.encode(b, c, a);
            int shift = basis.atoms.shifts[static_cast<std::size_t>(a)] - basis.atoms.shifts[0];

            // A row: A_ij = sum_k wt_k w_{b_j} R_i(k, slot_j) btheta_{a_j}(k) scale_j
            for (std::int64_t bj = 0; bj < nb; ++bj) {
                double wbj = g.boundary_weight[static_cast<std::size_t>(bj)];
                double scale_j = basis.spatial_scale(bj);
                for (int cj = 0; cj < d; ++cj) {
                    std::int64_t slot = bj * d + cj;
                    for (int aj = 0; aj < K; ++aj) {
                        double acc = 0.0;
                        for (int k = 0; k <= tgT.steps; ++k) {
                            int ks = k - shift;  // R_i(k) = R(k - shift)
                            if (ks < 0) continue;
                            double p = btheta(k, aj);
                            if (p == 0.0) continue;
                            acc += tgT.weight(k) * R(ks, slot) * p;
                        }
                        A(i, basis.encode(bj, cj, aj)) = wbj * scale_j * acc;
                    }
                }
            }

            // B column: B_ji = <f_j, B R_i> over (0,T); the shrinking-window
            // integral of the shifted mother comes from the prefix sums
            for (std::int64_t bj = 0; bj < nb; ++bj) {
                double wbj = g.boundary_weight[static_cast<std::size_t>(bj)];
                double scale_j = basis.spatial_scale(bj);
                for (int cj = 0; cj < d; ++cj) {
                    std::int64_t slot = bj * d + cj;
                    for (int aj = 0; aj < K; ++aj) {
                        int lo = basis.atoms.shifts[static_cast<std::size_t>(aj)];
                        int hi = std::min(lo + basis.atoms.support_steps, tgT.steps);
                        double acc = 0.0;
                        for (int k = lo; k <= hi; ++k) {
                            double atom = basis.atoms.sample(aj, k);
                            if (atom == 0.0) continue;
                            // (B R_i)(k) = 1/2 int_k^{2T-k} R(s - shift) ds
                            int wlo = k - shift, whi = tg2.steps - k - shift;
                            if (whi <= wlo) continue;
                            int s0 = std::max(wlo, 0);
                            double integ = P(whi, slot) - (s0 > 0 ? P(s0 - 1, slot) : 0.0) -
                                           0.5 * R(whi, slot);
                            if (wlo >= 0) integ -= 0.5 * R(wlo, slot);
                            acc += tgT.weight(k) * atom * (0.5 * tgT.dt) * integ;
                        }
                        B(basis.encode(bj, cj, aj), i) = wbj * scale_j * acc;
                    }
                }
            }

            // probe pairings: p_q[i] = <R_i, (T-t) T0_q>. The -<f_i, I T1_q>
            // term of the probe operator cancels against the subtracted static
            // response exactly (static Green identity for elastostatic probes).
            for (int q = 0; q < n_probes; ++q) {
                std::complex<double> acc{};
                for (int k = 0; k <= tgT.steps; ++k) {
                    int ks = k - shift;
                    if (ks < 0) continue;
                    acc += tgT.weight(k) * (T - k * tgT.dt) * probe_dot(ks, q);
                }
                out.probe_pairings(q, i) = acc;
            }

            // explicit Lambda_T columns
            if (out.lambda_T) {
                auto& lam = *out.lambda_T;
                int ls = lam_stride;
                for (int r = 0; r <= lam.out_tg.steps; ++r) {
                    int ks = r * ls - shift;
                    if (ks < 0) continue;
                    lam.matrix.block(r * n_space, i, n_space, 1) = R.row(ks).transpose();
                }
            }
        }
    });

    out.connecting = finalize_connecting(A - B, 2.0 * T, tgT);
    return out;
}

}  // namespace ebc
