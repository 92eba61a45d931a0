#include "ebc/boundary_operator.hpp"

#include "ebc/static_solver.hpp"

#include <cmath>
#include <atomic>
#include <mutex>
#include <thread>

namespace ebc {

BoundaryOperator adjoint(const BoundaryOperator& op) {
    if (op.w_in.size() != op.matrix.cols() || op.w_out.size() != op.matrix.rows())
        throw std::invalid_argument("adjoint: weight sizes do not match the matrix");
    if (op.w_in.minCoeff() <= 0.0 || op.w_out.minCoeff() <= 0.0)
        throw std::invalid_argument("adjoint: inner-product weights must be positive");
    BoundaryOperator out;
    out.matrix = op.w_in.cwiseInverse().asDiagonal() * op.matrix.transpose() *
                 op.w_out.asDiagonal();
    out.w_in = op.w_out;
    out.w_out = op.w_in;
    out.horizon = op.horizon;
    out.out_tg = op.out_tg;
    return out;
}

Eigen::VectorXd sample_weights(const Grid& g, const TimeGrid& tg) {
    Eigen::VectorXd space = boundary_space_weights(g);
    Eigen::VectorXd w((tg.steps + 1) * space.size());
    for (int k = 0; k <= tg.steps; ++k)
        w.segment(k * space.size(), space.size()) = tg.weight(k) * space;
    return w;
}

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

}  // namespace

BoundaryOperator assemble_dtn(const MaterialModel& m, const Grid& g,
                              const BoundaryBasis& basis, double horizon,
                              const DtnOptions& opt) {
    const TimeGrid& tgT = basis.atoms.tg;
    const double T = tgT.horizon();
    bool two_T = std::abs(horizon - 2.0 * T) < 1e-9 * T;
    if (!two_T && std::abs(horizon - T) > 1e-9 * T)
        throw std::invalid_argument("assemble_dtn: horizon must be T or 2T");

    TimeGrid tg_solve = two_T ? TimeGrid{tgT.dt, 2 * tgT.steps} : tgT;
    const int stride = std::max(opt.output_stride, 1);
    if (tg_solve.steps % stride != 0)
        throw std::invalid_argument("assemble_dtn: output stride must divide the step count");
    for (int a = 1; a < basis.atoms.count; ++a)
        if ((basis.atoms.shifts[static_cast<std::size_t>(a)] - basis.atoms.shifts[0]) % stride != 0)
            throw std::invalid_argument(
                "assemble_dtn: atom shifts must be multiples of the output stride");

    TimeGrid out_tg{tg_solve.dt * stride, tg_solve.steps / stride};
    const std::int64_t nb = g.boundary_count();
    const int d = g.d;
    const int K = basis.atoms.count;
    const std::int64_t n_in = basis.size();
    const std::int64_t n_space = nb * d;
    const std::int64_t n_out = (out_tg.steps + 1) * n_space;

    BoundaryOperator op;
    op.horizon = horizon;
    op.out_tg = out_tg;
    op.w_in = Eigen::VectorXd::Ones(n_in);
    op.w_out = sample_weights(g, out_tg);
    op.matrix.setZero(n_out, n_in);

    double dt_max = cfl_dt_limit(m, g, opt.cfl);
    if (tg_solve.dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument("assemble_dtn: CFL violation, need dt <= " +
                                    std::to_string(dt_max));

    std::optional<ElastostaticSolver> statics;
    if (opt.scattered) statics.emplace(m, g);

    // one solve per (boundary node, component); atoms are exact time shifts
    run_chunked(nb * d, opt.threads, [&](std::int64_t group) {
        std::int64_t b = group / d;
        int c = static_cast<int>(group % d);

        BoundaryField src(g, tg_solve);
        double scale = basis.spatial_scale(b);
        for (int k = 0; k <= std::min(tgT.steps, tg_solve.steps); ++k)
            src.values(k, b * d + c) = scale * basis.atoms.sample(0, k);

        Eigen::VectorXd kappa = Eigen::VectorXd::Zero(n_space);
        if (statics) {
            Eigen::VectorXd profile = Eigen::VectorXd::Zero(n_space);
            profile[b * d + c] = scale;
            Eigen::VectorXd static_state = statics->solve(profile);
            traction_row(m, g, static_state.data(), kappa.data());
        }

        // stream the traction of the mother solve on the strided grid
        Eigen::MatrixXd mother_traction(out_tg.steps + 1, n_space);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count * d);
        Eigen::VectorXd row(n_space);
        leapfrog_march(m, g, zero, zero, &src, tg_solve,
                       [&](int k, const Eigen::VectorXd& u) {
                           if (k % stride != 0) return;
                           traction_row(m, g, u.data(), row.data());
                           if (statics) {
                               double beta = basis.atoms.sample(0, k);
                               if (beta != 0.0) row -= beta * kappa;
                           }
                           mother_traction.row(k / stride) = row;
                       });

        for (int a = 0; a < K; ++a) {
            std::int64_t col = basis.encode(b, c, a);
            int shift = (basis.atoms.shifts[static_cast<std::size_t>(a)] -
                         basis.atoms.shifts[0]) / stride;
            for (int r = 0; r <= out_tg.steps; ++r) {
                int rs = r - shift;
                if (rs < 0) continue;
                op.matrix.block(r * n_space, col, n_space, 1) =
                    mother_traction.row(rs).transpose();
            }
        }
    });
    return op;
}

namespace {

// resample a full-rate boundary field onto a strided grid
template <typename Scalar>
BoundaryFieldT<Scalar> stride_field(const BoundaryFieldT<Scalar>& f, int stride) {
    if (stride <= 1) return f;
    if (f.tg.steps % stride != 0)
        throw std::invalid_argument("stride_field: stride must divide the step count");
    BoundaryFieldT<Scalar> out;
    out.tg = TimeGrid{f.tg.dt * stride, f.tg.steps / stride};
    out.values.resize(out.tg.steps + 1, f.values.cols());
    for (int k = 0; k <= out.tg.steps; ++k) out.values.row(k) = f.values.row(k * stride);
    return out;
}

}  // namespace

ConnectingOperator connecting_operator(const BoundaryOperator& lambda_T,
                                       const BoundaryOperator& lambda_2T,
                                       const BoundaryBasis& basis) {
    const Grid& g = *basis.grid;
    const int d = g.d;
    const std::int64_t nb = g.boundary_count();
    const std::int64_t n_space = nb * d;
    const std::int64_t N = basis.size();
    const TimeGrid& tgT = basis.atoms.tg;

    if (std::abs(lambda_2T.horizon - 2.0 * lambda_T.horizon) > 1e-9 * lambda_T.horizon)
        throw std::invalid_argument("connecting_operator: horizons must be T and 2T");
    if (lambda_T.matrix.cols() != N || lambda_2T.matrix.cols() != N)
        throw std::invalid_argument("connecting_operator: basis size mismatch");

    const TimeGrid& otT = lambda_T.out_tg;
    int strideT = tgT.steps / otT.steps;

    Eigen::MatrixXd A(N, N), B(N, N);

    // A_ij = <Lambda_T f_i, B Theta f_j>: the right factor is supported at
    // f_j's boundary slot, so each column touches one space slot of the rows
    for (std::int64_t j = 0; j < N; ++j) {
        auto key = basis.decode(j);
        BoundaryField fj = basis.element_field(j);
        BoundaryField bt = stride_field(half_window_integral(extend_by_zero(fj)), strideT);
        std::int64_t slot = key.bnode * d + key.comp;
        double wb = g.boundary_weight[static_cast<std::size_t>(key.bnode)];
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
        for (int k = 0; k <= otT.steps; ++k) {
            double v = bt.values(k, slot);
            if (v == 0.0) continue;
            acc += (otT.weight(k) * wb * v) * lambda_T.matrix.row(k * n_space + slot).transpose();
        }
        A.col(j) = acc;
    }

    // B_ij = <f_i, B(Lambda_2T Theta f_j)>
    const TimeGrid& ot2 = lambda_2T.out_tg;
    for (std::int64_t j = 0; j < N; ++j) {
        BoundaryFieldT<double> col;
        col.tg = ot2;
        col.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(
            lambda_2T.matrix.col(j).data(), ot2.steps + 1, n_space);
        BoundaryField bcol = half_window_integral(col);
        // pair with every basis element: sparse in space, dense in atoms
        for (std::int64_t b = 0; b < nb; ++b) {
            double wb = g.boundary_weight[static_cast<std::size_t>(b)];
            double scale = basis.spatial_scale(b);
            for (int c = 0; c < d; ++c)
                for (int a = 0; a < basis.atoms.count; ++a) {
                    double acc = 0.0;
                    for (int k = 0; k <= bcol.tg.steps; ++k) {
                        int kk = k * (tgT.steps / bcol.tg.steps);
                        double atom = basis.atoms.sample(a, kk);
                        if (atom == 0.0) continue;
                        acc += bcol.tg.weight(k) * atom * bcol.values(k, b * d + c);
                    }
                    B(basis.encode(b, c, a), j) = wb * scale * acc;
                }
        }
    }

    return finalize_connecting(A - B, lambda_2T.horizon, tgT);
}

ConnectingOperator finalize_connecting(const Eigen::MatrixXd& raw, double horizon,
                                       const TimeGrid& tg) {
    const Eigen::Index N = raw.rows();
    ConnectingOperator out;
    double nrm = raw.norm();
    out.asymmetry_defect = nrm > 0.0 ? (raw - raw.transpose()).norm() / nrm : 0.0;

    Eigen::MatrixXd S = 0.5 * (raw + raw.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("finalize_connecting: eigen-decomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    double smax = ev.size() ? ev.maxCoeff() : 0.0;
    double smin = ev.size() ? ev.minCoeff() : 0.0;
    out.indefiniteness_defect = (smax > 0.0 && smin < 0.0) ? -smin / smax : 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], 0.0);
    out.op.matrix = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    // the reconstructed product is symmetric only up to round-off
    out.op.matrix = 0.5 * (out.op.matrix + out.op.matrix.transpose()).eval();
    out.op.w_in = Eigen::VectorXd::Ones(N);
    out.op.w_out = Eigen::VectorXd::Ones(N);
    out.op.horizon = horizon;
    out.op.out_tg = tg;
    return out;
}

BoundaryFieldC probe_time_fields(const Grid& g, const TimeGrid& tg,
                                 const Eigen::VectorXcd& trace) {
    BoundaryFieldC f(g, tg);
    const double T = tg.horizon();
    for (int k = 0; k <= tg.steps; ++k)
        f.values.row(k) = (T - k * tg.dt) * trace.transpose();
    return f;
}

Eigen::VectorXcd apply_probe_operator(const BoundaryOperator& lambda_T,
                                      const BoundaryBasis& basis,
                                      const ProbeTraces& traces) {
    const Grid& g = *basis.grid;
    const std::int64_t n_space = g.boundary_count() * g.d;
    if (traces.t0.size() != n_space)
        throw std::invalid_argument("apply_probe_operator: trace size mismatch");
    const TimeGrid& ot = lambda_T.out_tg;

    // <Lambda f_i, (T-t) T0 phi> over output samples; the I(T1 phi) term is
    // consumed by the subtracted static response (static Green identity)
    BoundaryFieldC it0 = probe_time_fields(g, ot, traces.t0);
    Eigen::VectorXd re((ot.steps + 1) * n_space), im((ot.steps + 1) * n_space);
    for (int k = 0; k <= ot.steps; ++k)
        for (std::int64_t s = 0; s < n_space; ++s) {
            re[k * n_space + s] = it0.values(k, s).real();
            im[k * n_space + s] = it0.values(k, s).imag();
        }
    Eigen::VectorXd p_re = lambda_T.matrix.transpose() * lambda_T.w_out.cwiseProduct(re);
    Eigen::VectorXd p_im = lambda_T.matrix.transpose() * lambda_T.w_out.cwiseProduct(im);

    Eigen::VectorXcd p(basis.size());
    for (std::int64_t i = 0; i < basis.size(); ++i)
        p[i] = std::complex<double>(p_re[i], p_im[i]);
    return p;
}

Eigen::VectorXd control_state(const MaterialModel& m, const Grid& g,
                              const BoundaryField& f, double cfl) {
    Trajectory traj = solve_ibvp(m, g, f, {cfl, StoragePolicy::FinalTwo});
    return traj.final_state;
}

double volume_rho_pairing(const MaterialModel& m, const Grid& g,
                          const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return state_rho_pairing<double, double>(m, g, u, v);
}

std::complex<double> volume_rho_pairing_complex(const MaterialModel& m, const Grid& g,
                                                const Eigen::VectorXd& u,
                                                const Eigen::VectorXcd& phi) {
    Eigen::VectorXcd uc = u.cast<std::complex<double>>();
    return state_rho_pairing<std::complex<double>, std::complex<double>>(m, g, uc, phi);
}

}  // namespace ebc
