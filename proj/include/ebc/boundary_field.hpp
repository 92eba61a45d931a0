#ifndef EBC_BOUNDARY_FIELD_HPP
#define EBC_BOUNDARY_FIELD_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

#include "ebc/grid.hpp"

namespace ebc {

// Uniform time sampling of (0, T]: samples t_k = k*dt, k = 0..steps.
struct TimeGrid {
    double dt = 0.0;
    int steps = 0;  // number of intervals; steps+1 samples

    double horizon() const { return dt * steps; }
    double weight(int k) const { return (k == 0 || k == steps) ? 0.5 * dt : dt; }
    bool compatible(const TimeGrid& o, double tol = 1e-12) const {
        return steps == o.steps && std::abs(dt - o.dt) <= tol * std::max(dt, o.dt);
    }
};

// Chooses dt <= cfl*h/c_max such that T/dt is an integer multiple of
// `multiple_of` steps.
TimeGrid make_time_grid(double T, double dt_max, int multiple_of = 1);

// Values on boundary nodes x time samples, with the quadrature weights of
// L^2((0,T) x boundary). Row k holds the sample at t_k, flattened as
// (boundary node b, component c) -> b*d + c.
template <typename Scalar>
struct BoundaryFieldT {
    // row-major: one time sample per contiguous row
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    TimeGrid tg;
    Mat values;  // (steps+1) x (nb*d)

    BoundaryFieldT() = default;
    BoundaryFieldT(const Grid& g, const TimeGrid& t)
        : tg(t), values(Mat::Zero(t.steps + 1, g.boundary_count() * g.d)) {}

    Eigen::Index space_size() const { return values.cols(); }

    Scalar& at(int k, std::int64_t b, int c, int d) { return values(k, b * d + c); }
    Scalar at(int k, std::int64_t b, int c, int d) const { return values(k, b * d + c); }
};

using BoundaryField = BoundaryFieldT<double>;
using BoundaryFieldC = BoundaryFieldT<std::complex<double>>;

// Spatial quadrature weights replicated per component: size nb*d.
Eigen::VectorXd boundary_space_weights(const Grid& g);

// Unconjugated space-time pairing sum_k wt_k sum_{b,c} w_b F(k,b,c) G(k,b,c).
template <typename SA, typename SB>
auto boundary_inner(const Grid& g, const BoundaryFieldT<SA>& f, const BoundaryFieldT<SB>& h)
    -> decltype(SA{} * SB{}) {
    if (f.values.rows() != h.values.rows() || f.values.cols() != h.values.cols())
        throw std::invalid_argument("boundary_inner: field shapes differ");
    Eigen::VectorXd w = boundary_space_weights(g);
    decltype(SA{} * SB{}) acc{};
    for (int k = 0; k < f.values.rows(); ++k) {
        decltype(SA{} * SB{}) row{};
        for (Eigen::Index j = 0; j < f.values.cols(); ++j)
            row += f.values(k, j) * h.values(k, j) * w[j];
        acc += f.tg.weight(k) * row;
    }
    return acc;
}

template <typename Scalar>
double boundary_norm(const Grid& g, const BoundaryFieldT<Scalar>& f) {
    Eigen::VectorXd w = boundary_space_weights(g);
    double acc = 0.0;
    for (int k = 0; k < f.values.rows(); ++k) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < f.values.cols(); ++j)
            row += std::norm(f.values(k, j)) * w[j];
        acc += f.tg.weight(k) * row;
    }
    return std::sqrt(acc);
}

// Extension of time by zero from (0,T) to (0,2T): values copied on [0,T],
// zero afterwards.
template <typename Scalar>
BoundaryFieldT<Scalar> extend_by_zero(const BoundaryFieldT<Scalar>& f) {
    BoundaryFieldT<Scalar> out;
    out.tg = TimeGrid{f.tg.dt, 2 * f.tg.steps};
    out.values.setZero(out.tg.steps + 1, f.values.cols());
    out.values.topRows(f.tg.steps + 1) = f.values;
    return out;
}

// Shrinking-window half integral (Bf)(t) = 1/2 int_t^{2T-t} f(s) ds for a
// field sampled on (0,2T); output lives on (0,T). Trapezoid in time.
template <typename Scalar>
BoundaryFieldT<Scalar> half_window_integral(const BoundaryFieldT<Scalar>& f) {
    if (f.tg.steps % 2 != 0)
        throw std::invalid_argument("half_window_integral: time grid must divide 2T evenly");
    const int M = f.tg.steps / 2;
    BoundaryFieldT<Scalar> out;
    out.tg = TimeGrid{f.tg.dt, M};
    out.values.setZero(M + 1, f.values.cols());

    using Mat = typename BoundaryFieldT<Scalar>::Mat;
    // prefix[k] = sum_{j<=k} f_j (plain sums; trapezoid ends handled below)
    Mat prefix = f.values;
    for (int k = 1; k <= f.tg.steps; ++k) prefix.row(k) += prefix.row(k - 1);

    const double dt = f.tg.dt;
    for (int k = 0; k < M; ++k) {
        int m = f.tg.steps - k;  // window [k, m], m > k
        auto sum = prefix.row(m).eval();
        if (k > 0) sum -= prefix.row(k - 1);
        sum -= 0.5 * (f.values.row(k) + f.values.row(m));
        out.values.row(k) = 0.5 * dt * sum;
    }
    // empty window at t = T
    return out;
}

// Tail integral (If)(t) = int_t^T f(s) ds on (0,T), trapezoid in time.
template <typename Scalar>
BoundaryFieldT<Scalar> tail_integral(const BoundaryFieldT<Scalar>& f) {
    BoundaryFieldT<Scalar> out;
    out.tg = f.tg;
    out.values.setZero(f.values.rows(), f.values.cols());
    const int M = f.tg.steps;
    const double dt = f.tg.dt;
    // accumulate backwards: I(k) = I(k+1) + dt/2 (f_k + f_{k+1})
    for (int k = M - 1; k >= 0; --k)
        out.values.row(k) =
            out.values.row(k + 1) + (0.5 * dt) * (f.values.row(k) + f.values.row(k + 1));
    return out;
}

}  // namespace ebc

#endif
