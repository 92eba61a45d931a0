#include "ebc/static_solver.hpp"

#include "ebc/elastic_operator.hpp"

#include <vector>

namespace ebc {

namespace {

// neighbor offsets reached by the stencil: axis pairs and diagonal pairs
std::vector<std::int64_t> stencil_offsets(const Grid& g) {
    std::vector<std::int64_t> offs{0};
    for (int a = 0; a < g.d; ++a) {
        offs.push_back(g.stride[a]);
        offs.push_back(-g.stride[a]);
    }
    for (int i = 0; i < g.d; ++i)
        for (int j = i + 1; j < g.d; ++j)
            for (int si : {-1, 1})
                for (int sj : {-1, 1})
                    offs.push_back(si * g.stride[i] + sj * g.stride[j]);
    return offs;
}

}  // namespace

ElastostaticSolver::ElastostaticSolver(const MaterialModel& m, const Grid& g)
    : m_(m), g_(g) {
    const int d = g.d;
    interior_index_.assign(static_cast<std::size_t>(g.node_count), -1);
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        auto c = g.coords(idx);
        bool interior = true;
        for (int a = 0; a < d; ++a)
            if (c[a] == 0 || c[a] == g.n - 1) interior = false;
        if (interior) {
            interior_index_[static_cast<std::size_t>(idx)] =
                static_cast<std::int64_t>(interior_nodes_.size());
            interior_nodes_.push_back(idx);
        }
    }

    const std::int64_t ni = static_cast<std::int64_t>(interior_nodes_.size());
    auto offsets = stencil_offsets(g);

    // probe the stencil coefficients with local unit states
    Eigen::VectorXd scratch = Eigen::VectorXd::Zero(g.node_count * d);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(ni) * offsets.size() * d * d);
    double loc[3];
    for (std::int64_t s = 0; s < ni; ++s) {
        std::int64_t idx = interior_nodes_[static_cast<std::size_t>(s)];
        for (std::int64_t off : offsets) {
            std::int64_t nbnode = idx + off;
            std::int64_t nbslot = interior_index_[static_cast<std::size_t>(nbnode)];
            if (nbslot < 0) continue;  // boundary dof goes to the RHS
            for (int c = 0; c < d; ++c) {
                scratch[nbnode * d + c] = 1.0;
                elastic_stress_div_at(m, g, scratch.data(), idx, loc);
                scratch[nbnode * d + c] = 0.0;
                for (int i = 0; i < d; ++i)
                    if (loc[i] != 0.0)
                        trips.emplace_back(static_cast<int>(s * d + i),
                                           static_cast<int>(nbslot * d + c), -loc[i]);
            }
        }
    }
    Eigen::SparseMatrix<double> S(ni * d, ni * d);
    S.setFromTriplets(trips.begin(), trips.end());
    factor_.compute(S);
    if (factor_.info() != Eigen::Success)
        throw std::runtime_error("ElastostaticSolver: factorization failed");
}

Eigen::VectorXd ElastostaticSolver::solve(const Eigen::VectorXd& boundary_values) const {
    const int d = g_.d;
    if (boundary_values.size() != g_.boundary_count() * d)
        throw std::invalid_argument("ElastostaticSolver::solve: boundary size mismatch");

    Eigen::VectorXd state = Eigen::VectorXd::Zero(g_.node_count * d);
    for (std::int64_t b = 0; b < g_.boundary_count(); ++b) {
        std::int64_t node = g_.boundary_nodes[static_cast<std::size_t>(b)];
        for (int c = 0; c < d; ++c) state[node * d + c] = boundary_values[b * d + c];
    }

    // RHS = (A applied to the boundary lift) restricted to interior rows
    Eigen::VectorXd lift_applied(g_.node_count * d);
    apply_elastic_operator(m_, g_, state.data(), lift_applied.data());

    const std::int64_t ni = static_cast<std::int64_t>(interior_nodes_.size());
    Eigen::VectorXd rhs(ni * d);
    for (std::int64_t s = 0; s < ni; ++s) {
        std::int64_t idx = interior_nodes_[static_cast<std::size_t>(s)];
        for (int i = 0; i < d; ++i) rhs[s * d + i] = lift_applied[idx * d + i];
    }
    Eigen::VectorXd ui = factor_.solve(rhs);

    for (std::int64_t s = 0; s < ni; ++s) {
        std::int64_t idx = interior_nodes_[static_cast<std::size_t>(s)];
        for (int i = 0; i < d; ++i) state[idx * d + i] = ui[s * d + i];
    }
    return state;
}

double ElastostaticSolver::residual(const Eigen::VectorXd& state) const {
    Eigen::VectorXd out(g_.node_count * g_.d);
    apply_elastic_operator(m_, g_, state.data(), out.data());
    double worst = 0.0;
    for (std::int64_t idx : interior_nodes_)
        for (int i = 0; i < g_.d; ++i)
            worst = std::max(worst, std::abs(out[idx * g_.d + i]));
    return worst;
}

}  // namespace ebc
