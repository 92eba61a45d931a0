#include "ebc/basis.hpp"

#include <cmath>

namespace ebc {

double c2_bump(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double p = s * (1.0 - s);
    return 64.0 * p * p * p;
}

double c2_bump_dt(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double p = s * (1.0 - s);
    return 64.0 * 3.0 * p * p * (1.0 - 2.0 * s);
}

TemporalAtoms make_temporal_atoms(const TimeGrid& tg, int count, double margin_frac,
                                  int step_multiple) {
    if (count < 1) throw std::invalid_argument("make_temporal_atoms: count must be >= 1");
    TemporalAtoms at;
    at.tg = tg;
    at.count = count;

    int margin = static_cast<int>(std::lround(margin_frac * tg.steps));
    int usable = tg.steps - 2 * margin;
    int w = usable / count;
    w -= w % std::max(step_multiple, 1);
    if (w < 8)
        throw std::invalid_argument(
            "make_temporal_atoms: atoms need at least 8 steps of support; "
            "refine the time grid or lower the atom count");
    at.support_steps = w;

    at.shifts.resize(static_cast<std::size_t>(count));
    for (int a = 0; a < count; ++a) at.shifts[static_cast<std::size_t>(a)] = margin + a * w;

    at.mother.setZero(tg.steps + 1);
    at.mother_dt.setZero(tg.steps + 1);
    const double width = w * tg.dt;
    for (int k = 0; k <= tg.steps; ++k) {
        double s = double(k - margin) / w;
        at.mother[k] = c2_bump(s);
        at.mother_dt[k] = c2_bump_dt(s) / width;
    }
    // unit L^2(0,T) norm
    double nrm2 = 0.0;
    for (int k = 0; k <= tg.steps; ++k) nrm2 += tg.weight(k) * at.mother[k] * at.mother[k];
    double scale = 1.0 / std::sqrt(nrm2);
    at.mother *= scale;
    at.mother_dt *= scale;
    return at;
}

BoundaryBasis make_boundary_basis(const Grid& g, const TemporalAtoms& atoms) {
    BoundaryBasis basis;
    basis.grid = &g;
    basis.atoms = atoms;
    return basis;
}

BoundaryField BoundaryBasis::element_field(std::int64_t i) const {
    BoundaryField f(*grid, atoms.tg);
    Key k = decode(i);
    double scale = spatial_scale(k.bnode);
    for (int t = 0; t <= atoms.tg.steps; ++t)
        f.values(t, k.bnode * grid->d + k.comp) = scale * atoms.sample(k.atom, t);
    return f;
}

BoundaryField BoundaryBasis::synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != size())
        throw std::invalid_argument("BoundaryBasis::synthesize: coefficient size mismatch");
    BoundaryField f(*grid, atoms.tg);
    const Grid& g = *grid;
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        double scale = spatial_scale(b);
        for (int c = 0; c < g.d; ++c)
            for (int a = 0; a < atoms.count; ++a) {
                double coeff = coeffs[encode(b, c, a)];
                if (coeff == 0.0) continue;
                int lo = atoms.shifts[static_cast<std::size_t>(a)];
                int hi = std::min(lo + atoms.support_steps, atoms.tg.steps);
                for (int k = lo; k <= hi; ++k)
                    f.values(k, b * g.d + c) += coeff * scale * atoms.sample(a, k);
            }
    }
    return f;
}

Eigen::MatrixXd BoundaryBasis::h1_gram() const {
    const Grid& g = *grid;
    const std::int64_t N = size();
    const int K = atoms.count;
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(N, N);

    // time-derivative part: diagonal because atoms have disjoint supports
    double ddot = 0.0;
    for (int k = 0; k <= atoms.tg.steps; ++k)
        ddot += atoms.tg.weight(k) * atoms.mother_dt[k] * atoms.mother_dt[k];
    H.diagonal().array() += ddot;

    // tangential part: forward differences between face-adjacent node pairs,
    // one term per face tangent direction, edge weight h^{d-1}
    double atom_l2 = 1.0;  // atoms are unit-normalized
    double edge_w = std::pow(g.h, g.d - 1);
    double inv_h2 = 1.0 / (g.h * g.h);
    for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
        std::int64_t node = g.boundary_nodes[static_cast<std::size_t>(b)];
        auto ci = g.coords(node);
        int face = g.boundary_face[static_cast<std::size_t>(b)];
        int ax = Grid::face_axis(face);
        for (int t = 0; t < g.d; ++t) {
            if (t == ax) continue;
            if (ci[t] + 1 > g.n - 1) continue;
            auto cj = ci;
            cj[t] += 1;
            std::int64_t nb = g.node_to_boundary[static_cast<std::size_t>(g.index(cj))];
            if (nb < 0) continue;
            // contribution (f(b) - f(nb))^2 / h^2 * edge_w for every comp/atom
            double sb = spatial_scale(b);
            double sn = spatial_scale(nb);
            for (int c = 0; c < g.d; ++c)
                for (int a = 0; a < K; ++a) {
                    std::int64_t ib = encode(b, c, a);
                    std::int64_t in = encode(nb, c, a);
                    double w = edge_w * inv_h2 * atom_l2;
                    H(ib, ib) += w * sb * sb;
                    H(in, in) += w * sn * sn;
                    H(ib, in) -= w * sb * sn;
                    H(in, ib) -= w * sb * sn;
                }
        }
    }
    return H;
}

}  // namespace ebc
