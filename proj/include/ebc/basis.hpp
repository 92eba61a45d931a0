#ifndef EBC_BASIS_HPP
#define EBC_BASIS_HPP

#include <Eigen/Dense>

#include "ebc/boundary_field.hpp"
#include "ebc/grid.hpp"

namespace ebc {

// Family of C^2 temporal bump atoms on (0,T): integer-step shifts of one
// polynomial mother bump with disjoint supports, each of unit L^2(0,T) norm.
// Disjointness makes the basis orthonormal, so coefficient vectors live in
// an identity Gram.
struct TemporalAtoms {
    TimeGrid tg;
    int count = 0;
    int support_steps = 0;           // width of each atom in steps
    std::vector<int> shifts;         // start step per atom
    Eigen::VectorXd mother;          // samples of atom 0 on the full grid
    Eigen::VectorXd mother_dt;       // analytic time derivative samples

    double sample(int atom, int k) const {
        int j = k - (shifts[static_cast<std::size_t>(atom)] - shifts[0]);
        return (j >= 0 && j <= tg.steps) ? mother[j] : 0.0;
    }
    double sample_dt(int atom, int k) const {
        int j = k - (shifts[static_cast<std::size_t>(atom)] - shifts[0]);
        return (j >= 0 && j <= tg.steps) ? mother_dt[j] : 0.0;
    }
};

// C^2 bump (s(1-s))^3 scaled to [0,1]; vanishes with two derivatives at
// both support ends.
double c2_bump(double s);
double c2_bump_dt(double s);

TemporalAtoms make_temporal_atoms(const TimeGrid& tg, int count,
                                  double margin_frac = 0.05, int step_multiple = 1);

// Boundary source basis: one spatial indicator per boundary node x d unit
// directions x temporal atoms. Elements are normalized to unit
// L^2((0,T) x boundary) norm, which divides the nodal value by sqrt(w_b).
// Element index i = (b*d + c)*count + a.
struct BoundaryBasis {
    const Grid* grid = nullptr;
    TemporalAtoms atoms;

    std::int64_t size() const {
        return grid->boundary_count() * grid->d * atoms.count;
    }
    struct Key {
        std::int64_t bnode;
        int comp;
        int atom;
    };
    Key decode(std::int64_t i) const {
        int a = static_cast<int>(i % atoms.count);
        std::int64_t bc = i / atoms.count;
        return Key{bc / grid->d, static_cast<int>(bc % grid->d), a};
    }
    std::int64_t encode(std::int64_t bnode, int comp, int atom) const {
        return (bnode * grid->d + comp) * atoms.count + atom;
    }

    double spatial_scale(std::int64_t bnode) const {
        return 1.0 / std::sqrt(grid->boundary_weight[static_cast<std::size_t>(bnode)]);
    }

    // dense sample field of one element
    BoundaryField element_field(std::int64_t i) const;

    // dense sample field of a coefficient combination
    BoundaryField synthesize(const Eigen::VectorXd& coeffs) const;

    // projection coefficients p_i = <f_i, field> under the space-time
    // quadrature; with the orthonormal basis these are expansion coefficients
    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> project(const BoundaryFieldT<Scalar>& field) const {
        if (field.tg.steps != atoms.tg.steps)
            throw std::invalid_argument("BoundaryBasis::project: time grid mismatch");
        const Grid& g = *grid;
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p(size());
        for (std::int64_t b = 0; b < g.boundary_count(); ++b) {
            double wb = g.boundary_weight[static_cast<std::size_t>(b)];
            double scale = spatial_scale(b) * wb;  // w_b / sqrt(w_b)
            for (int c = 0; c < g.d; ++c)
                for (int a = 0; a < atoms.count; ++a) {
                    Scalar acc{};
                    int lo = atoms.shifts[static_cast<std::size_t>(a)];
                    int hi = std::min(lo + atoms.support_steps, field.tg.steps);
                    for (int k = lo; k <= hi; ++k)
                        acc += field.tg.weight(k) * atoms.sample(a, k) *
                               field.values(k, b * g.d + c);
                    p[encode(b, c, a)] = scale * acc;
                }
        }
        return p;
    }

    // H^1_0((0,T) x boundary) Gram matrix of the basis: L^2 part plus first
    // differences in time (analytic atom derivative) and along boundary
    // tangents (forward differences between face-adjacent nodes, edge weight
    // h^{d-1}).
    Eigen::MatrixXd h1_gram() const;
};

BoundaryBasis make_boundary_basis(const Grid& g, const TemporalAtoms& atoms);

}  // namespace ebc

#endif
