#ifndef EBC_GRID_HPP
#define EBC_GRID_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ebc {

// Axis-aligned box [lo, hi]^d discretized with n nodes per axis.
//
// Node ordering is lexicographic in the index tuple (i0, ..., i_{d-1}),
// i0 most significant. Boundary nodes are enumerated in node order; each
// carries exactly one outward normal. Nodes on several faces (edges and
// corners of the box) take the normal of the lowest-indexed incident face,
// faces being numbered 2*axis (low side, normal -e_axis) and 2*axis+1
// (high side, normal +e_axis). The surface quadrature weight of a node is
// the sum of its tensor-trapezoid weights over all incident faces.
struct Grid {
    int d = 2;                    // spatial dimension, 2 or 3
    int n = 0;                    // nodes per axis
    double lo = 0.0, hi = 1.0;    // box extents per axis
    double h = 0.0;               // node spacing
    std::array<double, 3> x0{};   // exterior reference point

    std::int64_t node_count = 0;

    // boundary enumeration
    std::vector<std::int64_t> boundary_nodes;  // linear node index
    std::vector<int> boundary_face;            // assigned face id
    std::vector<double> boundary_weight;       // surface quadrature weight
    std::vector<std::int64_t> node_to_boundary; // -1 for interior nodes

    std::array<std::int64_t, 3> stride{};      // linear-index stride per axis

    std::int64_t index(const std::array<int, 3>& i) const {
        std::int64_t idx = 0;
        for (int a = 0; a < d; ++a) idx += stride[a] * i[a];
        return idx;
    }

    std::array<int, 3> coords(std::int64_t idx) const {
        std::array<int, 3> i{};
        for (int a = 0; a < d; ++a) {
            i[a] = static_cast<int>(idx / stride[a]);
            idx -= i[a] * stride[a];
        }
        return i;
    }

    double position(int i) const { return lo + h * i; }

    std::array<double, 3> point(std::int64_t idx) const {
        auto c = coords(idx);
        std::array<double, 3> x{};
        for (int a = 0; a < d; ++a) x[a] = position(c[a]);
        return x;
    }

    bool on_boundary(const std::array<int, 3>& i) const {
        for (int a = 0; a < d; ++a)
            if (i[a] == 0 || i[a] == n - 1) return true;
        return false;
    }

    // face id: 2*axis + (high side ? 1 : 0)
    static int face_axis(int face) { return face / 2; }
    static int face_sign(int face) { return (face % 2) ? +1 : -1; }

    // outward normal of the face assigned to boundary node b
    std::array<double, 3> normal(std::int64_t b) const {
        std::array<double, 3> nu{};
        int f = boundary_face[static_cast<std::size_t>(b)];
        nu[face_axis(f)] = face_sign(f);
        return nu;
    }

    std::int64_t boundary_count() const {
        return static_cast<std::int64_t>(boundary_nodes.size());
    }

    double volume_weight(std::int64_t idx) const {
        auto c = coords(idx);
        double w = 1.0;
        for (int a = 0; a < d; ++a)
            w *= (c[a] == 0 || c[a] == n - 1) ? 0.5 * h : h;
        return w;
    }

    bool x0_outside() const {
        for (int a = 0; a < d; ++a)
            if (x0[a] < lo || x0[a] > hi) return true;
        return false;
    }
};

// Builds the grid, enumerates boundary nodes with normals and quadrature
// weights. Throws std::invalid_argument when x0 lies inside or on the box,
// when d is not 2 or 3, or when n < 8 (except n >= 2 when relax_n is set,
// used by tests that need tiny grids).
Grid build_grid(int d, int n, double lo, double hi,
                const std::array<double, 3>& x0, bool relax_n = false);

}  // namespace ebc

#endif
