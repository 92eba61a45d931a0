#include "ebc/grid.hpp"

#include <cmath>
#include <string>

namespace ebc {

Grid build_grid(int d, int n, double lo, double hi,
                const std::array<double, 3>& x0, bool relax_n) {
    if (d != 2 && d != 3)
        throw std::invalid_argument("build_grid: d must be 2 or 3, got " + std::to_string(d));
    int n_min = relax_n ? 2 : 8;
    if (n < n_min)
        throw std::invalid_argument("build_grid: n must be >= " + std::to_string(n_min));
    if (!(hi > lo))
        throw std::invalid_argument("build_grid: extents must satisfy lo < hi");

    Grid g;
    g.d = d;
    g.n = n;
    g.lo = lo;
    g.hi = hi;
    g.h = (hi - lo) / (n - 1);
    g.x0 = x0;

    if (!g.x0_outside())
        throw std::invalid_argument(
            "build_grid: x0 must lie strictly outside the closed box");

    g.node_count = 1;
    for (int a = 0; a < d; ++a) g.node_count *= n;
    g.stride.fill(0);
    g.stride[d - 1] = 1;
    for (int a = d - 2; a >= 0; --a) g.stride[a] = g.stride[a + 1] * n;

    g.node_to_boundary.assign(static_cast<std::size_t>(g.node_count), -1);

    auto trapezoid_1d = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * g.h : g.h; };

    std::array<int, 3> i{};
    for (std::int64_t idx = 0; idx < g.node_count; ++idx) {
        i = g.coords(idx);
        if (!g.on_boundary(i)) continue;

        int assigned = -1;
        double w = 0.0;
        for (int a = 0; a < d; ++a) {
            for (int side = 0; side < 2; ++side) {
                bool on_face = (side == 0) ? (i[a] == 0) : (i[a] == n - 1);
                if (!on_face) continue;
                int face = 2 * a + side;
                if (assigned < 0) assigned = face;
                double wf = 1.0;
                for (int t = 0; t < d; ++t)
                    if (t != a) wf *= trapezoid_1d(i[t]);
                w += wf;
            }
        }
        g.node_to_boundary[static_cast<std::size_t>(idx)] = g.boundary_count();
        g.boundary_nodes.push_back(idx);
        g.boundary_face.push_back(assigned);
        g.boundary_weight.push_back(w);
    }
    return g;
}

}  // namespace ebc
