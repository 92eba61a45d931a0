#ifndef EBC_ELASTIC_OPERATOR_HPP
#define EBC_ELASTIC_OPERATOR_HPP

#include "ebc/grid.hpp"
#include "ebc/material.hpp"

namespace ebc {

// Applies div(mu (grad u + grad u^T)) + grad(lambda div u) at one interior
// node. u and out are flat arrays (node*d + component). The axis-aligned
// second derivatives use the compact divergence form with arithmetic
// half-node averages of the coefficient; the mixed derivatives use wide
// centered-of-centered stencils.
template <typename Scalar>
inline void elastic_stress_div_at(const MaterialModel& m, const Grid& g,
                                  const Scalar* u, std::int64_t idx, Scalar* out) {
    const int d = g.d;
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double inv_2h = 1.0 / (2.0 * g.h);
    const double* mu = m.mu.data();
    const double* la = m.lambda.data();

    for (int i = 0; i < d; ++i) {
        Scalar acc{};
        // compact part: sum_a d_a(c d_a u_i), c = 2mu+lambda on axis i, mu else
        for (int a = 0; a < d; ++a) {
            const std::int64_t s = g.stride[a];
            double cc = (a == i) ? 2.0 * mu[idx] + la[idx] : mu[idx];
            double cp = (a == i) ? 2.0 * mu[idx + s] + la[idx + s] : mu[idx + s];
            double cm = (a == i) ? 2.0 * mu[idx - s] + la[idx - s] : mu[idx - s];
            const Scalar up = u[(idx + s) * d + i];
            const Scalar um = u[(idx - s) * d + i];
            const Scalar u0 = u[idx * d + i];
            acc += (0.5 * (cc + cp) * (up - u0) - 0.5 * (cc + cm) * (u0 - um)) * inv_h2;
        }
        // wide cross parts: sum_{j != i} d_j(mu d_i u_j) + d_i(lambda d_j u_j)
        const std::int64_t si = g.stride[i];
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            const std::int64_t sj = g.stride[j];
            const Scalar di_uj_pj =
                (u[(idx + sj + si) * d + j] - u[(idx + sj - si) * d + j]) * inv_2h;
            const Scalar di_uj_mj =
                (u[(idx - sj + si) * d + j] - u[(idx - sj - si) * d + j]) * inv_2h;
            acc += (mu[idx + sj] * di_uj_pj - mu[idx - sj] * di_uj_mj) * inv_2h;

            const Scalar dj_uj_pi =
                (u[(idx + si + sj) * d + j] - u[(idx + si - sj) * d + j]) * inv_2h;
            const Scalar dj_uj_mi =
                (u[(idx - si + sj) * d + j] - u[(idx - si - sj) * d + j]) * inv_2h;
            acc += (la[idx + si] * dj_uj_pi - la[idx - si] * dj_uj_mi) * inv_2h;
        }
        out[i] = acc;
    }
}

// Applies the operator at every interior node of a flat state; boundary
// entries of `out` are zeroed. Layout: node*d + component.
template <typename Scalar>
void apply_elastic_operator(const MaterialModel& m, const Grid& g,
                            const Scalar* u, Scalar* out) {
    const int d = g.d;
    const int n = g.n;
    for (std::int64_t k = 0; k < g.node_count * d; ++k) out[k] = Scalar{};
    Scalar loc[3];
    if (d == 2) {
        for (int i0 = 1; i0 < n - 1; ++i0)
            for (int i1 = 1; i1 < n - 1; ++i1) {
                std::int64_t idx = i0 * g.stride[0] + i1;
                elastic_stress_div_at(m, g, u, idx, loc);
                out[idx * 2] = loc[0];
                out[idx * 2 + 1] = loc[1];
            }
    } else {
        for (int i0 = 1; i0 < n - 1; ++i0)
            for (int i1 = 1; i1 < n - 1; ++i1)
                for (int i2 = 1; i2 < n - 1; ++i2) {
                    std::int64_t idx = i0 * g.stride[0] + i1 * g.stride[1] + i2;
                    elastic_stress_div_at(m, g, u, idx, loc);
                    out[idx * 3] = loc[0];
                    out[idx * 3 + 1] = loc[1];
                    out[idx * 3 + 2] = loc[2];
                }
    }
}

}  // namespace ebc

#endif
