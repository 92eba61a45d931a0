#include "ebc/boundary_field.hpp"

#include <cmath>

namespace ebc {

TimeGrid make_time_grid(double T, double dt_max, int multiple_of) {
    if (!(T > 0.0) || !(dt_max > 0.0))
        throw std::invalid_argument("make_time_grid: T and dt_max must be positive");
    int steps = static_cast<int>(std::ceil(T / dt_max - 1e-12));
    steps = std::max(steps, 1);
    if (multiple_of > 1) {
        int rem = steps % multiple_of;
        if (rem != 0) steps += multiple_of - rem;
    }
    return TimeGrid{T / steps, steps};
}

Eigen::VectorXd boundary_space_weights(const Grid& g) {
    Eigen::VectorXd w(g.boundary_count() * g.d);
    for (std::int64_t b = 0; b < g.boundary_count(); ++b)
        for (int c = 0; c < g.d; ++c)
            w[b * g.d + c] = g.boundary_weight[static_cast<std::size_t>(b)];
    return w;
}

}  // namespace ebc
