#ifndef EBC_PIPELINE_HPP
#define EBC_PIPELINE_HPP

#include <optional>
#include <vector>

#include "ebc/boundary_operator.hpp"

namespace ebc {

// One-pass assembly over the basis columns: each (node, component) group is
// solved once on (0,2T) and its traction feeds every consumer. Avoids
// storing the full DtN matrix at fine resolutions.
struct AssemblyRequest {
    double cfl = 0.5;
    int threads = 0;
    bool build_lambda_T = false;  // keep the explicit sample-space map
    int lambda_stride = 1;
    std::vector<ProbeTraces> probes;
    std::vector<std::int64_t> tracked;  // basis columns whose u(T) to retain
};

struct Assembly {
    ConnectingOperator connecting;
    Eigen::MatrixXcd probe_pairings;  // #probes x N: p_q[i] = <f_i, K phi_q>
    std::vector<Eigen::VectorXd> tracked_states;  // u_{f_i}(T) per tracked column
    std::optional<BoundaryOperator> lambda_T;
};

Assembly assemble_all(const MaterialModel& m, const Grid& g, const BoundaryBasis& basis,
                      const AssemblyRequest& req);

}  // namespace ebc

#endif
