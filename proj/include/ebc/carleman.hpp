#ifndef EBC_CARLEMAN_HPP
#define EBC_CARLEMAN_HPP

#include <Eigen/Dense>
#include <vector>

#include "ebc/grid.hpp"
#include "ebc/material.hpp"
#include "ebc/solver.hpp"

namespace ebc {

// Carleman weight l(x) = |x - x0|^2 / 2 with analytic gradient x - x0,
// Laplacian d, unit Hessian; derived observability constants and the
// illuminated boundary region.
struct CarlemanConfig {
    Eigen::VectorXd l;        // weight per node
    double tau = 0.0;
    double script_c = 0.0;    // d - 1
    double c0 = 0.0, c1 = 0.0, rho2 = 0.0;
    double max_grad_l = 0.0;  // over the closed box, attained at a corner
    double C0 = 0.0, C1 = 0.0, C2 = 0.0, C3 = 0.0;
    double T_min = 0.0;       // 2 C2 C3 / C0
    std::vector<bool> gamma_mask;  // per boundary node: grad l . nu > 0
    bool gamma_degenerate = false;  // some face has grad l . nu identically 0

    Eigen::VectorXd grad_l(const Grid& g, std::int64_t node) const {
        auto x = g.point(node);
        Eigen::VectorXd out(g.d);
        for (int a = 0; a < g.d; ++a) out[a] = x[a] - g.x0[a];
        return out;
    }

    // observability prefactor C1 C3 / (T C0 - 2 C2 C3), defined for T > T_min
    double prefactor(double T) const;
};

// Derived constants from the material bounds and box geometry.
CarlemanConfig carleman_constants(const MaterialModel& m, const Grid& g,
                                  double c0, double c1, double rho2, double tau = 1.0);

// Illuminated boundary mask {x in boundary : (x - x0) . nu > 0} using each
// node's assigned normal. On an axis-aligned box the sign is constant per
// face.
std::vector<bool> gamma_region(const Grid& g);

// per-face classification (face id -> in Gamma), exact for box faces
std::array<bool, 6> gamma_faces(const Grid& g);

struct RhoConditionReport {
    double min_value = 0.0;  // min over nodes of 1 + (grad rho . grad l)/rho
    bool holds = false;
    std::int64_t argmin = -1;
};

// Density slope condition 1 + (grad rho . grad l)/rho > rho2.
RhoConditionReport check_rho_condition(const MaterialModel& m, const Grid& g,
                                       const CarlemanConfig& cfg);

// Pointwise weighted decomposition of the wave operator: with v = e^{tau l} w,
//   S1 + S2 = e^{tau l} (rho d_tt w - div(mu(grad w + grad w^T)) - grad(lambda div w)).
// Inputs are three consecutive time levels of a smooth trajectory sample.
// All spatial derivatives are centered; evaluated on interior nodes two
// layers in (the S1 terms need second differences of v).
struct CarlemanDecomposition {
    Eigen::VectorXd s1;         // flat node*d, zero outside the evaluated set
    Eigen::VectorXd s2;
    double defect = 0.0;        // max |S1 + S2 - e^{tau l} P w|
    double sos_margin = 0.0;    // min over nodes of |S1+S2|^2/2 - S1.S2
    std::vector<std::int64_t> evaluated;  // node indices
};

CarlemanDecomposition carleman_decomposition(const Eigen::VectorXd& w_prev,
                                             const Eigen::VectorXd& w_mid,
                                             const Eigen::VectorXd& w_next, double dt,
                                             const MaterialModel& m, const Grid& g,
                                             const CarlemanConfig& cfg);

struct ObservabilitySample {
    double ratio = 0.0;       // (||du/dt(T)|| + ||u(T)||_H1) / ||traction on Gamma||
    double numerator = 0.0;
    double denominator = 0.0;
    bool unobservable = false;  // zero traction denominator
};

struct ObservabilityStatistics {
    std::vector<ObservabilitySample> samples;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    // max ratio over the first half of the ensemble, to report estimate
    // stability under ensemble growth
    double max_ratio_half = 0.0;
};

// Empirical lower bound for the observability constant: seeded random smooth
// interior data evolved under homogeneous Dirichlet conditions; per sample
// the ratio of interior norms at T to the traction norm on Gamma.
ObservabilityStatistics empirical_observability(const MaterialModel& m, const Grid& g,
                                                const CarlemanConfig& cfg, double T,
                                                int ensemble_size, unsigned seed,
                                                double cfl = 0.5);

// Seeded band-limited random field, zero on the boundary (sine modes up to
// max_mode with 1/|m|^2 decay).
Eigen::VectorXd random_smooth_state(const Grid& g, unsigned seed, int max_mode);

}  // namespace ebc

#endif
