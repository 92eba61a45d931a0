#include "doctest.h"
#include "ebc/basis.hpp"

using namespace ebc;

TEST_CASE("atoms vanish with two derivatives at support ends") {
    CHECK(c2_bump(0.0) == 0.0);
    CHECK(c2_bump(1.0) == 0.0);
    double h = 1e-5;
    CHECK(std::abs(c2_bump(h) / h) < 1e-8);            // first derivative ~ 0
    CHECK(std::abs(c2_bump(h) / (h * h)) < 1e-3);      // second derivative ~ 0
    CHECK(c2_bump(0.5) > 0.0);
}

TEST_CASE("temporal atoms are orthonormal with disjoint supports") {
    TimeGrid tg{0.01, 400};
    TemporalAtoms atoms = make_temporal_atoms(tg, 4);
    for (int a = 0; a < 4; ++a) {
        double nrm = 0.0;
        for (int k = 0; k <= tg.steps; ++k) {
            double v = atoms.sample(a, k);
            nrm += tg.weight(k) * v * v;
        }
        CHECK(nrm == doctest::Approx(1.0).epsilon(1e-12));
        // first sample and derivative vanish at t = 0
        CHECK(atoms.sample(a, 0) == 0.0);
        CHECK(atoms.sample_dt(a, 0) == 0.0);
    }
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            double dot = 0.0;
            for (int k = 0; k <= tg.steps; ++k)
                dot += tg.weight(k) * atoms.sample(a, k) * atoms.sample(b, k);
            CHECK(dot == 0.0);  // disjoint supports, exactly orthogonal
        }
}

TEST_CASE("atom construction rejects unresolvable requests") {
    TimeGrid tg{0.1, 20};
    CHECK_THROWS_AS(make_temporal_atoms(tg, 5), std::invalid_argument);
}

TEST_CASE("basis elements have unit space-time norm") {
    Grid g = build_grid(2, 10, 0.0, 1.0, {-1.0, -1.0, 0.0});
    TimeGrid tg{0.005, 200};
    BoundaryBasis basis = make_boundary_basis(g, make_temporal_atoms(tg, 2));
    for (std::int64_t i : {std::int64_t(0), basis.size() / 2, basis.size() - 1}) {
        BoundaryField f = basis.element_field(i);
        CHECK(boundary_norm(g, f) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("projection inverts synthesis on the orthonormal basis") {
    Grid g = build_grid(2, 8, 0.0, 1.0, {-1.0, -1.0, 0.0});
    TimeGrid tg{0.01, 120};
    BoundaryBasis basis = make_boundary_basis(g, make_temporal_atoms(tg, 3));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.size());
    c[3] = 1.5;
    c[basis.size() - 2] = -0.7;
    BoundaryField f = basis.synthesize(c);
    Eigen::VectorXd p = basis.project<double>(f);
    CHECK((p - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("H1 gram is symmetric positive definite and exceeds identity") {
    Grid g = build_grid(2, 8, 0.0, 1.0, {-1.0, -1.0, 0.0});
    TimeGrid tg{0.01, 120};
    BoundaryBasis basis = make_boundary_basis(g, make_temporal_atoms(tg, 2));
    Eigen::MatrixXd H = basis.h1_gram();
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);  // L2 part contributes identity
}
