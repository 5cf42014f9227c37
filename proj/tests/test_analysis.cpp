#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "padicdiff/analysis.hpp"
#include "padicdiff/model_io.hpp"
#include "padicdiff/rng.hpp"
#include "padicdiff/wavelets.hpp"

using namespace padicdiff;

namespace {

ManifoldModel ball(long long p, int n, int m) {
    BuiltinOptions opts;
    opts.p = p;
    opts.n = n;
    opts.m = m;
    return builtin_model("single_ball", opts);
}

ManifoldModel p1(int m) {
    BuiltinOptions opts;
    opts.m = m;
    return builtin_model("p1_q2", opts);
}

std::vector<CellIndex> prefix_cells(const ManifoldModel& model, int root, const BallAddress& prefix) {
    std::vector<CellIndex> cells;
    const auto range = model.prefix_cell_range(root, prefix);
    for (std::uint64_t o = range.first; o < range.second; ++o) cells.push_back({root, o});
    return cells;
}

} // namespace

TEST_CASE("weighted Sobolev norm") {
    const auto model = p1(2);
    const OperatorMatrix L = assemble_vt(model, 1.0);

    const std::vector<double> ones(model.cell_count(), 1.0);
    CHECK(sobolev_norm(ones, L) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));

    const auto w = wavelet_vector(model, {0, 0, 0, 1});
    const auto rep = closed_form_eigenvalue(model, {0, 0, 0, 1}, KernelSpec::vt(1.0), &L);
    CHECK(sobolev_norm(w.values, L) ==
          doctest::Approx(std::sqrt(1.0 + rep.oracle_lambda * rep.oracle_lambda)).epsilon(1e-10));

    std::vector<double> scaled(ones.size(), -2.5);
    CHECK(sobolev_norm(scaled, L) == doctest::Approx(2.5 * sobolev_norm(ones, L)).epsilon(1e-12));
}

TEST_CASE("poincare constants") {
    SUBCASE("depth-one unit ball has constant one") {
        const auto model = ball(2, 1, 1);
        const auto res = poincare_constant(assemble_vt(model, 1.0));
        CHECK(res.constant == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(res.verified);
        CHECK(!res.coercive);
    }
    SUBCASE("interior operator goes through the coercive branch") {
        const auto model = ball(2, 1, 2);
        const RestrictedOperator R =
            restrict_dirichlet(model, KernelSpec::knn(1.0, 1), prefix_cells(model, 0, BallAddress{{0}}));
        OperatorMatrix interior;
        interior.entries = R.entries;
        interior.cell_order = R.omega;
        interior.mu = R.mu;
        interior.mu_dbl = R.mu_dbl;
        const auto res = poincare_constant(interior);
        CHECK(res.coercive);
        CHECK(res.verified);
        CHECK(res.constant == doctest::Approx(2.0).epsilon(1e-10)); // sigma_min = 1/2
    }
    SUBCASE("zero operator has no positive eigenvalue") {
        OperatorMatrix zero;
        zero.entries = Matrix(2, 2);
        zero.cell_order = {{0, 0}, {0, 1}};
        zero.mu = {Rational(1, 2), Rational(1, 2)};
        zero.mu_dbl = {0.5, 0.5};
        zero.balance_weights = {1.0, 1.0};
        CHECK_THROWS_AS(poincare_constant(zero), validation_error);
    }
}

TEST_CASE("dirichlet form identities") {
    const auto model = p1(2);
    const OperatorMatrix L = assemble_vt(model, 1.0);
    const std::vector<double> ones(model.cell_count(), 1.0);
    CHECK(std::fabs(dirichlet_form(L, ones, ones)) <= 1e-12);

    // Wavelets over p = 2 are real-valued, so the real form applies.
    const auto w = wavelet_vector(model, {0, 0, 0, 1});
    std::vector<double> psi(w.values.size());
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = w.values[i].real();
    const auto rep = closed_form_eigenvalue(model, {0, 0, 0, 1}, KernelSpec::vt(1.0), &L);
    CHECK(dirichlet_form(L, psi, psi) == doctest::Approx(rep.oracle_lambda).epsilon(1e-10));

    Rng rng(21);
    std::vector<double> u(model.cell_count());
    std::vector<double> v(model.cell_count());
    std::vector<double> w2(model.cell_count());
    for (double& x : u) x = rng.symmetric();
    for (double& x : v) x = rng.symmetric();
    for (double& x : w2) x = rng.symmetric();
    std::vector<double> uw(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) uw[i] = u[i] + w2[i];
    CHECK(dirichlet_form(L, uw, v) ==
          doctest::Approx(dirichlet_form(L, u, v) + dirichlet_form(L, w2, v)).epsilon(1e-12));
}

TEST_CASE("homogeneous boundary value solve") {
    const auto model = ball(2, 1, 2);
    DirichletProblem problem;
    problem.model = &model;
    problem.alpha = 1.0;
    problem.k = 1;
    problem.omega = prefix_cells(model, 0, BallAddress{{0}});

    SUBCASE("zero data gives the zero solution") {
        problem.f.assign(problem.omega.size(), 0.0);
        const auto report = solve_dirichlet(problem);
        REQUIRE(report.solved);
        for (double v : report.u_omega) CHECK(std::fabs(v) <= 1e-14);
        CHECK(report.unique);
    }
    SUBCASE("constant source stays strictly positive") {
        problem.f.assign(problem.omega.size(), 1.0);
        const auto report = solve_dirichlet(problem);
        REQUIRE(report.solved);
        CHECK(report.residual <= 1e-10);
        CHECK(report.coercivity_beta == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(report.unique);
        CHECK(report.poincare_verified);
        for (double v : report.u_omega) {
            CHECK(v > 0.0);
            CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
        }
        // The boundary cells carry zeros in the closure vector.
        REQUIRE(report.u.size() == 4);
        CHECK(report.u[2] == 0.0);
        CHECK(report.u[3] == 0.0);
    }
    SUBCASE("alpha must be positive") {
        problem.alpha = 0.0;
        problem.f.assign(problem.omega.size(), 1.0);
        CHECK_THROWS_AS(solve_dirichlet(problem), validation_error);
    }
}

TEST_CASE("a domain with empty boundary is reported as non-coercive") {
    const auto model = p1(2);
    DirichletProblem problem;
    problem.model = &model;
    problem.alpha = 1.0;
    problem.k = 1;
    problem.omega = prefix_cells(model, 0, BallAddress{});
    problem.f.assign(problem.omega.size(), 1.0);
    const auto report = solve_dirichlet(problem);
    CHECK(!report.solved);
    CHECK(!report.unique);
    CHECK(report.coercivity_beta <= 1e-10);
}

TEST_CASE("coercivity across ball-prefix domains on the builtin models") {
    for (const auto& model : {ball(2, 1, 2), p1(2)}) {
        for (int root = 0; root < static_cast<int>(model.roots().size()); ++root) {
            for (std::uint32_t first = 0; first < 2; ++first) {
                DirichletProblem problem;
                problem.model = &model;
                problem.alpha = 1.0;
                problem.k = 1;
                problem.omega = prefix_cells(model, root, BallAddress{{first}});
                problem.f.assign(problem.omega.size(), 1.0);
                const auto report = solve_dirichlet(problem, 20, 3);
                CHECK(report.solved);
                CHECK(report.coercivity_beta > 0.0);
                CHECK(report.residual <= 1e-9);
            }
        }
    }
}

TEST_CASE("energy form factorizations") {
    const auto model = ball(2, 2, 2);
    const FrameField frame = FrameField::identity(model);
    const EllipticCoefficients coeffs = EllipticCoefficients::constant(model, Matrix::identity(2), 0.5);
    const EllipticOperator P = assemble_elliptic(model, frame, coeffs, 1.0, 1);

    Rng rng(17);
    const std::size_t N = model.cell_count();
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> u(N);
        std::vector<double> phi(N);
        for (double& x : u) x = rng.symmetric();
        for (double& x : phi) x = rng.symmetric();
        const double b = energy_form(model, frame, coeffs, 1.0, 1, u, phi);
        const auto pu = matvec(P.entries, u);
        double inner = 0.0;
        for (std::size_t i = 0; i < N; ++i) inner += pu[i] * phi[i] * P.mu_dbl[i];
        CHECK(std::fabs(b - inner) <= 1e-10 * std::max(1.0, std::fabs(inner)));
    }

    const std::vector<double> ones(N, 1.0);
    std::vector<double> phi(N);
    Rng rng2(18);
    for (double& x : phi) x = rng2.symmetric();
    CHECK(std::fabs(energy_form(model, frame, coeffs, 1.0, 1, ones, phi)) <= 1e-12);
}

TEST_CASE("energy constants") {
    const auto model = p1(2);
    const FrameField frame = FrameField::identity(model);
    const auto omega = prefix_cells(model, 0, BallAddress{{0}});

    const EllipticCoefficients unit = EllipticCoefficients::constant(model, Matrix::identity(1), 0.5);
    const auto base = energy_constants(model, frame, unit, 1.0, 1, omega, 60, 7);
    CHECK(base.beta_bound > 0.0);
    CHECK(base.alpha_bound >= base.beta_bound);

    Matrix half = Matrix::identity(1);
    half(0, 0) = 0.5;
    const EllipticCoefficients scaled = EllipticCoefficients::constant(model, half, 0.25);
    const auto res = energy_constants(model, frame, scaled, 1.0, 1, omega, 60, 7);
    CHECK(res.beta_bound == doctest::Approx(0.5 * base.beta_bound).epsilon(0.05));
}

TEST_CASE("second-order boundary value solve") {
    const auto model = p1(2);
    const FrameField frame = FrameField::identity(model);
    const auto omega = prefix_cells(model, 0, BallAddress{{0}});

    SUBCASE("zero data gives the zero solution") {
        const EllipticCoefficients coeffs = EllipticCoefficients::constant(model, Matrix::identity(1), 0.5);
        const auto report = solve_elliptic_dirichlet(model, frame, coeffs, 1.0, 1, omega,
                                                     std::vector<double>(omega.size(), 0.0));
        REQUIRE(report.solved);
        for (double v : report.u_omega) CHECK(std::fabs(v) <= 1e-12);
    }
    SUBCASE("identity coefficients match the squared star operator") {
        const EllipticCoefficients coeffs = EllipticCoefficients::constant(model, Matrix::identity(1), 0.5);
        const std::vector<double> f(omega.size(), 1.0);
        const auto report = solve_elliptic_dirichlet(model, frame, coeffs, 1.0, 1, omega, f);
        REQUIRE(report.solved);
        CHECK(report.residual <= 1e-9);
        CHECK(report.energy_beta > 0.0);
        CHECK(report.unique);

        // Independent route: restrict n * L^2 with L the coordinate operator.
        const OperatorMatrix L = assemble_coordinate(model, frame, 0, KernelSpec::knn(1.0, 1));
        const Matrix L2 = matmul(L.entries, L.entries);
        Matrix restricted(omega.size(), omega.size());
        for (std::size_t i = 0; i < omega.size(); ++i) {
            for (std::size_t j = 0; j < omega.size(); ++j) {
                restricted(i, j) = L2(model.cell_linear_index(omega[i]), model.cell_linear_index(omega[j]));
            }
        }
        const auto direct = solve_linear(restricted, f);
        for (std::size_t i = 0; i < omega.size(); ++i) {
            CHECK(report.u_omega[i] == doctest::Approx(direct[i]).epsilon(1e-9));
        }
    }
    SUBCASE("random coefficient fields above theta = 1/2") {
        Rng rng(29);
        std::vector<double> entries;
        entries.reserve(model.cell_count());
        for (std::size_t c = 0; c < model.cell_count(); ++c) {
            entries.push_back(0.5 + 2.0 * rng.uniform());
        }
        const EllipticCoefficients coeffs = EllipticCoefficients::from_cells(model, std::move(entries), 0.5);
        CHECK(coeffs.certificate() >= 0.5);
        const auto report = solve_elliptic_dirichlet(model, frame, coeffs, 1.0, 1, omega,
                                                     std::vector<double>(omega.size(), 1.0));
        REQUIRE(report.solved);
        CHECK(report.residual <= 1e-9);
        CHECK(report.energy_beta > 0.0);
        CHECK(report.theta_certificate >= 0.5);
    }
}

TEST_CASE("markov diagnostics") {
    SUBCASE("radial generator on the unit ball") {
        const auto model = ball(2, 1, 2);
        const OperatorMatrix L = assemble_vt(model, 1.0);
        const auto report = markov_report(L, {0.1, 1.0, 10.0}, 50, 11);
        REQUIRE(report.applicable);
        for (double p : report.positivity_defect) CHECK(p >= -1e-12);
        for (double c : report.conservation_defect) CHECK(c <= 1e-10);
        for (double nrm : report.l2_contraction) CHECK(nrm <= 1.0 + 1e-10);
        CHECK(report.sobolev_defect <= 1e-9);
        CHECK(report.invariant_residual <= 1e-10);
    }
    SUBCASE("star generator carries the squared-degree measure") {
        const auto model = p1(2);
        const OperatorMatrix L = assemble_knn(model, 1.0, 0);
        const auto report = markov_report(L, {0.5, 2.0}, 50, 13);
        REQUIRE(report.applicable);
        CHECK(report.invariant_residual <= 1e-10);
        for (double nrm : report.l2_contraction) CHECK(nrm <= 1.0 + 1e-10);
        CHECK(report.sobolev_defect <= 1e-9);
    }
    SUBCASE("short times approach the identity") {
        const auto model = ball(2, 1, 2);
        const OperatorMatrix L = assemble_vt(model, 1.0);
        const auto report = markov_report(L, {1e-8}, 10, 3);
        REQUIRE(report.applicable);
        CHECK(report.positivity_defect[0] >= -1e-12);
        CHECK(report.conservation_defect[0] <= 1e-10);
    }
    SUBCASE("sign violations make the report inapplicable") {
        const auto model = ball(2, 1, 1);
        OperatorMatrix bad = assemble_vt(model, 1.0);
        bad.entries(0, 1) = 0.25; // positive off-diagonal
        const auto report = markov_report(bad, {1.0}, 10, 3);
        CHECK(!report.applicable);
    }
}
