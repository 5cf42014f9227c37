#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "padicdiff/model_io.hpp"
#include "padicdiff/spectral.hpp"
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

} // namespace

TEST_CASE("balance conjugation symmetrizes the assembled kernels") {
    const auto model = p1(2);
    const OperatorMatrix vt = assemble_vt(model, 1.0);
    CHECK(symmetrize_balance(vt.entries, vt.balance_weights).defect <= 1e-14);

    const OperatorMatrix knn = assemble_knn(model, 1.0, 0);
    CHECK(symmetrize_balance(knn.entries, knn.balance_weights).defect <= 1e-12);

    SUBCASE("identity weights keep a symmetric matrix") {
        Matrix s(2, 2);
        s(0, 0) = 2.0;
        s(0, 1) = s(1, 0) = -1.0;
        s(1, 1) = 3.0;
        const auto sym = symmetrize_balance(s, {1.0, 1.0});
        CHECK(max_abs_diff(sym.symmetric, s) == 0.0);
        CHECK(sym.defect == 0.0);
    }
    SUBCASE("weights must be positive") {
        Matrix s = Matrix::identity(2);
        CHECK_THROWS_AS(symmetrize_balance(s, {1.0, 0.0}), validation_error);
        CHECK_THROWS_AS(symmetrize_balance(s, {1.0, -1.0}), validation_error);
    }
}

TEST_CASE("jacobi eigensolver") {
    SUBCASE("diagonal input is already solved") {
        Matrix d(3, 3);
        d(0, 0) = 3.0;
        d(1, 1) = -1.0;
        d(2, 2) = 2.0;
        const auto eig = eig_symmetric(d, 1e-14);
        CHECK(eig.values[0] == doctest::Approx(-1.0));
        CHECK(eig.values[1] == doctest::Approx(2.0));
        CHECK(eig.values[2] == doctest::Approx(3.0));
    }
    SUBCASE("two by two symmetric") {
        Matrix s(2, 2);
        s(0, 0) = s(1, 1) = 2.0;
        s(0, 1) = s(1, 0) = 0.5;
        const auto eig = eig_symmetric(s, 1e-14);
        CHECK(eig.values[0] == doctest::Approx(1.5).epsilon(1e-14));
        CHECK(eig.values[1] == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("non-symmetric input is rejected") {
        Matrix s(2, 2);
        s(0, 1) = 1.0;
        CHECK_THROWS_AS(eig_symmetric(s, 1e-14), validation_error);
    }
    SUBCASE("orthonormal vectors and reconstruction") {
        const auto model = ball(3, 1, 3);
        const OperatorMatrix L = assemble_vt(model, 0.5);
        const auto sym = symmetrize_balance(L.entries, L.balance_weights);
        const auto eig = eig_symmetric(sym.symmetric, 1e-14 * std::max(1.0, frobenius(sym.symmetric)));
        const std::size_t n = eig.values.size();
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                double dot = 0.0;
                for (std::size_t r = 0; r < n; ++r) dot += eig.vectors(r, a) * eig.vectors(r, b);
                CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) <= 1e-10);
            }
        }
        Matrix rebuilt(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < n; ++t) acc += eig.vectors(i, t) * eig.values[t] * eig.vectors(j, t);
                rebuilt(i, j) = acc;
            }
        }
        CHECK(max_abs_diff(rebuilt, sym.symmetric) <= 1e-8 * std::max(1.0, max_abs(sym.symmetric)));
    }
}

TEST_CASE("spectrum of the depth-two unit ball") {
    const auto model = ball(2, 1, 2);
    const SpectrumReport report = spectrum(assemble_vt(model, 1.0));
    REQUIRE(report.values.size() == 3);
    CHECK(report.values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.multiplicities[0] == 1);
    CHECK(report.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.multiplicities[1] == 1);
    CHECK(report.values[2] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(report.multiplicities[2] == 2);
    int total = 0;
    for (int m : report.multiplicities) total += m;
    CHECK(total == static_cast<int>(model.cell_count()));
    for (double r : report.residuals) CHECK(r <= report.tolerance);
}

TEST_CASE("kernel dimension counts star components") {
    const auto model = p1(2);
    SUBCASE("tree-confined stars give one null vector per tree") {
        const SpectrumReport report = spectrum(assemble_knn(model, 1.0, 1));
        CHECK(report.values[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(report.multiplicities[0] == 3);
        CHECK(degree_and_star(model, 1).component_count == 3);
        for (double v : report.raw_values) CHECK(v >= -1e-10);
    }
    SUBCASE("above the nerve dimension the vertex trees split further") {
        // Height 2 needs joins below the vertex-tree roots, so those trees
        // fall apart into their depth-1 balls: 2 + 2 + 1 components.
        const SpectrumReport report = spectrum(assemble_knn(model, 1.0, 2));
        CHECK(report.values[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(report.multiplicities[0] == 5);
        CHECK(degree_and_star(model, 2).component_count == 5);
        for (double v : report.raw_values) CHECK(v >= -1e-10);
    }
}

TEST_CASE("wavelet eigenvalues appear in the spectrum") {
    const auto model = ball(2, 1, 2);
    const OperatorMatrix L = assemble_vt(model, 1.0);
    const SpectrumReport report = spectrum(L);
    for (const auto& idx : enumerate_wavelets(model)) {
        const auto rep = closed_form_eigenvalue(model, idx, KernelSpec::vt(1.0), &L);
        bool found = false;
        for (double v : report.raw_values) {
            if (std::fabs(v - rep.oracle_lambda) <= 1e-9 * std::max(1.0, std::fabs(v))) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("heat operator") {
    const auto model = p1(2);
    const OperatorMatrix L = assemble_knn(model, 1.0, 0);

    SUBCASE("time zero is the identity") {
        CHECK(max_abs_diff(heat_operator(L, 0.0), Matrix::identity(L.entries.rows)) <= 1e-12);
    }
    SUBCASE("semigroup law") {
        const BalancedEig eig = balanced_eig(L);
        const Matrix h1 = heat_from_eig(eig, 0.4);
        const Matrix h2 = heat_from_eig(eig, 0.6);
        const Matrix h12 = heat_from_eig(eig, 1.0);
        CHECK(max_abs_diff(h12, matmul(h1, h2)) <= 1e-9);
    }
    SUBCASE("rows stay stochastic and entries nonnegative") {
        for (double t : {0.1, 1.0, 10.0}) {
            const Matrix h = heat_operator(L, t);
            for (std::size_t i = 0; i < h.rows; ++i) {
                CHECK(std::fabs(neumaier_sum(&h.a[i * h.cols], h.cols) - 1.0) <= 1e-10);
                for (std::size_t j = 0; j < h.cols; ++j) CHECK(h(i, j) >= -1e-12);
            }
        }
    }
    SUBCASE("negative time is rejected") {
        CHECK_THROWS_AS(heat_operator(L, -1.0), validation_error);
    }
    SUBCASE("agrees with a scaled Taylor series oracle") {
        // Independent route: exp(-tL) = (exp(-tL/2^s))^(2^s) with the inner
        // factor summed as a plain series.
        const double t = 1.3;
        const std::size_t n = L.entries.rows;
        const int scaling = 8;
        Matrix x = scale(L.entries, -t / std::pow(2.0, scaling));
        Matrix series = Matrix::identity(n);
        Matrix term = Matrix::identity(n);
        for (int order = 1; order <= 24; ++order) {
            term = scale(matmul(term, x), 1.0 / order);
            series = add(series, term);
        }
        for (int s = 0; s < scaling; ++s) series = matmul(series, series);
        CHECK(max_abs_diff(series, heat_operator(L, t)) <= 1e-12);
    }
}

TEST_CASE("linear solver") {
    SUBCASE("identity") {
        const std::vector<double> b{1.0, -2.0, 3.0};
        CHECK(solve_linear(Matrix::identity(3), b) == b);
    }
    SUBCASE("singular matrix reported") {
        Matrix a(2, 2);
        a(0, 0) = 1.0;
        CHECK_THROWS_AS(solve_linear(a, {1.0, 1.0}), numeric_error);
    }
    SUBCASE("random well-conditioned system") {
        Matrix a(4, 4);
        const double vals[16] = {4, 1, 0, 0.5, 1, 5, 1, 0, 0, 1, 6, 1, 0.5, 0, 1, 7};
        for (std::size_t i = 0; i < 16; ++i) a.a[i] = vals[i];
        const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
        const auto x = solve_linear(a, b);
        const auto ax = matvec(a, x);
        for (std::size_t i = 0; i < 4; ++i) CHECK(ax[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}
