// Acceptance suite: one pass/fail line per criterion, each bound pinned in
// code. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "padicdiff/analysis.hpp"
#include "padicdiff/model_io.hpp"
#include "padicdiff/reports.hpp"
#include "padicdiff/rng.hpp"
#include "padicdiff/spectral.hpp"
#include "padicdiff/wavelets.hpp"

using namespace padicdiff;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
    int id;
    std::string label;
    bool pass = true;
    int checks = 0;
    std::string first_failure;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok && pass) {
            pass = false;
            first_failure = what;
        } else if (!ok) {
            pass = false;
        }
    }
};

std::vector<Criterion> results;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(Criterion& c, Clock::time_point start) {
    std::printf("%s criterion %d: %s (%d checks, %.1fs)%s%s\n", c.pass ? "PASS" : "FAIL", c.id,
                c.label.c_str(), c.checks, seconds_since(start),
                c.pass ? "" : " -- ", c.pass ? "" : c.first_failure.c_str());
    std::fflush(stdout);
    results.push_back(c);
}

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

ManifoldModel triangle(int m) {
    BuiltinOptions opts;
    opts.m = m;
    return builtin_model("triangle", opts);
}

std::vector<ManifoldModel> residual_models() {
    std::vector<ManifoldModel> models;
    models.push_back(ball(2, 1, 3));
    models.push_back(ball(3, 1, 3));
    models.push_back(ball(2, 2, 3));
    models.push_back(ball(3, 2, 3));
    models.push_back(p1(3));
    return models;
}

std::vector<CellIndex> prefix_cells(const ManifoldModel& model, int root, const BallAddress& prefix) {
    std::vector<CellIndex> cells;
    const auto range = model.prefix_cell_range(root, prefix);
    for (std::uint64_t o = range.first; o < range.second; ++o) cells.push_back({root, o});
    return cells;
}

std::vector<BallAddress> proper_prefixes(const ManifoldModel& model) {
    std::vector<BallAddress> out;
    std::vector<BallAddress> frontier{BallAddress{}};
    for (int depth = 1; depth <= model.ctx().m; ++depth) {
        std::vector<BallAddress> next;
        for (const auto& base : frontier) {
            for (std::uint32_t v = 0; v < model.ctx().tuples_per_level(); ++v) {
                BallAddress a = base;
                a.levels.push_back(v);
                out.push_back(a);
                next.push_back(std::move(a));
            }
        }
        frontier = std::move(next);
    }
    return out;
}

// --- criterion 1 ------------------------------------------------------------

void criterion_1() {
    const auto start = Clock::now();
    Criterion c{1, "wavelet eigenvector exactness (residual <= 1e-10)"};
    for (const auto& model : residual_models()) {
        for (double alpha : {0.5, 1.0, 2.0}) {
            const OperatorMatrix vt = assemble_vt(model, alpha);
            const OperatorMatrix knn = assemble_knn(model, alpha, 1);
            for (const auto& idx : enumerate_wavelets(model)) {
                const auto w = wavelet_vector(model, idx);
                const double r_vt = rayleigh_residual(vt, w.values).residual;
                const double r_knn = rayleigh_residual(knn, w.values).residual;
                c.expect(r_vt <= 1e-10, "vt residual " + fmt_double(r_vt) + " at " + wavelet_label(model, idx));
                c.expect(r_knn <= 1e-10, "knn residual " + fmt_double(r_knn) + " at " + wavelet_label(model, idx));
            }
        }
    }
    const double elapsed = seconds_since(start);
    c.expect(elapsed <= 30.0, "runtime " + fmt_double(elapsed) + "s exceeds 30s");
    report(c, start);
}

// --- criterion 2 ------------------------------------------------------------

void criterion_2() {
    const auto start = Clock::now();
    Criterion c{2, "closed form matches the matrix oracle at n = 1 (rel 1e-9)"};
    std::vector<ManifoldModel> models;
    models.push_back(ball(2, 1, 3));
    models.push_back(ball(3, 1, 3));
    models.push_back(p1(3));
    for (const auto& model : models) {
        for (double alpha : {0.5, 1.0, 2.0}) {
            for (const KernelSpec& kernel : {KernelSpec::vt(alpha), KernelSpec::knn(alpha, 1)}) {
                const OperatorMatrix L = assemble_kernel(model, kernel);
                for (const auto& idx : enumerate_wavelets(model)) {
                    const auto rep = closed_form_eigenvalue(model, idx, kernel, &L);
                    const double rel = std::fabs(rep.closed_form_lambda - rep.oracle_lambda) /
                                       std::max(1.0, std::fabs(rep.oracle_lambda));
                    c.expect(rel <= 1e-9, kernel.describe() + " at " + wavelet_label(model, idx) +
                                              ": rel " + fmt_double(rel));
                }
            }
        }
    }
    report(c, start);
}

// --- criterion 3 ------------------------------------------------------------

void criterion_3() {
    const auto start = Clock::now();
    Criterion c{3, "n = 2 discrepancy is reported, oracle values asserted"};

    // Odd dimension: the closed-form constant is reproduced exactly.
    for (long long p : {2, 3, 5}) {
        for (int n : {1, 3}) {
            const PrimeContext ctx(p, n, 1);
            std::vector<int> j(static_cast<std::size_t>(n), 0);
            j[0] = 1;
            const auto sum = character_sum(ctx, j);
            c.expect(std::fabs(sum.deviation) <= 1e-12,
                     "odd-dimension deviation " + fmt_double(sum.deviation));
        }
    }
    // Even dimension: the brute force differs from the closed form by 2.
    {
        const auto sum = character_sum(PrimeContext(3, 2, 1), {1, 1});
        c.expect(std::fabs(sum.value - 9.0) <= 1e-12, "brute force " + fmt_double(sum.value));
        c.expect(std::fabs(sum.closed_form - 7.0) <= 1e-12, "closed form " + fmt_double(sum.closed_form));
        c.expect(std::fabs(sum.deviation - 2.0) <= 1e-12, "deviation " + fmt_double(sum.deviation));
    }
    for (long long p : {2, 3}) {
        const PrimeContext ctx(p, 2, 1);
        const auto sum = character_sum(ctx, {1, 0});
        c.expect(std::fabs(sum.deviation - 2.0) <= 1e-12,
                 "even-dimension deviation " + fmt_double(sum.deviation));
    }

    // Every n = 2 wavelet row lists both local terms; the oracle local term
    // follows the measured exponent mu(B)^(1-alpha), never the closed form.
    for (long long p : {2, 3}) {
        const auto model = ball(p, 2, 2);
        for (double alpha : {0.5, 1.0, 2.0}) {
            const auto rows = wavelet_verification(model, KernelSpec::vt(alpha));
            c.expect(rows.size() == enumerate_wavelets(model).size(), "missing report rows");
            for (const auto& r : rows) {
                const auto support = wavelet_support(model, r.index);
                const double mu_b =
                    ball_measure(model.ctx(), support, model.roots()[static_cast<std::size_t>(r.index.root)].density)
                        .to_double();
                const double oracle_expected = std::pow(mu_b, 1.0 - alpha);
                c.expect(std::fabs(r.oracle_local - oracle_expected) <=
                             1e-9 * std::max(1.0, oracle_expected),
                         "oracle local " + fmt_double(r.oracle_local) + " vs " + fmt_double(oracle_expected));
                c.expect(r.residual <= 1e-10, "residual " + fmt_double(r.residual));
                // The published closed form's n = 2 local term genuinely differs; the
                // report must expose that, not hide it.
                const double closed_form_expected = std::pow(mu_b, 2.0 - alpha) * (1.0 - 2.0 / std::pow((double)p, 2));
                c.expect(std::fabs(r.closed_form_local - closed_form_expected) <= 1e-12,
                         "closed-form local " + fmt_double(r.closed_form_local));
            }
        }
    }
    report(c, start);
}

// --- criterion 4 ------------------------------------------------------------

void criterion_4() {
    const auto start = Clock::now();
    Criterion c{4, "spectral structure and completeness"};

    struct SpectralCase {
        ManifoldModel model;
        std::string name;
    };
    std::vector<SpectralCase> cases;
    cases.push_back({ball(2, 1, 3), "ball(2,1,3)"});
    cases.push_back({ball(3, 1, 3), "ball(3,1,3)"});
    cases.push_back({ball(2, 2, 3), "ball(2,2,3)"});
    cases.push_back({ball(3, 2, 2), "ball(3,2,2)"});
    cases.push_back({p1(3), "p1_q2(3)"});
    cases.push_back({triangle(2), "triangle(2)"});

    for (const auto& item : cases) {
        const auto& model = item.model;
        const SpectrumReport vt = spectrum(assemble_vt(model, 1.0));
        for (double v : vt.raw_values) c.expect(v >= -1e-10, item.name + ": negative eigenvalue " + fmt_double(v));
        c.expect(std::fabs(vt.values.front()) <= 1e-10, item.name + ": zero eigenvalue missing");
        c.expect(vt.multiplicities.front() == 1,
                 item.name + ": vt zero multiplicity " + std::to_string(vt.multiplicities.front()));

        // Above the nerve dimension the star graph disconnects; the null
        // space multiplicity must equal the independently counted components.
        const int k = model.dim_nerve() + 1;
        const DegreeReport deg = degree_and_star(model, k);
        const SpectrumReport knn = spectrum(assemble_knn(model, 1.0, k));
        for (double v : knn.raw_values) c.expect(v >= -1e-10, item.name + ": negative knn eigenvalue");
        c.expect(knn.multiplicities.front() == static_cast<int>(deg.component_count),
                 item.name + ": knn zero multiplicity " + std::to_string(knn.multiplicities.front()) +
                     " vs " + std::to_string(deg.component_count) + " components");
    }

    // Where the star relation is exactly tree-confined, the component count
    // is one per tree and so is the null space.
    {
        std::vector<std::pair<ManifoldModel, int>> confined;
        confined.emplace_back(ball(2, 1, 3), 1);
        confined.emplace_back(p1(3), 1);
        for (const auto& [model, k] : confined) {
            const DegreeReport deg = degree_and_star(model, k);
            c.expect(deg.component_count == model.roots().size(), "tree-confined component count");
            const SpectrumReport knn = spectrum(assemble_knn(model, 1.0, k));
            c.expect(knn.multiplicities.front() == static_cast<int>(model.roots().size()),
                     "tree-confined zero multiplicity " + std::to_string(knn.multiplicities.front()));
        }
    }

    // Completeness: wavelets plus root indicators are an orthonormal basis.
    for (const auto& model : residual_models()) {
        const auto wavelets = enumerate_wavelets(model);
        c.expect(wavelets.size() + model.roots().size() == model.cell_count(), "count identity");

        std::vector<std::vector<std::complex<double>>> system;
        system.reserve(wavelets.size() + model.roots().size());
        for (const auto& idx : wavelets) system.push_back(wavelet_vector(model, idx).values);
        for (int r = 0; r < static_cast<int>(model.roots().size()); ++r) {
            std::vector<std::complex<double>> ind(model.cell_count(), {0.0, 0.0});
            const double scale_v =
                1.0 / std::sqrt(model.roots()[static_cast<std::size_t>(r)].density.to_double());
            for (std::uint64_t o = 0; o < model.cells_per_root(); ++o) {
                ind[model.cell_linear_index({r, o})] = scale_v;
            }
            system.push_back(std::move(ind));
        }

        std::vector<double> mu(model.cell_count());
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = model.cell_measure(model.cell_at(i)).to_double();
        double worst = 0.0;
        for (std::size_t a = 0; a < system.size(); ++a) {
            for (std::size_t b = a; b < system.size(); ++b) {
                std::complex<double> g{0.0, 0.0};
                for (std::size_t i = 0; i < mu.size(); ++i) g += system[a][i] * std::conj(system[b][i]) * mu[i];
                worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
            }
        }
        c.expect(worst <= 1e-10, "gram defect " + fmt_double(worst));
    }
    report(c, start);
}

// --- criterion 5 ------------------------------------------------------------

void criterion_5() {
    const auto start = Clock::now();
    Criterion c{5, "metric axioms, exhaustive at depth 2"};
    std::size_t triples = 0;
    for (const auto& model : {p1(2), triangle(2)}) {
        const auto cells = model.enumerate_cells();
        const std::size_t n = cells.size();
        std::vector<double> d(n * n, 0.0);
        bool positive = true;
        bool symmetric = true;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                d[i * n + j] = model.distance(cells[i], cells[j]);
                positive = positive && d[i * n + j] > 0.0;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) symmetric = symmetric && d[i * n + j] == d[j * n + i];
        }
        c.expect(positive, "positivity");
        c.expect(symmetric, "symmetry");

        bool triangle_ok = true;
        bool ultrametric_ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == i || k == j) continue;
                    ++triples;
                    if (d[i * n + j] > d[i * n + k] + d[k * n + j] + 1e-15) triangle_ok = false;
                    if (cells[i].root == cells[j].root && cells[j].root == cells[k].root) {
                        if (d[i * n + j] > std::max(d[i * n + k], d[k * n + j]) + 1e-15) ultrametric_ok = false;
                    }
                }
            }
        }
        c.expect(triangle_ok, "triangle inequality");
        c.expect(ultrametric_ok, "tree ultrametricity");
    }
    c.expect(triples <= 1000000, "triple count " + std::to_string(triples));
    c.expect(seconds_since(start) <= 60.0, "metric sweep too slow");
    report(c, start);
}

// --- criterion 6 ------------------------------------------------------------

void criterion_6() {
    const auto start = Clock::now();
    Criterion c{6, "semigroup positivity, conservation, contraction, stationarity"};
    const std::vector<double> times{0.1, 1.0, 10.0};
    std::vector<std::pair<std::string, OperatorMatrix>> generators;
    for (const auto& model : {ball(2, 1, 3), p1(2), triangle(2)}) {
        generators.emplace_back("vt", assemble_vt(model, 1.0));
        generators.emplace_back("knn k=0", assemble_knn(model, 1.0, 0));
        generators.emplace_back("knn k=1", assemble_knn(model, 1.0, 1));
    }
    for (const auto& [name, L] : generators) {
        const MarkovReport rep = markov_report(L, times, 100, 20260808);
        c.expect(rep.applicable, name + ": generator fails the sign gates");
        if (!rep.applicable) continue;
        for (std::size_t t = 0; t < times.size(); ++t) {
            c.expect(rep.positivity_defect[t] >= -1e-12,
                     name + ": min entry " + fmt_double(rep.positivity_defect[t]));
            c.expect(rep.conservation_defect[t] <= 1e-10,
                     name + ": row sums " + fmt_double(rep.conservation_defect[t]));
            c.expect(rep.l2_contraction[t] <= 1.0 + 1e-10,
                     name + ": L2 norm " + fmt_double(rep.l2_contraction[t]));
        }
        c.expect(rep.invariant_residual <= 1e-10, name + ": stationary residual " + fmt_double(rep.invariant_residual));
        c.expect(rep.sobolev_defect <= 1e-9, name + ": integral bound " + fmt_double(rep.sobolev_defect));
    }
    report(c, start);
}

// --- criterion 7 ------------------------------------------------------------

void criterion_7() {
    const auto start = Clock::now();
    Criterion c{7, "boundary value solvability on every ball-prefix domain"};
    std::vector<ManifoldModel> models;
    for (int m = 1; m <= 3; ++m) models.push_back(ball(2, 1, m));
    for (int m = 1; m <= 3; ++m) models.push_back(p1(m));
    for (const auto& model : models) {
        for (int root = 0; root < static_cast<int>(model.roots().size()); ++root) {
            for (const auto& prefix : proper_prefixes(model)) {
                DirichletProblem problem;
                problem.model = &model;
                problem.alpha = 1.0;
                problem.k = 1;
                problem.omega = prefix_cells(model, root, prefix);
                if (problem.omega.size() == model.cell_count()) continue;
                problem.f.assign(problem.omega.size(), 1.0);
                const SolutionReport rep = solve_dirichlet(problem, 100, 4242);
                const std::string where = model.roots()[static_cast<std::size_t>(root)].id + " depth " +
                                          std::to_string(prefix.depth());
                c.expect(rep.coercivity_beta > 0.0, where + ": beta " + fmt_double(rep.coercivity_beta));
                c.expect(rep.solved, where + ": no solution");
                c.expect(rep.unique, where + ": not unique");
                c.expect(rep.residual <= 1e-9, where + ": residual " + fmt_double(rep.residual));
                c.expect(rep.poincare_verified, where + ": 1/sigma_min bound unverified");
                c.expect(std::fabs(rep.poincare_constant * rep.coercivity_beta - 1.0) <= 1e-9,
                         where + ": constant is not 1/sigma_min");
            }
        }
    }
    report(c, start);
}

// --- criterion 8 ------------------------------------------------------------

void criterion_8() {
    const auto start = Clock::now();
    Criterion c{8, "coordinate and second-order operator identities"};

    // Identity frames collapse to the base operators.
    for (const auto& model : {ball(3, 2, 2), p1(2)}) {
        const FrameField frame = FrameField::identity(model);
        const OperatorMatrix base_vt = assemble_vt(model, 1.0);
        const OperatorMatrix base_knn = assemble_knn(model, 2.0, 1);
        for (int i = 0; i < model.ctx().n; ++i) {
            const OperatorMatrix cvt = assemble_coordinate(model, frame, i, KernelSpec::vt(1.0));
            c.expect(max_abs_diff(cvt.entries, base_vt.entries) <= 1e-12, "coordinate vt != base vt");
            const OperatorMatrix cknn = assemble_coordinate(model, frame, i, KernelSpec::knn(1.0, 1));
            c.expect(max_abs_diff(cknn.entries, base_knn.entries) <= 1e-12, "coordinate knn != base knn");
        }
    }

    // Identity coefficients: P = n L^2 entrywise.
    for (const auto& model : {ball(2, 2, 2), p1(2)}) {
        const int n = model.ctx().n;
        const FrameField frame = FrameField::identity(model);
        const EllipticCoefficients unit =
            EllipticCoefficients::constant(model, Matrix::identity(static_cast<std::size_t>(n)), 0.5);
        const EllipticOperator P = assemble_elliptic(model, frame, unit, 1.0, 1);
        const OperatorMatrix L = assemble_coordinate(model, frame, 0, KernelSpec::knn(1.0, 1));
        const Matrix nL2 = scale(matmul(L.entries, L.entries), static_cast<double>(n));
        c.expect(max_abs_diff(P.entries, nL2) <= 1e-12, "P != n L^2");

        // Adjoint-factored form equals the operator pairing on 100 pairs.
        Rng rng(20260808);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> u(model.cell_count());
            std::vector<double> phi(model.cell_count());
            for (double& x : u) x = rng.symmetric();
            for (double& x : phi) x = rng.symmetric();
            const double b = energy_form(model, frame, unit, 1.0, 1, u, phi);
            const auto pu = matvec(P.entries, u);
            double inner = 0.0;
            for (std::size_t i = 0; i < pu.size(); ++i) inner += pu[i] * phi[i] * P.mu_dbl[i];
            worst = std::max(worst, std::fabs(b - inner) / std::max(1.0, std::fabs(inner)));
        }
        c.expect(worst <= 1e-10, "energy pairing defect " + fmt_double(worst));
    }

    // Random coefficient fields with theta = 1/2 stay solvable.
    {
        const auto model = p1(2);
        const FrameField frame = FrameField::identity(model);
        Rng rng(777);
        std::vector<double> entries;
        for (std::size_t i = 0; i < model.cell_count(); ++i) entries.push_back(0.5 + 2.0 * rng.uniform());
        const EllipticCoefficients coeffs = EllipticCoefficients::from_cells(model, std::move(entries), 0.5);
        const auto omega = prefix_cells(model, 0, BallAddress{{0}});
        const SolutionReport rep = solve_elliptic_dirichlet(model, frame, coeffs, 1.0, 1, omega,
                                                            std::vector<double>(omega.size(), 1.0), 100, 99);
        c.expect(rep.solved, "elliptic solve failed");
        c.expect(rep.residual <= 1e-9, "elliptic residual " + fmt_double(rep.residual));
        c.expect(rep.energy_beta > 0.0, "energy beta " + fmt_double(rep.energy_beta));
        c.expect(rep.theta_certificate >= 0.5, "theta certificate");
    }
    report(c, start);
}

// --- criterion 9 ------------------------------------------------------------

void criterion_9() {
    const auto start = Clock::now();
    Criterion c{9, "detailed balance symmetrization (defect <= 1e-12)"};
    for (const auto& model : residual_models()) {
        for (double alpha : {0.5, 1.0, 2.0}) {
            for (int k = 0; k <= model.dim_nerve() + 1; ++k) {
                const OperatorMatrix L = assemble_knn(model, alpha, k);
                c.expect(L.balance_defect <= 1e-12, "assembly defect " + fmt_double(L.balance_defect));
                const auto sym = symmetrize_balance(L.entries, L.balance_weights);
                c.expect(sym.defect <= 1e-12, "conjugation defect " + fmt_double(sym.defect));
            }
        }
    }
    report(c, start);
}

// --- criterion 10 -----------------------------------------------------------

void criterion_10(Clock::time_point suite_start) {
    const auto start = Clock::now();
    Criterion c{10, "determinism and desk scale"};
    for (const auto& model : residual_models()) {
        c.expect(model.cell_count() <= 2000, "cell count " + std::to_string(model.cell_count()));
    }

    auto make_reports = [] {
        const auto model = p1(2);
        std::string bytes;
        bytes += wavelet_report_csv(model, wavelet_verification(model, KernelSpec::vt(1.0)));
        bytes += markov_report_json(markov_report(assemble_knn(model, 1.0, 0), {0.1, 1.0}, 50, 42));
        DirichletProblem problem;
        problem.model = &model;
        problem.alpha = 1.0;
        problem.k = 1;
        const auto range = model.prefix_cell_range(0, BallAddress{{0}});
        for (std::uint64_t o = range.first; o < range.second; ++o) problem.omega.push_back({0, o});
        problem.f.assign(problem.omega.size(), 1.0);
        const auto rep = solve_dirichlet(problem, 50, 42);
        bytes += solution_report_json(rep);
        bytes += solution_csv(model, rep);
        bytes += spectrum_csv(spectrum(assemble_vt(model, 1.0)));
        return bytes;
    };
    const std::string first = make_reports();
    const std::string second = make_reports();
    c.expect(first == second, "report bytes differ between reruns");
    c.expect(!first.empty(), "no report bytes produced");

    const double total = seconds_since(suite_start);
    c.expect(total <= 300.0, "suite runtime " + fmt_double(total) + "s exceeds 5 minutes");
    report(c, start);
}

} // namespace

int main() {
    const auto suite_start = Clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10(suite_start);

    int failed = 0;
    for (const auto& c : results) failed += c.pass ? 0 : 1;
    std::printf("%d/%zu criteria passed in %.1fs\n", static_cast<int>(results.size()) - failed,
                results.size(), seconds_since(suite_start));
    return failed;
}
