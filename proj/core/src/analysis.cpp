#include "padicdiff/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "padicdiff/rng.hpp"

namespace padicdiff {

namespace {

double weighted_norm(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i] * w[i];
    return std::sqrt(s);
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.symmetric();
    return v;
}

/// Symmetric part of L in the mu inner product, scaled to an ordinary
/// symmetric eigenproblem: W = D^-1/2 (Dmu L)_sym D^-1/2 with D = diag(mu).
Matrix mu_symmetric_part(const Matrix& L, const std::vector<double>& mu) {
    const std::size_t n = L.rows;
    Matrix w(n, n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(mu[i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double m = 0.5 * (mu[i] * L(i, j) + mu[j] * L(j, i));
            w(i, j) = m / (sq[i] * sq[j]);
        }
    }
    return w;
}

double min_eig(const Matrix& s) {
    const double scale = std::max(1.0, frobenius(s));
    return eig_symmetric(s, 1e-14 * scale).values.front();
}

double max_eig(const Matrix& s) {
    const double scale = std::max(1.0, frobenius(s));
    return eig_symmetric(s, 1e-14 * scale).values.back();
}

} // namespace

double sobolev_norm(const std::vector<double>& u, const OperatorMatrix& L) {
    if (u.size() != L.entries.rows) throw validation_error("sobolev: vector length mismatch");
    const auto lu = matvec(L.entries, u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += (u[i] * u[i] + lu[i] * lu[i]) * L.mu_dbl[i];
    }
    return std::sqrt(s);
}

double sobolev_norm(const std::vector<std::complex<double>>& u, const OperatorMatrix& L) {
    if (u.size() != L.entries.rows) throw validation_error("sobolev: vector length mismatch");
    const auto lu = matvec(L.entries, u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += (std::norm(u[i]) + std::norm(lu[i])) * L.mu_dbl[i];
    }
    return std::sqrt(s);
}

PoincareResult poincare_constant(const OperatorMatrix& L, int samples, std::uint64_t seed) {
    const std::size_t n = L.entries.rows;
    const Matrix sym = mu_symmetric_part(L.entries, L.mu_dbl);
    const double sigma_min = min_eig(sym);
    const double scale = std::max(1.0, max_abs(L.entries));
    Rng rng(seed);

    PoincareResult out;
    if (sigma_min > 1e-12 * scale) {
        // Coercive: |u| <= (1/sigma_min) |Lu| on the whole space.
        out.coercive = true;
        out.constant = 1.0 / sigma_min;
        out.verified = true;
        for (int s = 0; s < samples; ++s) {
            const auto u = random_vector(rng, n);
            const auto lu = matvec(L.entries, u);
            const double lhs = weighted_norm(u, L.mu_dbl);
            const double rhs = out.constant * weighted_norm(lu, L.mu_dbl);
            if (lhs > rhs * (1.0 + 1e-9) + 1e-12) out.verified = false;
        }
        return out;
    }

    // Spectral route off the zero eigenspace.
    const BalancedEig eig = balanced_eig(L);
    const double zero_tol = std::max(1e-12, 1e-9 * std::fabs(eig.values.back()));
    double lambda_min_pos = 0.0;
    std::vector<std::size_t> kernel_indices;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(eig.values[i]) <= zero_tol) {
            kernel_indices.push_back(i);
        } else if (eig.values[i] > 0.0 && lambda_min_pos == 0.0) {
            lambda_min_pos = eig.values[i];
        }
    }
    if (lambda_min_pos == 0.0) throw validation_error("poincare: no positive eigenvalue");
    out.constant = 1.0 / lambda_min_pos;

    // mu-orthonormal basis of the kernel, for projecting samples.
    std::vector<std::vector<double>> kernel_basis;
    for (std::size_t ki : kernel_indices) {
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = eig.vectors(r, ki) / eig.weights[r];
        for (const auto& b : kernel_basis) {
            double ip = 0.0;
            for (std::size_t r = 0; r < n; ++r) ip += v[r] * b[r] * L.mu_dbl[r];
            for (std::size_t r = 0; r < n; ++r) v[r] -= ip * b[r];
        }
        double norm = weighted_norm(v, L.mu_dbl);
        if (norm < 1e-14) continue;
        for (double& x : v) x /= norm;
        kernel_basis.push_back(std::move(v));
    }

    out.verified = true;
    for (int s = 0; s < samples; ++s) {
        auto u = random_vector(rng, n);
        for (const auto& b : kernel_basis) {
            double ip = 0.0;
            for (std::size_t r = 0; r < n; ++r) ip += u[r] * b[r] * L.mu_dbl[r];
            for (std::size_t r = 0; r < n; ++r) u[r] -= ip * b[r];
        }
        const double lhs = weighted_norm(u, L.mu_dbl);
        if (lhs < 1e-12) continue;
        const auto lu = matvec(L.entries, u);
        const double rhs = out.constant * weighted_norm(lu, L.mu_dbl);
        if (lhs > rhs * (1.0 + 1e-9) + 1e-12) out.verified = false;
    }
    return out;
}

double dirichlet_form(const OperatorMatrix& L, const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != L.entries.rows || v.size() != L.entries.rows) {
        throw validation_error("dirichlet form: vector length mismatch");
    }
    const auto lu = matvec(L.entries, u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += lu[i] * v[i] * L.mu_dbl[i];
    return s;
}

double dirichlet_form_restricted(const RestrictedOperator& R, const std::vector<double>& u,
                                 const std::vector<double>& v) {
    if (u.size() != R.entries.rows || v.size() != R.entries.rows) {
        throw validation_error("dirichlet form: vector length mismatch");
    }
    const auto lu = matvec(R.entries, u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += lu[i] * v[i] * R.mu_dbl[i];
    return s;
}

namespace {

/// Interior Sobolev norm built on the restricted operator.
double restricted_sobolev(const std::vector<double>& u, const Matrix& A, const std::vector<double>& mu) {
    const auto au = matvec(A, u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] * u[i] + au[i] * au[i]) * mu[i];
    return std::sqrt(s);
}

} // namespace

SolutionReport solve_dirichlet(const DirichletProblem& problem, int samples, std::uint64_t seed) {
    if (problem.model == nullptr) throw validation_error("dirichlet: missing model");
    if (!(problem.alpha > 0.0)) throw validation_error("dirichlet: alpha must be positive");

    const ManifoldModel& model = *problem.model;
    RestrictedOperator R = restrict_dirichlet(model, KernelSpec::knn(problem.alpha, problem.k), problem.omega);
    const std::size_t nw = R.omega.size();
    if (problem.f.size() != nw) throw validation_error("dirichlet: right-hand side length mismatch");

    SolutionReport report;
    report.omega_order = R.omega;
    report.closure_order = R.boundary.closure;

    const Matrix sym = mu_symmetric_part(R.entries, R.mu_dbl);
    report.coercivity_beta = min_eig(sym);
    const double sigma_max = max_eig(sym);
    report.condition_estimate = report.coercivity_beta > 0.0 ? sigma_max / report.coercivity_beta : 0.0;
    report.unique = report.coercivity_beta > 0.0;

    // Sampled continuity bound of the form against the interior Sobolev norm.
    Rng rng(seed);
    double alpha_bound = 0.0;
    for (int s = 0; s < samples; ++s) {
        const auto u = random_vector(rng, nw);
        const auto v = (s % 4 == 0) ? u : random_vector(rng, nw);
        const double q = std::fabs(dirichlet_form_restricted(R, u, v));
        const double den = restricted_sobolev(u, R.entries, R.mu_dbl) * restricted_sobolev(v, R.entries, R.mu_dbl);
        if (den > 0.0) alpha_bound = std::max(alpha_bound, q / den);
    }
    report.continuity_alpha = alpha_bound;

    try {
        const std::vector<double> u = solve_linear(R.entries, problem.f);
        const auto au = matvec(R.entries, u);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < nw; ++i) {
            num += (au[i] - problem.f[i]) * (au[i] - problem.f[i]);
            den += problem.f[i] * problem.f[i];
        }
        report.residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
        report.solved = true;
        report.u_omega = u;
        report.u.assign(report.closure_order.size(), 0.0);
        for (std::size_t i = 0; i < report.closure_order.size(); ++i) {
            for (std::size_t j = 0; j < nw; ++j) {
                if (report.closure_order[i] == R.omega[j]) {
                    report.u[i] = u[j];
                    break;
                }
            }
        }
    } catch (const numeric_error&) {
        // Singular interior system: theorem hypotheses unmet, reported as such.
        report.solved = false;
        report.unique = false;
    }

    if (report.coercivity_beta > 0.0) {
        report.poincare_constant = 1.0 / report.coercivity_beta;
        report.poincare_verified = true;
        for (int s = 0; s < samples; ++s) {
            const auto u = random_vector(rng, nw);
            const auto au = matvec(R.entries, u);
            const double lhs = weighted_norm(u, R.mu_dbl);
            const double rhs = report.poincare_constant * weighted_norm(au, R.mu_dbl);
            if (lhs > rhs * (1.0 + 1e-9) + 1e-12) report.poincare_verified = false;
        }
    }
    return report;
}

double energy_form(const ManifoldModel& model, const FrameField& frame, const EllipticCoefficients& coeffs,
                   double alpha, int k, const std::vector<double>& u, const std::vector<double>& phi) {
    const int n = model.ctx().n;
    const std::size_t N = model.cell_count();
    if (u.size() != N || phi.size() != N) throw validation_error("energy form: vector length mismatch");

    std::vector<std::vector<double>> lu(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> ls_phi(static_cast<std::size_t>(n));
    std::vector<double> mu(N);
    for (int i = 0; i < n; ++i) {
        const OperatorMatrix Li = assemble_coordinate(model, frame, i, KernelSpec::knn(alpha, k));
        lu[static_cast<std::size_t>(i)] = matvec(Li.entries, u);
        ls_phi[static_cast<std::size_t>(i)] = matvec(adjoint_l2(Li).entries, phi);
        if (i == 0) mu = Li.mu_dbl;
    }

    double b = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
        double cell_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                cell_sum += coeffs.entry(c, i, j) * lu[static_cast<std::size_t>(i)][c] *
                            ls_phi[static_cast<std::size_t>(j)][c];
            }
        }
        b += cell_sum * mu[c];
    }
    return b;
}

namespace {

struct RestrictedElliptic {
    Matrix p_interior;
    Matrix knn_interior;
    std::vector<double> mu;
    std::vector<CellIndex> omega;
    BoundaryData boundary;
    double theta = 0.0;
};

RestrictedElliptic restrict_elliptic(const ManifoldModel& model, const FrameField& frame,
                                     const EllipticCoefficients& coeffs, double alpha, int k,
                                     const std::vector<CellIndex>& omega) {
    const EllipticOperator P = assemble_elliptic(model, frame, coeffs, alpha, k);
    RestrictedOperator base = restrict_dirichlet(model, KernelSpec::knn(alpha, k), omega);

    const std::size_t nw = base.omega.size();
    RestrictedElliptic out;
    out.omega = base.omega;
    out.boundary = base.boundary;
    out.mu = base.mu_dbl;
    out.knn_interior = base.entries;
    out.theta = P.theta_certificate;
    out.p_interior = Matrix(nw, nw);
    std::vector<std::size_t> lin(nw);
    for (std::size_t i = 0; i < nw; ++i) lin[i] = model.cell_linear_index(out.omega[i]);
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < nw; ++j) {
            out.p_interior(i, j) = P.entries(lin[i], lin[j]);
        }
    }
    return out;
}

EnergyConstants energy_constants_impl(const RestrictedElliptic& re, int samples, std::uint64_t seed) {
    const std::size_t nw = re.omega.size();

    // Sobolev Gram on the interior: G = diag(mu) + A^T diag(mu) A.
    Matrix G(nw, nw);
    for (std::size_t i = 0; i < nw; ++i) G(i, i) = re.mu[i];
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < nw; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < nw; ++r) acc += re.knn_interior(r, i) * re.mu[r] * re.knn_interior(r, j);
            G(i, j) += acc;
        }
    }

    Matrix Msym(nw, nw);
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < nw; ++j) {
            Msym(i, j) = 0.5 * (re.mu[i] * re.p_interior(i, j) + re.mu[j] * re.p_interior(j, i));
        }
    }

    // G^(-1/2) Msym G^(-1/2) via the eigenbasis of G.
    const double gscale = std::max(1.0, frobenius(G));
    const EigResult ge = eig_symmetric(G, 1e-14 * gscale);
    if (ge.values.front() <= 0.0) throw numeric_error("energy: Sobolev Gram is not positive definite");
    Matrix ghalf_inv(nw, nw);
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < nw; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < nw; ++t) {
                acc += ge.vectors(i, t) * ge.vectors(j, t) / std::sqrt(ge.values[t]);
            }
            ghalf_inv(i, j) = acc;
        }
    }
    const Matrix W = matmul(ghalf_inv, matmul(Msym, ghalf_inv));
    Matrix Wsym = W;
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = i + 1; j < nw; ++j) {
            const double avg = 0.5 * (Wsym(i, j) + Wsym(j, i));
            Wsym(i, j) = avg;
            Wsym(j, i) = avg;
        }
    }

    EnergyConstants out;
    out.beta_bound = min_eig(Wsym);
    out.samples = samples;

    Rng rng(seed);
    auto sobolev = [&](const std::vector<double>& u) {
        const auto au = matvec(re.knn_interior, u);
        double s = 0.0;
        for (std::size_t i = 0; i < nw; ++i) s += (u[i] * u[i] + au[i] * au[i]) * re.mu[i];
        return std::sqrt(s);
    };
    auto form = [&](const std::vector<double>& u, const std::vector<double>& v) {
        const auto pu = matvec(re.p_interior, u);
        double s = 0.0;
        for (std::size_t i = 0; i < nw; ++i) s += pu[i] * v[i] * re.mu[i];
        return s;
    };
    double alpha_bound = 0.0;
    for (int s = 0; s < samples; ++s) {
        const auto u = random_vector(rng, nw);
        const auto v = (s % 4 == 0) ? u : random_vector(rng, nw);
        const double den = sobolev(u) * sobolev(v);
        if (den > 0.0) alpha_bound = std::max(alpha_bound, std::fabs(form(u, v)) / den);
    }
    out.alpha_bound = std::max(alpha_bound, out.beta_bound);
    return out;
}

} // namespace

EnergyConstants energy_constants(const ManifoldModel& model, const FrameField& frame,
                                 const EllipticCoefficients& coeffs, double alpha, int k,
                                 const std::vector<CellIndex>& omega, int samples, std::uint64_t seed) {
    return energy_constants_impl(restrict_elliptic(model, frame, coeffs, alpha, k, omega), samples, seed);
}

SolutionReport solve_elliptic_dirichlet(const ManifoldModel& model, const FrameField& frame,
                                        const EllipticCoefficients& coeffs, double alpha, int k,
                                        const std::vector<CellIndex>& omega, const std::vector<double>& f,
                                        int samples, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw validation_error("elliptic: alpha must be positive");
    const RestrictedElliptic re = restrict_elliptic(model, frame, coeffs, alpha, k, omega);
    const std::size_t nw = re.omega.size();
    if (f.size() != nw) throw validation_error("elliptic: right-hand side length mismatch");

    SolutionReport report;
    report.omega_order = re.omega;
    report.closure_order = re.boundary.closure;
    report.theta_certificate = re.theta;

    const EnergyConstants ec = energy_constants_impl(re, samples, seed);
    report.energy_alpha = ec.alpha_bound;
    report.energy_beta = ec.beta_bound;
    report.unique = ec.beta_bound > 0.0;

    const Matrix sym = mu_symmetric_part(re.p_interior, re.mu);
    report.coercivity_beta = min_eig(sym);
    const double sigma_max = max_eig(sym);
    report.condition_estimate = report.coercivity_beta > 0.0 ? sigma_max / report.coercivity_beta : 0.0;
    report.continuity_alpha = ec.alpha_bound;

    try {
        const std::vector<double> u = solve_linear(re.p_interior, f);
        const auto pu = matvec(re.p_interior, u);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < nw; ++i) {
            num += (pu[i] - f[i]) * (pu[i] - f[i]);
            den += f[i] * f[i];
        }
        report.residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
        report.solved = true;
        report.u_omega = u;
        report.u.assign(report.closure_order.size(), 0.0);
        for (std::size_t i = 0; i < report.closure_order.size(); ++i) {
            for (std::size_t j = 0; j < nw; ++j) {
                if (report.closure_order[i] == re.omega[j]) {
                    report.u[i] = u[j];
                    break;
                }
            }
        }
    } catch (const numeric_error&) {
        report.solved = false;
        report.unique = false;
    }
    return report;
}

MarkovReport markov_report(const OperatorMatrix& L, const std::vector<double>& times, int samples,
                           std::uint64_t seed) {
    const std::size_t n = L.entries.rows;
    MarkovReport report;
    report.samples = samples;
    report.times = times;

    // Sign structure and conservation gates.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = L.entries(i, j);
            if (i == j && v < -1e-12) return report;
            if (i != j && v > 1e-12) return report;
        }
        if (std::fabs(neumaier_sum(&L.entries.a[i * n], n)) > 1e-10) return report;
    }
    for (double t : times) {
        if (!(t > 0.0)) throw validation_error("markov: times must be positive");
    }
    report.applicable = true;

    const BalancedEig eig = balanced_eig(L);
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = eig.weights[i] * eig.weights[i];

    for (double t : times) {
        const Matrix H = heat_from_eig(eig, t);
        double min_entry = H(0, 0);
        double conservation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) min_entry = std::min(min_entry, H(i, j));
            conservation = std::max(conservation, std::fabs(neumaier_sum(&H.a[i * n], n) - 1.0));
        }
        report.positivity_defect.push_back(min_entry);
        report.conservation_defect.push_back(conservation);
        double norm = 0.0;
        for (double lambda : eig.values) norm = std::max(norm, std::exp(-t * lambda));
        report.l2_contraction.push_back(norm);
    }

    // pi^T L residual; pi is the stationary measure of the semigroup.
    double inv_res = 0.0;
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = pi[i] * L.entries(i, j);
        inv_res = std::max(inv_res, std::fabs(neumaier_sum(col)));
    }
    report.invariant_residual = inv_res;

    // Contraction of the time integral of the semigroup in the pi-weighted
    // Sobolev norm (the inner product in which L is self-adjoint).
    Rng rng(seed);
    auto pi_sobolev = [&](const std::vector<double>& v) {
        const auto lv = matvec(L.entries, v);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (v[i] * v[i] + lv[i] * lv[i]) * pi[i];
        return std::sqrt(s);
    };
    double defect = 0.0;
    for (double t : times) {
        const Matrix J = apply_spectral_map(eig, [t](double lambda) {
            return std::fabs(lambda) * t < 1e-12 ? t : (1.0 - std::exp(-t * lambda)) / lambda;
        });
        for (int s = 0; s < samples; ++s) {
            const auto u = random_vector(rng, n);
            const auto ju = matvec(J, u);
            defect = std::max(defect, pi_sobolev(ju) - t * pi_sobolev(u));
        }
    }
    report.sobolev_defect = defect;
    return report;
}

} // namespace padicdiff
