#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "padicdiff/operators.hpp"
#include "padicdiff/spectral.hpp"

namespace padicdiff {

/// (|u|^2_mu + |Lu|^2_mu)^(1/2).
double sobolev_norm(const std::vector<double>& u, const OperatorMatrix& L);
double sobolev_norm(const std::vector<std::complex<double>>& u, const OperatorMatrix& L);

struct PoincareResult {
    double constant = 0.0;
    bool verified = false;
    /// True when the matrix has no kernel and the constant is 1/sigma_min of
    /// the symmetric part; false when it is 1/lambda_min over the nonzero
    /// spectrum, checked off the zero eigenspace.
    bool coercive = false;
};

PoincareResult poincare_constant(const OperatorMatrix& L, int samples = 100, std::uint64_t seed = 12345);

/// <Lu, v> in the mu-weighted inner product.
double dirichlet_form(const OperatorMatrix& L, const std::vector<double>& u, const std::vector<double>& v);
double dirichlet_form_restricted(const RestrictedOperator& R, const std::vector<double>& u,
                                 const std::vector<double>& v);

struct DirichletProblem {
    const ManifoldModel* model = nullptr;
    double alpha = 1.0;
    int k = 1;
    std::vector<CellIndex> omega;
    std::vector<double> f; // one value per omega cell, canonical order
};

struct SolutionReport {
    std::vector<CellIndex> closure_order;
    std::vector<double> u;           // on the closure, zero on the boundary
    std::vector<CellIndex> omega_order;
    std::vector<double> u_omega;
    bool solved = false;
    double residual = 0.0;
    double coercivity_beta = 0.0;    // min eigenvalue of the symmetric part, mu inner product
    double continuity_alpha = 0.0;   // sampled bound on |Q(u,v)| / (|u|_W |v|_W)
    bool unique = false;
    double poincare_constant = 0.0;
    bool poincare_verified = false;
    double condition_estimate = 0.0;
    // Elliptic solves only:
    double theta_certificate = 0.0;
    double energy_alpha = 0.0;
    double energy_beta = 0.0;
};

SolutionReport solve_dirichlet(const DirichletProblem& problem, int samples = 100, std::uint64_t seed = 12345);

/// Adjoint-factored energy form B[u, phi] over the whole model.
double energy_form(const ManifoldModel& model, const FrameField& frame, const EllipticCoefficients& coeffs,
                   double alpha, int k, const std::vector<double>& u, const std::vector<double>& phi);

struct EnergyConstants {
    double alpha_bound = 0.0; // continuity
    double beta_bound = 0.0;  // coercivity over the interior space
    int samples = 0;
};

EnergyConstants energy_constants(const ManifoldModel& model, const FrameField& frame,
                                 const EllipticCoefficients& coeffs, double alpha, int k,
                                 const std::vector<CellIndex>& omega, int samples = 100,
                                 std::uint64_t seed = 12345);

SolutionReport solve_elliptic_dirichlet(const ManifoldModel& model, const FrameField& frame,
                                        const EllipticCoefficients& coeffs, double alpha, int k,
                                        const std::vector<CellIndex>& omega, const std::vector<double>& f,
                                        int samples = 100, std::uint64_t seed = 12345);

/// Semigroup diagnostics for a conservative generator with nonpositive
/// off-diagonal entries. Norms are weighted by the stationary measure
/// pi = balance_weights^2 (the measure in which the generator is
/// self-adjoint; plain mu for the nonlocal radial family).
struct MarkovReport {
    bool applicable = false;
    std::vector<double> times;
    std::vector<double> positivity_defect;   // min entry of exp(-tL), per t
    std::vector<double> conservation_defect; // max |row sum - 1|, per t
    std::vector<double> l2_contraction;      // operator norm in L^2(pi), per t
    double sobolev_defect = 0.0;             // max over samples of |int_0^t e^(-sL) u| - t |u|
    double invariant_residual = 0.0;         // max_j |sum_i pi_i L_ij|
    int samples = 0;
};

MarkovReport markov_report(const OperatorMatrix& L, const std::vector<double>& times, int samples = 100,
                           std::uint64_t seed = 12345);

} // namespace padicdiff
