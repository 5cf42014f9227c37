#pragma once

#include <vector>

#include "padicdiff/matrix.hpp"
#include "padicdiff/operators.hpp"

namespace padicdiff {

struct SymmetrizeResult {
    Matrix symmetric; // D * L * D^-1 with D = diag(weights)
    std::vector<double> weights;
    double defect; // max |S_ij - S_ji| before averaging
};

/// Conjugates by a positive diagonal; eigenvalues are preserved.
SymmetrizeResult symmetrize_balance(const Matrix& L, const std::vector<double>& weights);

struct EigResult {
    std::vector<double> values; // ascending
    Matrix vectors;             // columns, orthonormal
};

/// Cyclic Jacobi for symmetric matrices. Terminates when the off-diagonal
/// Frobenius mass drops below tol; throws numeric_error when it does not.
EigResult eig_symmetric(const Matrix& S, double tol);

struct SpectrumReport {
    std::vector<double> values;        // grouped, ascending
    std::vector<int> multiplicities;
    std::vector<double> residuals;     // max ||S v - lambda v|| per group
    double tolerance = 0.0;            // advertised residual bound
    std::vector<double> raw_values;    // one per dimension, ascending
};

/// Balance-symmetrized eigendecomposition with multiplicity grouping at
/// relative tolerance 1e-8.
SpectrumReport spectrum(const OperatorMatrix& L);

/// Eigendecomposition of L through its balance conjugation:
/// L = D^-1 V diag(values) V^T D.
struct BalancedEig {
    std::vector<double> values;
    Matrix vectors;
    std::vector<double> weights;
};

BalancedEig balanced_eig(const OperatorMatrix& L);

/// exp(-t L) through the balanced eigendecomposition.
Matrix heat_operator(const OperatorMatrix& L, double t);
Matrix heat_from_eig(const BalancedEig& eig, double t);

/// f(L) = D^-1 V diag(f(values)) V^T D for a scalar map f.
template <typename F>
Matrix apply_spectral_map(const BalancedEig& eig, F&& f) {
    const std::size_t n = eig.values.size();
    Matrix out(n, n);
    std::vector<double> fv(n);
    for (std::size_t i = 0; i < n; ++i) fv[i] = f(eig.values[i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * fv[k] * eig.vectors(j, k);
            out(i, j) = acc * eig.weights[j] / eig.weights[i];
        }
    }
    return out;
}

/// Gaussian elimination with partial pivoting. Throws numeric_error on a
/// pivot below 1e-13 of the matrix scale.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

} // namespace padicdiff
