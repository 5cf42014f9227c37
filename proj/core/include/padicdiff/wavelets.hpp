#pragma once

#include <complex>
#include <vector>

#include "padicdiff/manifold.hpp"
#include "padicdiff/operators.hpp"

namespace padicdiff {

/// Kozyrev wavelet datum: a support ball of depth <= m-1 (so the wavelet is
/// constant on cells) and a nonzero character index j in {0..p-1}^n.
struct WaveletIndex {
    int root = 0;
    int depth = 0;
    std::uint64_t prefix = 0; // lexicographic rank of the support ball at its depth
    std::uint32_t j = 1;      // tuple value in [1, p^n)

    bool operator==(const WaveletIndex& o) const {
        return root == o.root && depth == o.depth && prefix == o.prefix && j == o.j;
    }
};

struct WaveletVector {
    WaveletIndex index;
    std::vector<std::complex<double>> values; // one per cell, canonical order
};

/// All (ball of depth 0..m-1, j != 0) pairs; per root the count is p^(mn)-1,
/// so wavelets plus root indicators match the cell count.
std::vector<WaveletIndex> enumerate_wavelets(const ManifoldModel& model);

BallAddress wavelet_support(const ManifoldModel& model, const WaveletIndex& idx);
std::string wavelet_label(const ManifoldModel& model, const WaveletIndex& idx);

/// Cell-value vector: mean-zero character oscillation on the support ball,
/// normalized to unit weighted 2-norm.
WaveletVector wavelet_vector(const ManifoldModel& model, const WaveletIndex& idx);

struct CharacterSumResult {
    double value;       // brute-force sum of (1 - chi) over nonzero tuples
    double closed_form; // p^n - (1 + (-1)^n)
    double deviation;   // value - closed_form
};

CharacterSumResult character_sum(const PrimeContext& ctx, const std::vector<int>& j);

struct RayleighResult {
    double lambda;
    double residual;
};

/// lambda = <Lv,v>_mu / <v,v>_mu and the weighted residual of (L - lambda) v.
RayleighResult rayleigh_residual(const OperatorMatrix& L, const std::vector<std::complex<double>>& v);
RayleighResult rayleigh_residual(const OperatorMatrix& L, const std::vector<double>& v);

/// Side-by-side evaluation of the closed-form eigenvalue and the assembled
/// matrix: the nonlocal term is shared, the local terms are both reported so
/// a discrepancy is quantified instead of hidden.
struct WaveletEigenReport {
    WaveletIndex index;
    double nonlocal = 0.0;           // kernel integral over the star outside the support
    double closed_form_local = 0.0;  // mu(B)^(n-alpha) * (1 - p^-n (1 + (-1)^n))
    double closed_form_lambda = 0.0; // nonlocal + closed_form_local
    double oracle_lambda = 0.0;      // Rayleigh quotient of the assembled operator
    double oracle_local = 0.0;       // oracle_lambda - nonlocal
    double residual = 0.0;
    double deviation = 0.0;          // closed_form_local - oracle_local
};

WaveletEigenReport closed_form_eigenvalue(const ManifoldModel& model, const WaveletIndex& idx,
                                          const KernelSpec& kernel, const OperatorMatrix* assembled = nullptr);

/// One report row per wavelet against a single assembled operator.
std::vector<WaveletEigenReport> wavelet_verification(const ManifoldModel& model, const KernelSpec& kernel);

} // namespace padicdiff
