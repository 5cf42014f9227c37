#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "padicdiff/errors.hpp"

namespace padicdiff {

/// Dense row-major real matrix. Desk-scale (N up to a few thousand), so no
/// sparsity or blocking.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix scale(const Matrix& a, double factor);
Matrix add(const Matrix& a, const Matrix& b);

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);
std::vector<std::complex<double>> matvec(const Matrix& a, const std::vector<std::complex<double>>& x);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius(const Matrix& a);

/// Compensated (Neumaier) summation. Row-sum identities in this library are
/// meant to hold at the level of the stored entries, so defects are measured
/// without adding fold-order noise of the same size.
double neumaier_sum(const double* values, std::size_t count);
double neumaier_sum(const std::vector<double>& values);

} // namespace padicdiff
