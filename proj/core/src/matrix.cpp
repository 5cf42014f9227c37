#include "padicdiff/matrix.hpp"

#include <cmath>

namespace padicdiff {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw validation_error("matmul: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.a[k * b.cols];
            double* orow = &out.a[i * out.cols];
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    }
    return out;
}

Matrix scale(const Matrix& a, double factor) {
    Matrix out = a;
    for (double& v : out.a) v *= factor;
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw validation_error("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += b.a[i];
    return out;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols != x.size()) throw validation_error("matvec: shape mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* row = &a.a[i * a.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

std::vector<std::complex<double>> matvec(const Matrix& a, const std::vector<std::complex<double>>& x) {
    if (a.cols != x.size()) throw validation_error("matvec: shape mismatch");
    std::vector<std::complex<double>> y(a.rows, {0.0, 0.0});
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* row = &a.a[i * a.cols];
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.a) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw validation_error("diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) m = std::max(m, std::fabs(a.a[i] - b.a[i]));
    return m;
}

double frobenius(const Matrix& a) {
    double s = 0.0;
    for (double v : a.a) s += v * v;
    return std::sqrt(s);
}

double neumaier_sum(const double* values, std::size_t count) {
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double v = values[i];
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double neumaier_sum(const std::vector<double>& values) {
    return neumaier_sum(values.data(), values.size());
}

} // namespace padicdiff
