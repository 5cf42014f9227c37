#include "padicdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace padicdiff {

SymmetrizeResult symmetrize_balance(const Matrix& L, const std::vector<double>& weights) {
    if (L.rows != L.cols) throw validation_error("symmetrize: matrix must be square");
    if (weights.size() != L.rows) throw validation_error("symmetrize: weight length mismatch");
    for (double w : weights) {
        if (!(w > 0.0)) throw validation_error("symmetrize: weights must be strictly positive");
    }
    const std::size_t n = L.rows;
    SymmetrizeResult out;
    out.weights = weights;
    out.symmetric = Matrix(n, n);
    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.symmetric(i, j) = weights[i] * L(i, j) / weights[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            defect = std::max(defect, std::fabs(out.symmetric(i, j) - out.symmetric(j, i)));
            const double avg = 0.5 * (out.symmetric(i, j) + out.symmetric(j, i));
            out.symmetric(i, j) = avg;
            out.symmetric(j, i) = avg;
        }
    }
    out.defect = defect;
    return out;
}

EigResult eig_symmetric(const Matrix& S, double tol) {
    if (S.rows != S.cols) throw validation_error("eig: matrix must be square");
    const std::size_t n = S.rows;

    double sym_defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            sym_defect = std::max(sym_defect, std::fabs(S(i, j) - S(j, i)));
        }
    }
    const double scale = std::max(1.0, max_abs(S));
    if (sym_defect > 1e-10 * scale) throw validation_error("eig: input is not symmetric");

    Matrix a = S;
    Matrix v = Matrix::identity(n);

    auto off_frobenius = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        }
        return std::sqrt(s);
    };
    auto off_abs_sum = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += std::fabs(a(i, j));
        }
        return s;
    };

    const int max_sweeps = 100;
    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        if (off_frobenius() <= tol) {
            converged = true;
            break;
        }
        // Threshold early sweeps; later, entries negligible against their
        // diagonals are cleared outright so degenerate clusters settle.
        const double thresh = sweep < 4 ? 0.2 * off_abs_sum() / static_cast<double>(n * n) : 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double g = 100.0 * std::fabs(apq);
                if (sweep > 4 && std::fabs(a(p, p)) + g == std::fabs(a(p, p)) &&
                    std::fabs(a(q, q)) + g == std::fabs(a(q, q))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                if (std::fabs(apq) <= thresh) continue;

                const double h = a(q, q) - a(p, p);
                double t;
                if (std::fabs(h) + g == std::fabs(h)) {
                    t = apq / h;
                } else {
                    const double theta = h / (2.0 * apq);
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p);
                const double aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double arp = a(r, p);
                        const double arq = a(r, q);
                        a(r, p) = arp - s * (arq + tau * arp);
                        a(p, r) = a(r, p);
                        a(r, q) = arq + s * (arp - tau * arq);
                        a(q, r) = a(r, q);
                    }
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    if (!converged && off_frobenius() > tol) throw numeric_error("eig: Jacobi did not converge");

    EigResult out;
    out.values.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = diag[order[k]];
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

BalancedEig balanced_eig(const OperatorMatrix& L) {
    std::vector<double> weights = L.balance_weights;
    if (weights.empty()) weights.assign(L.entries.rows, 1.0);
    const SymmetrizeResult sym = symmetrize_balance(L.entries, weights);
    const double scale = std::max(1.0, frobenius(sym.symmetric));
    EigResult eig = eig_symmetric(sym.symmetric, 1e-14 * scale);
    return {std::move(eig.values), std::move(eig.vectors), std::move(weights)};
}

SpectrumReport spectrum(const OperatorMatrix& L) {
    const BalancedEig eig = balanced_eig(L);
    const std::size_t n = eig.values.size();

    // Residuals of the symmetric problem, one per eigenpair.
    const SymmetrizeResult sym = symmetrize_balance(L.entries, eig.weights);
    std::vector<double> pair_residual(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sym.symmetric(i, j) * eig.vectors(j, k);
            const double r = acc - eig.values[k] * eig.vectors(i, k);
            norm2 += r * r;
        }
        pair_residual[k] = std::sqrt(norm2);
    }

    SpectrumReport report;
    report.raw_values = eig.values;
    const double group_tol = 1e-8 * std::max(1.0, std::fabs(eig.values.empty() ? 0.0 : eig.values.back()));
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double max_res = 0.0;
        while (j < n && std::fabs(eig.values[j] - eig.values[i]) <= group_tol) {
            max_res = std::max(max_res, pair_residual[j]);
            ++j;
        }
        report.values.push_back(eig.values[i]);
        report.multiplicities.push_back(static_cast<int>(j - i));
        report.residuals.push_back(max_res);
        i = j;
    }
    report.tolerance = 1e-12 * std::max(1.0, frobenius(sym.symmetric)) * 10.0;
    return report;
}

Matrix heat_from_eig(const BalancedEig& eig, double t) {
    if (t < 0.0) throw validation_error("heat: time must be nonnegative");
    return apply_spectral_map(eig, [t](double lambda) { return std::exp(-t * lambda); });
}

Matrix heat_operator(const OperatorMatrix& L, double t) {
    if (t < 0.0) throw validation_error("heat: time must be nonnegative");
    return heat_from_eig(balanced_eig(L), t);
}

std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    if (a.rows != a.cols || a.rows != b.size()) throw validation_error("solve: shape mismatch");
    const std::size_t n = a.rows;
    const double scale = std::max(1.0, max_abs(a));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        }
        if (std::fabs(a(pivot, col)) < 1e-13 * scale) {
            throw numeric_error("solve: singular matrix (pivot below threshold)");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a(r, col) * inv;
            if (factor == 0.0) continue;
            a(r, col) = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) a(r, c) -= factor * a(col, c);
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a(ri, c) * x[c];
        x[ri] = acc / a(ri, ri);
    }
    return x;
}

} // namespace padicdiff
