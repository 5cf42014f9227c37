#include "padicdiff/wavelets.hpp"

#include <cmath>

namespace padicdiff {

std::vector<WaveletIndex> enumerate_wavelets(const ManifoldModel& model) {
    const auto& ctx = model.ctx();
    std::vector<WaveletIndex> out;
    for (int r = 0; r < static_cast<int>(model.roots().size()); ++r) {
        for (int b = 0; b < ctx.m; ++b) {
            const std::uint64_t balls = ctx.tuple_pow(b);
            for (std::uint64_t prefix = 0; prefix < balls; ++prefix) {
                for (std::uint32_t j = 1; j < ctx.tuples_per_level(); ++j) {
                    out.push_back({r, b, prefix, j});
                }
            }
        }
    }
    return out;
}

BallAddress wavelet_support(const ManifoldModel& model, const WaveletIndex& idx) {
    const auto& ctx = model.ctx();
    BallAddress addr;
    addr.levels.resize(static_cast<std::size_t>(idx.depth));
    std::uint64_t rest = idx.prefix;
    for (int t = idx.depth - 1; t >= 0; --t) {
        addr.levels[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(rest % ctx.tuples_per_level());
        rest /= ctx.tuples_per_level();
    }
    return addr;
}

std::string wavelet_label(const ManifoldModel& model, const WaveletIndex& idx) {
    const auto& ctx = model.ctx();
    std::string out = model.roots()[static_cast<std::size_t>(idx.root)].id;
    const BallAddress addr = wavelet_support(model, idx);
    for (int t = 0; t < addr.depth(); ++t) {
        out += (t == 0) ? ':' : '.';
        auto digits = level_digits(ctx, addr.levels[static_cast<std::size_t>(t)]);
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (i > 0) out += ',';
            out += std::to_string(digits[i]);
        }
    }
    out += "|j=";
    auto jd = level_digits(ctx, idx.j);
    for (std::size_t i = 0; i < jd.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(jd[i]);
    }
    return out;
}

WaveletVector wavelet_vector(const ManifoldModel& model, const WaveletIndex& idx) {
    const auto& ctx = model.ctx();
    if (idx.depth < 0 || idx.depth > ctx.m - 1) {
        throw validation_error("wavelet: support depth must be in [0, m-1]");
    }
    if (idx.j == 0 || idx.j >= ctx.tuples_per_level()) {
        throw validation_error("wavelet: character index j must be a nonzero tuple");
    }
    if (idx.root < 0 || idx.root >= static_cast<int>(model.roots().size())) {
        throw validation_error("wavelet: unknown root");
    }

    WaveletVector w;
    w.index = idx;
    w.values.assign(model.cell_count(), {0.0, 0.0});

    const BallAddress support = wavelet_support(model, idx);
    const Rational support_measure = ball_measure(ctx, support, model.roots()[static_cast<std::size_t>(idx.root)].density);
    const double norm = 1.0 / std::sqrt(support_measure.to_double());

    const auto j_digits = level_digits(ctx, idx.j);
    const auto range = model.prefix_cell_range(idx.root, support);
    const std::uint64_t child_width = ctx.tuple_pow(ctx.m - idx.depth - 1);

    // Roots of unity by phase class; the value on a cell depends only on the
    // first child tuple below the support.
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(ctx.p));
    for (long long s = 0; s < ctx.p; ++s) phase[static_cast<std::size_t>(s)] = unit_root(ctx.p, s);

    for (std::uint64_t o = range.first; o < range.second; ++o) {
        const std::uint32_t child = static_cast<std::uint32_t>((o / child_width) % ctx.tuples_per_level());
        const auto child_digits = level_digits(ctx, child);
        long long s = 0;
        for (int i = 0; i < ctx.n; ++i) {
            s += static_cast<long long>(j_digits[static_cast<std::size_t>(i)]) *
                 child_digits[static_cast<std::size_t>(i)];
        }
        const std::size_t lin = model.cell_linear_index({idx.root, o});
        w.values[lin] = norm * phase[static_cast<std::size_t>(((s % ctx.p) + ctx.p) % ctx.p)];
    }
    return w;
}

CharacterSumResult character_sum(const PrimeContext& ctx, const std::vector<int>& j) {
    if (static_cast<int>(j.size()) != ctx.n) {
        throw validation_error("character sum: index must have n components");
    }
    bool zero = true;
    for (int ji : j) {
        if (ji < 0 || ji >= ctx.p) throw validation_error("character sum: component out of range");
        if (ji != 0) zero = false;
    }
    if (zero) throw validation_error("character sum: j must be nonzero");

    std::complex<double> acc{0.0, 0.0};
    const std::uint64_t tuples = ctx.tuple_pow(1);
    for (std::uint64_t value = 1; value < tuples; ++value) {
        const auto digits = level_digits(ctx, static_cast<std::uint32_t>(value));
        long long s = 0;
        for (int i = 0; i < ctx.n; ++i) {
            s += static_cast<long long>(j[static_cast<std::size_t>(i)]) * digits[static_cast<std::size_t>(i)];
        }
        acc += 1.0 - unit_root(ctx.p, s);
    }

    CharacterSumResult out;
    out.value = acc.real();
    const double parity = (ctx.n % 2 == 0) ? 2.0 : 0.0;
    out.closed_form = std::pow(static_cast<double>(ctx.p), ctx.n) - parity;
    out.deviation = out.value - out.closed_form;
    return out;
}

RayleighResult rayleigh_residual(const OperatorMatrix& L, const std::vector<std::complex<double>>& v) {
    const std::size_t n = L.entries.rows;
    if (v.size() != n) throw validation_error("rayleigh: vector length mismatch");
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm2 += std::norm(v[i]) * L.mu_dbl[i];
    if (norm2 <= 0.0) throw validation_error("rayleigh: zero vector");

    const auto lv = matvec(L.entries, v);
    std::complex<double> inner{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) inner += lv[i] * std::conj(v[i]) * L.mu_dbl[i];
    const double lambda = inner.real() / norm2;

    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) res2 += std::norm(lv[i] - lambda * v[i]) * L.mu_dbl[i];
    return {lambda, std::sqrt(res2 / norm2)};
}

RayleighResult rayleigh_residual(const OperatorMatrix& L, const std::vector<double>& v) {
    std::vector<std::complex<double>> cv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) cv[i] = v[i];
    return rayleigh_residual(L, cv);
}

WaveletEigenReport closed_form_eigenvalue(const ManifoldModel& model, const WaveletIndex& idx,
                                    const KernelSpec& kernel, const OperatorMatrix* assembled) {
    const auto& ctx = model.ctx();
    if (kernel.family == KernelSpec::Family::Custom) {
        throw validation_error("eigenvalue: closed form covers vt and knn kernels only");
    }
    const bool knn = kernel.family == KernelSpec::Family::HeightKnn;

    OperatorMatrix local;
    if (assembled == nullptr) {
        local = assemble_kernel(model, kernel);
        assembled = &local;
    }

    const BallAddress support = wavelet_support(model, idx);
    const auto range = model.prefix_cell_range(idx.root, support);
    const CellIndex anchor{idx.root, range.first};

    DegreeReport degrees;
    if (knn) degrees = degree_and_star(model, kernel.k);

    const double exponent = -static_cast<double>(ctx.n) * kernel.alpha;
    double nonlocal = 0.0;
    for (const auto& cell : model.enumerate_cells()) {
        if (cell.root == idx.root && cell.ordinal >= range.first && cell.ordinal < range.second) continue;
        if (knn && !star_adjacent(model, kernel.k, anchor, cell)) continue;
        double kernel_value = std::pow(model.distance(anchor, cell), exponent);
        if (knn) {
            kernel_value *= (degrees.deg_by_root[static_cast<std::size_t>(cell.root)] /
                             degrees.deg_by_root[static_cast<std::size_t>(idx.root)])
                                .to_double();
        }
        nonlocal += kernel_value * model.cell_measure(cell).to_double();
    }

    const Rational support_measure =
        ball_measure(ctx, support, model.roots()[static_cast<std::size_t>(idx.root)].density);
    const double parity = (ctx.n % 2 == 0) ? 2.0 : 0.0;
    const double character_factor = 1.0 - parity / std::pow(static_cast<double>(ctx.p), ctx.n);
    const double closed_form_local =
        std::pow(support_measure.to_double(), static_cast<double>(ctx.n) - kernel.alpha) * character_factor;

    const WaveletVector w = wavelet_vector(model, idx);
    const RayleighResult oracle = rayleigh_residual(*assembled, w.values);

    WaveletEigenReport report;
    report.index = idx;
    report.nonlocal = nonlocal;
    report.closed_form_local = closed_form_local;
    report.closed_form_lambda = nonlocal + closed_form_local;
    report.oracle_lambda = oracle.lambda;
    report.oracle_local = oracle.lambda - nonlocal;
    report.residual = oracle.residual;
    report.deviation = closed_form_local - report.oracle_local;
    return report;
}

std::vector<WaveletEigenReport> wavelet_verification(const ManifoldModel& model, const KernelSpec& kernel) {
    const OperatorMatrix L = assemble_kernel(model, kernel);
    std::vector<WaveletEigenReport> out;
    for (const auto& idx : enumerate_wavelets(model)) {
        out.push_back(closed_form_eigenvalue(model, idx, kernel, &L));
    }
    return out;
}

} // namespace padicdiff
