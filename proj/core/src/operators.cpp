#include "padicdiff/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace padicdiff {

namespace {

using nlohmann::ordered_json;

/// Join-depth threshold for star membership of two distinct cells of one
/// root: the join at depth jd has height h(face) + 1 + jd.
long long same_root_threshold(const ManifoldModel& model, int k, int root) {
    const int host = model.roots()[static_cast<std::size_t>(root)].face;
    return static_cast<long long>(k) - model.face_height(host) - 1;
}

bool cross_root_adjacent(const ManifoldModel& model, int k, int ra, int rb) {
    const int fa = model.roots()[static_cast<std::size_t>(ra)].face;
    const int fb = model.roots()[static_cast<std::size_t>(rb)].face;
    const int j = model.face_join(fa, fb);
    return j >= 0 && model.face_height(j) >= k;
}

struct KernelTables {
    // Kernel value by root and join depth for same-root pairs, and by root
    // pair across trees. Distances are constant on those classes.
    std::vector<std::vector<double>> within;
    std::vector<std::vector<double>> cross;
};

KernelTables radial_tables(const ManifoldModel& model, const std::function<double(double)>& w) {
    const int nr = static_cast<int>(model.roots().size());
    const int m = model.ctx().m;
    KernelTables t;
    t.within.assign(static_cast<std::size_t>(nr), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    t.cross.assign(static_cast<std::size_t>(nr), std::vector<double>(static_cast<std::size_t>(nr), 0.0));
    for (int r = 0; r < nr; ++r) {
        for (int jd = 0; jd < m; ++jd) {
            t.within[static_cast<std::size_t>(r)][static_cast<std::size_t>(jd)] =
                w(model.within_root_distance(r, jd));
        }
        for (int s = 0; s < nr; ++s) {
            if (s == r) continue;
            t.cross[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] =
                w(model.cross_root_distance(r, s).to_double());
        }
    }
    return t;
}

struct AssemblyPlan {
    std::function<double(double)> weight;              // radial kernel of the distance
    bool restrict_to_star = false;                     // knn families only
    int k = 0;
    std::vector<double> degree_ratio_cross;            // [ra*nr + rb] = deg_rb / deg_ra
    std::vector<double> balance;                       // per-cell conjugation weights
};

OperatorMatrix assemble_plan(const ManifoldModel& model, const AssemblyPlan& plan) {
    const std::size_t n = model.cell_count();
    const int nr = static_cast<int>(model.roots().size());

    OperatorMatrix L;
    L.entries = Matrix(n, n);
    L.cell_order = model.enumerate_cells();
    L.mu.reserve(n);
    L.mu_dbl.reserve(n);
    for (const auto& c : L.cell_order) {
        L.mu.push_back(model.cell_measure(c));
        L.mu_dbl.push_back(model.cell_measure(c).to_double());
    }

    const KernelTables tables = radial_tables(model, plan.weight);
    std::vector<long long> thresholds(static_cast<std::size_t>(nr), -1);
    std::vector<char> cross_ok(static_cast<std::size_t>(nr) * static_cast<std::size_t>(nr), 1);
    if (plan.restrict_to_star) {
        for (int r = 0; r < nr; ++r) {
            thresholds[static_cast<std::size_t>(r)] = same_root_threshold(model, plan.k, r);
        }
        for (int ra = 0; ra < nr; ++ra) {
            for (int rb = 0; rb < nr; ++rb) {
                cross_ok[static_cast<std::size_t>(ra * nr + rb)] =
                    ra != rb && cross_root_adjacent(model, plan.k, ra, rb) ? 1 : 0;
            }
        }
    } else {
        for (int ra = 0; ra < nr; ++ra) {
            for (int rb = 0; rb < nr; ++rb) {
                cross_ok[static_cast<std::size_t>(ra * nr + rb)] = ra != rb ? 1 : 0;
            }
        }
    }

    std::vector<double> terms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const CellIndex ci = L.cell_order[i];
        double* row = &L.entries.a[i * n];
        std::fill(terms.begin(), terms.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const CellIndex cj = L.cell_order[j];
            double kernel = 0.0;
            if (ci.root == cj.root) {
                // Degree ratios are 1 inside a root: degrees are root-constant.
                const int jd = model.join_depth(ci, cj);
                if (!plan.restrict_to_star || jd >= thresholds[static_cast<std::size_t>(ci.root)]) {
                    kernel = tables.within[static_cast<std::size_t>(ci.root)][static_cast<std::size_t>(jd)];
                }
            } else if (cross_ok[static_cast<std::size_t>(ci.root * nr + cj.root)]) {
                kernel = tables.cross[static_cast<std::size_t>(ci.root)][static_cast<std::size_t>(cj.root)];
                if (!plan.degree_ratio_cross.empty()) {
                    kernel *= plan.degree_ratio_cross[static_cast<std::size_t>(ci.root * nr + cj.root)];
                }
            }
            if (kernel == 0.0) continue;
            const double term = kernel * L.mu_dbl[j];
            row[j] = -term;
            terms[j] = term;
        }
        row[i] = neumaier_sum(terms);
    }

    L.balance_weights = plan.balance;
    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sij = plan.balance[i] * L.entries(i, j) / plan.balance[j];
            const double sji = plan.balance[j] * L.entries(j, i) / plan.balance[i];
            defect = std::max(defect, std::fabs(sij - sji));
        }
    }
    L.balance_defect = defect;
    return L;
}

std::vector<double> sqrt_mu_weights(const ManifoldModel& model) {
    std::vector<double> w;
    w.reserve(model.cell_count());
    for (const auto& c : model.enumerate_cells()) w.push_back(std::sqrt(model.cell_measure(c).to_double()));
    return w;
}

long long det_mod_p(std::vector<long long> m, int n, long long p) {
    auto mod = [p](long long v) { return ((v % p) + p) % p; };
    long long det = 1;
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r) {
            if (mod(m[static_cast<std::size_t>(r * n + col)]) != 0) { pivot = r; break; }
        }
        if (pivot < 0) return 0;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(m[static_cast<std::size_t>(pivot * n + c)], m[static_cast<std::size_t>(col * n + c)]);
            }
            det = mod(p - det);
        }
        const long long lead = mod(m[static_cast<std::size_t>(col * n + col)]);
        det = mod(det * lead);
        // Modular inverse by Fermat.
        long long inv = 1, base = lead, e = p - 2;
        while (e > 0) {
            if (e & 1) inv = mod(inv * base);
            base = mod(base * base);
            e >>= 1;
        }
        for (int r = col + 1; r < n; ++r) {
            const long long factor = mod(m[static_cast<std::size_t>(r * n + col)] * inv);
            if (factor == 0) continue;
            for (int c = col; c < n; ++c) {
                m[static_cast<std::size_t>(r * n + c)] =
                    mod(m[static_cast<std::size_t>(r * n + c)] - factor * m[static_cast<std::size_t>(col * n + c)]);
            }
        }
    }
    return det;
}

long long pow_ll(long long base, int exp) {
    long long v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

std::vector<long long> parse_int_matrix(const ordered_json& node, int n, const std::string& where) {
    if (!node.is_array() || static_cast<int>(node.size()) != n) {
        throw validation_error(where + ": expected " + std::to_string(n) + " rows");
    }
    std::vector<long long> out;
    out.reserve(static_cast<std::size_t>(n * n));
    for (const auto& row : node) {
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw validation_error(where + ": expected " + std::to_string(n) + " columns");
        }
        for (const auto& v : row) out.push_back(v.get<long long>());
    }
    return out;
}

} // namespace

KernelSpec KernelSpec::knn(double alpha, int k) {
    if (k < 0) throw validation_error("kernel: knn requires k >= 0");
    return {Family::HeightKnn, alpha, k, {}};
}

std::string KernelSpec::describe() const {
    char buf[96];
    switch (family) {
        case Family::VladimirovTaibleson:
            std::snprintf(buf, sizeof buf, "vt(alpha=%g)", alpha);
            return buf;
        case Family::HeightKnn:
            std::snprintf(buf, sizeof buf, "knn(alpha=%g,k=%d)", alpha, k);
            return buf;
        case Family::Custom:
            return "custom";
    }
    return "unknown";
}

DegreeReport degree_and_star(const ManifoldModel& model, int k) {
    if (k < 0) throw validation_error("degree: k must be >= 0");
    const auto& ctx = model.ctx();
    const int nr = static_cast<int>(model.roots().size());

    DegreeReport report;
    report.k = k;
    report.deg_by_root.reserve(static_cast<std::size_t>(nr));

    const Rational qinv = Rational::int_pow(ctx.p, -ctx.n);
    for (int r = 0; r < nr; ++r) {
        const Rational rho = model.roots()[static_cast<std::size_t>(r)].density;
        const long long jd_min_raw = same_root_threshold(model, k, r);
        const long long jd_min = std::max<long long>(0, jd_min_raw);

        Rational deg(0);
        // Distinct-cell join levels jd_min .. m-1.
        for (long long jd = jd_min; jd < ctx.m; ++jd) {
            deg += rho * rho * (Rational(1) - qinv) * Rational::int_pow(ctx.p, -2 * jd * ctx.n);
        }
        // Join levels below the cells, summed as a geometric series so the
        // degree is the exact infinite-tree value.
        const long long d0 = std::max<long long>(ctx.m, jd_min_raw);
        deg += rho * rho * Rational::int_pow(ctx.p, -2 * d0 * ctx.n) / (Rational(1) + qinv);
        // Trees whose joining face is high enough.
        for (int s = 0; s < nr; ++s) {
            if (s == r || !cross_root_adjacent(model, k, r, s)) continue;
            const int fr = model.roots()[static_cast<std::size_t>(r)].face;
            const int fs = model.roots()[static_cast<std::size_t>(s)].face;
            deg += model.face_measure(model.face_join(fr, fs)) * model.roots()[static_cast<std::size_t>(s)].density;
        }
        report.deg_by_root.push_back(deg);
    }

    // Connectivity of the star graph on cells, computed on the quotient of
    // mutually adjacent same-root blocks.
    std::vector<std::size_t> block_base(static_cast<std::size_t>(nr) + 1, 0);
    std::vector<std::uint64_t> blocks_per_root(static_cast<std::size_t>(nr), 0);
    for (int r = 0; r < nr; ++r) {
        const long long jd_min = std::max<long long>(0, same_root_threshold(model, k, r));
        const long long block_depth = std::min<long long>(jd_min, ctx.m);
        blocks_per_root[static_cast<std::size_t>(r)] = ctx.tuple_pow(static_cast<int>(block_depth));
        block_base[static_cast<std::size_t>(r) + 1] =
            block_base[static_cast<std::size_t>(r)] + blocks_per_root[static_cast<std::size_t>(r)];
    }
    std::vector<std::size_t> parent(block_base.back());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) { parent[x] = parent[parent[x]]; x = parent[x]; }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
    for (int ra = 0; ra < nr; ++ra) {
        for (int rb = ra + 1; rb < nr; ++rb) {
            if (!cross_root_adjacent(model, k, ra, rb)) continue;
            for (std::uint64_t b = 0; b < blocks_per_root[static_cast<std::size_t>(ra)]; ++b) {
                unite(block_base[static_cast<std::size_t>(ra)] + b, block_base[static_cast<std::size_t>(ra)]);
            }
            for (std::uint64_t b = 0; b < blocks_per_root[static_cast<std::size_t>(rb)]; ++b) {
                unite(block_base[static_cast<std::size_t>(rb)] + b, block_base[static_cast<std::size_t>(rb)]);
            }
            unite(block_base[static_cast<std::size_t>(ra)], block_base[static_cast<std::size_t>(rb)]);
        }
    }
    std::set<std::size_t> comps;
    for (std::size_t i = 0; i < parent.size(); ++i) comps.insert(find(i));
    report.component_count = comps.size();
    report.connected = comps.size() == 1;
    return report;
}

Rational cell_degree(const DegreeReport& degrees, const CellIndex& cell) {
    return degrees.deg_by_root[static_cast<std::size_t>(cell.root)];
}

bool star_adjacent(const ManifoldModel& model, int k, const CellIndex& a, const CellIndex& b) {
    if (a == b) return false;
    if (a.root == b.root) return model.join_depth(a, b) >= same_root_threshold(model, k, a.root);
    return cross_root_adjacent(model, k, a.root, b.root);
}

std::vector<CellIndex> star_cells(const ManifoldModel& model, int k, const CellIndex& a) {
    std::vector<CellIndex> out;
    for (const auto& c : model.enumerate_cells()) {
        if (star_adjacent(model, k, a, c)) out.push_back(c);
    }
    return out;
}

OperatorMatrix assemble_vt(const ManifoldModel& model, double alpha) {
    AssemblyPlan plan;
    const double exponent = -static_cast<double>(model.ctx().n) * alpha;
    plan.weight = [exponent](double d) { return std::pow(d, exponent); };
    plan.balance = sqrt_mu_weights(model);
    return assemble_plan(model, plan);
}

OperatorMatrix assemble_knn(const ManifoldModel& model, double alpha, int k) {
    if (k < 0) throw validation_error("assemble: knn requires k >= 0");
    const int nr = static_cast<int>(model.roots().size());
    const DegreeReport degrees = degree_and_star(model, k);

    AssemblyPlan plan;
    const double exponent = -static_cast<double>(model.ctx().n) * alpha;
    plan.weight = [exponent](double d) { return std::pow(d, exponent); };
    plan.restrict_to_star = true;
    plan.k = k;
    plan.degree_ratio_cross.assign(static_cast<std::size_t>(nr) * static_cast<std::size_t>(nr), 1.0);
    for (int ra = 0; ra < nr; ++ra) {
        for (int rb = 0; rb < nr; ++rb) {
            if (ra == rb) continue;
            plan.degree_ratio_cross[static_cast<std::size_t>(ra * nr + rb)] =
                (degrees.deg_by_root[static_cast<std::size_t>(rb)] /
                 degrees.deg_by_root[static_cast<std::size_t>(ra)])
                    .to_double();
        }
    }
    plan.balance.reserve(model.cell_count());
    for (const auto& c : model.enumerate_cells()) {
        plan.balance.push_back(degrees.deg_by_root[static_cast<std::size_t>(c.root)].to_double() *
                               std::sqrt(model.cell_measure(c).to_double()));
    }
    return assemble_plan(model, plan);
}

OperatorMatrix assemble_kernel(const ManifoldModel& model, const KernelSpec& kernel) {
    switch (kernel.family) {
        case KernelSpec::Family::VladimirovTaibleson:
            return assemble_vt(model, kernel.alpha);
        case KernelSpec::Family::HeightKnn:
            return assemble_knn(model, kernel.alpha, kernel.k);
        case KernelSpec::Family::Custom: {
            if (!kernel.weight) throw validation_error("assemble: custom kernel needs a weight function");
            AssemblyPlan plan;
            plan.weight = kernel.weight;
            plan.balance = sqrt_mu_weights(model);
            return assemble_plan(model, plan);
        }
    }
    throw validation_error("assemble: unknown kernel family");
}

OperatorMatrix adjoint_l2(const OperatorMatrix& L) {
    const std::size_t n = L.entries.rows;
    OperatorMatrix out;
    out.cell_order = L.cell_order;
    out.mu = L.mu;
    out.mu_dbl = L.mu_dbl;
    out.entries = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.entries(i, j) = L.entries(j, i) * (L.mu[j] / L.mu[i]).to_double();
        }
    }
    if (!L.balance_weights.empty()) {
        out.balance_weights.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.balance_weights[i] = L.mu_dbl[i] / L.balance_weights[i];
    }
    out.balance_defect = L.balance_defect;
    return out;
}

// --- frames ---------------------------------------------------------------

FrameField FrameField::identity(const ManifoldModel& model) {
    const int n = model.ctx().n;
    std::vector<long long> id(static_cast<std::size_t>(n * n), 0);
    for (int i = 0; i < n; ++i) id[static_cast<std::size_t>(i * n + i)] = 1;
    return from_assignments(model, std::move(id), {});
}

FrameField FrameField::from_assignments(const ManifoldModel& model, std::vector<long long> default_matrix,
                                        const std::vector<Assignment>& assignments) {
    const int n = model.ctx().n;
    const long long pm = pow_ll(model.ctx().p, model.ctx().m);
    if (static_cast<int>(default_matrix.size()) != n * n) {
        throw validation_error("frame: default matrix must be n x n");
    }

    FrameField field;
    field.n_ = n;
    field.stride_ = static_cast<std::size_t>(n * n);
    field.constancy_depth_ = 0;
    for (const auto& a : assignments) {
        field.constancy_depth_ = std::max(field.constancy_depth_, a.prefix.depth());
        if (static_cast<int>(a.matrix.size()) != n * n) {
            throw validation_error("frame: assignment matrix must be n x n");
        }
        if (a.prefix.depth() > model.ctx().m) {
            throw validation_error("frame: assignment prefix deeper than the cell level");
        }
    }

    const std::size_t cells = model.cell_count();
    field.entries_.assign(cells * field.stride_, 0);
    for (std::size_t lin = 0; lin < cells; ++lin) {
        const CellIndex cell = model.cell_at(lin);
        const BallAddress addr = model.cell_address(cell);
        const std::vector<long long>* chosen = &default_matrix;
        int best_depth = -1;
        for (const auto& a : assignments) {
            if (a.root >= 0 && a.root != cell.root) continue;
            if (!is_prefix(a.prefix, addr)) continue;
            if (a.prefix.depth() > best_depth) {
                best_depth = a.prefix.depth();
                chosen = &a.matrix;
            }
        }
        for (std::size_t e = 0; e < field.stride_; ++e) {
            long long v = (*chosen)[e] % pm;
            if (v < 0) v += pm;
            field.entries_[lin * field.stride_ + e] = v;
        }
        if (det_mod_p(std::vector<long long>(field.entries_.begin() + static_cast<std::ptrdiff_t>(lin * field.stride_),
                                             field.entries_.begin() + static_cast<std::ptrdiff_t>((lin + 1) * field.stride_)),
                      n, model.ctx().p) == 0) {
            throw validation_error("frame: matrix at cell " + model.cell_address_string(cell) +
                                   " has determinant of positive valuation");
        }
    }
    return field;
}

FrameField FrameField::from_json(const ManifoldModel& model, const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw validation_error(std::string("frame: parse error: ") + e.what());
    }
    const int n = model.ctx().n;
    std::vector<long long> def;
    if (doc.contains("default")) {
        def = parse_int_matrix(doc.at("default"), n, "frame default");
    } else {
        def.assign(static_cast<std::size_t>(n * n), 0);
        for (int i = 0; i < n; ++i) def[static_cast<std::size_t>(i * n + i)] = 1;
    }
    std::vector<Assignment> assignments;
    if (doc.contains("assignments")) {
        for (const auto& item : doc.at("assignments")) {
            Assignment a;
            if (item.contains("root")) {
                const std::string rid = item.at("root").get<std::string>();
                if (rid != "*") {
                    a.root = model.root_by_id(rid);
                    if (a.root < 0) throw validation_error("frame: unknown root '" + rid + "'");
                }
            }
            if (item.contains("prefix")) {
                const std::string text = item.at("prefix").get<std::string>();
                if (!text.empty()) {
                    const std::string rid = a.root >= 0 ? model.roots()[static_cast<std::size_t>(a.root)].id
                                                        : model.roots()[0].id;
                    a.prefix = model.parse_prefix(rid + ":" + text).second;
                }
            }
            a.matrix = parse_int_matrix(item.at("matrix"), n, "frame assignment");
            assignments.push_back(std::move(a));
        }
    }
    return from_assignments(model, std::move(def), assignments);
}

FrameField FrameField::from_json_file(const ManifoldModel& model, const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw validation_error("frame: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(model, buf.str());
}

long long FrameField::entry(std::size_t cell_linear, int row, int col) const {
    return entries_[cell_linear * stride_ + static_cast<std::size_t>(row * n_ + col)];
}

OperatorMatrix assemble_coordinate(const ManifoldModel& model, const FrameField& frame,
                                   int coordinate, const KernelSpec& kernel) {
    const int n = model.ctx().n;
    const int m = model.ctx().m;
    const long long p = model.ctx().p;
    if (coordinate < 0 || coordinate >= n) {
        throw validation_error("coordinate operator: index out of range");
    }
    if (frame.constancy_depth() > m) {
        throw validation_error("coordinate operator: frame varies below the cell level");
    }
    if (kernel.family == KernelSpec::Family::Custom) {
        throw validation_error("coordinate operator: custom kernels unsupported");
    }

    const std::size_t N = model.cell_count();
    const bool knn = kernel.family == KernelSpec::Family::HeightKnn;
    // Base-space exponent -n*alpha; the tangent-space kernel doubles it.
    const double exponent = (knn ? -2.0 : -1.0) * static_cast<double>(n) * kernel.alpha;

    std::vector<double> deg_dbl;
    std::vector<long long> thresholds;
    DegreeReport degrees;
    if (knn) {
        degrees = degree_and_star(model, kernel.k);
        deg_dbl.reserve(degrees.deg_by_root.size());
        for (const auto& d : degrees.deg_by_root) deg_dbl.push_back(d.to_double());
        thresholds.reserve(model.roots().size());
        for (int r = 0; r < static_cast<int>(model.roots().size()); ++r) {
            thresholds.push_back(same_root_threshold(model, kernel.k, r));
        }
    }

    // i-th frame column per cell.
    std::vector<long long> fiber(N * static_cast<std::size_t>(n));
    for (std::size_t lin = 0; lin < N; ++lin) {
        for (int row = 0; row < n; ++row) {
            fiber[lin * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)] =
                frame.entry(lin, row, coordinate);
        }
    }
    std::vector<double> p_neg_pow(static_cast<std::size_t>(m) + 1, 1.0);
    for (int t = 1; t <= m; ++t) {
        p_neg_pow[static_cast<std::size_t>(t)] = p_neg_pow[static_cast<std::size_t>(t - 1)] / static_cast<double>(p);
    }
    auto fiber_distance = [&](std::size_t a, std::size_t b) {
        double norm = 0.0;
        for (int row = 0; row < n; ++row) {
            const long long diff = fiber[a * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)] -
                                   fiber[b * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)];
            if (diff == 0) continue;
            const long long val = int_valuation(p, diff);
            norm = std::max(norm, p_neg_pow[static_cast<std::size_t>(std::min<long long>(val, m))]);
        }
        return norm;
    };

    OperatorMatrix L;
    L.entries = Matrix(N, N);
    L.cell_order = model.enumerate_cells();
    L.mu.reserve(N);
    L.mu_dbl.reserve(N);
    for (const auto& c : L.cell_order) {
        L.mu.push_back(model.cell_measure(c));
        L.mu_dbl.push_back(model.cell_measure(c).to_double());
    }

    std::vector<double> terms(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const CellIndex ci = L.cell_order[i];
        double* row = &L.entries.a[i * N];
        std::fill(terms.begin(), terms.end(), 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            const CellIndex cj = L.cell_order[j];
            bool in_star = true;
            if (knn) {
                if (ci.root == cj.root) {
                    in_star = model.join_depth(ci, cj) >= thresholds[static_cast<std::size_t>(ci.root)];
                } else {
                    in_star = cross_root_adjacent(model, kernel.k, ci.root, cj.root);
                }
            }
            if (!in_star) continue;
            const double d = std::max(model.distance(ci, cj), fiber_distance(i, j));
            double kernel_value = std::pow(d, exponent);
            if (knn) kernel_value *= deg_dbl[static_cast<std::size_t>(cj.root)] / deg_dbl[static_cast<std::size_t>(ci.root)];
            const double term = kernel_value * L.mu_dbl[j];
            row[j] = -term;
            terms[j] = term;
        }
        row[i] = neumaier_sum(terms);
    }

    L.balance_weights.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double w = std::sqrt(L.mu_dbl[i]);
        L.balance_weights.push_back(knn ? deg_dbl[static_cast<std::size_t>(L.cell_order[i].root)] * w : w);
    }
    double defect = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            const double sij = L.balance_weights[i] * L.entries(i, j) / L.balance_weights[j];
            const double sji = L.balance_weights[j] * L.entries(j, i) / L.balance_weights[i];
            defect = std::max(defect, std::fabs(sij - sji));
        }
    }
    L.balance_defect = defect;
    return L;
}

// --- elliptic coefficients --------------------------------------------------

namespace {

double sym2x2_min_eig(double a, double b, double d) {
    const double tr = a + d;
    const double disc = std::sqrt(std::max(0.0, (a - d) * (a - d) + 4.0 * b * b));
    return 0.5 * (tr - disc);
}

double sym_min_eig(const std::vector<double>& mat, int n) {
    if (n == 1) return mat[0];
    if (n == 2) return sym2x2_min_eig(mat[0], mat[1], mat[3]);
    // Jacobi sweep fallback for larger blocks.
    std::vector<double> s = mat;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int pi = 0; pi < n; ++pi) {
            for (int q = pi + 1; q < n; ++q) off += 2.0 * s[static_cast<std::size_t>(pi * n + q)] * s[static_cast<std::size_t>(pi * n + q)];
        }
        if (off < 1e-28) break;
        for (int pi = 0; pi < n; ++pi) {
            for (int q = pi + 1; q < n; ++q) {
                const double apq = s[static_cast<std::size_t>(pi * n + q)];
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (s[static_cast<std::size_t>(q * n + q)] - s[static_cast<std::size_t>(pi * n + pi)]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int r = 0; r < n; ++r) {
                    const double vrp = s[static_cast<std::size_t>(r * n + pi)];
                    const double vrq = s[static_cast<std::size_t>(r * n + q)];
                    s[static_cast<std::size_t>(r * n + pi)] = c * vrp - sn * vrq;
                    s[static_cast<std::size_t>(r * n + q)] = sn * vrp + c * vrq;
                }
                for (int r = 0; r < n; ++r) {
                    const double vpr = s[static_cast<std::size_t>(pi * n + r)];
                    const double vqr = s[static_cast<std::size_t>(q * n + r)];
                    s[static_cast<std::size_t>(pi * n + r)] = c * vpr - sn * vqr;
                    s[static_cast<std::size_t>(q * n + r)] = sn * vpr + c * vqr;
                }
            }
        }
    }
    double mn = s[0];
    for (int i = 1; i < n; ++i) mn = std::min(mn, s[static_cast<std::size_t>(i * n + i)]);
    return mn;
}

} // namespace

void EllipticCoefficients::validate(const ManifoldModel& model) {
    const std::size_t cells = model.cell_count();
    for (std::size_t lin = 0; lin < cells; ++lin) {
        const double* block = &entries_[lin * stride_];
        for (int i = 0; i < n_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                if (block[i * n_ + j] != block[j * n_ + i]) {
                    throw validation_error("coefficients: matrix at cell " +
                                           model.cell_address_string(model.cell_at(lin)) + " is not symmetric");
                }
            }
        }
        const double mn = sym_min_eig(std::vector<double>(block, block + stride_), n_);
        if (lin == 0) certificate_ = mn;
        certificate_ = std::min(certificate_, mn);
        if (mn < theta_) {
            throw validation_error("coefficients: smallest eigenvalue " + std::to_string(mn) +
                                   " at cell " + model.cell_address_string(model.cell_at(lin)) +
                                   " is below theta");
        }
    }
}

EllipticCoefficients EllipticCoefficients::constant(const ManifoldModel& model, const Matrix& value, double theta) {
    const int n = model.ctx().n;
    if (value.rows != static_cast<std::size_t>(n) || value.cols != static_cast<std::size_t>(n)) {
        throw validation_error("coefficients: constant matrix must be n x n");
    }
    std::vector<double> entries;
    entries.reserve(model.cell_count() * static_cast<std::size_t>(n * n));
    for (std::size_t c = 0; c < model.cell_count(); ++c) {
        entries.insert(entries.end(), value.a.begin(), value.a.end());
    }
    return from_cells(model, std::move(entries), theta);
}

EllipticCoefficients EllipticCoefficients::from_cells(const ManifoldModel& model, std::vector<double> entries, double theta) {
    const int n = model.ctx().n;
    if (theta <= 0.0) throw validation_error("coefficients: theta must be positive");
    EllipticCoefficients c;
    c.n_ = n;
    c.stride_ = static_cast<std::size_t>(n * n);
    c.theta_ = theta;
    if (entries.size() != model.cell_count() * c.stride_) {
        throw validation_error("coefficients: expected one n x n block per cell");
    }
    c.entries_ = std::move(entries);
    c.validate(model);
    return c;
}

EllipticCoefficients EllipticCoefficients::from_json(const ManifoldModel& model, const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw validation_error(std::string("coefficients: parse error: ") + e.what());
    }
    const int n = model.ctx().n;
    const double theta = doc.contains("theta") ? doc.at("theta").get<double>() : 1e-9;

    auto parse_block = [&](const ordered_json& node, const std::string& where) {
        if (!node.is_array() || static_cast<int>(node.size()) != n) {
            throw validation_error(where + ": expected " + std::to_string(n) + " rows");
        }
        std::vector<double> out;
        for (const auto& row : node) {
            if (!row.is_array() || static_cast<int>(row.size()) != n) {
                throw validation_error(where + ": expected " + std::to_string(n) + " columns");
            }
            for (const auto& v : row) out.push_back(v.get<double>());
        }
        return out;
    };

    std::vector<double> def;
    if (doc.contains("default")) {
        def = parse_block(doc.at("default"), "coefficients default");
    } else {
        def.assign(static_cast<std::size_t>(n * n), 0.0);
        for (int i = 0; i < n; ++i) def[static_cast<std::size_t>(i * n + i)] = 1.0;
    }

    struct Patch { int root; BallAddress prefix; std::vector<double> block; };
    std::vector<Patch> patches;
    if (doc.contains("assignments")) {
        for (const auto& item : doc.at("assignments")) {
            Patch patch;
            patch.root = -1;
            if (item.contains("root")) {
                const std::string rid = item.at("root").get<std::string>();
                if (rid != "*") {
                    patch.root = model.root_by_id(rid);
                    if (patch.root < 0) throw validation_error("coefficients: unknown root '" + rid + "'");
                }
            }
            if (item.contains("prefix")) {
                const std::string text = item.at("prefix").get<std::string>();
                if (!text.empty()) {
                    const std::string rid = patch.root >= 0 ? model.roots()[static_cast<std::size_t>(patch.root)].id
                                                            : model.roots()[0].id;
                    patch.prefix = model.parse_prefix(rid + ":" + text).second;
                }
            }
            patch.block = parse_block(item.at("matrix"), "coefficients assignment");
            patches.push_back(std::move(patch));
        }
    }

    std::vector<double> entries;
    entries.reserve(model.cell_count() * static_cast<std::size_t>(n * n));
    for (std::size_t lin = 0; lin < model.cell_count(); ++lin) {
        const CellIndex cell = model.cell_at(lin);
        const BallAddress addr = model.cell_address(cell);
        const std::vector<double>* chosen = &def;
        int best = -1;
        for (const auto& patch : patches) {
            if (patch.root >= 0 && patch.root != cell.root) continue;
            if (!is_prefix(patch.prefix, addr)) continue;
            if (patch.prefix.depth() > best) {
                best = patch.prefix.depth();
                chosen = &patch.block;
            }
        }
        entries.insert(entries.end(), chosen->begin(), chosen->end());
    }
    return from_cells(model, std::move(entries), theta);
}

EllipticCoefficients EllipticCoefficients::from_json_file(const ManifoldModel& model, const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw validation_error("coefficients: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(model, buf.str());
}

double EllipticCoefficients::entry(std::size_t cell_linear, int row, int col) const {
    return entries_[cell_linear * stride_ + static_cast<std::size_t>(row * n_ + col)];
}

EllipticOperator assemble_elliptic(const ManifoldModel& model, const FrameField& frame,
                                   const EllipticCoefficients& coeffs, double alpha, int k) {
    const int n = model.ctx().n;
    const std::size_t N = model.cell_count();

    std::vector<OperatorMatrix> coord;
    coord.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        coord.push_back(assemble_coordinate(model, frame, i, KernelSpec::knn(alpha, k)));
    }

    EllipticOperator P;
    P.entries = Matrix(N, N);
    P.cell_order = coord[0].cell_order;
    P.mu = coord[0].mu;
    P.mu_dbl = coord[0].mu_dbl;
    P.theta_certificate = coeffs.certificate();

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            // diag(a^ij) applied on the left of L_j.
            Matrix scaled = coord[static_cast<std::size_t>(j)].entries;
            for (std::size_t r = 0; r < N; ++r) {
                const double a = coeffs.entry(r, i, j);
                double* row = &scaled.a[r * N];
                for (std::size_t c = 0; c < N; ++c) row[c] *= a;
            }
            const Matrix term = matmul(coord[static_cast<std::size_t>(i)].entries, scaled);
            for (std::size_t e = 0; e < P.entries.a.size(); ++e) P.entries.a[e] += term.a[e];
        }
    }
    return P;
}

BoundaryData boundary_sets(const ManifoldModel& model, int k, const std::vector<CellIndex>& omega) {
    const std::size_t N = model.cell_count();
    if (omega.empty()) throw validation_error("boundary: omega is empty");
    std::vector<char> inside(N, 0);
    for (const auto& c : omega) {
        const std::size_t lin = model.cell_linear_index(c);
        if (inside[lin]) throw validation_error("boundary: duplicate cell in omega");
        inside[lin] = 1;
    }
    if (omega.size() == N) throw validation_error("boundary: omega must be a proper subset");

    BoundaryData data;
    std::vector<char> seen(N, 0);
    for (std::size_t xi = 0; xi < N; ++xi) {
        if (!inside[xi]) continue;
        const CellIndex x = model.cell_at(xi);
        for (std::size_t yi = 0; yi < N; ++yi) {
            if (inside[yi]) continue;
            const CellIndex y = model.cell_at(yi);
            if (!star_adjacent(model, k, x, y)) continue;
            data.edge_boundary.emplace_back(x, y);
            if (!seen[yi]) {
                seen[yi] = 1;
                data.vertex_boundary.push_back(y);
            }
        }
    }
    std::sort(data.vertex_boundary.begin(), data.vertex_boundary.end(),
              [&](const CellIndex& a, const CellIndex& b) {
                  return model.cell_linear_index(a) < model.cell_linear_index(b);
              });
    for (std::size_t lin = 0; lin < N; ++lin) {
        if (inside[lin] || seen[lin]) data.closure.push_back(model.cell_at(lin));
    }
    return data;
}

RestrictedOperator restrict_dirichlet(const ManifoldModel& model, const KernelSpec& kernel,
                                      const std::vector<CellIndex>& omega) {
    if (kernel.family != KernelSpec::Family::HeightKnn) {
        throw validation_error("restrict: Dirichlet restriction takes a knn kernel");
    }
    BoundaryData boundary = boundary_sets(model, kernel.k, omega);
    const DegreeReport degrees = degree_and_star(model, kernel.k);

    std::vector<CellIndex> sorted_omega = omega;
    std::sort(sorted_omega.begin(), sorted_omega.end(), [&](const CellIndex& a, const CellIndex& b) {
        return model.cell_linear_index(a) < model.cell_linear_index(b);
    });

    const std::size_t nw = sorted_omega.size();
    RestrictedOperator R;
    R.omega = sorted_omega;
    R.boundary = std::move(boundary);
    R.alpha = kernel.alpha;
    R.k = kernel.k;
    R.entries = Matrix(nw, nw);
    R.mu.reserve(nw);
    R.mu_dbl.reserve(nw);
    for (const auto& c : sorted_omega) {
        R.mu.push_back(model.cell_measure(c));
        R.mu_dbl.push_back(model.cell_measure(c).to_double());
    }

    const double exponent = -static_cast<double>(model.ctx().n) * kernel.alpha;
    auto kernel_value = [&](const CellIndex& x, const CellIndex& y) {
        const double ratio = (degrees.deg_by_root[static_cast<std::size_t>(y.root)] /
                              degrees.deg_by_root[static_cast<std::size_t>(x.root)])
                                 .to_double();
        return ratio * std::pow(model.distance(x, y), exponent);
    };

    // Position of omega cells in the restricted ordering.
    const std::size_t N = model.cell_count();
    std::vector<int> omega_pos(N, -1);
    for (std::size_t i = 0; i < nw; ++i) omega_pos[model.cell_linear_index(sorted_omega[i])] = static_cast<int>(i);
    std::vector<char> in_closure(N, 0);
    for (const auto& c : R.boundary.closure) in_closure[model.cell_linear_index(c)] = 1;

    std::vector<double> terms(N, 0.0);
    for (std::size_t i = 0; i < nw; ++i) {
        const CellIndex x = sorted_omega[i];
        std::fill(terms.begin(), terms.end(), 0.0);
        for (std::size_t lin = 0; lin < N; ++lin) {
            if (!in_closure[lin]) continue;
            const CellIndex y = model.cell_at(lin);
            if (y == x || !star_adjacent(model, kernel.k, x, y)) continue;
            const double term = kernel_value(x, y) * model.cell_measure(y).to_double();
            terms[lin] = term;
            const int col = omega_pos[lin];
            if (col >= 0) R.entries(i, static_cast<std::size_t>(col)) = -term;
        }
        R.entries(i, i) = neumaier_sum(terms);
    }
    return R;
}

void check_operator_laws(const OperatorMatrix& L, double tol) {
    const std::size_t n = L.entries.rows;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = L.entries(i, j);
            if (i == j && v < -tol) throw validation_error("operator law: negative diagonal entry");
            if (i != j && v > tol) throw validation_error("operator law: positive off-diagonal entry");
        }
        if (std::fabs(neumaier_sum(&L.entries.a[i * n], n)) > tol) {
            throw validation_error("operator law: nonzero row sum");
        }
    }
}

} // namespace padicdiff
