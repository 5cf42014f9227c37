#include "padicdiff/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace padicdiff {

namespace {

std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool is_subset_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

int NerveComplex::dim() const {
    int d = 0;
    for (const auto& f : faces) d = std::max(d, static_cast<int>(f.vertices.size()) - 1);
    return d;
}

int NerveComplex::find_face(const std::vector<int>& sorted_vertices) const {
    for (std::size_t i = 0; i < faces.size(); ++i) {
        if (faces[i].vertices == sorted_vertices) return static_cast<int>(i);
    }
    return -1;
}

int NerveComplex::face_by_id(const std::string& id) const {
    for (std::size_t i = 0; i < faces.size(); ++i) {
        if (faces[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

void NerveComplex::validate() const {
    if (vertex_ids.empty()) throw validation_error("nerve: no vertices");
    if (faces.empty()) throw validation_error("nerve: no faces");

    std::set<std::vector<int>> seen;
    std::set<std::string> ids;
    for (const auto& f : faces) {
        if (f.vertices.empty()) throw validation_error("nerve: face '" + f.id + "' has no vertices");
        if (!std::is_sorted(f.vertices.begin(), f.vertices.end()) ||
            std::adjacent_find(f.vertices.begin(), f.vertices.end()) != f.vertices.end()) {
            throw validation_error("nerve: face '" + f.id + "' vertices not sorted/distinct");
        }
        for (int v : f.vertices) {
            if (v < 0 || v >= static_cast<int>(vertex_ids.size())) {
                throw validation_error("nerve: face '" + f.id + "' references unknown vertex");
            }
        }
        if (!seen.insert(f.vertices).second) {
            throw validation_error("nerve: duplicate face vertex set in '" + f.id + "'");
        }
        if (!ids.insert(f.id).second) throw validation_error("nerve: duplicate face id '" + f.id + "'");
    }

    // Closure under nonempty subsets. Remove one vertex at a time; induction
    // covers deeper subsets.
    for (const auto& f : faces) {
        if (f.vertices.size() == 1) continue;
        for (std::size_t skip = 0; skip < f.vertices.size(); ++skip) {
            std::vector<int> sub;
            for (std::size_t i = 0; i < f.vertices.size(); ++i) {
                if (i != skip) sub.push_back(f.vertices[i]);
            }
            if (find_face(sub) < 0) {
                throw validation_error("nerve: not subset-closed, face '" + f.id +
                                       "' lacks a sub-face");
            }
        }
    }

    // Every vertex is a face.
    for (int v = 0; v < static_cast<int>(vertex_ids.size()); ++v) {
        if (find_face({v}) < 0) {
            throw validation_error("nerve: vertex '" + vertex_ids[static_cast<std::size_t>(v)] +
                                   "' is not a face");
        }
    }

    // Connected 1-skeleton.
    std::vector<int> comp(vertex_ids.size());
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (comp[static_cast<std::size_t>(x)] != x) x = comp[static_cast<std::size_t>(x)];
        return x;
    };
    for (const auto& f : faces) {
        if (f.vertices.size() != 2) continue;
        int a = find(f.vertices[0]);
        int b = find(f.vertices[1]);
        if (a != b) comp[static_cast<std::size_t>(a)] = b;
    }
    int rep = find(0);
    for (std::size_t v = 1; v < vertex_ids.size(); ++v) {
        if (find(static_cast<int>(v)) != rep) {
            throw validation_error("nerve: 1-skeleton is not connected");
        }
    }
}

ManifoldModel ManifoldModel::build(PrimeContext ctx, NerveComplex nerve, std::vector<RootBall> roots) {
    nerve.validate();
    if (roots.empty()) throw validation_error("model: at least one root is required");
    std::set<std::string> ids;
    for (const auto& r : roots) {
        if (r.face < 0 || r.face >= static_cast<int>(nerve.faces.size())) {
            throw validation_error("model: root '" + r.id + "' hosted at unknown face");
        }
        if (!r.density.is_positive()) {
            throw validation_error("model: root '" + r.id + "' has nonpositive density");
        }
        if (!ids.insert(r.id).second) throw validation_error("model: duplicate root id '" + r.id + "'");
    }

    ManifoldModel model;
    model.ctx_ = ctx;
    model.nerve_ = std::move(nerve);
    model.roots_ = std::move(roots);
    model.precompute();
    return model;
}

void ManifoldModel::precompute() {
    const int m = ctx_.m;
    const int nf = static_cast<int>(nerve_.faces.size());
    const int nr = static_cast<int>(roots_.size());

    cells_per_root_ = ctx_.tuple_pow(m);
    if (cells_per_root_ * roots_.size() > (1ull << 12)) {
        throw validation_error("model: cell count exceeds desk-scale cap");
    }

    level_pow_.assign(static_cast<std::size_t>(m) + 1, 1);
    for (int t = 1; t <= m; ++t) {
        level_pow_[static_cast<std::size_t>(t)] =
            level_pow_[static_cast<std::size_t>(t - 1)] * ctx_.tuples_per_level();
    }
    inv_prime_pow_.assign(static_cast<std::size_t>(m) + 1, 1.0);
    double pinv = 1.0 / static_cast<double>(ctx_.p);
    for (int t = 1; t <= m; ++t) {
        inv_prime_pow_[static_cast<std::size_t>(t)] = inv_prime_pow_[static_cast<std::size_t>(t - 1)] * pinv;
    }

    total_measure_ = Rational(0);
    for (const auto& r : roots_) total_measure_ += r.density;

    face_heights_.resize(static_cast<std::size_t>(nf));
    face_measures_.assign(static_cast<std::size_t>(nf), Rational(0));
    for (int f = 0; f < nf; ++f) {
        const auto& vs = nerve_.faces[static_cast<std::size_t>(f)].vertices;
        face_heights_[static_cast<std::size_t>(f)] = static_cast<int>(vs.size()) - 1;
        // Region of a face: union of the trees hosted at faces refining it.
        for (const auto& r : roots_) {
            if (is_subset_sorted(vs, nerve_.faces[static_cast<std::size_t>(r.face)].vertices)) {
                face_measures_[static_cast<std::size_t>(f)] += r.density;
            }
        }
    }

    face_join_.assign(static_cast<std::size_t>(nf), std::vector<int>(static_cast<std::size_t>(nf), -1));
    for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) {
            auto common = intersect_sorted(nerve_.faces[static_cast<std::size_t>(a)].vertices,
                                           nerve_.faces[static_cast<std::size_t>(b)].vertices);
            if (!common.empty()) face_join_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = nerve_.find_face(common);
        }
    }

    // Lightest face paths over the covering-relation graph, endpoints included.
    // inner[a][b] excludes the starting face's own weight.
    const Rational unreachable(-1);
    std::vector<std::vector<Rational>> inner(static_cast<std::size_t>(nf),
                                             std::vector<Rational>(static_cast<std::size_t>(nf), unreachable));
    auto covering = [&](int a, int b) {
        const auto& va = nerve_.faces[static_cast<std::size_t>(a)].vertices;
        const auto& vb = nerve_.faces[static_cast<std::size_t>(b)].vertices;
        if (va.size() + 1 == vb.size()) return is_subset_sorted(va, vb);
        if (vb.size() + 1 == va.size()) return is_subset_sorted(vb, va);
        return false;
    };
    for (int a = 0; a < nf; ++a) {
        inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = Rational(0);
        for (int b = 0; b < nf; ++b) {
            if (a != b && covering(a, b)) {
                inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = face_measures_[static_cast<std::size_t>(b)];
            }
        }
    }
    for (int k = 0; k < nf; ++k) {
        for (int a = 0; a < nf; ++a) {
            for (int b = 0; b < nf; ++b) {
                const Rational& ak = inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
                const Rational& kb = inner[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
                if (ak == unreachable || kb == unreachable) continue;
                Rational via = ak + kb;
                Rational& ab = inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                if (ab == unreachable || via < ab) ab = via;
            }
        }
    }
    path_weight_.assign(static_cast<std::size_t>(nf), std::vector<Rational>(static_cast<std::size_t>(nf), unreachable));
    for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) {
            if (inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] == unreachable) {
                throw validation_error("model: face graph is not connected");
            }
            path_weight_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                face_measures_[static_cast<std::size_t>(a)] + inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        }
    }

    // Tail of a maximal chain into a tree: sum over depths of the measure of
    // the child containing the endpoint, density * p^-n / (1 - p^-n).
    root_tails_.resize(static_cast<std::size_t>(nr));
    density_nth_root_.resize(static_cast<std::size_t>(nr));
    cell_measures_by_root_.resize(static_cast<std::size_t>(nr));
    const Rational qinv = Rational::int_pow(ctx_.p, -ctx_.n);
    for (int r = 0; r < nr; ++r) {
        const Rational& rho = roots_[static_cast<std::size_t>(r)].density;
        root_tails_[static_cast<std::size_t>(r)] = rho * qinv / (Rational(1) - qinv);
        cell_measures_by_root_[static_cast<std::size_t>(r)] =
            rho * Rational::int_pow(ctx_.p, -static_cast<long long>(m) * ctx_.n);
        density_nth_root_[static_cast<std::size_t>(r)] =
            ctx_.n == 1 ? rho.to_double() : std::pow(rho.to_double(), 1.0 / static_cast<double>(ctx_.n));
    }

    cross_distance_.assign(static_cast<std::size_t>(nr), std::vector<Rational>(static_cast<std::size_t>(nr), Rational(0)));
    cross_distance_dbl_.assign(static_cast<std::size_t>(nr), std::vector<double>(static_cast<std::size_t>(nr), 0.0));
    for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < nr; ++b) {
            if (a == b) continue;
            Rational d = root_tails_[static_cast<std::size_t>(a)] +
                         path_weight_[static_cast<std::size_t>(roots_[static_cast<std::size_t>(a)].face)]
                                     [static_cast<std::size_t>(roots_[static_cast<std::size_t>(b)].face)] +
                         root_tails_[static_cast<std::size_t>(b)];
            cross_distance_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = d;
            cross_distance_dbl_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = d.to_double();
        }
    }
}

std::vector<CellIndex> ManifoldModel::enumerate_cells() const {
    std::vector<CellIndex> cells;
    cells.reserve(cell_count());
    for (int r = 0; r < static_cast<int>(roots_.size()); ++r) {
        for (std::uint64_t o = 0; o < cells_per_root_; ++o) cells.push_back({r, o});
    }
    return cells;
}

std::size_t ManifoldModel::cell_linear_index(const CellIndex& c) const {
    return static_cast<std::size_t>(c.root) * cells_per_root_ + c.ordinal;
}

CellIndex ManifoldModel::cell_at(std::size_t linear) const {
    return {static_cast<int>(linear / cells_per_root_), linear % cells_per_root_};
}

Rational ManifoldModel::cell_measure(const CellIndex& c) const {
    return cell_measures_by_root_[static_cast<std::size_t>(c.root)];
}

std::uint32_t ManifoldModel::cell_level_value(const CellIndex& c, int level) const {
    const std::uint64_t div = level_pow_[static_cast<std::size_t>(ctx_.m - 1 - level)];
    return static_cast<std::uint32_t>((c.ordinal / div) % ctx_.tuples_per_level());
}

BallAddress ManifoldModel::cell_address(const CellIndex& c) const {
    BallAddress a;
    a.levels.reserve(static_cast<std::size_t>(ctx_.m));
    for (int t = 0; t < ctx_.m; ++t) a.levels.push_back(cell_level_value(c, t));
    return a;
}

std::string ManifoldModel::cell_address_string(const CellIndex& c) const {
    std::string out = roots_[static_cast<std::size_t>(c.root)].id;
    for (int t = 0; t < ctx_.m; ++t) {
        out += (t == 0) ? ':' : '.';
        auto digits = level_digits(ctx_, cell_level_value(c, t));
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (i > 0) out += ',';
            out += std::to_string(digits[i]);
        }
    }
    return out;
}

std::pair<std::uint64_t, std::uint64_t> ManifoldModel::prefix_cell_range(int root, const BallAddress& prefix) const {
    if (prefix.depth() > ctx_.m) throw validation_error("prefix deeper than the cell level");
    std::uint64_t value = 0;
    for (auto lv : prefix.levels) value = value * ctx_.tuples_per_level() + lv;
    const std::uint64_t width = level_pow_[static_cast<std::size_t>(ctx_.m - prefix.depth())];
    (void)root;
    return {value * width, (value + 1) * width};
}

int ManifoldModel::node_height(const PosetNode& node) const {
    if (node.kind == PosetNode::Kind::Face) return face_heights_[static_cast<std::size_t>(node.face)];
    const int host = roots_[static_cast<std::size_t>(node.root)].face;
    return face_heights_[static_cast<std::size_t>(host)] + 1 + node.address.depth();
}

Rational ManifoldModel::node_measure(const PosetNode& node) const {
    if (node.kind == PosetNode::Kind::Face) return face_measures_[static_cast<std::size_t>(node.face)];
    return ball_measure(ctx_, node.address, roots_[static_cast<std::size_t>(node.root)].density);
}

std::optional<PosetNode> ManifoldModel::poset_join(const PosetNode& a, const PosetNode& b) const {
    if (a.kind == PosetNode::Kind::Ball && b.kind == PosetNode::Kind::Ball && a.root == b.root) {
        return PosetNode::make_ball(a.root, ball_join(a.address, b.address));
    }
    const int fa = a.kind == PosetNode::Kind::Face ? a.face : roots_[static_cast<std::size_t>(a.root)].face;
    const int fb = b.kind == PosetNode::Kind::Face ? b.face : roots_[static_cast<std::size_t>(b.root)].face;
    const int j = face_join_[static_cast<std::size_t>(fa)][static_cast<std::size_t>(fb)];
    if (j < 0) return std::nullopt;
    return PosetNode::make_face(j);
}

PosetNode ManifoldModel::cell_node(const CellIndex& c) const {
    return PosetNode::make_ball(c.root, cell_address(c));
}

int ManifoldModel::join_depth(const CellIndex& a, const CellIndex& b) const {
    int d = 0;
    while (d < ctx_.m && cell_level_value(a, d) == cell_level_value(b, d)) ++d;
    return d;
}

std::optional<PosetNode> ManifoldModel::cell_join(const CellIndex& a, const CellIndex& b) const {
    if (a.root == b.root) {
        const int jd = join_depth(a, b);
        BallAddress addr;
        addr.levels.reserve(static_cast<std::size_t>(jd));
        for (int t = 0; t < jd; ++t) addr.levels.push_back(cell_level_value(a, t));
        return PosetNode::make_ball(a.root, std::move(addr));
    }
    const int fa = roots_[static_cast<std::size_t>(a.root)].face;
    const int fb = roots_[static_cast<std::size_t>(b.root)].face;
    const int j = face_join_[static_cast<std::size_t>(fa)][static_cast<std::size_t>(fb)];
    if (j < 0) return std::nullopt;
    return PosetNode::make_face(j);
}

double ManifoldModel::distance(const CellIndex& x, const CellIndex& y) const {
    if (x == y) throw validation_error("distance: arguments must be distinct cells");
    if (x.root == y.root) return within_root_distance(x.root, join_depth(x, y));
    return cross_distance_dbl_[static_cast<std::size_t>(x.root)][static_cast<std::size_t>(y.root)];
}

Rational ManifoldModel::face_path_weight(int fa, int fb) const {
    return path_weight_[static_cast<std::size_t>(fa)][static_cast<std::size_t>(fb)];
}

Rational ManifoldModel::cross_root_distance(int ra, int rb) const {
    if (ra == rb) throw validation_error("cross distance: roots must differ");
    return cross_distance_[static_cast<std::size_t>(ra)][static_cast<std::size_t>(rb)];
}

int ManifoldModel::root_by_id(const std::string& id) const {
    for (std::size_t i = 0; i < roots_.size(); ++i) {
        if (roots_[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

std::pair<int, BallAddress> ManifoldModel::parse_prefix(const std::string& text) const {
    std::string root_part;
    std::string addr_part;
    auto colon = text.find(':');
    if (colon == std::string::npos) {
        if (root_by_id(text) >= 0) return {root_by_id(text), BallAddress{}};
        if (roots_.size() == 1) {
            root_part = roots_[0].id;
            addr_part = text;
        } else {
            throw validation_error("prefix '" + text + "': unknown root (use root:levels)");
        }
    } else {
        root_part = text.substr(0, colon);
        addr_part = text.substr(colon + 1);
    }
    int root = root_by_id(root_part);
    if (root < 0) throw validation_error("prefix '" + text + "': unknown root '" + root_part + "'");

    BallAddress addr;
    if (addr_part.empty()) return {root, addr};
    std::size_t pos = 0;
    while (pos <= addr_part.size()) {
        auto dot = addr_part.find('.', pos);
        std::string level = addr_part.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        std::vector<int> digits;
        std::size_t lp = 0;
        while (lp <= level.size()) {
            auto comma = level.find(',', lp);
            std::string digit = level.substr(lp, comma == std::string::npos ? std::string::npos : comma - lp);
            if (digit.empty()) throw validation_error("prefix '" + text + "': empty digit");
            digits.push_back(std::stoi(digit));
            if (comma == std::string::npos) break;
            lp = comma + 1;
        }
        if (ctx_.n > 1 && static_cast<int>(digits.size()) == 1 && level.size() == static_cast<std::size_t>(ctx_.n)) {
            // Compact form: one character per digit.
            digits.clear();
            for (char ch : level) digits.push_back(ch - '0');
        }
        addr.levels.push_back(level_value(ctx_, digits));
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (addr.depth() > ctx_.m) throw validation_error("prefix '" + text + "': deeper than the cell level");
    return {root, addr};
}

} // namespace padicdiff
