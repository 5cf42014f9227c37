#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "padicdiff/padic.hpp"

namespace padicdiff {

/// One face of the nerve: a nonempty set of chart (vertex) indices, sorted.
struct NerveFace {
    std::string id;
    std::vector<int> vertices;
};

/// Simplicial nerve of a chart covering. Must be closed under nonempty
/// subsets and have a connected 1-skeleton.
struct NerveComplex {
    std::vector<std::string> vertex_ids;
    std::vector<NerveFace> faces;

    int dim() const;
    int find_face(const std::vector<int>& sorted_vertices) const; // -1 when absent
    int face_by_id(const std::string& id) const;                  // -1 when absent
    void validate() const;
};

/// A root ball glued to a nerve face, carrying the local measure density.
struct RootBall {
    std::string id;
    int face;
    Rational density;
};

/// One depth-m ball: the carrier of a single function value.
struct CellIndex {
    int root = 0;
    std::uint64_t ordinal = 0; // lexicographic rank of the address within its root

    bool operator==(const CellIndex& o) const { return root == o.root && ordinal == o.ordinal; }
    bool operator!=(const CellIndex& o) const { return !(*this == o); }
};

/// Element of the region poset: either a nerve face or a ball of one tree.
struct PosetNode {
    enum class Kind { Face, Ball };

    Kind kind = Kind::Face;
    int face = -1;
    int root = -1;
    BallAddress address;

    static PosetNode make_face(int f) {
        PosetNode n;
        n.kind = Kind::Face;
        n.face = f;
        return n;
    }
    static PosetNode make_ball(int root, BallAddress a) {
        PosetNode n;
        n.kind = Kind::Ball;
        n.root = root;
        n.address = std::move(a);
        return n;
    }

    bool operator==(const PosetNode& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::Face) return face == o.face;
        return root == o.root && address == o.address;
    }
};

/// Glued-tree realization of a compact p-adic analytic manifold: a nerve
/// complex whose faces host rooted trees of balls. Immutable after build();
/// every query is pure.
class ManifoldModel {
public:
    static ManifoldModel build(PrimeContext ctx, NerveComplex nerve, std::vector<RootBall> roots);

    const PrimeContext& ctx() const { return ctx_; }
    const NerveComplex& nerve() const { return nerve_; }
    const std::vector<RootBall>& roots() const { return roots_; }
    int dim_nerve() const { return nerve_.dim(); }
    Rational total_measure() const { return total_measure_; }

    // --- cells ------------------------------------------------------------
    std::uint64_t cells_per_root() const { return cells_per_root_; }
    std::size_t cell_count() const { return roots_.size() * cells_per_root_; }
    std::vector<CellIndex> enumerate_cells() const;
    std::size_t cell_linear_index(const CellIndex& c) const;
    CellIndex cell_at(std::size_t linear) const;
    Rational cell_measure(const CellIndex& c) const;
    BallAddress cell_address(const CellIndex& c) const;
    std::string cell_address_string(const CellIndex& c) const;

    /// Child tuple of the cell at the given level (0 = directly below the root).
    std::uint32_t cell_level_value(const CellIndex& c, int level) const;

    /// Half-open ordinal range of the cells inside the given ball.
    std::pair<std::uint64_t, std::uint64_t> prefix_cell_range(int root, const BallAddress& prefix) const;

    // --- poset ------------------------------------------------------------
    int node_height(const PosetNode& node) const;
    std::optional<PosetNode> poset_join(const PosetNode& a, const PosetNode& b) const;
    Rational node_measure(const PosetNode& node) const;

    PosetNode cell_node(const CellIndex& c) const;
    int join_depth(const CellIndex& a, const CellIndex& b) const; // same root only
    std::optional<PosetNode> cell_join(const CellIndex& a, const CellIndex& b) const;

    // --- metric -----------------------------------------------------------
    /// Path metric between distinct cells. Inside one tree this is the
    /// measure of the joining ball taken to the power 1/n; across trees it is
    /// the closed-form tail of each tree plus the lightest face path.
    double distance(const CellIndex& x, const CellIndex& y) const;

    /// Distance of any two same-root cells whose join sits at the given depth.
    double within_root_distance(int root, int join_depth) const {
        return density_nth_root_[static_cast<std::size_t>(root)] *
               inv_prime_pow_[static_cast<std::size_t>(join_depth)];
    }

    Rational face_measure(int face) const { return face_measures_[static_cast<std::size_t>(face)]; }
    int face_height(int face) const { return face_heights_[static_cast<std::size_t>(face)]; }

    /// Minimal total face measure over face paths, both endpoints included.
    Rational face_path_weight(int fa, int fb) const;

    /// Sum of punctured-ball measures along a maximal chain into one tree.
    Rational root_tail(int root) const { return root_tails_[static_cast<std::size_t>(root)]; }

    /// Distance between any cell of root ra and any cell of root rb (ra != rb).
    Rational cross_root_distance(int ra, int rb) const;

    /// Index of the joining face of two faces, or -1 when the regions are disjoint.
    int face_join(int fa, int fb) const { return face_join_[static_cast<std::size_t>(fa)][static_cast<std::size_t>(fb)]; }

    int root_by_id(const std::string& id) const; // -1 when absent

    /// Parses "root", "root:l1.l2", digit components within a level separated
    /// by commas. A bare digit string is accepted when the model has one root.
    std::pair<int, BallAddress> parse_prefix(const std::string& text) const;

private:
    ManifoldModel() = default;
    void precompute();

    PrimeContext ctx_{2, 1, 1};
    NerveComplex nerve_;
    std::vector<RootBall> roots_;

    Rational total_measure_;
    std::uint64_t cells_per_root_ = 0;
    std::vector<std::uint64_t> level_pow_;   // p^(n*t) for t in [0, m]
    std::vector<double> inv_prime_pow_;      // p^(-t) for t in [0, m]
    std::vector<Rational> face_measures_;
    std::vector<int> face_heights_;
    std::vector<std::vector<int>> face_join_;
    std::vector<std::vector<Rational>> path_weight_; // endpoints included
    std::vector<Rational> root_tails_;
    std::vector<std::vector<Rational>> cross_distance_;
    std::vector<std::vector<double>> cross_distance_dbl_;
    std::vector<double> density_nth_root_;
    std::vector<Rational> cell_measures_by_root_;
};

} // namespace padicdiff
