#pragma once

#include <functional>
#include <string>
#include <vector>

#include "padicdiff/manifold.hpp"
#include "padicdiff/matrix.hpp"

namespace padicdiff {

/// Kernel family of a diffusion operator.
///  - vt:   nonlocal radial kernel d(x,y)^(-n*alpha) over all cell pairs.
///  - knn:  degree-weighted kernel restricted to pairs whose join has height
///          at least k.
///  - custom: arbitrary radial weight of the distance.
struct KernelSpec {
    enum class Family { VladimirovTaibleson, HeightKnn, Custom };

    Family family = Family::VladimirovTaibleson;
    double alpha = 1.0;
    int k = 0;
    std::function<double(double)> weight; // Custom only

    static KernelSpec vt(double alpha) { return {Family::VladimirovTaibleson, alpha, 0, {}}; }
    static KernelSpec knn(double alpha, int k);
    static KernelSpec custom(std::function<double(double)> w) { return {Family::Custom, 0.0, 0, std::move(w)}; }

    std::string describe() const;
};

/// Exact matrix realization of a kernel operator on level-m functions.
/// Row law: entries[i][j] = -K(cell_i, cell_j) * mu_j off the diagonal, and
/// the diagonal is the negated off-diagonal row sum, so L*1 = 0 bit-exactly.
struct OperatorMatrix {
    Matrix entries;
    std::vector<CellIndex> cell_order;
    std::vector<Rational> mu;
    std::vector<double> mu_dbl;
    /// Conjugating by diag(balance_weights) makes the matrix symmetric.
    std::vector<double> balance_weights;
    double balance_defect = 0.0;
};

/// Degrees are constant on the cells of a root tree; values are the exact
/// infinite-tree integrals (geometric tails included).
struct DegreeReport {
    int k = 0;
    std::vector<Rational> deg_by_root;
    bool connected = false;
    /// Connected components of the star graph on cells.
    std::size_t component_count = 0;
};

DegreeReport degree_and_star(const ManifoldModel& model, int k);
Rational cell_degree(const DegreeReport& degrees, const CellIndex& cell);
bool star_adjacent(const ManifoldModel& model, int k, const CellIndex& a, const CellIndex& b);
std::vector<CellIndex> star_cells(const ManifoldModel& model, int k, const CellIndex& a);

OperatorMatrix assemble_vt(const ManifoldModel& model, double alpha);
OperatorMatrix assemble_knn(const ManifoldModel& model, double alpha, int k);
OperatorMatrix assemble_kernel(const ManifoldModel& model, const KernelSpec& kernel);

/// Adjoint with respect to the mu-weighted inner product.
OperatorMatrix adjoint_l2(const OperatorMatrix& L);

/// Locally constant frame: one invertible integer matrix (mod p^m) per cell,
/// assigned by ball-address prefixes. Column i is the i-th frame vector.
class FrameField {
public:
    struct Assignment {
        int root = -1; // -1: applies to every root
        BallAddress prefix;
        std::vector<long long> matrix; // row-major n x n
    };

    static FrameField identity(const ManifoldModel& model);
    static FrameField from_assignments(const ManifoldModel& model,
                                       std::vector<long long> default_matrix,
                                       const std::vector<Assignment>& assignments);
    static FrameField from_json(const ManifoldModel& model, const std::string& json_text);
    static FrameField from_json_file(const ManifoldModel& model, const std::string& path);

    int constancy_depth() const { return constancy_depth_; }
    /// Row-major n x n integer matrix at a cell.
    const long long* at(std::size_t cell_linear) const { return &entries_[cell_linear * stride_]; }
    long long entry(std::size_t cell_linear, int row, int col) const;

private:
    int n_ = 0;
    std::size_t stride_ = 0;
    int constancy_depth_ = 0;
    std::vector<long long> entries_;
};

OperatorMatrix assemble_coordinate(const ManifoldModel& model, const FrameField& frame,
                                   int coordinate, const KernelSpec& kernel);

/// Symmetric coefficient field A(x) with a uniform lower eigenvalue bound.
class EllipticCoefficients {
public:
    static EllipticCoefficients constant(const ManifoldModel& model, const Matrix& value, double theta);
    static EllipticCoefficients from_cells(const ManifoldModel& model, std::vector<double> entries, double theta);
    static EllipticCoefficients from_json(const ManifoldModel& model, const std::string& json_text);
    static EllipticCoefficients from_json_file(const ManifoldModel& model, const std::string& path);

    double theta() const { return theta_; }
    double entry(std::size_t cell_linear, int row, int col) const;
    /// Smallest per-cell eigenvalue, the measured ellipticity certificate.
    double certificate() const { return certificate_; }

private:
    int n_ = 0;
    std::size_t stride_ = 0;
    double theta_ = 0.0;
    double certificate_ = 0.0;
    std::vector<double> entries_;

    void validate(const ManifoldModel& model);
    friend EllipticCoefficients make_coefficients(const ManifoldModel&, std::vector<double>, double);
};

struct EllipticOperator {
    Matrix entries;
    std::vector<CellIndex> cell_order;
    std::vector<Rational> mu;
    std::vector<double> mu_dbl;
    double theta_certificate = 0.0;
};

/// P = sum_{i,j} L_i diag(a^ij) L_j with L_i the coordinate operators.
EllipticOperator assemble_elliptic(const ManifoldModel& model, const FrameField& frame,
                                   const EllipticCoefficients& coeffs, double alpha, int k);

struct BoundaryData {
    std::vector<std::pair<CellIndex, CellIndex>> edge_boundary;
    std::vector<CellIndex> vertex_boundary;
    std::vector<CellIndex> closure;
};

BoundaryData boundary_sets(const ManifoldModel& model, int k, const std::vector<CellIndex>& omega);

/// Interior operator of the homogeneous Dirichlet problem: rows and columns
/// over omega, diagonal still carrying the coupling into the k-boundary.
struct RestrictedOperator {
    Matrix entries;
    std::vector<CellIndex> omega;
    std::vector<Rational> mu;
    std::vector<double> mu_dbl;
    BoundaryData boundary;
    double alpha = 1.0;
    int k = 0;
};

RestrictedOperator restrict_dirichlet(const ManifoldModel& model, const KernelSpec& kernel,
                                      const std::vector<CellIndex>& omega);

/// Structural checks shared by the assemblers: nonpositive off-diagonal,
/// nonnegative diagonal, zero row sums.
void check_operator_laws(const OperatorMatrix& L, double tol = 1e-12);

} // namespace padicdiff
