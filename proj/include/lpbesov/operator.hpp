#pragma once

// Finite-dimensional self-adjoint positive semidefinite operators, their
// spectral decomposition, and the coefficient ("Fourier") map onto the
// eigenbasis.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "lpbesov/error.hpp"

namespace lpbesov {

inline constexpr double kDefaultSymmetryTol = 1e-10;
inline constexpr double kDefaultEigenTol = 1e-9;
inline constexpr Eigen::Index kMaxDenseDimension = 4096;

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class StorageKind { dense, sparse, diagonal };
enum class OperatorFormat { matrix_market, dense_csv, diagonal_csv };
enum class LaplacianKind { path, cycle, grid2d };

std::string_view to_string(StorageKind kind);
std::string_view to_string(OperatorFormat format);
std::string_view to_string(LaplacianKind kind);
OperatorFormat parse_operator_format(std::string_view name);
LaplacianKind parse_laplacian_kind(std::string_view name);

// A symmetric PSD matrix on R^n. Immutable once constructed; the constructors
// validate symmetry and store the symmetrized part (A + A^T) / 2.
class Operator {
public:
  static Operator dense(DenseMatrix matrix, double symmetry_tol = kDefaultSymmetryTol);
  static Operator sparse(SparseMatrix matrix, double symmetry_tol = kDefaultSymmetryTol);
  // Explicit spectrum. Entries in [-eigen_tol, 0) are kept and clamped later.
  static Operator diagonal(Vector spectrum, double eigen_tol = kDefaultEigenTol);

  Eigen::Index dimension() const noexcept { return n_; }
  StorageKind storage() const noexcept;
  double symmetry_tol() const noexcept { return symmetry_tol_; }

  // y = A x, matrix-free for the sparse and diagonal storages.
  Vector apply(const Vector& x) const;
  DenseMatrix to_dense() const;

  // A + shift * I.
  Operator shifted(double shift) const;

  const DenseMatrix* dense_matrix() const noexcept { return std::get_if<DenseMatrix>(&storage_); }
  const SparseMatrix* sparse_matrix() const noexcept { return std::get_if<SparseMatrix>(&storage_); }
  const Vector* diagonal_spectrum() const noexcept { return std::get_if<Vector>(&storage_); }

private:
  using Storage = std::variant<DenseMatrix, SparseMatrix, Vector>;
  Operator(Storage storage, Eigen::Index n, double symmetry_tol)
      : storage_(std::move(storage)), n_(n), symmetry_tol_(symmetry_tol) {}

  Storage storage_;
  Eigen::Index n_ = 0;
  double symmetry_tol_ = kDefaultSymmetryTol;
};

// Eigenvalues ascending and clamped to >= 0; eigenvectors are the columns of V.
struct EigenDecomposition {
  Vector eigenvalues;
  DenseMatrix eigenvectors;
  double lambda_max = 0.0;

  Eigen::Index dimension() const noexcept { return eigenvalues.size(); }
};

struct Signal {
  Vector values;
  std::string label;
};

struct LoadOptions {
  double symmetry_tol = kDefaultSymmetryTol;
  double eigen_tol = kDefaultEigenTol;
};

Operator load_operator(const std::filesystem::path& path, OperatorFormat format,
                       const LoadOptions& options = {});
Operator parse_operator(std::string_view text, OperatorFormat format,
                        const LoadOptions& options = {});
void write_matrix_market(const std::filesystem::path& path, const Operator& op);

// One real per line (a trailing comma-separated layout on a single line is also accepted).
Signal load_signal(const std::filesystem::path& path, std::string label = {});
Signal parse_signal(std::string_view text, std::string label = {});

// Combinatorial graph Laplacian D - W with unit edge weights. For grid2d the
// argument is the side length and the dimension is side^2.
Operator build_laplacian(LaplacianKind kind, int n_or_side);

EigenDecomposition eigendecompose(const Operator& op, double eigen_tol = kDefaultEigenTol);

// Upper bound on lambda_max: Gershgorin, tightened by power iteration.
double spectral_bound(const Operator& op);

// e_i = <f, v_i>.
Vector spectral_coefficients(const EigenDecomposition& decomp, const Vector& f);
// f = sum_i e_i v_i.
Vector synthesize(const EigenDecomposition& decomp, const Vector& coefficients);

// ||A^k f|| = (sum_i lambda_i^(2k) e_i^2)^(1/2).
double sobolev_norm(const EigenDecomposition& decomp, const Vector& f, int k);

void require_dimension(const EigenDecomposition& decomp, const Vector& f);

}  // namespace lpbesov
