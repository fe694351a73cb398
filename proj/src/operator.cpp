#include "lpbesov/operator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "parse_util.hpp"

namespace lpbesov {

std::string_view to_string(StorageKind kind) {
  switch (kind) {
    case StorageKind::dense: return "dense";
    case StorageKind::sparse: return "sparse";
    case StorageKind::diagonal: return "diagonal";
  }
  return "unknown";
}

std::string_view to_string(OperatorFormat format) {
  switch (format) {
    case OperatorFormat::matrix_market: return "matrix-market";
    case OperatorFormat::dense_csv: return "dense-csv";
    case OperatorFormat::diagonal_csv: return "diagonal-csv";
  }
  return "unknown";
}

std::string_view to_string(LaplacianKind kind) {
  switch (kind) {
    case LaplacianKind::path: return "path";
    case LaplacianKind::cycle: return "cycle";
    case LaplacianKind::grid2d: return "grid2d";
  }
  return "unknown";
}

OperatorFormat parse_operator_format(std::string_view name) {
  if (name == "matrix-market" || name == "mtx") return OperatorFormat::matrix_market;
  if (name == "dense-csv") return OperatorFormat::dense_csv;
  if (name == "diagonal-csv") return OperatorFormat::diagonal_csv;
  throw ConfigError("unknown operator format '" + std::string(name) +
                    "' (expected matrix-market, dense-csv or diagonal-csv)");
}

LaplacianKind parse_laplacian_kind(std::string_view name) {
  if (name == "path") return LaplacianKind::path;
  if (name == "cycle") return LaplacianKind::cycle;
  if (name == "grid2d") return LaplacianKind::grid2d;
  throw ConfigError("unknown generator '" + std::string(name) +
                    "' (expected path, cycle or grid2d)");
}

namespace {

void require_tolerance(double tol, const char* name) {
  if (!(tol >= 0.0) || !std::isfinite(tol)) {
    throw ConfigError(std::string(name) + " must be a finite nonnegative number");
  }
}

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

}  // namespace

Operator Operator::dense(DenseMatrix matrix, double symmetry_tol) {
  require_tolerance(symmetry_tol, "symmetry_tol");
  if (matrix.rows() != matrix.cols()) {
    throw ConfigError("operator matrix is not square (" + std::to_string(matrix.rows()) + "x" +
                      std::to_string(matrix.cols()) + ")");
  }
  if (matrix.rows() == 0) throw ConfigError("operator matrix is empty");
  if (!matrix.allFinite()) throw ConfigError("operator matrix has non-finite entries");

  const double asymmetry = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > symmetry_tol) {
    throw ConfigError("operator is not symmetric: max |A[i][j] - A[j][i]| = " +
                      format_double(asymmetry) + " exceeds symmetry_tol " +
                      format_double(symmetry_tol));
  }
  DenseMatrix symmetric = 0.5 * (matrix + matrix.transpose());
  const Eigen::Index n = symmetric.rows();
  return Operator(std::move(symmetric), n, symmetry_tol);
}

Operator Operator::sparse(SparseMatrix matrix, double symmetry_tol) {
  require_tolerance(symmetry_tol, "symmetry_tol");
  if (matrix.rows() != matrix.cols()) {
    throw ConfigError("operator matrix is not square (" + std::to_string(matrix.rows()) + "x" +
                      std::to_string(matrix.cols()) + ")");
  }
  if (matrix.rows() == 0) throw ConfigError("operator matrix is empty");
  matrix.makeCompressed();
  for (Eigen::Index k = 0; k < matrix.nonZeros(); ++k) {
    if (!std::isfinite(matrix.valuePtr()[k])) {
      throw ConfigError("operator matrix has non-finite entries");
    }
  }

  SparseMatrix transpose = matrix.transpose();
  SparseMatrix difference = matrix - transpose;
  double asymmetry = 0.0;
  for (Eigen::Index k = 0; k < difference.nonZeros(); ++k) {
    asymmetry = std::max(asymmetry, std::abs(difference.valuePtr()[k]));
  }
  if (asymmetry > symmetry_tol) {
    throw ConfigError("operator is not symmetric: max |A[i][j] - A[j][i]| = " +
                      format_double(asymmetry) + " exceeds symmetry_tol " +
                      format_double(symmetry_tol));
  }
  SparseMatrix symmetric = 0.5 * (matrix + transpose);
  symmetric.prune(0.0);
  symmetric.makeCompressed();
  const Eigen::Index n = symmetric.rows();
  return Operator(std::move(symmetric), n, symmetry_tol);
}

Operator Operator::diagonal(Vector spectrum, double eigen_tol) {
  require_tolerance(eigen_tol, "eigen_tol");
  if (spectrum.size() == 0) throw ConfigError("diagonal spectrum is empty");
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (!std::isfinite(spectrum[i])) throw ConfigError("diagonal spectrum has non-finite entries");
    if (spectrum[i] < -eigen_tol) {
      throw ConfigError("diagonal entry " + std::to_string(i) + " = " + format_double(spectrum[i]) +
                        " is negative beyond eigen_tol " + format_double(eigen_tol));
    }
  }
  const Eigen::Index n = spectrum.size();
  return Operator(std::move(spectrum), n, 0.0);
}

StorageKind Operator::storage() const noexcept {
  switch (storage_.index()) {
    case 0: return StorageKind::dense;
    case 1: return StorageKind::sparse;
    default: return StorageKind::diagonal;
  }
}

Vector Operator::apply(const Vector& x) const {
  if (x.size() != n_) {
    throw ConfigError("vector length " + std::to_string(x.size()) +
                      " does not match operator dimension " + std::to_string(n_));
  }
  return std::visit(
      [&](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Vector>) {
          return m.cwiseProduct(x);
        } else {
          return m * x;
        }
      },
      storage_);
}

DenseMatrix Operator::to_dense() const {
  return std::visit(
      [](const auto& m) -> DenseMatrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Vector>) {
          return m.asDiagonal();
        } else if constexpr (std::is_same_v<T, SparseMatrix>) {
          return DenseMatrix(m);
        } else {
          return m;
        }
      },
      storage_);
}

Operator Operator::shifted(double shift) const {
  if (!std::isfinite(shift)) throw ConfigError("shift must be finite");
  return std::visit(
      [&](const auto& m) -> Operator {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Vector>) {
          return Operator(Vector(m.array() + shift), n_, symmetry_tol_);
        } else if constexpr (std::is_same_v<T, SparseMatrix>) {
          SparseMatrix identity(n_, n_);
          identity.setIdentity();
          SparseMatrix result = m + shift * identity;
          result.makeCompressed();
          return Operator(std::move(result), n_, symmetry_tol_);
        } else {
          DenseMatrix result = m;
          result.diagonal().array() += shift;
          return Operator(std::move(result), n_, symmetry_tol_);
        }
      },
      storage_);
}

// ---------------------------------------------------------------------------
// File formats

namespace {

Operator parse_matrix_market(std::string_view text, const LoadOptions& options) {
  detail::LineReader reader(text);
  std::string_view line;
  if (!reader.next_raw(line)) throw ParseError("matrix-market: empty input");

  const auto banner = detail::split_whitespace(line);
  if (banner.size() < 5 || detail::lower(banner[0]) != "%%matrixmarket" ||
      detail::lower(banner[1]) != "matrix") {
    throw ParseError("matrix-market: missing '%%MatrixMarket matrix ...' banner");
  }
  const std::string layout = detail::lower(banner[2]);
  const std::string field = detail::lower(banner[3]);
  const std::string symmetry = detail::lower(banner[4]);
  if (layout != "coordinate" && layout != "array") {
    throw ParseError("matrix-market: unsupported layout '" + layout + "'");
  }
  if (field != "real" && field != "integer" && field != "double" &&
      !(field == "pattern" && layout == "coordinate")) {
    throw ParseError("matrix-market: unsupported field '" + field + "' (complex is not supported)");
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw ParseError("matrix-market: unsupported symmetry '" + symmetry + "'");
  }
  const bool mirror = symmetry == "symmetric";

  // Skip comments to the size line.
  do {
    if (!reader.next_raw(line)) throw ParseError("matrix-market: missing size line");
    line = detail::trim(line);
  } while (line.empty() || line.front() == '%');

  const auto sizes = detail::split_whitespace(line);
  if (layout == "coordinate") {
    if (sizes.size() != 3) throw ParseError("matrix-market: malformed size line");
    const long rows = detail::parse_long(sizes[0], reader.line_number());
    const long cols = detail::parse_long(sizes[1], reader.line_number());
    const long nnz = detail::parse_long(sizes[2], reader.line_number());
    if (rows <= 0 || cols <= 0 || nnz < 0) throw ParseError("matrix-market: invalid sizes");
    if (rows != cols) {
      throw ConfigError("operator matrix is not square (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ")");
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mirror ? 2 * nnz : nnz));
    for (long k = 0; k < nnz; ++k) {
      do {
        if (!reader.next_raw(line)) {
          throw ParseError("matrix-market: expected " + std::to_string(nnz) + " entries, found " +
                           std::to_string(k));
        }
        line = detail::trim(line);
      } while (line.empty() || line.front() == '%');
      const auto tokens = detail::split_whitespace(line);
      const std::size_t expected = field == "pattern" ? 2 : 3;
      if (tokens.size() != expected) {
        throw ParseError("matrix-market: malformed entry on line " +
                         std::to_string(reader.line_number()));
      }
      const long i = detail::parse_long(tokens[0], reader.line_number()) - 1;
      const long j = detail::parse_long(tokens[1], reader.line_number()) - 1;
      if (i < 0 || j < 0 || i >= rows || j >= cols) {
        throw ParseError("matrix-market: index out of range on line " +
                         std::to_string(reader.line_number()));
      }
      const double value = field == "pattern" ? 1.0 : detail::parse_double(tokens[2], reader.line_number());
      triplets.emplace_back(i, j, value);
      if (mirror && i != j) triplets.emplace_back(j, i, value);
    }
    SparseMatrix matrix(rows, cols);
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    return Operator::sparse(std::move(matrix), options.symmetry_tol);
  }

  // Array layout: column-major values; symmetric stores the lower triangle.
  if (sizes.size() != 2) throw ParseError("matrix-market: malformed size line");
  const long rows = detail::parse_long(sizes[0], reader.line_number());
  const long cols = detail::parse_long(sizes[1], reader.line_number());
  if (rows <= 0 || cols <= 0) throw ParseError("matrix-market: invalid sizes");
  if (rows != cols) {
    throw ConfigError("operator matrix is not square (" + std::to_string(rows) + "x" +
                      std::to_string(cols) + ")");
  }
  DenseMatrix matrix = DenseMatrix::Zero(rows, cols);
  for (long j = 0; j < cols; ++j) {
    for (long i = mirror ? j : 0; i < rows; ++i) {
      do {
        if (!reader.next_raw(line)) throw ParseError("matrix-market: too few array entries");
        line = detail::trim(line);
      } while (line.empty() || line.front() == '%');
      const double value = detail::parse_double(line, reader.line_number());
      matrix(i, j) = value;
      if (mirror) matrix(j, i) = value;
    }
  }
  return Operator::dense(std::move(matrix), options.symmetry_tol);
}

Operator parse_dense_csv(std::string_view text, const LoadOptions& options) {
  std::vector<std::vector<double>> rows;
  detail::LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    std::vector<double> row;
    for (auto cell : detail::split(line, ',')) {
      row.push_back(detail::parse_double(detail::trim(cell), reader.line_number()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("dense-csv: no rows");
  const std::size_t n = rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ConfigError("operator matrix is not square: row " + std::to_string(i + 1) + " has " +
                        std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
    }
  }
  DenseMatrix matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) matrix(i, j) = rows[i][j];
  }
  return Operator::dense(std::move(matrix), options.symmetry_tol);
}

Vector parse_column(std::string_view text, const char* what) {
  std::vector<double> values;
  detail::LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    for (auto cell : detail::split(line, ',')) {
      cell = detail::trim(cell);
      if (cell.empty()) continue;
      values.push_back(detail::parse_double(cell, reader.line_number()));
    }
  }
  if (values.empty()) throw ParseError(std::string(what) + ": no values");
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Operator parse_operator(std::string_view text, OperatorFormat format, const LoadOptions& options) {
  switch (format) {
    case OperatorFormat::matrix_market: return parse_matrix_market(text, options);
    case OperatorFormat::dense_csv: return parse_dense_csv(text, options);
    case OperatorFormat::diagonal_csv:
      return Operator::diagonal(parse_column(text, "diagonal-csv"), options.eigen_tol);
  }
  throw ConfigError("unknown operator format");
}

Operator load_operator(const std::filesystem::path& path, OperatorFormat format,
                       const LoadOptions& options) {
  return parse_operator(detail::read_file(path), format, options);
}

void write_matrix_market(const std::filesystem::path& path, const Operator& op) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  if (const auto* sparse = op.sparse_matrix()) {
    for (Eigen::Index col = 0; col < sparse->outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(*sparse, col); it; ++it) {
        if (it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
      }
    }
  } else {
    const DenseMatrix dense = op.to_dense();
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      for (Eigen::Index i = j; i < dense.rows(); ++i) {
        if (dense(i, j) != 0.0) entries.emplace_back(i, j, dense(i, j));
      }
    }
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << op.dimension() << ' ' << op.dimension() << ' ' << entries.size() << '\n';
  for (const auto& [i, j, v] : entries) out << i + 1 << ' ' << j + 1 << ' ' << v << '\n';
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

Signal parse_signal(std::string_view text, std::string label) {
  return Signal{parse_column(text, "signal"), std::move(label)};
}

Signal load_signal(const std::filesystem::path& path, std::string label) {
  if (label.empty()) label = path.filename().string();
  return parse_signal(detail::read_file(path), std::move(label));
}

// ---------------------------------------------------------------------------
// Generators

Operator build_laplacian(LaplacianKind kind, int n_or_side) {
  if (n_or_side < 2) {
    throw ConfigError("laplacian size must be >= 2, got " + std::to_string(n_or_side));
  }
  std::set<std::pair<int, int>> edges;
  auto add_edge = [&](int a, int b) {
    if (a != b) edges.emplace(std::min(a, b), std::max(a, b));
  };

  int n = n_or_side;
  switch (kind) {
    case LaplacianKind::path:
      for (int i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
      break;
    case LaplacianKind::cycle:
      for (int i = 0; i < n; ++i) add_edge(i, (i + 1) % n);
      break;
    case LaplacianKind::grid2d: {
      const int side = n_or_side;
      n = side * side;
      for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
          const int v = row * side + col;
          if (col + 1 < side) add_edge(v, v + 1);
          if (row + 1 < side) add_edge(v, v + side);
        }
      }
      break;
    }
  }

  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size() + static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    triplets.emplace_back(a, b, -1.0);
    triplets.emplace_back(b, a, -1.0);
    degree[static_cast<std::size_t>(a)] += 1.0;
    degree[static_cast<std::size_t>(b)] += 1.0;
  }
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, degree[static_cast<std::size_t>(i)]);

  SparseMatrix matrix(n, n);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return Operator::sparse(std::move(matrix), 0.0);
}

// ---------------------------------------------------------------------------
// Spectral decomposition

EigenDecomposition eigendecompose(const Operator& op, double eigen_tol) {
  require_tolerance(eigen_tol, "eigen_tol");
  const Eigen::Index n = op.dimension();
  EigenDecomposition result;

  if (const auto* spectrum = op.diagonal_spectrum()) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return (*spectrum)[a] < (*spectrum)[b]; });
    result.eigenvalues.resize(n);
    result.eigenvectors = DenseMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      result.eigenvalues[k] = (*spectrum)[order[static_cast<std::size_t>(k)]];
      result.eigenvectors(order[static_cast<std::size_t>(k)], k) = 1.0;
    }
  } else {
    if (n > kMaxDenseDimension) {
      throw ConfigError("dimension " + std::to_string(n) + " exceeds the dense eigensolver limit of " +
                        std::to_string(kMaxDenseDimension) + "; use the chebyshev backend");
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(op.to_dense(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
      throw NumericError("symmetric eigensolver did not converge");
    }
    result.eigenvalues = solver.eigenvalues();
    result.eigenvectors = solver.eigenvectors();

    // Fix the sign of each eigenvector so its largest-magnitude entry is positive.
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index pivot = 0;
      result.eigenvectors.col(k).cwiseAbs().maxCoeff(&pivot);
      if (result.eigenvectors(pivot, k) < 0.0) result.eigenvectors.col(k) *= -1.0;
    }
  }

  if (!result.eigenvalues.allFinite()) throw NumericError("eigensolver produced non-finite eigenvalues");
  const double smallest = result.eigenvalues.minCoeff();
  if (smallest < -eigen_tol) {
    throw ConfigError("operator is not positive semidefinite: eigenvalue " + format_double(smallest) +
                      " < -eigen_tol (" + format_double(eigen_tol) + ")");
  }
  result.eigenvalues = result.eigenvalues.cwiseMax(0.0);
  result.lambda_max = result.eigenvalues[n - 1];
  return result;
}

double spectral_bound(const Operator& op) {
  if (const auto* spectrum = op.diagonal_spectrum()) return std::max(0.0, spectrum->maxCoeff());

  const Eigen::Index n = op.dimension();
  double gershgorin = 0.0;
  if (const auto* sparse = op.sparse_matrix()) {
    Vector radius = Vector::Zero(n);
    Vector diag = Vector::Zero(n);
    for (Eigen::Index col = 0; col < sparse->outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(*sparse, col); it; ++it) {
        if (it.row() == it.col()) {
          diag[it.row()] += it.value();
        } else {
          radius[it.row()] += std::abs(it.value());
        }
      }
    }
    gershgorin = (diag + radius).maxCoeff();
  } else {
    const DenseMatrix& dense = *op.dense_matrix();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row = dense.row(i).cwiseAbs().sum() - std::abs(dense(i, i)) + dense(i, i);
      gershgorin = std::max(gershgorin, row);
    }
  }
  gershgorin = std::max(0.0, gershgorin);
  if (gershgorin == 0.0) return 0.0;

  // Lanczos with full reorthogonalization from a fixed-seed start vector.
  std::mt19937_64 engine(0x5eed);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = static_cast<double>(engine() >> 11) * 0x1.0p-53 - 0.5;
  }
  x.normalize();

  constexpr Eigen::Index kLanczosSteps = 64;
  const Eigen::Index steps = std::min(n, kLanczosSteps);
  DenseMatrix basis(n, steps);
  Vector alpha = Vector::Zero(steps);
  Vector beta = Vector::Zero(steps);
  Eigen::Index m = 0;
  bool invariant = false;
  basis.col(0) = x;
  for (; m < steps; ++m) {
    Vector w = op.apply(basis.col(m));
    alpha[m] = basis.col(m).dot(w);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
    }
    beta[m] = w.norm();
    if (beta[m] <= 1e-12 * gershgorin) {
      invariant = true;
      ++m;
      break;
    }
    if (m + 1 < steps) basis.col(m + 1) = w / beta[m];
  }
  if (m == n) invariant = true;

  DenseMatrix tri = DenseMatrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    tri(i, i) = alpha[i];
    if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> ritz(tri);
  const double theta = ritz.eigenvalues()[m - 1];
  if (invariant) {
    // Ritz values are eigenvalues; pad for rounding only.
    return std::min(gershgorin, theta + 1e-10 * std::max(1.0, std::abs(theta)));
  }
  // The residual bounds the distance to the nearest eigenvalue; the 1% floor
  // covers a top eigenvalue the Krylov space has not resolved.
  const double residual = beta[m - 1] * std::abs(ritz.eigenvectors()(m - 1, m - 1));
  return std::min(gershgorin, std::max(theta + residual, theta * 1.01));
}

void require_dimension(const EigenDecomposition& decomp, const Vector& f) {
  if (f.size() != decomp.dimension()) {
    throw ConfigError("signal length " + std::to_string(f.size()) +
                      " does not match operator dimension " + std::to_string(decomp.dimension()));
  }
}

Vector spectral_coefficients(const EigenDecomposition& decomp, const Vector& f) {
  require_dimension(decomp, f);
  return decomp.eigenvectors.transpose() * f;
}

Vector synthesize(const EigenDecomposition& decomp, const Vector& coefficients) {
  require_dimension(decomp, coefficients);
  return decomp.eigenvectors * coefficients;
}

double sobolev_norm(const EigenDecomposition& decomp, const Vector& f, int k) {
  if (k < 0) throw ConfigError("sobolev_norm: k must be nonnegative");
  require_dimension(decomp, f);
  if (k == 0) return f.norm();
  const Vector coefficients = spectral_coefficients(decomp, f);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    const double scaled = std::pow(decomp.eigenvalues[i], k) * coefficients[i];
    sum += scaled * scaled;
  }
  return std::sqrt(sum);
}

}  // namespace lpbesov
