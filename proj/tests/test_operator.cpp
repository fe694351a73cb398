#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "lpbesov/error.hpp"
#include "lpbesov/operator.hpp"
#include "oracles.hpp"

using namespace lpbesov;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void check_decomposition(const Operator& op, const EigenDecomposition& d) {
  const Eigen::Index n = op.dimension();
  const DenseMatrix gram = d.eigenvectors.transpose() * d.eigenvectors;
  CHECK((gram - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector residual = op.apply(d.eigenvectors.col(i)) - d.eigenvalues[i] * d.eigenvectors.col(i);
    CHECK(residual.norm() <= 1e-8 * std::max(1.0, d.eigenvalues[i]));
    if (i > 0) CHECK(d.eigenvalues[i - 1] <= d.eigenvalues[i]);
    CHECK(d.eigenvalues[i] >= 0.0);
  }
  CHECK(d.lambda_max == d.eigenvalues[n - 1]);
}

}  // namespace

TEST_CASE("diagonal csv passes the spectrum through") {
  const Operator op = parse_operator("0.5\n2.0\n3.0", OperatorFormat::diagonal_csv);
  CHECK(op.storage() == StorageKind::diagonal);
  CHECK(op.dimension() == 3);
  const auto d = eigendecompose(op);
  CHECK(to_std(d.eigenvalues) == std::vector<double>{0.5, 2.0, 3.0});
  CHECK((d.eigenvectors - DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense csv input is validated for symmetry") {
  const Operator op = parse_operator("2,-1\n-1,2\n", OperatorFormat::dense_csv);
  CHECK(op.storage() == StorageKind::dense);
  CHECK(op.dimension() == 2);
  const auto d = eigendecompose(op);
  CHECK(d.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
  check_decomposition(op, d);

  CHECK_THROWS_AS(parse_operator("0,1\n0,0\n", OperatorFormat::dense_csv), ConfigError);
}

TEST_CASE("small asymmetry within tolerance is symmetrized") {
  const Operator op = parse_operator("2,-1\n-1.00000000001,2\n", OperatorFormat::dense_csv);
  const DenseMatrix a = op.to_dense();
  CHECK(a(0, 1) == a(1, 0));
  CHECK_THROWS_AS(parse_operator("2,-1\n-1.001,2\n", OperatorFormat::dense_csv), ConfigError);
}

TEST_CASE("malformed and non-square inputs are rejected") {
  CHECK_THROWS_AS(parse_operator("1,2\n3\n", OperatorFormat::dense_csv), ConfigError);
  CHECK_THROWS_AS(parse_operator("1,2,3\n2,1,3\n", OperatorFormat::dense_csv), ConfigError);
  CHECK_THROWS_AS(parse_operator("1\nabc\n", OperatorFormat::diagonal_csv), ConfigError);
  CHECK_THROWS_AS(parse_operator("1\n-0.5\n", OperatorFormat::diagonal_csv), ConfigError);
  CHECK_THROWS_AS(parse_operator("", OperatorFormat::diagonal_csv), ConfigError);
  CHECK_THROWS_AS(parse_operator("1\nnan\n", OperatorFormat::diagonal_csv), ConfigError);
  // Tiny negative entries inside eigen_tol are clamped to zero.
  const auto d = eigendecompose(parse_operator("-1e-12\n1\n", OperatorFormat::diagonal_csv));
  CHECK(d.eigenvalues[0] == 0.0);
}

TEST_CASE("matrix market coordinate and array layouts") {
  const std::string symmetric =
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "% path graph on 3 nodes\n"
      "3 3 5\n"
      "1 1 1\n2 2 2\n3 3 1\n2 1 -1\n3 2 -1\n";
  const auto d = eigendecompose(parse_operator(symmetric, OperatorFormat::matrix_market));
  const auto expect = oracle::path_spectrum(3);
  for (int i = 0; i < 3; ++i) CHECK(d.eigenvalues[i] == doctest::Approx(expect[i]).epsilon(1e-12));

  const std::string array =
      "%%MatrixMarket matrix array real general\n"
      "2 2\n2\n-1\n-1\n2\n";
  const Operator op = parse_operator(array, OperatorFormat::matrix_market);
  CHECK(op.to_dense()(1, 0) == -1.0);

  CHECK_THROWS_AS(parse_operator("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n",
                                 OperatorFormat::matrix_market),
                  ConfigError);
  CHECK_THROWS_AS(parse_operator("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1\n",
                                 OperatorFormat::matrix_market),
                  ConfigError);
}

TEST_CASE("matrix market round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "lpbesov_roundtrip.mtx";
  const Operator op = build_laplacian(LaplacianKind::cycle, 5);
  write_matrix_market(path, op);
  const Operator back = load_operator(path, OperatorFormat::matrix_market);
  CHECK((back.to_dense() - op.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_operator(path, OperatorFormat::matrix_market), ConfigError);
}

TEST_CASE("graph Laplacian spectra match closed forms") {
  SUBCASE("path 4") {
    const auto d = eigendecompose(build_laplacian(LaplacianKind::path, 4));
    const std::vector<double> expect{0.0, 2.0 - std::sqrt(2.0), 2.0, 2.0 + std::sqrt(2.0)};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(d.eigenvalues[i] - expect[i]) <= 1e-12);
    CHECK(d.lambda_max == doctest::Approx(3.4142135623730951).epsilon(1e-14));
  }
  SUBCASE("cycle 3") {
    const auto d = eigendecompose(build_laplacian(LaplacianKind::cycle, 3));
    CHECK(std::abs(d.eigenvalues[0]) <= 1e-12);
    CHECK(d.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(d.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("path 2 matrix") {
    const DenseMatrix a = build_laplacian(LaplacianKind::path, 2).to_dense();
    DenseMatrix expect(2, 2);
    expect << 1, -1, -1, 1;
    CHECK(a == expect);
  }
  SUBCASE("larger graphs") {
    for (auto [kind, size, expect] :
         {std::tuple{LaplacianKind::path, 64, oracle::path_spectrum(64)},
          std::tuple{LaplacianKind::cycle, 17, oracle::cycle_spectrum(17)},
          std::tuple{LaplacianKind::grid2d, 8, oracle::grid_spectrum(8)}}) {
      const Operator op = build_laplacian(kind, size);
      const auto d = eigendecompose(op);
      REQUIRE(d.dimension() == static_cast<Eigen::Index>(expect.size()));
      for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(d.eigenvalues[i] - expect[i]) <= 1e-10);
      check_decomposition(op, d);
    }
  }
  SUBCASE("cycle 2 has one double edge") {
    const DenseMatrix a = build_laplacian(LaplacianKind::cycle, 2).to_dense();
    CHECK(a(0, 0) == 1.0);
    CHECK(a(0, 1) == -1.0);
  }
  CHECK_THROWS_AS(build_laplacian(LaplacianKind::path, 1), ConfigError);
  CHECK_THROWS_AS(build_laplacian(LaplacianKind::grid2d, 0), ConfigError);
}

TEST_CASE("spectral bound brackets lambda_max") {
  const double diag = spectral_bound(Operator::diagonal(Vector{{0.5, 2.0, 3.0}}));
  CHECK(diag >= 3.0);
  CHECK(diag <= 3.6);

  const double p4 = spectral_bound(build_laplacian(LaplacianKind::path, 4));
  CHECK(p4 >= 2.0 + std::sqrt(2.0));
  CHECK(p4 <= 4.0971);

  CHECK(spectral_bound(Operator::dense(DenseMatrix::Zero(3, 3))) == 0.0);

  for (int n : {16, 64, 200}) {
    const Operator op = build_laplacian(LaplacianKind::path, n);
    const double bound = spectral_bound(op);
    CHECK(bound >= oracle::path_spectrum(n).back());
    CHECK(bound <= 4.0);
  }
  const Operator grid = build_laplacian(LaplacianKind::grid2d, 8);
  CHECK(spectral_bound(grid) >= oracle::grid_spectrum(8).back());
}

TEST_CASE("spectral coefficients and synthesis") {
  const Operator op = build_laplacian(LaplacianKind::path, 4);
  const auto d = eigendecompose(op);
  for (int k = 0; k < 4; ++k) {
    const Vector e = spectral_coefficients(d, d.eigenvectors.col(k));
    CHECK((e - Vector::Unit(4, k)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  CHECK(spectral_coefficients(d, Vector::Zero(4)).norm() == 0.0);

  std::mt19937_64 rng(7);
  const Vector f = oracle::gaussian(4, rng);
  const Vector e = spectral_coefficients(d, f);
  CHECK(e.squaredNorm() == doctest::Approx(f.squaredNorm()).epsilon(1e-13));
  // Direct inner products against the closed-form eigenvectors (up to sign).
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(e[k]) == doctest::Approx(std::abs(oracle::path_eigenvector(4, k).dot(f))).epsilon(1e-10));
  }
  CHECK((synthesize(d, e) - f).norm() <= 1e-13 * f.norm());
  CHECK_THROWS_AS(spectral_coefficients(d, Vector::Zero(3)), ConfigError);
}

TEST_CASE("sobolev norms") {
  const Operator op = build_laplacian(LaplacianKind::path, 64);
  const auto d = eigendecompose(op);
  const Vector v = d.eigenvectors.col(32);  // eigenvalue 2
  REQUIRE(d.eigenvalues[32] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sobolev_norm(d, 3.0 * v, 3) == doctest::Approx(8.0 * 3.0).epsilon(1e-11));

  std::mt19937_64 rng(1);
  const Vector f = oracle::gaussian(64, rng);
  CHECK(sobolev_norm(d, f, 0) == f.norm());
  CHECK(sobolev_norm(d, f, 2) == doctest::Approx(op.apply(op.apply(f)).norm()).epsilon(1e-11));

  const auto diag = eigendecompose(Operator::diagonal(Vector{{1.0, 3.0}}));
  CHECK(sobolev_norm(diag, Vector{{1.0, 1.0}}, 1) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
}

TEST_CASE("shift and signal parsing") {
  const Operator op = build_laplacian(LaplacianKind::path, 4).shifted(0.5);
  CHECK(eigendecompose(op).eigenvalues[0] == doctest::Approx(0.5).epsilon(1e-12));

  const Signal s = parse_signal("1\n2\n# comment\n3\n", "s");
  CHECK(s.values.size() == 3);
  CHECK(s.values[2] == 3.0);
  CHECK(parse_signal("1,2,3,4").values.size() == 4);
  CHECK_THROWS_AS(parse_signal("1\nx\n"), ConfigError);
  CHECK_THROWS_AS(parse_signal(""), ConfigError);
}

TEST_CASE("operator application agrees across storages") {
  const Operator sparse = build_laplacian(LaplacianKind::grid2d, 5);
  const Operator dense = Operator::dense(sparse.to_dense());
  std::mt19937_64 rng(3);
  const Vector x = oracle::gaussian(25, rng);
  CHECK((sparse.apply(x) - dense.apply(x)).norm() <= 1e-14);
  const Operator diag = Operator::diagonal(Vector{{1.0, 2.0}});
  CHECK(diag.apply(Vector{{3.0, 4.0}}) == Vector{{3.0, 8.0}});
  CHECK_THROWS_AS(Operator::dense(DenseMatrix::Zero(2, 3)), ConfigError);
}

TEST_CASE("bundled generators: bound tightness and reconstruction") {
  for (auto [kind, size] : {std::pair{LaplacianKind::path, 64}, std::pair{LaplacianKind::grid2d, 8},
                            std::pair{LaplacianKind::cycle, 33}, std::pair{LaplacianKind::path, 4}}) {
    const Operator op = build_laplacian(kind, size);
    const auto d = eigendecompose(op);
    const double bound = spectral_bound(op);
    CHECK(bound >= d.lambda_max);
    CHECK(bound <= 1.2 * d.lambda_max);
    const DenseMatrix a = op.to_dense();
    const DenseMatrix rebuilt = d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose();
    CHECK((rebuilt - a).norm() <= 1e-8 * a.norm());
  }
}
