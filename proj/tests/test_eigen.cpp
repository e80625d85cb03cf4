#include <doctest.h>

#include <numbers>

#include "mtdc/eigen.hpp"
#include "support.hpp"

using namespace mtdc;

TEST_CASE("diagonal matrix") {
  CMatrix l = CMatrix::Zero(2, 2);
  l.diagonal() << 2.0, 3.0;
  const auto d = eigendecompose(l);
  CHECK(d.values[0] == Complex(3.0));
  CHECK(d.values[1] == Complex(2.0));
  // Columns of V are the unit vectors of the ports carrying each eigenvalue.
  CHECK(std::abs(d.right(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.right(0, 1)) == doctest::Approx(1.0));
  CHECK((d.left * d.right - CMatrix::Identity(2, 2)).norm() < 1e-15);
  CHECK(d.condition == doctest::Approx(1.0));
  CHECK_FALSE(d.degenerate());
}

TEST_CASE("defective matrix is rejected") {
  CMatrix jordan = CMatrix::Zero(2, 2);
  jordan(0, 1) = 1.0;
  CHECK_THROWS_AS(eigendecompose(jordan), IllConditionedError);
  const auto d = decompose_unchecked(jordan);
  CHECK(d.degenerate());
  CHECK(d.condition > 1e8);
}

TEST_CASE("random matrices reconstruct") {
  std::mt19937_64 rng(42);
  for (Index n : {1, 3, 6, 12}) {
    const CMatrix l = test::random_matrix(rng, n);
    const auto d = eigendecompose(l);
    CHECK((d.right * d.values.asDiagonal() * d.left - l).norm() < 1e-10 * l.norm());
    CHECK((d.left * d.right - CMatrix::Identity(n, n)).norm() < 1e-10);
    for (Index i = 0; i < n; ++i) CHECK(d.right.col(i).norm() == doctest::Approx(1.0));
    for (Index i = 1; i < n; ++i) CHECK(std::abs(d.values[i - 1]) >= std::abs(d.values[i]));
  }
}

TEST_CASE("semisimple repeated eigenvalue keeps a well-conditioned basis") {
  std::mt19937_64 rng(5);
  const CMatrix q = test::random_matrix(rng, 4).householderQr().householderQ();
  CMatrix lam = CMatrix::Zero(4, 4);
  lam.diagonal() << 2.0, 2.0, 1.0, -0.5;
  const CMatrix l = q * lam * q.adjoint();
  const auto d = eigendecompose(l);
  CHECK(d.clustered[0]);
  CHECK(d.clustered[1]);
  CHECK_FALSE(d.clustered[2]);
  CHECK(d.condition < 10.0);
  CHECK((d.right * d.values.asDiagonal() * d.left - l).norm() < 1e-10);
}

TEST_CASE("permutation") {
  std::mt19937_64 rng(9);
  const auto d = eigendecompose(test::random_matrix(rng, 3));
  const std::vector<Index> order{2, 0, 1};
  const auto p = d.permuted(order);
  CHECK(p.values[0] == d.values[2]);
  CHECK(p.right.col(1) == d.right.col(0));
  CHECK(p.left.row(2) == d.left.row(1));
}

TEST_CASE("float scalar") {
  Eigen::Matrix<std::complex<float>, 3, 3> l;
  l << 1.f, 2.f, 0.f, 0.f, 3.f, 1.f, 1.f, 0.f, 2.f;
  const auto d = eigendecompose(l);
  static_assert(std::is_same_v<decltype(d.condition), float>);
  CHECK((d.right * d.values.asDiagonal() * d.left - l.cast<std::complex<float>>()).norm() < 1e-4f);
}

TEST_CASE("winding number") {
  auto circle = [](Complex c, double r, int n, double turns) {
    std::vector<Complex> z;
    for (int k = 0; k <= n; ++k)
      z.push_back(c + r * std::polar(1.0, 2.0 * std::numbers::pi * turns * k / n));
    return z;
  };
  const auto ccw = circle(-1.0, 1.0, 400, 1.0);
  CHECK(winding_number<double>(ccw, Complex(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const auto cw = circle(-1.0, 1.0, 400, -2.0);
  CHECK(winding_number<double>(cw, Complex(-1.0)) == doctest::Approx(-2.0).epsilon(1e-12));
  const auto small = circle(0.0, 0.5, 400, 1.0);
  CHECK(winding_number<double>(small, Complex(-1.0)) == doctest::Approx(0.0).epsilon(1e-12));
  const auto through = circle(0.0, 1.0, 400, 1.0);
  CHECK_THROWS_AS(winding_number<double>(through, Complex(-1.0)), LocusThroughPointError);
  const std::vector<Complex> one{Complex(1.0)};
  CHECK_THROWS_AS(winding_number<double>(one, Complex(0.0)), DimensionError);
}
