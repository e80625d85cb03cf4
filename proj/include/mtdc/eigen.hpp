#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mtdc/types.hpp"

namespace mtdc {

/// Relative spacing below which two eigenvalues are treated as one cluster.
inline constexpr double kDegenerateRelTol = 1e-8;

/// L = V diag(values) W with W = V^{-1}; columns of V are unit-norm right
/// eigenvectors, rows of W the matching left eigenvectors (W V = E).
template <typename Real>
struct EigenDecomposition {
  ComplexVector<Real> values;
  ComplexMatrix<Real> right;
  ComplexMatrix<Real> left;
  Real condition = Real(1);  // 2-norm condition number of V; +inf when defective
  // clustered[i]: eigenvalue i coincides with another to kDegenerateRelTol, so
  // its individual sensitivities are undefined.
  Eigen::Array<bool, Eigen::Dynamic, 1> clustered;

  Index size() const noexcept { return values.size(); }
  bool degenerate() const { return clustered.any(); }

  /// Entry i of the result is entry order[i] of this decomposition.
  EigenDecomposition permuted(std::span<const Index> order) const {
    EigenDecomposition out;
    const Index n = size();
    out.values.resize(n);
    out.right.resize(n, n);
    out.left.resize(n, n);
    out.clustered.resize(n);
    for (Index i = 0; i < n; ++i) {
      const Index src = order[static_cast<std::size_t>(i)];
      out.values[i] = values[src];
      out.right.col(i) = right.col(src);
      out.left.row(i) = left.row(src);
      out.clustered[i] = clustered[src];
    }
    out.condition = condition;
    return out;
  }
};

namespace detail {

template <typename Real>
std::vector<std::vector<Index>> eigenvalue_clusters(const ComplexVector<Real>& values, Real tol) {
  const Index n = values.size();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index(0));
  auto find = [&](Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
    return i;
  };
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (std::abs(values[i] - values[j]) <= tol) parent[static_cast<std::size_t>(find(j))] = find(i);
  std::vector<std::vector<Index>> clusters;
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    const Index r = find(i);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<Index>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].push_back(i);
  }
  return clusters;
}

}  // namespace detail

/// Eigendecomposition that never throws on conditioning; inspect `condition`.
/// Eigenvalues come out sorted by descending magnitude (ties by real, then
/// imaginary part). Eigenvectors of a cluster of coincident eigenvalues are
/// replaced by an orthonormal basis of the corresponding null space, so a
/// semisimple multiple eigenvalue keeps a well-conditioned basis.
template <typename Derived>
EigenDecomposition<typename Derived::RealScalar> decompose_unchecked(const Eigen::MatrixBase<Derived>& l) {
  using Real = typename Derived::RealScalar;
  using Mat = ComplexMatrix<Real>;
  const Mat a = l.template cast<std::complex<Real>>();
  const Index n = a.rows();
  if (a.cols() != n) throw DimensionError("eigendecomposition needs a square matrix");

  Eigen::ComplexEigenSolver<Mat> solver(a, true);
  if (solver.info() != Eigen::Success) throw DecompositionError("eigenvalue iteration did not converge");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    const Real mx = std::abs(ev[x]), my = std::abs(ev[y]);
    if (mx != my) return mx > my;
    if (ev[x].real() != ev[y].real()) return ev[x].real() > ev[y].real();
    return ev[x].imag() > ev[y].imag();
  });

  EigenDecomposition<Real> d;
  d.values.resize(n);
  d.right.resize(n, n);
  d.clustered = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  for (Index i = 0; i < n; ++i) {
    d.values[i] = ev[order[static_cast<std::size_t>(i)]];
    d.right.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }

  const Real spectral_radius = n > 0 ? d.values.cwiseAbs().maxCoeff() : Real(0);
  const Real norm = Eigen::JacobiSVD<Mat>(a).singularValues()(0);
  for (const auto& cluster : detail::eigenvalue_clusters<Real>(d.values, Real(kDegenerateRelTol) * spectral_radius)) {
    if (cluster.size() < 2) continue;
    for (Index i : cluster) d.clustered[i] = true;
    std::complex<Real> mean(0);
    for (Index i : cluster) mean += d.values[i];
    mean /= Real(cluster.size());
    Eigen::JacobiSVD<Mat> svd(a - mean * Mat::Identity(n, n), Eigen::ComputeFullV);
    const auto c = static_cast<Index>(cluster.size());
    // A Jordan block has a null space smaller than the cluster; keep the
    // solver's (nearly parallel) vectors and let the condition number report it.
    if (svd.singularValues()(n - c) > Real(kDegenerateRelTol) * norm) continue;
    for (Index t = 0; t < c; ++t) d.right.col(cluster[static_cast<std::size_t>(t)]) = svd.matrixV().col(n - c + t);
  }

  for (Index i = 0; i < n; ++i) {
    const Real nv = d.right.col(i).norm();
    if (nv > Real(0)) d.right.col(i) /= nv;
  }

  Eigen::JacobiSVD<Mat> vsvd(d.right);
  const auto& sv = vsvd.singularValues();
  const Real smin = sv(n - 1);
  if (!(smin > std::numeric_limits<Real>::epsilon() * sv(0))) {
    d.condition = std::numeric_limits<Real>::infinity();
    d.left = d.right.completeOrthogonalDecomposition().pseudoInverse();
  } else {
    d.condition = sv(0) / smin;
    d.left = d.right.partialPivLu().inverse();
  }
  return d;
}

/// Eigendecomposition for sensitivity work; throws IllConditionedError when the
/// eigenvector basis is defective or its condition exceeds `cond_limit`.
template <typename Derived>
EigenDecomposition<typename Derived::RealScalar> eigendecompose(const Eigen::MatrixBase<Derived>& l,
                                                                double cond_limit = 1e8) {
  auto d = decompose_unchecked(l);
  if (!(d.condition <= cond_limit))
    throw IllConditionedError("eigenvector basis is ill-conditioned or defective (condition " +
                                  std::to_string(static_cast<double>(d.condition)) + ")",
                              static_cast<double>(d.condition));
  return d;
}

/// Net anticlockwise turns of (locus - point), summing principal-value angle
/// increments between consecutive samples.
template <typename Real>
Real winding_number(std::span<const std::complex<Real>> locus, std::complex<Real> point) {
  if (locus.size() < 2) throw DimensionError("winding number needs at least 2 samples");
  for (const auto& z : locus)
    if (std::abs(z - point) < Real(1e-12)) throw LocusThroughPointError("locus passes through the winding point");
  Real turns(0);
  for (std::size_t k = 1; k < locus.size(); ++k) turns += std::arg((locus[k] - point) / (locus[k - 1] - point));
  return turns / Real(2 * 3.14159265358979323846);
}

}  // namespace mtdc
