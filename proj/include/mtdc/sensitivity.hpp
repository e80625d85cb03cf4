#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mtdc/eigen.hpp"
#include "mtdc/gnsc.hpp"
#include "mtdc/network.hpp"

namespace mtdc {

/// d(lambda_i)/d(l_jk) = w_ij v_ki.
template <typename Real>
std::complex<Real> entry_sensitivity(const EigenDecomposition<Real>& d, Index i, Index j, Index k) {
  const Index n = d.size();
  if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
    throw std::out_of_range("entry_sensitivity index out of range");
  return d.left(i, j) * d.right(k, i);
}

/// p_ij = w_ij v_ji; rows index eigenvalues, columns index ports.
template <typename Real>
ComplexMatrix<Real> participation_matrix(const EigenDecomposition<Real>& d) {
  return d.left.cwiseProduct(d.right.transpose());
}

/// dY_st/dZ for one station pole, embedded in the full port space.
template <typename Real>
ComplexMatrix<Real> station_admittance_derivative(std::size_t station, Pole pole, std::complex<Real> z,
                                                  const PortMap& port_map) {
  const Index n = port_map.port_count();
  ComplexMatrix<Real> dy = ComplexMatrix<Real>::Zero(n, n);
  const Index p = port_map.ports(station)[0];
  dy.template block<3, 3>(p, p) = station_block_derivative<Real>(pole, z);
  return dy;
}

/// dL/dZ for one station pole: dY_st/dZ Z_net (current basis) or Z_net dY_st/dZ.
template <typename Real, typename Derived>
ComplexMatrix<Real> dl_dz(std::size_t station, Pole pole, std::complex<Real> z, const Eigen::MatrixBase<Derived>& z_net,
                          const PortMap& port_map, Basis basis = Basis::current) {
  if (z_net.rows() != port_map.port_count() || z_net.cols() != port_map.port_count())
    throw DimensionError("Z_net does not match the port map");
  const Index p = port_map.ports(station)[0];
  const Index n = port_map.port_count();
  const auto block = station_block_derivative<Real>(pole, z);
  // Only three rows (or columns) of the product are nonzero.
  ComplexMatrix<Real> out = ComplexMatrix<Real>::Zero(n, n);
  if (basis == Basis::current)
    out.middleRows(p, 3).noalias() = block * z_net.middleRows(p, 3);
  else
    out.middleCols(p, 3).noalias() = z_net.middleCols(p, 3) * block;
  return out;
}

/// d(lambda_i)/dZ as the quadratic form (row i of W) dL/dZ (column i of V).
template <typename Real, typename Derived>
std::complex<Real> impedance_sensitivity(const EigenDecomposition<Real>& d, const Eigen::MatrixBase<Derived>& dldz,
                                         Index i) {
  if (i < 0 || i >= d.size()) throw std::out_of_range("locus index out of range");
  return (d.left.row(i) * dldz * d.right.col(i))(0, 0);
}

/// The same quantity as the explicit chain-rule sum over entry sensitivities.
template <typename Real, typename Derived>
std::complex<Real> impedance_sensitivity_sum(const EigenDecomposition<Real>& d,
                                             const Eigen::MatrixBase<Derived>& dldz, Index i) {
  std::complex<Real> acc(0);
  for (Index j = 0; j < d.size(); ++j)
    for (Index k = 0; k < d.size(); ++k) acc += entry_sensitivity(d, i, j, k) * dldz(j, k);
  return acc;
}

/// (Z / lambda) d(lambda)/dZ.
template <typename Real>
std::complex<Real> normalized_sensitivity(std::complex<Real> raw, std::complex<Real> z, std::complex<Real> lambda) {
  if (lambda == std::complex<Real>(0)) throw ZeroEigenvalueError("normalized sensitivity undefined for a zero eigenvalue");
  return z / lambda * raw;
}

/// d(lambda)/dp = d(lambda)/dZ dZ/dp.
template <typename Real>
std::complex<Real> control_level_sensitivity(std::complex<Real> eig_sens, std::complex<Real> dz_dp) {
  return eig_sens * dz_dp;
}

// -- Grid-level -----------------------------------------------------------------

/// Per-frequency participation matrices; `valid[k]` is false where the
/// eigenvector basis exceeds the conditioning limit.
struct ParticipationResponse {
  FrequencyGrid grid;
  std::vector<CMatrix> p;
  std::vector<bool> valid;
};

ParticipationResponse participation_over_grid(const EigenLocusSet& loci, double cond_limit = 1e8);

/// d(lambda_i)/dZ for one station pole across the grid.
struct ImpedanceSensitivity {
  std::size_t station = 0;
  Pole pole = Pole::positive;
  CMatrix raw;         // (grid points) x (loci)
  CMatrix normalized;  // (grid points) x (loci)
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;  // well-conditioned, non-clustered, nonzero lambda
};

/// Sensitivities of every locus to every station pole impedance.
std::vector<ImpedanceSensitivity> station_sensitivities(const EigenLocusSet& loci, const MatrixResponse& z_net,
                                                        std::span<const StationModel> stations,
                                                        const PortMap& port_map, Basis basis,
                                                        double cond_limit = 1e8);

/// d(lambda_i)/dp over the grid from a station sensitivity and a dZ/dp response.
ScalarResponse control_level_response(const ImpedanceSensitivity& sens, Index locus, const ScalarResponse& dz_dp);

}  // namespace mtdc
