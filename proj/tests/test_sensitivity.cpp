#include <doctest.h>

#include "mtdc/sensitivity.hpp"
#include "mtdc/synth.hpp"
#include "support.hpp"

using namespace mtdc;

TEST_CASE("participation matrix") {
  CMatrix one = CMatrix::Constant(1, 1, Complex(0.3, 2.0));
  CHECK(participation_matrix(eigendecompose(one)).isApprox(CMatrix::Ones(1, 1)));

  CMatrix diag = CMatrix::Zero(2, 2);
  diag.diagonal() << 2.0, 3.0;
  const auto d = eigendecompose(diag);
  const CMatrix p = participation_matrix(d);
  // Each eigenvalue participates fully in the port that carries it.
  for (Index i = 0; i < 2; ++i) {
    const Index port = d.values[i] == Complex(3.0) ? 1 : 0;
    CHECK(std::abs(p(i, port) - 1.0) < 1e-15);
    CHECK(std::abs(p(i, 1 - port)) < 1e-15);
  }

  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const CMatrix l = test::random_matrix(rng, 5);
    const CMatrix pm = participation_matrix(eigendecompose(l));
    CHECK((pm.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK((pm.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("entry sensitivity matches finite differences") {
  std::mt19937_64 rng(23);
  const CMatrix l = test::random_matrix(rng, 4);
  const auto d = eigendecompose(l);
  const double h = 1e-7;
  for (Index j = 0; j < 4; ++j)
    for (Index k = 0; k < 4; ++k) {
      CMatrix lp = l;
      lp(j, k) += h;
      const auto dp = eigendecompose(lp);
      for (Index i = 0; i < 4; ++i) {
        Index best = 0;
        for (Index t = 1; t < 4; ++t)
          if (std::abs(dp.values[t] - d.values[i]) < std::abs(dp.values[best] - d.values[i])) best = t;
        const Complex fd = (dp.values[best] - d.values[i]) / h;
        CHECK(std::abs(entry_sensitivity(d, i, j, k) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  CHECK_THROWS_AS(entry_sensitivity(d, 4, 0, 0), std::out_of_range);
}

TEST_CASE("dL/dZ") {
  const PortMap map({"A", "B"});
  const CMatrix e = CMatrix::Identity(6, 6);
  const CMatrix dp = dl_dz<double>(1, Pole::positive, Complex(1.0), e, map);
  CMatrix expect = CMatrix::Zero(6, 6);
  expect.block(3, 3, 3, 3) << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  CHECK(dp.isApprox(expect));

  const CMatrix dn = dl_dz<double>(0, Pole::negative, Complex(2.0), e, map);
  expect.setZero();
  expect.block(1, 1, 2, 2) << -0.25, 0.25, 0.25, -0.25;
  CHECK(dn.isApprox(expect));

  std::mt19937_64 rng(29);
  const CMatrix z = test::random_matrix(rng, 6);
  const Complex zv(2.0, 1.0);
  const CMatrix dy = station_admittance_derivative<double>(0, Pole::positive, zv, map);
  CHECK(dl_dz<double>(0, Pole::positive, zv, z, map, Basis::current).isApprox(dy * z));
  CHECK(dl_dz<double>(0, Pole::positive, zv, z, map, Basis::voltage).isApprox(z * dy));
  CHECK_THROWS_AS(dl_dz<double>(0, Pole::positive, zv, CMatrix::Identity(3, 3), map), DimensionError);
}

TEST_CASE("impedance sensitivity quadratic form") {
  std::mt19937_64 rng(31);
  const auto d = eigendecompose(test::random_matrix(rng, 5));
  CHECK(impedance_sensitivity(d, CMatrix::Zero(5, 5), 2) == Complex(0.0));
  CMatrix unit = CMatrix::Zero(5, 5);
  unit(1, 3) = 1.0;
  CHECK(std::abs(impedance_sensitivity(d, unit, 2) - entry_sensitivity(d, 2, 1, 3)) < 1e-14);
  const CMatrix dl = test::random_matrix(rng, 5);
  for (Index i = 0; i < 5; ++i)
    CHECK(std::abs(impedance_sensitivity(d, dl, i) - impedance_sensitivity_sum(d, dl, i)) < 1e-12);
  CHECK_THROWS_AS(impedance_sensitivity(d, dl, 5), std::out_of_range);
}

TEST_CASE("normalized and control-level sensitivity") {
  CHECK(normalized_sensitivity(Complex(0.0), Complex(2.0), Complex(4.0)) == Complex(0.0));
  CHECK(normalized_sensitivity(Complex(1.0), Complex(2.0), Complex(4.0)) == Complex(0.5));
  const Complex raw(0.3, -0.7), z(5.0, 2.0), lambda(-0.9, 0.2), c(3.0, -1.0);
  CHECK(std::abs(normalized_sensitivity(raw / c, c * z, lambda) - normalized_sensitivity(raw, z, lambda)) < 1e-15);
  CHECK_THROWS_AS(normalized_sensitivity(raw, z, Complex(0.0)), ZeroEigenvalueError);

  CHECK(control_level_sensitivity(raw, Complex(1.0)) == raw);
  CHECK(control_level_sensitivity(raw, Complex(0.0)) == Complex(0.0));
}

TEST_CASE("grid-level sensitivities") {
  const auto sys = sample_system(make_two_terminal(false), FrequencyGrid::per_decade(100.0, 2000.0, 50.0));
  const auto y_st = assemble_station_admittance(sys.stations, sys.grid);
  const auto inv = invert_network(assemble_network_admittance(sys.cables, sys.port_map, sys.grid));
  const auto rr = return_ratio(y_st, inv.z_net);
  const auto loci = eigenloci(rr);

  const auto part = participation_over_grid(loci);
  CHECK(part.p.size() == sys.grid.size());

  const auto sens = station_sensitivities(loci, inv.z_net, sys.stations, sys.port_map, Basis::current);
  REQUIRE(sens.size() == 4);
  const std::size_t k = 30;
  const auto& d = loci.decompositions[k];
  const auto& s = sens[3];  // S2 negative pole
  CHECK(s.station == 1);
  CHECK(s.pole == Pole::negative);
  const CMatrix dl = station_admittance_derivative<double>(1, Pole::negative, sys.stations[1].z_neg[k], sys.port_map) *
                     inv.z_net[k];
  for (Index i = 0; i < 6; ++i) {
    CHECK(std::abs(s.raw(static_cast<Index>(k), i) - impedance_sensitivity(d, dl, i)) <
          1e-12 * std::max(1.0, std::abs(s.raw(static_cast<Index>(k), i))));
    if (s.valid(static_cast<Index>(k), i))
      CHECK(std::abs(s.normalized(static_cast<Index>(k), i) -
                     normalized_sensitivity(s.raw(static_cast<Index>(k), i), sys.stations[1].z_neg[k], d.values[i])) <
            1e-12);
  }
  // Structural zero eigenvalues never produce a normalized value.
  const double rho = d.values.cwiseAbs().maxCoeff();
  for (Index i = 0; i < 6; ++i)
    if (std::abs(d.values[i]) <= 1e-8 * rho) CHECK_FALSE(s.valid(static_cast<Index>(k), i));

  const ScalarResponse ones(sys.grid, CVector::Ones(static_cast<Index>(sys.grid.size())));
  const auto ctl = control_level_response(s, 0, ones);
  CHECK(ctl[k] == s.raw(static_cast<Index>(k), 0));
  CHECK_THROWS_AS(control_level_response(s, 6, ones), std::out_of_range);
}
