#include <doctest.h>

#include <numbers>

#include "mtdc/gnsc.hpp"
#include "mtdc/synth.hpp"
#include "mtdc/workflow.hpp"
#include "support.hpp"

using namespace mtdc;

namespace {

const FrequencyGrid kGrid({1.0, 2.0, 4.0});

// |det| response of (s^2 + 2 zz wz s + wz^2) / (s^2 - 2 sigma s + sigma^2 + w0^2).
ScalarResponse resonant_det(double f0_hz, double sigma, const FrequencyGrid& grid) {
  const double w0 = 2.0 * std::numbers::pi * f0_hz;
  const double wz = 2.0 * std::numbers::pi * 3.0 * f0_hz;
  CVector v(static_cast<Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Complex s(0.0, 2.0 * std::numbers::pi * grid[k]);
    v[static_cast<Index>(k)] = (s * s + 1.4 * wz * s + wz * wz) / (s * s - 2.0 * sigma * s + sigma * sigma + w0 * w0);
  }
  return ScalarResponse(grid, std::move(v));
}

EigenLocusSet manual_loci(const FrequencyGrid& grid, const CMatrix& values) {
  return {grid, values, {}, {}, {}};
}

ScalarResponse det_of(const EigenLocusSet& loci) {
  CVector d = CVector::Ones(loci.values.rows());
  for (Index i = 0; i < loci.values.cols(); ++i) d = d.cwiseProduct((loci.values.col(i).array() + 1.0).matrix());
  return ScalarResponse(loci.grid, d);
}

}  // namespace

TEST_CASE("return ratio") {
  const auto e = test::constant_response(kGrid, CMatrix::Identity(3, 3));
  CHECK(return_ratio(e, e).l[1].isApprox(CMatrix::Identity(3, 3)));
  CHECK_THROWS_AS(return_ratio(e, test::constant_response(kGrid, CMatrix::Identity(2, 2))), DimensionError);

  std::mt19937_64 rng(1);
  const CMatrix y = test::random_matrix(rng, 6), z = test::random_matrix(rng, 6);
  const auto a = return_ratio(test::constant_response(kGrid, y), test::constant_response(kGrid, z), Basis::current);
  const auto b = return_ratio(test::constant_response(kGrid, y), test::constant_response(kGrid, z), Basis::voltage);
  CHECK(a.l[0].isApprox(y * z));
  CHECK(b.l[0].isApprox(z * y));
  CHECK(b.basis == Basis::voltage);
}

TEST_CASE("return difference and determinant") {
  const auto zero = ReturnRatio{Basis::current, test::constant_response(kGrid, CMatrix::Zero(3, 3))};
  CHECK(return_difference(zero)[0].isApprox(CMatrix::Identity(3, 3)));
  const auto minus = ReturnRatio{Basis::current, test::constant_response(kGrid, -CMatrix::Identity(3, 3))};
  CHECK(return_difference(minus)[2].isZero(0.0));

  CHECK(det_response(test::constant_response(kGrid, CMatrix::Identity(4, 4)))[1] == Complex(1.0));
  CMatrix f = CMatrix::Zero(2, 2);
  f.diagonal() << 2.0, 3.0;
  CHECK(std::abs(det_response(test::constant_response(kGrid, f))[0] - 6.0) < 1e-14);
}

TEST_CASE("eigenloci of simple ratios") {
  CMatrix l = CMatrix::Zero(2, 2);
  l.diagonal() << Complex(2.0), Complex(0.0, 3.0);
  const auto loci = eigenloci({Basis::current, test::constant_response(kGrid, l)});
  CHECK(loci.locus_count() == 2);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    CHECK(loci.locus(0)[k] == Complex(0.0, 3.0));
    CHECK(loci.locus(1)[k] == Complex(2.0));
  }

  std::vector<CMatrix> scalar;
  for (int k = 0; k < 3; ++k) scalar.push_back(CMatrix::Constant(1, 1, Complex(k, -k)));
  const auto one = eigenloci({Basis::current, MatrixResponse(kGrid, scalar)});
  for (int k = 0; k < 3; ++k) CHECK(one.locus(0)[static_cast<std::size_t>(k)] == Complex(k, -k));
}

TEST_CASE("tracking follows crossing eigenvalues") {
  // Eigenvalues swap magnitude order halfway; each locus keeps its eigenvector.
  const auto grid = FrequencyGrid::log_uniform(1.0, 10.0, 21);
  std::vector<CMatrix> ls;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = static_cast<double>(k) / 20.0;
    CMatrix l = CMatrix::Zero(2, 2);
    l(0, 0) = 1.0 + t;
    l(1, 1) = 2.0 - t;
    ls.push_back(l);
  }
  const auto loci = eigenloci({Basis::current, MatrixResponse(grid, ls)});
  const auto first = loci.locus(0);
  CHECK(first.front() == Complex(2.0));
  CHECK(first.back() == Complex(1.0));
}

TEST_CASE("tracked loci match per-frequency eigenvalues on the four-terminal system") {
  const auto sys = sample_system(make_four_terminal(4), FrequencyGrid::per_decade(10.0, 3000.0, 100.0));
  const auto y_st = assemble_station_admittance(sys.stations, sys.grid);
  const auto inv = invert_network(assemble_network_admittance(sys.cables, sys.port_map, sys.grid));
  const auto rr = return_ratio(y_st, inv.z_net);
  const auto loci = eigenloci(rr);
  CHECK(loci.locus_count() == 12);
  for (std::size_t k = 0; k < sys.grid.size(); k += 7) {
    Eigen::ComplexEigenSolver<CMatrix> es(rr.l[k], false);
    std::vector<Complex> direct(es.eigenvalues().begin(), es.eigenvalues().end());
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    for (Index i = 0; i < 12; ++i) {
      const Complex tracked = loci.values(static_cast<Index>(k), i);
      auto it = std::min_element(direct.begin(), direct.end(),
                                 [&](Complex a, Complex b) { return std::abs(a - tracked) < std::abs(b - tracked); });
      CHECK(std::abs(*it - tracked) < 1e-9 * scale);
      direct.erase(it);
    }
  }
}

TEST_CASE("RHP pole heuristic") {
  const auto grid = FrequencyGrid::per_decade(1.0, 1e4, 200.0);
  const auto rhp = count_rhp_poles(resonant_det(100.0, 0.02 * 2.0 * std::numbers::pi * 100.0, grid));
  CHECK(rhp.P == 2);
  REQUIRE(rhp.peaks.size() == 1);
  CHECK(rhp.peaks[0].phase_slope > 0.0);
  CHECK(rhp.peaks[0].freq_hz == doctest::Approx(100.0).epsilon(0.01));

  const auto lhp = count_rhp_poles(resonant_det(100.0, -0.02 * 2.0 * std::numbers::pi * 100.0, grid));
  CHECK(lhp.P == 0);
  REQUIRE(lhp.peaks.size() == 1);
  CHECK(lhp.peaks[0].phase_slope < 0.0);
  CHECK(lhp.peaks[0].resonant);

  const ScalarResponse flat(grid, CVector::Constant(static_cast<Index>(grid.size()), Complex(2.0, 1.0)));
  CHECK(count_rhp_poles(flat).P == 0);
  CHECK(count_rhp_poles(flat).peaks.empty());

  const auto coarse = FrequencyGrid::per_decade(1.0, 1e4, 20.0);
  const auto sharp = count_rhp_poles(resonant_det(100.0, 0.005 * 2.0 * std::numbers::pi * 100.0, coarse));
  CHECK_FALSE(sharp.warnings.empty());

  CHECK_THROWS_AS(count_rhp_poles(flat, 0.0), std::invalid_argument);
}

TEST_CASE("stable two-terminal fixture has no RHP poles") {
  const auto sys = sample_system(make_two_terminal(true), default_synth_grid());
  const auto a = analyze_system(sys, AnalysisOptions{}, false);
  CHECK(a.report.verdict.P == 0);
  for (const auto& p : a.report.verdict.peaks)
    if (p.resonant) CHECK(p.phase_slope < 0.0);
}

TEST_CASE("verdicts from constructed loci") {
  const auto grid = FrequencyGrid::log_uniform(1.0, 100.0, 801);
  const auto n = static_cast<Index>(grid.size());

  CMatrix far(n, 2);
  for (Index k = 0; k < n; ++k) {
    far(k, 0) = 0.3 * std::polar(1.0, -3.0 * static_cast<double>(k) / static_cast<double>(n));
    far(k, 1) = Complex(0.1, 0.0);
  }
  auto loci = manual_loci(grid, far);
  auto v = assess_stability(loci, det_of(loci));
  CHECK(v.P == 0);
  CHECK(v.N == 0);
  CHECK(v.stable);

  // Two loci each circling -1 clockwise once over positive frequencies.
  CMatrix circling(n, 2);
  for (Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    circling(k, 0) = -1.0 + 0.5 * std::polar(1.0, -2.0 * std::numbers::pi * t + 0.3);
    circling(k, 1) = -1.0 + 0.8 * std::polar(1.0, -2.0 * std::numbers::pi * t + 1.1);
  }
  loci = manual_loci(grid, circling);
  v = assess_stability(loci, det_of(loci));
  CHECK(v.per_locus_windings[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(v.per_locus_encirclements == std::vector<int>{-2, -2});
  CHECK(v.N == -4);
  CHECK(v.P == 0);
  CHECK_FALSE(v.stable);
}

TEST_CASE("consistency checks") {
  const auto grid = FrequencyGrid::log_uniform(1.0, 100.0, 401);
  const auto n = static_cast<Index>(grid.size());
  CMatrix quarter(n, 1);
  for (Index k = 0; k < n; ++k)
    quarter(k, 0) = -1.0 + std::polar(1.0, std::numbers::pi / 2.0 * static_cast<double>(k) / static_cast<double>(n - 1));
  auto loci = manual_loci(grid, quarter);
  CHECK_THROWS_AS(assess_stability(loci, det_of(loci)), ConsistencyError);

  CMatrix half(n, 1);
  for (Index k = 0; k < n; ++k)
    half(k, 0) = -1.0 + std::polar(1.0, -std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1));
  loci = manual_loci(grid, half);
  const ScalarResponse unrelated(grid, CVector::Constant(n, Complex(2.0)));
  CHECK_THROWS_AS(assess_stability(loci, unrelated), ConsistencyError);
  CHECK(assess_stability(loci, det_of(loci)).N == -1);
}

TEST_CASE("unstable two-terminal fixture verdict matches the pole oracle") {
  const auto sys = make_two_terminal(false);
  CHECK(has_rhp_pole(closed_loop_poles(sys)));
  const auto a = analyze_system(sample_system(sys, default_synth_grid()), AnalysisOptions{}, false);
  CHECK_FALSE(a.report.verdict.stable);
}

TEST_CASE("shoulder of a near-axis closed-loop notch is not taken for an RHP pole") {
  // Stable system whose closed-loop pair sits 0.97 1/s left of the axis near 583 Hz.
  auto sys = make_two_terminal(true);
  StationParameters p;
  p.inductance = 0.019050315638215135;
  p.resistance = 45.895429850110951;
  p.negative_resistance = 58.176791717735469;
  p.bandwidth = 288.50683688528233;
  p.center = 3610.0591183659726;
  sys.stations[1].z_pos = p.impedance("S2p");
  sys.stations[1].z_neg = p.impedance("S2n");
  sys.cables[0].model.resistance = 22.771274640415889;
  sys.cables[0].model.inductance = 0.095638627323604758;
  REQUIRE_FALSE(has_rhp_pole(closed_loop_poles(sys)));

  const auto a = analyze_system(sample_system(sys, default_synth_grid()), AnalysisOptions{}, false);
  CHECK(a.report.verdict.stable);
  CHECK(a.report.verdict.P == 0);
  bool shoulder = false;
  for (const auto& peak : a.report.verdict.peaks)
    if (peak.freq_hz > 600.0 && peak.freq_hz < 640.0) {
      shoulder = true;
      CHECK(peak.phase_slope > 0.0);
      CHECK_FALSE(peak.resonant);
    }
  CHECK(shoulder);
}
