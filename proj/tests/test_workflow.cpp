#include <doctest.h>

#include <fstream>
#include <numbers>

#include "mtdc/synth.hpp"
#include "mtdc/workflow.hpp"
#include "support.hpp"

using namespace mtdc;

namespace {

EigenLocusSet loci_from(const FrequencyGrid& grid, const CMatrix& values) {
  EigenLocusSet s{grid, values, {}, {}, {}};
  for (Index k = 0; k < values.rows(); ++k) {
    CMatrix l = values.row(k).asDiagonal();
    s.decompositions.push_back(decompose_unchecked(l));
  }
  return s;
}

}  // namespace

TEST_CASE("critical loci") {
  const auto grid = FrequencyGrid::log_uniform(1.0, 100.0, 201);
  const auto n = static_cast<Index>(grid.size());
  CMatrix v(n, 2);
  for (Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    v(k, 0) = Complex(0.2, 0.1);
    // Straight line crossing the real axis at -1.2 halfway through the sweep.
    v(k, 1) = Complex(-1.2, 0.6 - 1.2 * t);
  }
  const auto loci = loci_from(grid, v);
  CHECK(find_critical_loci(loci, 0.1).empty());

  const auto crit = find_critical_loci(loci, 0.5);
  REQUIRE(crit.size() == 1);
  const auto& c = crit[0];
  CHECK(c.index == 1);
  CHECK(c.min_distance == doctest::Approx(0.2));
  CHECK(c.min_distance_hz == doctest::Approx(10.0));
  REQUIRE(c.phase_crossover_hz);
  CHECK(*c.phase_crossover_hz == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(c.f_lo < 10.0);
  CHECK(c.f_hi > 10.0);
  CHECK(c.intervals.size() == 1);

  CMatrix through = v;
  through(100, 1) = Complex(-1.0, 0.0);
  const auto exact = find_critical_loci(loci_from(grid, through), 0.5);
  CHECK(exact[0].min_distance == 0.0);

  CHECK_THROWS_AS(find_critical_loci(loci, 0.0), std::invalid_argument);
}

TEST_CASE("separate sublevel intervals are kept apart") {
  const auto grid = FrequencyGrid::log_uniform(1.0, 100.0, 101);
  const auto n = static_cast<Index>(grid.size());
  CMatrix v = CMatrix::Constant(n, 1, Complex(0.5));
  v(20, 0) = Complex(-0.9);
  v(80, 0) = Complex(-0.8);
  const auto crit = find_critical_loci(loci_from(grid, v), 0.5);
  REQUIRE(crit.size() == 1);
  CHECK(crit[0].intervals == std::vector<std::pair<std::size_t, std::size_t>>{{19, 21}, {79, 81}});
  CHECK(crit[0].samples().size() == 6);
}

TEST_CASE("port ranking") {
  const auto grid = FrequencyGrid::log_uniform(1.0, 10.0, 5);
  const auto n = static_cast<Index>(grid.size());
  CMatrix v(n, 3);
  for (Index k = 0; k < n; ++k) v.row(k) << Complex(2.0), Complex(-0.9), Complex(0.5);
  const auto loci = loci_from(grid, v);
  const PortMap map({"A"});
  const auto crit = find_critical_loci(loci, 0.5);
  const auto ranks = rank_ports(participation_over_grid(loci), crit, map);
  CHECK(ranks[0].port == 1);
  CHECK(ranks[0].score == doctest::Approx(1.0));
  CHECK(ranks[1].score == 0.0);
  CHECK(ranks[1].port == 0);
  CHECK(ranks[2].port == 2);

  auto bad = participation_over_grid(loci);
  std::fill(bad.valid.begin(), bad.valid.end(), false);
  CHECK_THROWS_AS(rank_ports(bad, crit, map), EmptyRangeError);
}

TEST_CASE("ports of a dominant station rank highest") {
  // Participation concentrated on station 4's ports, as when its converter drives the mode.
  const auto grid = FrequencyGrid::log_uniform(600.0, 660.0, 7);
  const PortMap map({"S1", "S2", "S3", "S4"});
  ParticipationResponse part{grid, {}, {}};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CMatrix p = CMatrix::Constant(12, 12, Complex(0.02));
    p(0, 9) = 0.6;
    p(0, 10) = 0.9;
    p(0, 11) = 0.4;
    part.p.push_back(p);
    part.valid.push_back(true);
  }
  CriticalLocus c;
  c.index = 0;
  c.intervals = {{1, 5}};
  const std::vector<CriticalLocus> crit{c};
  const auto ranks = rank_ports(part, crit, map);
  CHECK(ranks[0].port == 10);
  CHECK(ranks[1].port == 9);
  CHECK(ranks[2].port == 11);
  CHECK(ranks[0].station == 3);
}

TEST_CASE("station ranking") {
  const Index rows = 4, loci = 2;
  auto make = [&](std::size_t station, Pole pole, double value) {
    ImpedanceSensitivity s;
    s.station = station;
    s.pole = pole;
    s.raw = CMatrix::Zero(rows, loci);
    s.normalized = CMatrix::Constant(rows, loci, Complex(value));
    s.valid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, loci, true);
    return s;
  };
  std::vector<ImpedanceSensitivity> sens{make(0, Pole::positive, 0.0), make(0, Pole::negative, 0.0),
                                         make(1, Pole::positive, 0.0), make(1, Pole::negative, 0.7),
                                         make(2, Pole::positive, 0.0), make(2, Pole::negative, 0.0)};
  CriticalLocus c;
  c.index = 1;
  c.intervals = {{0, 3}};
  const std::vector<CriticalLocus> crit{c};
  const auto r = rank_stations(sens, crit);
  CHECK(r[0].station == 1);
  CHECK(r[0].pole == Pole::negative);
  CHECK(r[0].score == doctest::Approx(0.7));

  sens[2].normalized.setConstant(Complex(0.5));
  sens[5].normalized.setConstant(Complex(0.0, 0.65));
  const auto merged = rank_stations(sens, crit, true);
  CHECK(merged.size() == 3);
  CHECK(merged[0].station == 1);
  CHECK(merged[0].score == doctest::Approx(1.2));
  CHECK_FALSE(merged[0].pole);

  for (auto& s : sens) s.valid.setConstant(false);
  CHECK_THROWS_AS(rank_stations(sens, crit), EmptyRangeError);
}

TEST_CASE("pipeline on synthetic systems") {
  const auto stable = analyze_system(sample_system(make_two_terminal(true), default_synth_grid()), {}, true);
  CHECK(stable.report.verdict.stable);
  CHECK_FALSE(stable.report.sensitivity_computed);
  CHECK(stable.report.notices.size() == 1);
  CHECK(report_to_json(stable.report).contains("port_ranking") == false);

  const auto unstable = analyze_system(sample_system(make_two_terminal(false), default_synth_grid()), {}, true);
  CHECK_FALSE(unstable.report.verdict.stable);
  CHECK(unstable.report.sensitivity_computed);
  CHECK(unstable.report.station_ranking.front().station == 1);
  CHECK(unstable.data.participation.has_value());
  const auto j = report_to_json(unstable.report);
  CHECK(j["verdict"]["stable"] == false);
  CHECK(j["station_ranking"][0]["name"] == "S2");
  CHECK(j["critical_loci"][0]["index"].get<int>() >= 1);

  const auto four = analyze_system(sample_system(make_four_terminal(4), default_synth_grid()), {}, true);
  CHECK(four.report.station_ranking.front().station == 3);
}

TEST_CASE("full analysis from a manifest") {
  test::TempDir dir("workflow");
  const auto manifest_path = write_dataset(make_two_terminal(false), default_synth_grid(), dir.path());
  const auto manifest = load_manifest(manifest_path);
  const auto a = run_full_analysis(manifest, false);
  const auto& prov = a.report.provenance;
  CHECK(prov.tool_version == std::string(kToolVersion));
  CHECK(prov.inputs.size() == 1 + 4 + 1);
  CHECK(prov.inputs[0].path == "manifest.json");
  CHECK(prov.inputs[1].path == "S1_zp.json");
  CHECK(prov.inputs[0].sha256.size() == 64);
  CHECK(prov.generated_at.size() == 20);
  CHECK(prov.options["delta"] == 0.5);

  std::filesystem::remove(dir / "S2_zn.json");
  try {
    run_full_analysis(load_manifest(manifest_path));
    FAIL("expected a load error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
  }
}

TEST_CASE("sha256") {
  test::TempDir dir("sha");
  {
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  }
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file(dir / "none"), IoError);
}
