#include "mtdc/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

namespace mtdc {

using nlohmann::ordered_json;

std::vector<std::size_t> CriticalLocus::samples() const {
  std::vector<std::size_t> out;
  for (const auto& [lo, hi] : intervals)
    for (std::size_t k = lo; k <= hi; ++k) out.push_back(k);
  return out;
}

// -- Critical loci -----------------------------------------------------------------

namespace {

std::optional<Crossover> crossing(Crossover::Kind kind, double g0, double g1, std::size_t k, const FrequencyGrid& grid,
                                  Complex l0, Complex l1) {
  if (g0 == 0.0 && g1 == 0.0) return std::nullopt;
  if ((g0 > 0.0) == (g1 > 0.0) && g1 != 0.0) return std::nullopt;
  const double t = g0 / (g0 - g1);
  const Complex lambda = l0 + t * (l1 - l0);
  if (kind == Crossover::Kind::phase && !(lambda.real() < 0.0)) return std::nullopt;
  const double lf = std::log10(grid[k]) + t * (std::log10(grid[k + 1]) - std::log10(grid[k]));
  return Crossover{kind, std::pow(10.0, lf), lambda};
}

}  // namespace

std::vector<CriticalLocus> find_critical_loci(const EigenLocusSet& loci, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const std::size_t count = loci.size();
  std::vector<CriticalLocus> out;
  for (Index i = 0; i < loci.locus_count(); ++i) {
    const auto locus = loci.locus(i);
    std::vector<double> dist(count);
    for (std::size_t k = 0; k < count; ++k) dist[k] = std::abs(locus[k] + 1.0);
    const auto min_it = std::min_element(dist.begin(), dist.end());
    if (!(*min_it < delta)) continue;

    CriticalLocus c;
    c.index = i;
    c.min_distance = *min_it;
    c.min_distance_hz = loci.grid[static_cast<std::size_t>(min_it - dist.begin())];
    for (std::size_t k = 0; k < count;) {
      if (!(dist[k] < delta)) {
        ++k;
        continue;
      }
      std::size_t end = k;
      while (end + 1 < count && dist[end + 1] < delta) ++end;
      const std::size_t lo = k > 0 ? k - 1 : 0;
      const std::size_t hi = std::min(end + 1, count - 1);
      if (!c.intervals.empty() && lo <= c.intervals.back().second)
        c.intervals.back().second = hi;
      else
        c.intervals.emplace_back(lo, hi);
      k = end + 1;
    }
    c.f_lo = loci.grid[c.intervals.front().first];
    c.f_hi = loci.grid[c.intervals.back().second];

    for (const auto& [lo, hi] : c.intervals) {
      for (std::size_t k = lo; k < hi; ++k) {
        const Complex l0 = locus[k], l1 = locus[k + 1];
        if (auto x = crossing(Crossover::Kind::magnitude, std::abs(l0) - 1.0, std::abs(l1) - 1.0, k, loci.grid, l0, l1))
          c.crossovers.push_back(*x);
        if (auto x = crossing(Crossover::Kind::phase, l0.imag(), l1.imag(), k, loci.grid, l0, l1))
          c.crossovers.push_back(*x);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : c.crossovers) {
      if (x.kind != Crossover::Kind::phase) continue;
      const double d = std::abs(x.lambda + 1.0);
      if (d < best) {
        best = d;
        c.phase_crossover_hz = x.freq_hz;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

// -- Rankings ----------------------------------------------------------------------

std::vector<PortScore> rank_ports(const ParticipationResponse& participation, std::span<const CriticalLocus> critical,
                                  const PortMap& port_map) {
  const Index n = port_map.port_count();
  std::vector<PortScore> scores(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) scores[static_cast<std::size_t>(j)] = {j, port_map.station_of_port(j), 0.0, -1};
  bool any = false;
  for (const auto& c : critical) {
    for (std::size_t k : c.samples()) {
      if (k >= participation.p.size()) throw EmptyRangeError("critical range lies outside the participation grid");
      if (!participation.valid[k]) continue;
      const CMatrix& p = participation.p[k];
      if (p.cols() != n) throw DimensionError("participation matrix does not match the port map");
      any = true;
      for (Index j = 0; j < n; ++j) {
        const double v = std::abs(p(c.index, j));
        auto& s = scores[static_cast<std::size_t>(j)];
        if (v > s.score || s.locus < 0) {
          s.score = std::max(s.score, v);
          s.locus = c.index;
        }
      }
    }
  }
  if (!any) throw EmptyRangeError("no well-conditioned samples in the critical range");
  std::stable_sort(scores.begin(), scores.end(), [](const PortScore& a, const PortScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.port < b.port;
  });
  return scores;
}

std::vector<StationScore> rank_stations(std::span<const ImpedanceSensitivity> sensitivities,
                                        std::span<const CriticalLocus> critical, bool merge_poles) {
  std::vector<StationScore> scores;
  bool any = false;
  auto best_over = [&](auto&& value_at, auto&& usable) {
    double best = 0.0;
    Index locus = critical.empty() ? 0 : critical.front().index;
    for (const auto& c : critical)
      for (std::size_t k : c.samples()) {
        if (!usable(k, c.index)) continue;
        any = true;
        const double v = value_at(k, c.index);
        if (v > best) {
          best = v;
          locus = c.index;
        }
      }
    return std::pair{best, locus};
  };

  if (!merge_poles) {
    for (const auto& s : sensitivities) {
      auto [score, locus] = best_over(
          [&](std::size_t k, Index i) { return std::abs(s.normalized(static_cast<Index>(k), i)); },
          [&](std::size_t k, Index i) { return static_cast<Index>(k) < s.valid.rows() && s.valid(static_cast<Index>(k), i); });
      scores.push_back({s.station, s.pole, score, locus});
    }
  } else {
    std::vector<std::size_t> stations;
    for (const auto& s : sensitivities)
      if (std::find(stations.begin(), stations.end(), s.station) == stations.end()) stations.push_back(s.station);
    for (std::size_t m : stations) {
      std::vector<const ImpedanceSensitivity*> poles;
      for (const auto& s : sensitivities)
        if (s.station == m) poles.push_back(&s);
      auto [score, locus] = best_over(
          [&](std::size_t k, Index i) {
            double sum = 0.0;
            for (const auto* s : poles) sum += std::abs(s->normalized(static_cast<Index>(k), i));
            return sum;
          },
          [&](std::size_t k, Index i) {
            return std::all_of(poles.begin(), poles.end(), [&](const ImpedanceSensitivity* s) {
              return static_cast<Index>(k) < s->valid.rows() && s->valid(static_cast<Index>(k), i);
            });
          });
      scores.push_back({m, std::nullopt, score, locus});
    }
  }
  if (!any) throw EmptyRangeError("no usable sensitivity samples in the critical range");
  std::stable_sort(scores.begin(), scores.end(), [](const StationScore& a, const StationScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.station != b.station) return a.station < b.station;
    return a.pole.value_or(Pole::positive) < b.pole.value_or(Pole::positive);
  });
  return scores;
}

// -- Pipeline ------------------------------------------------------------------------

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void append_capped(std::vector<std::string>& out, const std::vector<std::string>& in, std::size_t cap = 5) {
  for (std::size_t k = 0; k < in.size() && k < cap; ++k) out.push_back(in[k]);
  if (in.size() > cap) out.push_back("... " + std::to_string(in.size() - cap) + " similar warning(s) omitted");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

Analysis analyze_system(const LoadedSystem& system, const AnalysisOptions& options, bool sensitivity) {
  const Basis basis = options.voltage_basis ? Basis::voltage : Basis::current;
  AnalysisReport report;
  report.station_count = system.stations.size();
  report.station_names = system.port_map.names();
  report.basis = basis;

  const auto y_st = stage("network", [&] { return assemble_station_admittance(system.stations, system.grid); });
  const auto y_net = stage("network", [&] { return assemble_network_admittance(system.cables, system.port_map, system.grid); });
  const auto inverse = stage("network", [&] { return invert_network(y_net, options.cond_limit); });
  append_capped(report.warnings, inverse.warnings);

  auto rr = stage("gnsc", [&] { return return_ratio(y_st, inverse.z_net, basis); });
  auto det_f = stage("gnsc", [&] { return det_response(return_difference(rr)); });
  auto loci = stage("gnsc", [&] { return eigenloci(rr, options.eig_cond_limit); });
  append_capped(report.warnings, loci.warnings);
  report.verdict = stage("gnsc", [&] {
    return assess_stability(loci, det_f, {options.prominence_db, options.phase_window, 0.25});
  });
  append_capped(report.warnings, report.verdict.warnings);
  report.critical_loci = stage("workflow", [&] { return find_critical_loci(loci, options.delta); });

  AnalysisData data{system.grid, std::move(det_f), std::move(loci), std::nullopt, {}};
  if (!sensitivity) return {std::move(report), std::move(data)};

  if (report.critical_loci.empty()) {
    if (report.verdict.stable)
      report.notices.push_back("no eigenlocus comes within delta of -1; sensitivity analysis is not needed");
    else
      report.notices.push_back("system is unstable but no eigenlocus comes within delta of -1; raise delta to rank ports and stations");
    return {std::move(report), std::move(data)};
  }

  stage("sensitivity", [&] {
    data.participation = participation_over_grid(data.loci, options.eig_cond_limit);
    data.sensitivities = station_sensitivities(data.loci, inverse.z_net, system.stations, system.port_map, basis,
                                               options.eig_cond_limit);
    report.port_ranking = rank_ports(*data.participation, report.critical_loci, system.port_map);
    report.station_ranking = rank_stations(data.sensitivities, report.critical_loci, options.merge_poles);
  });
  report.sensitivity_computed = true;
  return {std::move(report), std::move(data)};
}

Analysis run_full_analysis(const SystemManifest& manifest, bool sensitivity) {
  const auto system = stage("load", [&] { return load_system(manifest); });
  auto analysis = analyze_system(system, manifest.options, sensitivity);

  stage("report", [&] {
    auto& prov = analysis.report.provenance;
    const auto base = manifest.source.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
      return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
    };
    if (!manifest.source.empty())
      prov.inputs.push_back({"manifest", manifest.source.filename().generic_string(), sha256_file(manifest.source)});
    for (const auto& s : manifest.stations) {
      prov.inputs.push_back({"station " + s.name + " z_pos", rel(s.z_pos), sha256_file(s.z_pos)});
      prov.inputs.push_back({"station " + s.name + " z_neg", rel(s.z_neg), sha256_file(s.z_neg)});
    }
    for (const auto& c : manifest.cables) prov.inputs.push_back({"cable " + c.name, rel(c.y6), sha256_file(c.y6)});
    prov.options = options_to_json(manifest.options);
    prov.generated_at = utc_timestamp();
  });
  return analysis;
}

// -- JSON ----------------------------------------------------------------------------

ordered_json options_to_json(const AnalysisOptions& o) {
  ordered_json j;
  j["grid_policy"] = o.grid_policy.to_string();
  j["delta"] = o.delta;
  j["prominence_db"] = o.prominence_db;
  j["phase_window"] = o.phase_window;
  j["cond_limit"] = o.cond_limit;
  j["eig_cond_limit"] = o.eig_cond_limit;
  j["basis"] = o.voltage_basis ? "voltage" : "current";
  j["merge_poles"] = o.merge_poles;
  return j;
}

namespace {

ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

}  // namespace

ordered_json report_to_json(const AnalysisReport& r) {
  ordered_json j;
  auto& v = j["verdict"];
  v["P"] = r.verdict.P;
  v["N"] = r.verdict.N;
  v["stable"] = r.verdict.stable;
  v["det_winding"] = r.verdict.det_winding;
  v["per_locus_windings"] = r.verdict.per_locus_windings;
  v["per_locus_encirclements"] = r.verdict.per_locus_encirclements;
  v["peaks"] = ordered_json::array();
  for (const auto& p : r.verdict.peaks)
    v["peaks"].push_back({{"freq_hz", p.freq_hz},
                          {"magnitude_db", p.magnitude_db},
                          {"prominence_db", p.prominence_db},
                          {"phase_slope", p.phase_slope},
                          {"phase_trend", p.phase_slope > 0.0 ? "increasing" : "decreasing"},
                          {"width_points", p.width_points},
                          {"phase_change", p.phase_change},
                          {"resonant", p.resonant},
                          {"rhp", p.rhp}});
  j["basis"] = to_string(r.basis);
  j["stations"] = r.station_names;

  j["critical_loci"] = ordered_json::array();
  for (const auto& c : r.critical_loci) {
    ordered_json cj;
    cj["index"] = c.index + 1;
    cj["min_distance"] = c.min_distance;
    cj["min_distance_hz"] = c.min_distance_hz;
    cj["range_hz"] = {c.f_lo, c.f_hi};
    cj["crossovers"] = ordered_json::array();
    for (const auto& x : c.crossovers)
      cj["crossovers"].push_back({{"kind", x.kind == Crossover::Kind::magnitude ? "magnitude" : "phase"},
                                  {"freq_hz", x.freq_hz},
                                  {"lambda", complex_json(x.lambda)}});
    cj["phase_crossover_hz"] = c.phase_crossover_hz ? ordered_json(*c.phase_crossover_hz) : ordered_json(nullptr);
    j["critical_loci"].push_back(std::move(cj));
  }

  if (r.sensitivity_computed) {
    j["port_ranking"] = ordered_json::array();
    for (const auto& p : r.port_ranking)
      j["port_ranking"].push_back({{"port", p.port + 1},
                                   {"station", p.station + 1},
                                   {"station_name", r.station_names.at(p.station)},
                                   {"score", p.score},
                                   {"locus", p.locus + 1}});
    j["station_ranking"] = ordered_json::array();
    for (const auto& s : r.station_ranking)
      j["station_ranking"].push_back({{"station", s.station + 1},
                                      {"name", r.station_names.at(s.station)},
                                      {"pole", s.pole ? to_string(*s.pole) : "both"},
                                      {"score", s.score},
                                      {"locus", s.locus + 1}});
  }
  j["warnings"] = r.warnings;
  j["notices"] = r.notices;

  auto& p = j["provenance"];
  p["tool_version"] = r.provenance.tool_version;
  p["inputs"] = ordered_json::array();
  for (const auto& in : r.provenance.inputs)
    p["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  p["options"] = r.provenance.options.is_null() ? ordered_json::object() : r.provenance.options;
  p["generated_at"] = r.provenance.generated_at;
  return j;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream ss;
  for (unsigned int k = 0; k < len; ++k) ss << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return ss.str();
}

}  // namespace mtdc
