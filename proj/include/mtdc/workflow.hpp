#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdc/gnsc.hpp"
#include "mtdc/network.hpp"
#include "mtdc/sensitivity.hpp"

namespace mtdc {

inline constexpr const char* kToolVersion = "0.1.0";

struct Crossover {
  enum class Kind { magnitude, phase };  // |lambda| = 1, or arg lambda = +-180 deg
  Kind kind;
  double freq_hz;
  Complex lambda;  // interpolated value at the crossing
};

struct CriticalLocus {
  Index index = 0;  // 0-based locus
  double min_distance = 0.0;
  double min_distance_hz = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> intervals;  // inclusive grid-index ranges
  std::vector<Crossover> crossovers;
  std::optional<double> phase_crossover_hz;  // the phase crossover nearest to -1

  std::vector<std::size_t> samples() const;
};

/// Loci whose distance to -1 drops below `delta`. The critical range is the
/// union of the sublevel intervals, each padded by one sample.
std::vector<CriticalLocus> find_critical_loci(const EigenLocusSet& loci, double delta = 0.5);

struct PortScore {
  Index port = 0;  // 0-based
  std::size_t station = 0;
  double score = 0.0;
  Index locus = 0;
};

struct StationScore {
  std::size_t station = 0;
  std::optional<Pole> pole;  // empty when pole contributions are merged
  double score = 0.0;
  Index locus = 0;
};

/// Ports by descending max |p_ij| over the critical ranges; ties go to the lower port.
std::vector<PortScore> rank_ports(const ParticipationResponse& participation, std::span<const CriticalLocus> critical,
                                  const PortMap& port_map);

/// Station poles by descending max |normalized sensitivity| over the critical
/// ranges. With `merge_poles` a station scores max over frequency of
/// |S_pos| + |S_neg|.
std::vector<StationScore> rank_stations(std::span<const ImpedanceSensitivity> sensitivities,
                                        std::span<const CriticalLocus> critical, bool merge_poles = false);

struct InputDigest {
  std::string role;
  std::string path;  // relative to the manifest directory
  std::string sha256;
};

struct Provenance {
  std::string tool_version = kToolVersion;
  std::vector<InputDigest> inputs;
  nlohmann::ordered_json options;
  std::string generated_at;
};

struct AnalysisReport {
  std::size_t station_count = 0;
  std::vector<std::string> station_names;
  Basis basis = Basis::current;
  StabilityVerdict verdict;
  std::vector<CriticalLocus> critical_loci;
  bool sensitivity_computed = false;
  std::vector<PortScore> port_ranking;
  std::vector<StationScore> station_ranking;
  std::vector<std::string> warnings;
  std::vector<std::string> notices;
  Provenance provenance;
};

/// Intermediate responses kept for plotting and inspection.
struct AnalysisData {
  FrequencyGrid grid;
  ScalarResponse det_f;
  EigenLocusSet loci;
  std::optional<ParticipationResponse> participation;
  std::vector<ImpedanceSensitivity> sensitivities;
};

struct Analysis {
  AnalysisReport report;
  AnalysisData data;
};

/// Pipeline on an aligned system. Sensitivities run only when `sensitivity`
/// is set and the system is unstable or has critical loci.
Analysis analyze_system(const LoadedSystem& system, const AnalysisOptions& options, bool sensitivity = true);

/// Loads the manifest data, runs the pipeline and records provenance. Errors
/// escape as StageError tagged with the failing stage.
Analysis run_full_analysis(const SystemManifest& manifest, bool sensitivity = true);

nlohmann::ordered_json options_to_json(const AnalysisOptions& options);
nlohmann::ordered_json report_to_json(const AnalysisReport& report);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace mtdc
