#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mtdc/freqdata.hpp"
#include "mtdc/types.hpp"

namespace mtdc {

enum class Pole { positive, negative };

inline const char* to_string(Pole p) { return p == Pole::positive ? "positive" : "negative"; }

/// Three-port admittance of one station whose positive-pole impedance sits
/// between ports 1 and 2 and whose negative-pole impedance sits between ports
/// 2 and 3. The result is symmetric, has zero row sums and rank 2.
template <typename Real>
Eigen::Matrix<std::complex<Real>, 3, 3> station_block(std::complex<Real> zp, std::complex<Real> zn) {
  if (std::abs(zp) < Real(kZeroImpedance) || std::abs(zn) < Real(kZeroImpedance))
    throw ZeroImpedanceError("station pole impedance is zero");
  const std::complex<Real> yp = Real(1) / zp;
  const std::complex<Real> yn = Real(1) / zn;
  const std::complex<Real> o(0);
  Eigen::Matrix<std::complex<Real>, 3, 3> y;
  y << yp, -yp, o,
      -yp, yp + yn, -yn,
       o, -yn, yn;
  return y;
}

/// d(station_block)/dZ for one pole, evaluated at impedance `z`.
template <typename Real>
Eigen::Matrix<std::complex<Real>, 3, 3> station_block_derivative(Pole pole, std::complex<Real> z) {
  if (std::abs(z) < Real(kZeroImpedance)) throw ZeroImpedanceError("station pole impedance is zero");
  const std::complex<Real> g = -Real(1) / (z * z);
  const std::complex<Real> o(0);
  Eigen::Matrix<std::complex<Real>, 3, 3> d;
  if (pole == Pole::positive)
    d << g, -g, o,
        -g, g, o,
         o, o, o;
  else
    d << o, o, o,
         o, g, -g,
         o, -g, g;
  return d;
}

/// Station m (0-based) owns global ports 3m, 3m+1, 3m+2 (0-based); reports use
/// the 1-based labels 3m+1..3m+3.
class PortMap {
 public:
  explicit PortMap(std::vector<std::string> station_names);

  std::size_t station_count() const noexcept { return names_.size(); }
  Index port_count() const noexcept { return static_cast<Index>(3 * names_.size()); }
  Index first_port(std::size_t station) const { return static_cast<Index>(3 * station); }
  std::array<Index, 3> ports(std::size_t station) const;
  std::size_t station_of_port(Index port) const { return static_cast<std::size_t>(port / 3); }
  std::size_t index_of(const std::string& name) const;
  const std::string& name(std::size_t station) const { return names_.at(station); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> lookup_;
};

struct StationModel {
  std::string name;
  ScalarResponse z_pos;  // ohm
  ScalarResponse z_neg;  // ohm
};

/// Cable ports 1-3 attach to `from` (positive, middle, negative); 4-6 to `to`.
struct CableModel {
  std::string name;
  std::string from;
  std::string to;
  MatrixResponse y6;  // siemens
};

/// Analysis settings carried by a manifest; CLI flags override them.
struct AnalysisOptions {
  GridPolicy grid_policy;
  double delta = 0.5;              // criticality threshold on |lambda + 1|
  double prominence_db = 6.0;      // resonant-peak prominence for the RHP-pole test
  int phase_window = 3;            // +/- points for the phase-slope fit
  double cond_limit = 1e12;        // Y_net conditioning warning threshold
  double eig_cond_limit = 1e8;     // eigenvector basis limit for sensitivities/tracking
  bool voltage_basis = false;      // L = Z_net Y_st instead of Y_st Z_net
  bool merge_poles = false;        // station score = |S_pos| + |S_neg|
};

struct StationEntry {
  std::string name;
  std::filesystem::path z_pos;
  std::filesystem::path z_neg;
};

struct CableEntry {
  std::string name;
  std::string from;
  std::string to;
  std::filesystem::path y6;
};

/// Parsed manifest; data paths are resolved against the manifest directory.
struct SystemManifest {
  std::filesystem::path source;
  std::vector<StationEntry> stations;
  std::vector<CableEntry> cables;
  AnalysisOptions options;
};

SystemManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
SystemManifest load_manifest(const std::filesystem::path& path);

/// Station and cable data resampled onto one analysis grid.
struct LoadedSystem {
  FrequencyGrid grid;
  std::vector<StationModel> stations;
  std::vector<CableModel> cables;
  PortMap port_map;
};

LoadedSystem load_system(const SystemManifest& manifest);
LoadedSystem align_system(std::vector<StationModel> stations, std::vector<CableModel> cables,
                          const GridPolicy& policy = {});

/// Block-diagonal Y_st (3N x 3N).
MatrixResponse assemble_station_admittance(std::span<const StationModel> stations,
                                           const FrequencyGrid& grid);

/// Nodal stamping of each 6x6 cable admittance into a 3N x 3N Y_net.
MatrixResponse assemble_network_admittance(std::span<const CableModel> cables,
                                           const PortMap& port_map, const FrequencyGrid& grid);

struct NetworkInverse {
  MatrixResponse z_net;
  std::vector<double> condition;  // per-frequency condition estimate of Y_net
  std::vector<std::string> warnings;
};

NetworkInverse invert_network(const MatrixResponse& y_net, double cond_limit = 1e12);

}  // namespace mtdc
