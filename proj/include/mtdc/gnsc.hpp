#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtdc/eigen.hpp"
#include "mtdc/freqdata.hpp"

namespace mtdc {

/// current: L = Y_st Z_net (port currents); voltage: L = Z_net Y_st (port voltages).
enum class Basis { current, voltage };

inline const char* to_string(Basis b) { return b == Basis::current ? "current" : "voltage"; }

struct ReturnRatio {
  Basis basis;
  MatrixResponse l;
};

ReturnRatio return_ratio(const MatrixResponse& y_st, const MatrixResponse& z_net, Basis basis = Basis::current);

/// F = E + L.
MatrixResponse return_difference(const ReturnRatio& l);

ScalarResponse det_response(const MatrixResponse& f);

/// Eigenvalues of L tracked into continuous loci over the grid.
struct EigenLocusSet {
  FrequencyGrid grid;
  CMatrix values;  // (grid points) x (loci); column i is locus i
  std::vector<EigenDecomposition<double>> decompositions;  // per frequency, locus order
  std::vector<double> conditioning;                        // eigenvector condition per frequency
  std::vector<std::string> warnings;

  Index locus_count() const noexcept { return values.cols(); }
  std::size_t size() const noexcept { return grid.size(); }
  std::span<const Complex> locus(Index i) const {
    return {values.col(i).data(), static_cast<std::size_t>(values.rows())};
  }
};

/// Matching between decompositions at adjacent frequencies: result[i] is the
/// index in `next` that continues locus i of `prev`. Uses the bi-orthogonal
/// eigenvector overlap |w_i v_j'| |w_j' v_i| when both bases are conditioned
/// below `cond_limit`, otherwise eigenvalue distance. Greedy, best pair first.
std::vector<Index> match_loci(const EigenDecomposition<double>& prev, const EigenDecomposition<double>& next,
                              double cond_limit = 1e8);

EigenLocusSet eigenloci(const ReturnRatio& l, double cond_limit = 1e8);

struct PeakDiagnostic {
  double freq_hz = 0.0;
  double magnitude_db = 0.0;
  double prominence_db = 0.0;
  double phase_slope = 0.0;  // rad per decade, least-squares over the fit window
  int width_points = 0;      // samples within 3 dB of the peak
  double phase_change = 0.0; // net phase turn across the 3 dB band (rad)
  bool resonant = false;     // monotone phase turn of at least pi/4
  bool rhp = false;          // resonant with increasing phase: right-half-plane pole pair
};

struct RhpPoleEstimate {
  int P = 0;
  std::vector<PeakDiagnostic> peaks;
  std::vector<std::string> warnings;
};

/// Open-loop RHP-pole count from the phase trend at resonant peaks of |det F|:
/// a decreasing phase marks a stable resonance, an increasing one a RHP pair.
/// Peaks whose phase does not turn monotonically by at least pi/4 across the
/// 3 dB band are not resonances (typically a hump between notches) and count nothing.
RhpPoleEstimate count_rhp_poles(const ScalarResponse& det_f, double prominence_db = 6.0, int window = 3);

struct StabilityOptions {
  double prominence_db = 6.0;
  int phase_window = 3;
  double consistency_budget = 0.25;
};

struct StabilityVerdict {
  int P = 0;
  int N = 0;                               // net anticlockwise encirclements over the full axis
  std::vector<double> per_locus_windings;  // positive-frequency turns about -1, per locus
  std::vector<int> per_locus_encirclements;  // full-axis, rounded
  double det_winding = 0.0;                // positive-frequency turns of det F about 0
  bool stable = false;
  std::vector<PeakDiagnostic> peaks;
  std::vector<std::string> warnings;
};

/// GNSC verdict; N counts positive frequencies and doubles them (conjugate
/// symmetry). Throws ConsistencyError when a locus is far from closing or the
/// eigenloci disagree with det F by the consistency budget or more.
StabilityVerdict assess_stability(const EigenLocusSet& loci, const ScalarResponse& det_f,
                                  const StabilityOptions& options = {});

}  // namespace mtdc
