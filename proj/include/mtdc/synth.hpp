#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtdc/freqdata.hpp"
#include "mtdc/network.hpp"

namespace mtdc {

/// Real polynomial with ascending coefficients: c[0] + c[1] s + ...
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> ascending);

  std::span<const double> coefficients() const noexcept { return c_; }
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const noexcept { return c_.empty(); }

  template <typename T>
  T operator()(T s) const {
    T acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + T(*it);
    return acc;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double k, const Polynomial& a);

 private:
  std::vector<double> c_;  // trailing zeros trimmed
};

inline constexpr int kMaxRationalDegree = 6;

/// Z(s) = num(s) / den(s).
struct RationalImpedance {
  RationalImpedance(std::string name, Polynomial num, Polynomial den);

  std::string name;
  Polynomial num;
  Polynomial den;

  Complex operator()(Complex s) const { return num(s) / den(s); }
};

/// sL + R0 - Rn b s / (s^2 + b s + w0^2): a series R-L pole impedance whose
/// resistance dips by Rn in a band of width b (rad/s) around w0 (rad/s).
struct StationParameters {
  double inductance = 25e-3;
  double resistance = 100.0;
  double negative_resistance = 0.0;
  double bandwidth = 2.0 * 3.14159265358979323846 * 200.0;
  double center = 2.0 * 3.14159265358979323846 * 630.0;

  RationalImpedance impedance(const std::string& name = "station") const;
  /// dZ/d(negative_resistance), for control-level checks.
  RationalImpedance negative_resistance_derivative() const;
};

/// Per-conductor lumped line of k cascaded pi-sections. Conductors are
/// positive, middle, negative; a missing conductor contributes nothing.
struct LumpedCable {
  double resistance = 20.0;     // ohm, whole length
  double inductance = 100e-3;   // H
  double capacitance = 20e-6;   // F
  double conductance = 0.0;     // S, shunt
  int sections = 2;
  std::array<bool, 3> conductors{true, true, true};

  void validate() const;
  /// 6x6 terminal admittance at complex frequency s (ports 1-3 at the sending end).
  CMatrix admittance(Complex s) const;
};

/// Linear circuit in descriptor form E x' = A x. Unknowns are node voltages,
/// inductor currents and, per rational branch, its current and the internal
/// states xi_0..xi_d of D(s) xi = i, v = N(s) xi.
class DescriptorCircuit {
 public:
  static constexpr Index ground = -1;

  Index add_node();
  Index node_count() const noexcept { return nodes_; }

  void add_shunt(Index node, double capacitance, double conductance = 0.0);
  void add_series_rl(Index a, Index b, double resistance, double inductance);
  void add_impedance(Index a, Index b, const RationalImpedance& z);

  Index state_count() const;
  /// Assembled (E, A).
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pencil() const;

 private:
  struct Shunt {
    Index node;
    double c, g;
  };
  struct SeriesRl {
    Index a, b;
    double r, l;
  };
  struct Branch {
    Index a, b;
    Polynomial num, den;
  };
  Index nodes_ = 0;
  std::vector<Shunt> shunts_;
  std::vector<SeriesRl> rls_;
  std::vector<Branch> branches_;
};

/// Finite generalized eigenvalues of (A, E) below `max_magnitude` rad/s.
std::vector<Complex> generalized_poles(const Eigen::MatrixXd& e, const Eigen::MatrixXd& a,
                                       double max_magnitude = 1e8);

struct SyntheticStation {
  std::string name;
  RationalImpedance z_pos;
  RationalImpedance z_neg;
};

struct SyntheticCable {
  std::string name;
  std::size_t from;
  std::size_t to;
  LumpedCable model;
};

struct SyntheticSystem {
  std::vector<SyntheticStation> stations;
  std::vector<SyntheticCable> cables;

  /// Stations attached across the cable terminals; station m owns nodes 3m..3m+2.
  DescriptorCircuit descriptor() const;
};

std::vector<Complex> closed_loop_poles(const SyntheticSystem& sys);

/// True when some pole has Re p > tol max(1, |p|).
bool has_rhp_pole(std::span<const Complex> poles, double tol = 1e-9);

/// Upper-half-plane pole with the largest real part.
Complex dominant_pole(std::span<const Complex> poles);

/// Station and cable responses of `sys` evaluated on `grid`, ready for assembly.
LoadedSystem sample_system(const SyntheticSystem& sys, const FrequencyGrid& grid);

/// Writes <station>_zp.json, <station>_zn.json, <cable>_y6.json and
/// manifest.json into `dir` and returns the manifest path.
std::filesystem::path write_dataset(const SyntheticSystem& sys, const FrequencyGrid& grid,
                                    const std::filesystem::path& dir);

StationParameters stable_station();
StationParameters unstable_station();
LumpedCable default_cable();

SyntheticSystem make_two_terminal(bool stable);
/// Four stations in a string joined by three identical cables; station
/// `destabilizer` (1-based) gets the unstable parameters.
SyntheticSystem make_four_terminal(std::optional<int> destabilizer = std::nullopt);
/// 0.01 Hz to 100 kHz, 400 points per decade.
FrequencyGrid default_synth_grid();

}  // namespace mtdc
