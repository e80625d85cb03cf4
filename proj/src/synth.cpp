#include "mtdc/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mtdc {

// -- Polynomial -------------------------------------------------------------------

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
  for (double v : c_)
    if (!std::isfinite(v)) throw std::invalid_argument("polynomial coefficients must be finite");
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
  for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
  for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
  return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
  return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& a) {
  std::vector<double> c(a.c_);
  for (double& v : c) v *= k;
  return Polynomial(std::move(c));
}

RationalImpedance::RationalImpedance(std::string name_, Polynomial num_, Polynomial den_)
    : name(std::move(name_)), num(std::move(num_)), den(std::move(den_)) {
  if (den.is_zero()) throw std::invalid_argument("impedance '" + name + "' has a zero denominator");
  if (num.degree() > kMaxRationalDegree || den.degree() > kMaxRationalDegree)
    throw std::invalid_argument("impedance '" + name + "' exceeds degree " + std::to_string(kMaxRationalDegree));
}

RationalImpedance StationParameters::impedance(const std::string& name) const {
  const Polynomial series({resistance, inductance});
  const Polynomial den({center * center, bandwidth, 1.0});
  const Polynomial dip({0.0, -negative_resistance * bandwidth});
  return {name, series * den + dip, den};
}

RationalImpedance StationParameters::negative_resistance_derivative() const {
  return {"dZ/dRn", Polynomial({0.0, -bandwidth}), Polynomial({center * center, bandwidth, 1.0})};
}

// -- Cable ------------------------------------------------------------------------

void LumpedCable::validate() const {
  if (!(resistance >= 0.0) || !(inductance > 0.0) || !(capacitance > 0.0) || !(conductance >= 0.0) || sections < 1)
    throw std::invalid_argument("cable needs R >= 0, L > 0, C > 0, G >= 0 and at least one section");
}

CMatrix LumpedCable::admittance(Complex s) const {
  validate();
  const auto k = static_cast<Index>(sections);
  const Complex y_series = 1.0 / ((resistance + s * inductance) / static_cast<double>(k));
  const Complex y_half = (conductance + s * capacitance) / static_cast<double>(2 * k);

  CMatrix chain = CMatrix::Zero(k + 1, k + 1);
  for (Index t = 0; t < k; ++t) {
    chain(t, t) += y_series + y_half;
    chain(t + 1, t + 1) += y_series + y_half;
    chain(t, t + 1) -= y_series;
    chain(t + 1, t) -= y_series;
  }
  // Kron reduction onto the two terminals.
  CMatrix ends(2, 2);
  ends << chain(0, 0), chain(0, k), chain(k, 0), chain(k, k);
  if (k > 1) {
    const CMatrix inner = chain.block(1, 1, k - 1, k - 1);
    CMatrix cross(2, k - 1);
    cross.row(0) = chain.block(0, 1, 1, k - 1);
    cross.row(1) = chain.block(k, 1, 1, k - 1);
    ends -= cross * inner.partialPivLu().solve(cross.transpose());
  }

  CMatrix y = CMatrix::Zero(6, 6);
  for (Index c = 0; c < 3; ++c) {
    if (!conductors[static_cast<std::size_t>(c)]) continue;
    y(c, c) = ends(0, 0);
    y(c, c + 3) = ends(0, 1);
    y(c + 3, c) = ends(1, 0);
    y(c + 3, c + 3) = ends(1, 1);
  }
  return y;
}

// -- Descriptor circuit ---------------------------------------------------------------

Index DescriptorCircuit::add_node() { return nodes_++; }

namespace {

void check_node(Index node, Index count) {
  if (node != DescriptorCircuit::ground && (node < 0 || node >= count))
    throw std::out_of_range("circuit node out of range");
}

}  // namespace

void DescriptorCircuit::add_shunt(Index node, double capacitance, double conductance) {
  check_node(node, nodes_);
  if (node == ground) return;
  shunts_.push_back({node, capacitance, conductance});
}

void DescriptorCircuit::add_series_rl(Index a, Index b, double resistance, double inductance) {
  check_node(a, nodes_);
  check_node(b, nodes_);
  if (!(inductance > 0.0)) throw std::invalid_argument("series branch needs a positive inductance");
  rls_.push_back({a, b, resistance, inductance});
}

void DescriptorCircuit::add_impedance(Index a, Index b, const RationalImpedance& z) {
  check_node(a, nodes_);
  check_node(b, nodes_);
  if (z.num.is_zero()) throw ZeroImpedanceError("impedance '" + z.name + "' is identically zero");
  branches_.push_back({a, b, z.num, z.den});
}

Index DescriptorCircuit::state_count() const {
  Index n = nodes_ + static_cast<Index>(rls_.size());
  for (const auto& br : branches_) n += 2 + std::max(br.num.degree(), br.den.degree());
  return n;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> DescriptorCircuit::pencil() const {
  const Index n = state_count();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  // KCL: C v' = -G v - (currents leaving the node).
  auto leaves = [&](Index node, Index current, double sign) {
    if (node != ground) a(node, current) -= sign;
  };
  auto volt = [&](Index row, Index node, double sign) {
    if (node != ground) a(row, node) += sign;
  };

  for (const auto& sh : shunts_) {
    e(sh.node, sh.node) += sh.c;
    a(sh.node, sh.node) -= sh.g;
  }
  Index v = nodes_;
  for (const auto& rl : rls_) {
    leaves(rl.a, v, 1.0);
    leaves(rl.b, v, -1.0);
    // L i' = va - vb - R i
    e(v, v) = rl.l;
    volt(v, rl.a, 1.0);
    volt(v, rl.b, -1.0);
    a(v, v) -= rl.r;
    ++v;
  }
  for (const auto& br : branches_) {
    const int d = std::max(br.num.degree(), br.den.degree());
    const Index iv = v;
    const Index xi = v + 1;
    v += 2 + d;
    leaves(br.a, iv, 1.0);
    leaves(br.b, iv, -1.0);
    // sum D_k xi_k - i = 0
    const auto dc = br.den.coefficients();
    for (std::size_t k = 0; k < dc.size(); ++k) a(iv, xi + static_cast<Index>(k)) += dc[k];
    a(iv, iv) -= 1.0;
    // xi_k' = xi_{k+1}
    for (Index k = 0; k < d; ++k) {
      e(xi + k, xi + k) = 1.0;
      a(xi + k, xi + k + 1) = 1.0;
    }
    // sum N_k xi_k - (va - vb) = 0
    const auto nc = br.num.coefficients();
    for (std::size_t k = 0; k < nc.size(); ++k) a(xi + d, xi + static_cast<Index>(k)) += nc[k];
    volt(xi + d, br.a, -1.0);
    volt(xi + d, br.b, 1.0);
  }
  return {std::move(e), std::move(a)};
}

std::vector<Complex> generalized_poles(const Eigen::MatrixXd& e, const Eigen::MatrixXd& a, double max_magnitude) {
  if (e.rows() != e.cols() || a.rows() != a.cols() || e.rows() != a.rows())
    throw DimensionError("pencil matrices must be square and equal in size");
  const Index n = a.rows();
  const double ref = std::sqrt(std::max(1.0, a.cwiseAbs().maxCoeff() / std::max(e.cwiseAbs().maxCoeff(), 1e-300)));

  // Ruiz equilibration of |A| + ref |E|; row and column scaling leaves the
  // generalized eigenvalues unchanged.
  Eigen::VectorXd dr = Eigen::VectorXd::Ones(n), dc = Eigen::VectorXd::Ones(n);
  for (int sweep = 0; sweep < 30; ++sweep) {
    const Eigen::MatrixXd mag = dr.asDiagonal() * (a.cwiseAbs() + ref * e.cwiseAbs()) * dc.asDiagonal();
    for (Index i = 0; i < n; ++i) {
      const double r = mag.row(i).maxCoeff(), c = mag.col(i).maxCoeff();
      if (r > 0.0) dr[i] /= std::sqrt(r);
      if (c > 0.0) dc[i] /= std::sqrt(c);
    }
  }
  const Eigen::MatrixXd as = dr.asDiagonal() * a * dc.asDiagonal();
  const Eigen::MatrixXd es = dr.asDiagonal() * e * dc.asDiagonal();

  // Shift-invert: mu = 1 / (p - sigma) are the eigenvalues of (A - sigma E)^{-1} E;
  // infinite eigenvalues map to mu = 0.
  for (double sigma : {-0.7318 * ref, -1.9137 * ref, 0.5821 * ref}) {
    const Eigen::MatrixXd shifted = as - sigma * es;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
    if (!(lu.rcond() > 1e-14)) continue;
    const Eigen::MatrixXd m = lu.solve(es);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) throw DecompositionError("pencil eigenvalue iteration did not converge");
    const double mu_max = std::max(solver.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Complex> poles;
    for (Index i = 0; i < n; ++i) {
      const Complex mu = solver.eigenvalues()[i];
      if (std::abs(mu) <= 1e-13 * mu_max) continue;
      const Complex p = sigma + 1.0 / mu;
      if (std::abs(p) < max_magnitude) poles.push_back(p);
    }
    std::sort(poles.begin(), poles.end(), [](Complex x, Complex y) {
      if (x.real() != y.real()) return x.real() > y.real();
      return x.imag() > y.imag();
    });
    return poles;
  }
  throw SingularPencilError("descriptor pencil is singular (det(sE - A) vanishes at every trial shift)");
}

// -- Synthetic systems ---------------------------------------------------------------

DescriptorCircuit SyntheticSystem::descriptor() const {
  DescriptorCircuit c;
  for (std::size_t m = 0; m < stations.size(); ++m)
    for (int t = 0; t < 3; ++t) c.add_node();
  for (const auto& cab : cables) {
    const auto& l = cab.model;
    l.validate();
    if (cab.from >= stations.size() || cab.to >= stations.size() || cab.from == cab.to)
      throw UnresolvedEndpointError("cable '" + cab.name + "' has invalid endpoints");
    const double k = static_cast<double>(l.sections);
    for (Index cond = 0; cond < 3; ++cond) {
      if (!l.conductors[static_cast<std::size_t>(cond)]) continue;
      std::vector<Index> chain{static_cast<Index>(3 * cab.from) + cond};
      for (int t = 1; t < l.sections; ++t) chain.push_back(c.add_node());
      chain.push_back(static_cast<Index>(3 * cab.to) + cond);
      for (std::size_t t = 0; t + 1 < chain.size(); ++t) {
        c.add_series_rl(chain[t], chain[t + 1], l.resistance / k, l.inductance / k);
        c.add_shunt(chain[t], l.capacitance / (2 * k), l.conductance / (2 * k));
        c.add_shunt(chain[t + 1], l.capacitance / (2 * k), l.conductance / (2 * k));
      }
    }
  }
  for (std::size_t m = 0; m < stations.size(); ++m) {
    const auto p = static_cast<Index>(3 * m);
    c.add_impedance(p, p + 1, stations[m].z_pos);
    c.add_impedance(p + 1, p + 2, stations[m].z_neg);
  }
  return c;
}

std::vector<Complex> closed_loop_poles(const SyntheticSystem& sys) {
  const auto [e, a] = sys.descriptor().pencil();
  return generalized_poles(e, a);
}

bool has_rhp_pole(std::span<const Complex> poles, double tol) {
  return std::any_of(poles.begin(), poles.end(),
                     [&](Complex p) { return p.real() > tol * std::max(1.0, std::abs(p)); });
}

Complex dominant_pole(std::span<const Complex> poles) {
  if (poles.empty()) throw EmptyRangeError("no poles");
  std::optional<Complex> best;
  for (Complex p : poles)
    if (p.imag() >= 0.0 && (!best || p.real() > best->real())) best = p;
  return best ? *best : poles.front();
}

namespace {

ScalarResponse evaluate(const RationalImpedance& z, const FrequencyGrid& grid) {
  CVector v(static_cast<Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Complex s(0.0, 2.0 * std::numbers::pi * grid[k]);
    const Complex den = z.den(s);
    double scale = 0.0, power = 1.0;
    for (double c : z.den.coefficients()) {
      scale += std::abs(c) * power;
      power *= std::abs(s);
    }
    if (std::abs(den) <= 1e-12 * scale) {
      std::ostringstream ss;
      ss << "impedance '" << z.name << "' has a pole on the grid at " << grid[k] << " Hz";
      throw PoleOnGridError(ss.str());
    }
    v[static_cast<Index>(k)] = z.num(s) / den;
  }
  return ScalarResponse(grid, std::move(v), Unit::ohm);
}

}  // namespace

LoadedSystem sample_system(const SyntheticSystem& sys, const FrequencyGrid& grid) {
  std::vector<StationModel> stations;
  std::vector<std::string> names;
  for (const auto& st : sys.stations) {
    stations.push_back({st.name, evaluate(st.z_pos, grid), evaluate(st.z_neg, grid)});
    names.push_back(st.name);
  }
  std::vector<CableModel> cables;
  for (const auto& cab : sys.cables) {
    if (cab.from >= sys.stations.size() || cab.to >= sys.stations.size())
      throw UnresolvedEndpointError("cable '" + cab.name + "' has invalid endpoints");
    std::vector<CMatrix> y(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
      y[k] = cab.model.admittance(Complex(0.0, 2.0 * std::numbers::pi * grid[k]));
    cables.push_back({cab.name, sys.stations[cab.from].name, sys.stations[cab.to].name,
                      MatrixResponse(grid, std::move(y), Unit::siemens)});
  }
  return {grid, std::move(stations), std::move(cables), PortMap(std::move(names))};
}

std::filesystem::path write_dataset(const SyntheticSystem& sys, const FrequencyGrid& grid,
                                    const std::filesystem::path& dir) {
  const auto sampled = sample_system(sys, grid);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["stations"] = nlohmann::ordered_json::array();
  manifest["cables"] = nlohmann::ordered_json::array();
  for (const auto& st : sampled.stations) {
    const std::string zp = st.name + "_zp.json", zn = st.name + "_zn.json";
    save_scalar_response(dir / zp, st.z_pos);
    save_scalar_response(dir / zn, st.z_neg);
    manifest["stations"].push_back({{"name", st.name}, {"z_pos", zp}, {"z_neg", zn}});
  }
  for (const auto& cab : sampled.cables) {
    const std::string y6 = cab.name + "_y6.json";
    save_matrix_response(dir / y6, cab.y6);
    manifest["cables"].push_back({{"name", cab.name}, {"from", cab.from}, {"to", cab.to}, {"y6", y6}});
  }
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
  return path;
}

// -- Fixtures -------------------------------------------------------------------------

StationParameters stable_station() { return {}; }

StationParameters unstable_station() {
  StationParameters p;
  p.resistance = 40.0;
  p.negative_resistance = 56.0;
  p.bandwidth = 2.0 * std::numbers::pi * 50.0;
  return p;
}

LumpedCable default_cable() {
  LumpedCable c;
  c.conductance = 2.0 * std::numbers::pi * 1.0 * c.capacitance;
  return c;
}

namespace {

SyntheticStation station(const std::string& name, const StationParameters& p) {
  return {name, p.impedance(name + ".zp"), p.impedance(name + ".zn")};
}

}  // namespace

SyntheticSystem make_two_terminal(bool stable) {
  SyntheticSystem sys;
  sys.stations.push_back(station("S1", stable_station()));
  sys.stations.push_back(station("S2", stable ? stable_station() : unstable_station()));
  sys.cables.push_back({"c12", 0, 1, default_cable()});
  return sys;
}

SyntheticSystem make_four_terminal(std::optional<int> destabilizer) {
  if (destabilizer && (*destabilizer < 1 || *destabilizer > 4))
    throw std::out_of_range("destabilizer must be a station index in 1..4");
  SyntheticSystem sys;
  for (int m = 1; m <= 4; ++m)
    sys.stations.push_back(
        station("S" + std::to_string(m), destabilizer == m ? unstable_station() : stable_station()));
  for (std::size_t m = 0; m < 3; ++m)
    sys.cables.push_back({"c" + std::to_string(m + 1) + std::to_string(m + 2), m, m + 1, default_cable()});
  return sys;
}

FrequencyGrid default_synth_grid() { return FrequencyGrid::per_decade(0.01, 1e5, 400.0); }

}  // namespace mtdc
