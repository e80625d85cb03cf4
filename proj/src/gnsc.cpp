#include "mtdc/gnsc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "mtdc/parallel.hpp"

namespace mtdc {

namespace {

std::string hz_text(double hz) {
  std::ostringstream ss;
  ss.precision(6);
  ss << hz << " Hz";
  return ss.str();
}

}  // namespace

ReturnRatio return_ratio(const MatrixResponse& y_st, const MatrixResponse& z_net, Basis basis) {
  if (y_st.dim() != z_net.dim())
    throw DimensionError("Y_st is " + std::to_string(y_st.dim()) + "x" + std::to_string(y_st.dim()) +
                         " but Z_net is " + std::to_string(z_net.dim()) + "x" + std::to_string(z_net.dim()));
  if (!(y_st.grid() == z_net.grid())) throw GridError("Y_st and Z_net are sampled on different grids");
  std::vector<CMatrix> l(y_st.size());
  for (std::size_t k = 0; k < l.size(); ++k)
    l[k].noalias() = basis == Basis::current ? y_st[k] * z_net[k] : z_net[k] * y_st[k];
  return {basis, MatrixResponse(y_st.grid(), std::move(l))};
}

MatrixResponse return_difference(const ReturnRatio& l) {
  std::vector<CMatrix> f(l.l.size());
  const Index n = l.l.dim();
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = CMatrix::Identity(n, n) + l.l[k];
  return MatrixResponse(l.l.grid(), std::move(f));
}

ScalarResponse det_response(const MatrixResponse& f) {
  CVector d(static_cast<Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) d[static_cast<Index>(k)] = f[k].partialPivLu().determinant();
  return ScalarResponse(f.grid(), std::move(d));
}

// -- Tracking -------------------------------------------------------------------

std::vector<Index> match_loci(const EigenDecomposition<double>& prev, const EigenDecomposition<double>& next,
                              double cond_limit) {
  const Index n = prev.size();
  if (next.size() != n) throw DimensionError("cannot match decompositions of different size");
  const bool by_vectors = prev.condition <= cond_limit && next.condition <= cond_limit;

  std::vector<std::tuple<double, Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * n));
  if (by_vectors) {
    const CMatrix forward = prev.left * next.right;   // w_i v'_j
    const CMatrix backward = next.left * prev.right;  // w'_j v_i
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) pairs.emplace_back(std::abs(forward(i, j)) * std::abs(backward(j, i)), i, j);
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) pairs.emplace_back(-std::abs(prev.values[i] - next.values[j]), i, j);
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  std::vector<Index> match(static_cast<std::size_t>(n), -1);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Index assigned = 0;
  for (const auto& [score, i, j] : pairs) {
    if (match[static_cast<std::size_t>(i)] >= 0 || taken[static_cast<std::size_t>(j)]) continue;
    match[static_cast<std::size_t>(i)] = j;
    taken[static_cast<std::size_t>(j)] = true;
    if (++assigned == n) break;
  }
  return match;
}

EigenLocusSet eigenloci(const ReturnRatio& l, double cond_limit) {
  const auto& grid = l.l.grid();
  const std::size_t count = grid.size();
  std::vector<EigenDecomposition<double>> raw(count);
  parallel_for(count, [&](std::size_t k) {
    try {
      raw[k] = decompose_unchecked(l.l[k]);
    } catch (const DecompositionError& e) {
      throw DecompositionError(std::string(e.what()) + " at " + hz_text(grid[k]));
    }
  });

  EigenLocusSet out{grid, CMatrix(static_cast<Index>(count), l.l.dim()), {}, {}, {}};
  out.decompositions.reserve(count);
  out.conditioning.reserve(count);
  std::size_t degenerate_points = 0;
  double first_degenerate = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    if (k == 0) {
      out.decompositions.push_back(std::move(raw[0]));
    } else {
      const auto order = match_loci(out.decompositions.back(), raw[k], cond_limit);
      out.decompositions.push_back(raw[k].permuted(order));
    }
    const auto& d = out.decompositions.back();
    out.values.row(static_cast<Index>(k)) = d.values.transpose();
    out.conditioning.push_back(d.condition);

    // The structural zero eigenvalues (rank-deficient station blocks) always
    // coincide; only clusters away from the origin are worth a warning.
    const double rho = d.values.cwiseAbs().maxCoeff();
    bool nonzero_cluster = false;
    for (Index i = 0; i < d.size(); ++i)
      if (d.clustered[i] && std::abs(d.values[i]) > kDegenerateRelTol * rho) nonzero_cluster = true;
    if (nonzero_cluster && degenerate_points++ == 0) first_degenerate = grid[k];
  }
  if (degenerate_points > 0)
    out.warnings.push_back("degenerate eigenvalues at " + std::to_string(degenerate_points) +
                           " frequency point(s), first at " + hz_text(first_degenerate));
  return out;
}

// -- RHP pole heuristic ---------------------------------------------------------

RhpPoleEstimate count_rhp_poles(const ScalarResponse& det_f, double prominence_db, int window) {
  if (!(prominence_db > 0.0) || window < 1) throw std::invalid_argument("prominence and window must be positive");
  const auto& grid = det_f.grid();
  const auto count = static_cast<Index>(grid.size());
  std::vector<double> mag(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k)
    mag[static_cast<std::size_t>(k)] = 20.0 * std::log10(std::max(std::abs(det_f.values()[k]), 1e-300));

  RhpPoleEstimate out;
  for (Index k = 1; k + 1 < count; ++k) {
    const double m = mag[static_cast<std::size_t>(k)];
    if (!(m > mag[static_cast<std::size_t>(k - 1)] && m >= mag[static_cast<std::size_t>(k + 1)])) continue;

    double left_min = m, right_min = m;
    for (Index j = k - 1; j >= 0 && mag[static_cast<std::size_t>(j)] <= m; --j)
      left_min = std::min(left_min, mag[static_cast<std::size_t>(j)]);
    for (Index j = k + 1; j < count && mag[static_cast<std::size_t>(j)] <= m; ++j)
      right_min = std::min(right_min, mag[static_cast<std::size_t>(j)]);
    const double prominence = m - std::max(left_min, right_min);
    if (prominence < prominence_db) continue;

    PeakDiagnostic p;
    p.freq_hz = grid[static_cast<std::size_t>(k)];
    p.magnitude_db = m;
    p.prominence_db = prominence;
    Index lo = k, hi = k;
    while (lo > 0 && mag[static_cast<std::size_t>(lo - 1)] >= m - 3.0) --lo;
    while (hi + 1 < count && mag[static_cast<std::size_t>(hi + 1)] >= m - 3.0) ++hi;
    p.width_points = static_cast<int>(hi - lo + 1);

    // An isolated pole pair turns the phase monotonically by pi/2 across its
    // half-power band. A hump between notches turns it little or back and forth.
    double rising = 0.0, falling = 0.0;
    for (Index j = lo; j < hi; ++j) {
      const double step = std::arg(det_f.values()[j + 1] / det_f.values()[j]);
      if (step > 0.0)
        rising += step;
      else
        falling -= step;
    }
    p.phase_change = rising - falling;
    const double against = std::min(rising, falling);
    // It also turns fastest at the apex. The shoulder of a nearby notch turns
    // fastest at the edge facing the notch.
    auto turn_rate = [&](Index j) {
      const Index l = std::max<Index>(0, j - 1), r = std::min<Index>(count - 1, j + 1);
      return std::abs(std::arg(det_f.values()[r] / det_f.values()[l])) /
             std::log(grid[static_cast<std::size_t>(r)] / grid[static_cast<std::size_t>(l)]);
    };
    const bool apex_turn = turn_rate(k) >= std::max(turn_rate(lo), turn_rate(hi));
    p.resonant = std::abs(p.phase_change) >= std::numbers::pi / 4.0 && against <= 0.1 * std::max(rising, falling) &&
                 apex_turn;

    // Least-squares phase slope against log10(f) over the window, unwrapped locally.
    const Index a = std::max<Index>(0, k - window);
    const Index b = std::min<Index>(count - 1, k + window);
    std::vector<double> x, y;
    double prev = std::arg(det_f.values()[a]);
    for (Index j = a; j <= b; ++j) {
      double ph = std::arg(det_f.values()[j]);
      if (j > a) {
        ph = prev + std::remainder(ph - prev, 2.0 * std::numbers::pi);
      }
      prev = ph;
      x.push_back(std::log10(grid[static_cast<std::size_t>(j)]));
      y.push_back(ph);
    }
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      sxy += (x[t] - xm) * (y[t] - ym);
      sxx += (x[t] - xm) * (x[t] - xm);
    }
    p.phase_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    p.rhp = p.resonant && p.phase_slope > 0.0;
    if (p.rhp) out.P += 2;
    if (p.width_points < 2 * window + 1)
      out.warnings.push_back("peak at " + hz_text(p.freq_hz) + " spans only " +
                             std::to_string(p.width_points) + " points (fit window " +
                             std::to_string(2 * window + 1) + "); grid may be under-resolved");
    out.peaks.push_back(p);
  }
  return out;
}

// -- Verdict ----------------------------------------------------------------------

StabilityVerdict assess_stability(const EigenLocusSet& loci, const ScalarResponse& det_f,
                                  const StabilityOptions& options) {
  if (!(loci.grid == det_f.grid())) throw GridError("eigenloci and det(F) are sampled on different grids");
  StabilityVerdict v;
  auto rhp = count_rhp_poles(det_f, options.prominence_db, options.phase_window);
  v.P = rhp.P;
  v.peaks = std::move(rhp.peaks);
  v.warnings = std::move(rhp.warnings);

  const Complex minus_one(-1.0, 0.0);
  double total = 0.0;
  for (Index i = 0; i < loci.locus_count(); ++i) {
    const double w = winding_number<double>(loci.locus(i), minus_one);
    const double full = 2.0 * w;
    const auto rounded = static_cast<int>(std::lround(full));
    if (std::abs(full - rounded) >= options.consistency_budget) {
      std::ostringstream ss;
      ss << "locus " << (i + 1) << " has full-axis winding " << full
         << " (not near an integer); the grid is under-resolved or its span truncates the locus";
      throw ConsistencyError(ss.str());
    }
    v.per_locus_windings.push_back(w);
    v.per_locus_encirclements.push_back(rounded);
    v.N += rounded;
    total += w;
  }
  std::span<const Complex> det_samples(det_f.values().data(), det_f.size());
  v.det_winding = winding_number<double>(det_samples, Complex(0.0, 0.0));
  if (std::abs(total - v.det_winding) >= options.consistency_budget) {
    std::ostringstream ss;
    ss << "eigenloci wind " << total << " turns about -1 but det(F) winds " << v.det_winding
       << " turns about 0; the grid is under-resolved";
    throw ConsistencyError(ss.str());
  }
  v.stable = v.P == v.N;
  return v;
}

}  // namespace mtdc
