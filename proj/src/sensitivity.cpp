#include "mtdc/sensitivity.hpp"

#include "mtdc/parallel.hpp"

namespace mtdc {

ParticipationResponse participation_over_grid(const EigenLocusSet& loci, double cond_limit) {
  ParticipationResponse out{loci.grid, std::vector<CMatrix>(loci.size()), std::vector<bool>(loci.size())};
  for (std::size_t k = 0; k < loci.size(); ++k) {
    const auto& d = loci.decompositions[k];
    out.p[k] = participation_matrix(d);
    out.valid[k] = d.condition <= cond_limit;
  }
  return out;
}

std::vector<ImpedanceSensitivity> station_sensitivities(const EigenLocusSet& loci, const MatrixResponse& z_net,
                                                        std::span<const StationModel> stations,
                                                        const PortMap& port_map, Basis basis, double cond_limit) {
  if (!(z_net.grid() == loci.grid)) throw GridError("Z_net and eigenloci are sampled on different grids");
  const auto count = static_cast<Index>(loci.size());
  const Index n = loci.locus_count();

  std::vector<ImpedanceSensitivity> out;
  for (std::size_t m = 0; m < stations.size(); ++m) {
    for (Pole pole : {Pole::positive, Pole::negative}) {
      ImpedanceSensitivity s;
      s.station = m;
      s.pole = pole;
      s.raw = CMatrix::Zero(count, n);
      s.normalized = CMatrix::Zero(count, n);
      s.valid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(count, n, false);
      out.push_back(std::move(s));
    }
  }

  parallel_for(loci.size(), [&](std::size_t k) {
    const auto& d = loci.decompositions[k];
    if (!(d.condition <= cond_limit)) return;
    const double rho = d.values.cwiseAbs().maxCoeff();
    for (auto& s : out) {
      const auto& st = stations[s.station];
      const Complex z = s.pole == Pole::positive ? st.z_pos[k] : st.z_neg[k];
      const CMatrix dl = dl_dz<double>(s.station, s.pole, z, z_net[k], port_map, basis);
      const auto row = static_cast<Index>(k);
      for (Index i = 0; i < n; ++i) {
        const Complex raw = impedance_sensitivity(d, dl, i);
        s.raw(row, i) = raw;
        const Complex lambda = d.values[i];
        if (d.clustered[i] || std::abs(lambda) <= kDegenerateRelTol * rho) continue;
        s.normalized(row, i) = normalized_sensitivity(raw, z, lambda);
        s.valid(row, i) = true;
      }
    }
  });
  return out;
}

ScalarResponse control_level_response(const ImpedanceSensitivity& sens, Index locus, const ScalarResponse& dz_dp) {
  if (dz_dp.size() != static_cast<std::size_t>(sens.raw.rows()))
    throw GridError("dZ/dp is not sampled on the analysis grid");
  if (locus < 0 || locus >= sens.raw.cols()) throw std::out_of_range("locus index out of range");
  CVector v(sens.raw.rows());
  for (Index k = 0; k < v.size(); ++k) v[k] = control_level_sensitivity(sens.raw(k, locus), dz_dp.values()[k]);
  return ScalarResponse(dz_dp.grid(), std::move(v));
}

}  // namespace mtdc
