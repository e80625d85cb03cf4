#include "mtdc/network.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtdc/parallel.hpp"

namespace mtdc {

using nlohmann::json;

namespace {

std::string freq_label(double hz) {
  std::ostringstream ss;
  ss.precision(6);
  ss << hz << " Hz";
  return ss.str();
}

void require_grid(const FrequencyGrid& have, const FrequencyGrid& want, const std::string& what) {
  if (!(have == want)) throw GridError(what + " is not sampled on the analysis grid; resample first");
}

}  // namespace

// -- PortMap --------------------------------------------------------------------

PortMap::PortMap(std::vector<std::string> station_names) : names_(std::move(station_names)) {
  for (std::size_t m = 0; m < names_.size(); ++m) {
    if (!lookup_.emplace(names_[m], m).second)
      throw ParseError("duplicate station name '" + names_[m] + "'");
  }
}

std::array<Index, 3> PortMap::ports(std::size_t station) const {
  if (station >= names_.size()) throw std::out_of_range("station index out of range");
  const Index p = first_port(station);
  return {p, p + 1, p + 2};
}

std::size_t PortMap::index_of(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw UnresolvedEndpointError("unknown station '" + name + "'");
  return it->second;
}

// -- Manifest -------------------------------------------------------------------

SystemManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  SystemManifest m;
  auto str = [](const json& obj, const char* key) {
    if (!obj.contains(key) || !obj[key].is_string())
      throw ParseError(std::string("manifest entry missing string field '") + key + "'");
    return obj[key].get<std::string>();
  };
  if (!doc.contains("stations") || !doc["stations"].is_array())
    throw ParseError("manifest needs a stations array");
  for (const auto& s : doc["stations"])
    m.stations.push_back({str(s, "name"), base_dir / str(s, "z_pos"), base_dir / str(s, "z_neg")});
  if (doc.contains("cables")) {
    for (const auto& c : doc["cables"])
      m.cables.push_back({str(c, "name"), str(c, "from"), str(c, "to"), base_dir / str(c, "y6")});
  }
  if (m.stations.size() < 2) throw ParseError("manifest needs at least 2 stations");

  std::set<std::string> names;
  for (const auto& s : m.stations)
    if (!names.insert(s.name).second) throw ParseError("duplicate station name '" + s.name + "'");
  for (const auto& c : m.cables) {
    if (!names.count(c.from)) throw UnresolvedEndpointError("cable '" + c.name + "' references unknown station '" + c.from + "'");
    if (!names.count(c.to)) throw UnresolvedEndpointError("cable '" + c.name + "' references unknown station '" + c.to + "'");
    if (c.from == c.to) throw UnresolvedEndpointError("cable '" + c.name + "' connects a station to itself");
  }

  if (doc.contains("options")) {
    const auto& o = doc["options"];
    auto& opt = m.options;
    if (o.contains("grid_policy")) opt.grid_policy = GridPolicy::parse(o["grid_policy"].get<std::string>());
    opt.delta = o.value("delta", opt.delta);
    opt.prominence_db = o.value("prominence_db", opt.prominence_db);
    opt.phase_window = o.value("phase_window", opt.phase_window);
    opt.cond_limit = o.value("cond_limit", opt.cond_limit);
    opt.eig_cond_limit = o.value("eig_cond_limit", opt.eig_cond_limit);
    opt.merge_poles = o.value("merge_poles", opt.merge_poles);
    if (o.contains("basis")) {
      const auto b = o["basis"].get<std::string>();
      if (b != "current" && b != "voltage") throw ParseError("basis must be current or voltage");
      opt.voltage_basis = b == "voltage";
    }
  }
  return m;
}

SystemManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto m = parse_manifest(ss.str(), path.parent_path());
  m.source = path;
  return m;
}

LoadedSystem align_system(std::vector<StationModel> stations, std::vector<CableModel> cables,
                          const GridPolicy& policy) {
  std::vector<FrequencyGrid> grids;
  std::vector<std::string> names;
  for (const auto& s : stations) {
    grids.push_back(s.z_pos.grid());
    grids.push_back(s.z_neg.grid());
    names.push_back(s.name);
  }
  for (const auto& c : cables) {
    if (c.y6.dim() != 6) throw DimensionError("cable '" + c.name + "' must be 6x6");
    grids.push_back(c.y6.grid());
  }
  FrequencyGrid grid = common_grid(grids, policy);
  for (auto& s : stations) {
    s.z_pos = resample(s.z_pos, grid);
    s.z_neg = resample(s.z_neg, grid);
  }
  for (auto& c : cables) c.y6 = resample(c.y6, grid);
  PortMap ports(std::move(names));
  return {std::move(grid), std::move(stations), std::move(cables), std::move(ports)};
}

LoadedSystem load_system(const SystemManifest& manifest) {
  std::vector<StationModel> stations;
  for (const auto& s : manifest.stations) {
    auto zp = load_scalar_response(s.z_pos);
    auto zn = load_scalar_response(s.z_neg);
    stations.push_back({s.name, std::move(zp), std::move(zn)});
  }
  std::vector<CableModel> cables;
  for (const auto& c : manifest.cables)
    cables.push_back({c.name, c.from, c.to, load_matrix_response(c.y6)});
  return align_system(std::move(stations), std::move(cables), manifest.options.grid_policy);
}

// -- Assembly -------------------------------------------------------------------

MatrixResponse assemble_station_admittance(std::span<const StationModel> stations,
                                           const FrequencyGrid& grid) {
  if (stations.empty()) throw DimensionError("no stations to assemble");
  for (const auto& s : stations) {
    require_grid(s.z_pos.grid(), grid, "station '" + s.name + "' z_pos");
    require_grid(s.z_neg.grid(), grid, "station '" + s.name + "' z_neg");
  }
  const auto n = static_cast<Index>(3 * stations.size());
  std::vector<CMatrix> out(grid.size(), CMatrix::Zero(n, n));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t m = 0; m < stations.size(); ++m) {
      try {
        out[k].block<3, 3>(static_cast<Index>(3 * m), static_cast<Index>(3 * m)) =
            station_block(stations[m].z_pos[k], stations[m].z_neg[k]);
      } catch (const ZeroImpedanceError&) {
        throw ZeroImpedanceError("station '" + stations[m].name + "' has a zero pole impedance at " +
                                 freq_label(grid[k]));
      }
    }
  }
  return MatrixResponse(grid, std::move(out), Unit::siemens);
}

MatrixResponse assemble_network_admittance(std::span<const CableModel> cables,
                                           const PortMap& port_map, const FrequencyGrid& grid) {
  const Index n = port_map.port_count();
  std::vector<std::array<Index, 6>> rows;
  for (const auto& c : cables) {
    if (c.y6.dim() != 6) throw DimensionError("cable '" + c.name + "' must be 6x6");
    require_grid(c.y6.grid(), grid, "cable '" + c.name + "'");
    const auto a = port_map.ports(port_map.index_of(c.from));
    const auto b = port_map.ports(port_map.index_of(c.to));
    rows.push_back({a[0], a[1], a[2], b[0], b[1], b[2]});
  }
  std::vector<CMatrix> out(grid.size(), CMatrix::Zero(n, n));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t c = 0; c < cables.size(); ++c) {
      const CMatrix& y = cables[c].y6[k];
      const auto& idx = rows[c];
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) out[k](idx[i], idx[j]) += y(i, j);
    }
  }
  return MatrixResponse(grid, std::move(out), Unit::siemens);
}

NetworkInverse invert_network(const MatrixResponse& y_net, double cond_limit) {
  const auto& grid = y_net.grid();
  std::vector<CMatrix> z(grid.size());
  std::vector<double> cond(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const CMatrix& y = y_net[k];
    Eigen::PartialPivLU<CMatrix> lu(y);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-15) || !std::isfinite(rcond))
      throw SingularMatrixError("Y_net is singular at " + freq_label(grid[k]));
    z[k] = lu.inverse();
    if (!z[k].allFinite()) throw SingularMatrixError("Y_net is singular at " + freq_label(grid[k]));
    cond[k] = 1.0 / rcond;
  });
  std::vector<std::string> warnings;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (cond[k] > cond_limit) {
      std::ostringstream ss;
      ss << "Y_net condition estimate " << cond[k] << " exceeds " << cond_limit << " at "
         << freq_label(grid[k]);
      warnings.push_back(ss.str());
    }
  }
  return {MatrixResponse(grid, std::move(z), Unit::ohm), std::move(cond), std::move(warnings)};
}

}  // namespace mtdc
