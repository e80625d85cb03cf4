#include "mtdc/freqdata.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mtdc {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

bool all_finite(const CMatrix& m) {
  return m.allFinite();
}

Complex parse_pair(const json& pair, const char* where) {
  if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
    throw ParseError(std::string(where) + ": expected [re, im] number pair");
  const Complex z(pair[0].get<double>(), pair[1].get<double>());
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw ParseError(std::string(where) + ": non-finite sample");
  return z;
}

std::vector<double> parse_freqs(const json& doc) {
  if (!doc.contains("freq_hz") || !doc["freq_hz"].is_array())
    throw ParseError("missing freq_hz array");
  std::vector<double> hz;
  hz.reserve(doc["freq_hz"].size());
  for (const auto& f : doc["freq_hz"]) {
    if (f.is_null()) throw GridError("non-finite frequency");
    if (!f.is_number()) throw ParseError("freq_hz entries must be numbers");
    hz.push_back(f.get<double>());
  }
  return hz;
}

json pair_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Locates the bracketing source interval for every target point.
struct Stencil {
  std::size_t lo;
  double weight;  // 0 -> exact copy of source[lo]
};

std::vector<Stencil> interpolation_stencil(const FrequencyGrid& source, const FrequencyGrid& target) {
  const auto src = source.hz();
  std::vector<Stencil> out;
  out.reserve(target.size());
  for (double t : target.hz()) {
    if (t < src.front() || t > src.back()) {
      std::ostringstream msg;
      msg << "target frequency " << t << " Hz outside source span [" << src.front() << ", "
          << src.back() << "] Hz";
      throw ExtrapolationError(msg.str());
    }
    auto it = std::lower_bound(src.begin(), src.end(), t);
    auto k = static_cast<std::size_t>(it - src.begin());
    if (*it == t) {
      out.push_back({k, 0.0});
      continue;
    }
    const double a = std::log10(src[k - 1]);
    const double b = std::log10(src[k]);
    out.push_back({k - 1, (std::log10(t) - a) / (b - a)});
  }
  return out;
}

template <typename T>
T blend(const T& a, const T& b, double w) {
  // Re and Im are blended independently, which is what a real-valued weight does.
  return (1.0 - w) * a + w * b;
}

}  // namespace

// -- FrequencyGrid ------------------------------------------------------------

FrequencyGrid::FrequencyGrid(std::vector<double> hz) : hz_(std::move(hz)) {
  if (hz_.size() < 2) throw GridError("frequency grid needs at least 2 points");
  for (std::size_t k = 0; k < hz_.size(); ++k) {
    if (!std::isfinite(hz_[k])) throw GridError("non-finite frequency in grid");
    if (hz_[k] <= 0.0) throw GridError("frequencies must be positive");
    if (k > 0 && hz_[k] <= hz_[k - 1]) throw GridError("frequencies must be strictly increasing");
  }
}

FrequencyGrid FrequencyGrid::log_uniform(double lo_hz, double hi_hz, std::size_t points) {
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || points < 2)
    throw GridError("log-uniform grid needs 0 < lo < hi and >= 2 points");
  const double a = std::log10(lo_hz);
  const double b = std::log10(hi_hz);
  std::vector<double> hz(points);
  for (std::size_t k = 0; k < points; ++k)
    hz[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1));
  hz.front() = lo_hz;
  hz.back() = hi_hz;
  return FrequencyGrid(std::move(hz));
}

FrequencyGrid FrequencyGrid::per_decade(double lo_hz, double hi_hz, double per_decade) {
  if (!(per_decade > 0.0)) throw GridError("points per decade must be positive");
  const double decades = std::log10(hi_hz / lo_hz);
  const auto intervals = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  return log_uniform(lo_hz, hi_hz, std::max<std::size_t>(intervals, 1) + 1);
}

// -- Units ----------------------------------------------------------------------

std::string to_string(Unit unit) {
  switch (unit) {
    case Unit::ohm: return "ohm";
    case Unit::siemens: return "siemens";
    case Unit::dimensionless: return "dimensionless";
    case Unit::ohm_per_parameter: return "ohm-per-parameter-unit";
  }
  return "dimensionless";
}

Unit unit_from_string(const std::string& text) {
  if (text == "ohm") return Unit::ohm;
  if (text == "siemens") return Unit::siemens;
  if (text == "dimensionless") return Unit::dimensionless;
  if (text == "ohm-per-parameter-unit") return Unit::ohm_per_parameter;
  throw ParseError("unknown unit '" + text + "'");
}

// -- Responses ------------------------------------------------------------------

ScalarResponse::ScalarResponse(FrequencyGrid grid, CVector values, Unit unit)
    : grid_(std::move(grid)), values_(std::move(values)), unit_(unit) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size())
    throw DimensionError("scalar response has " + std::to_string(values_.size()) +
                         " samples for a grid of " + std::to_string(grid_.size()));
  if (!values_.allFinite()) throw ParseError("scalar response contains non-finite samples");
}

MatrixResponse::MatrixResponse(FrequencyGrid grid, std::vector<CMatrix> samples, Unit unit)
    : grid_(std::move(grid)), dim_(0), samples_(std::move(samples)), unit_(unit) {
  if (samples_.size() != grid_.size())
    throw DimensionError("matrix response has " + std::to_string(samples_.size()) +
                         " samples for a grid of " + std::to_string(grid_.size()));
  dim_ = samples_.front().rows();
  if (dim_ <= 0) throw DimensionError("matrix response dimension must be positive");
  for (const auto& m : samples_) {
    if (m.rows() != dim_ || m.cols() != dim_)
      throw DimensionError("matrix response samples must all be " + std::to_string(dim_) + "x" +
                           std::to_string(dim_));
    if (!all_finite(m)) throw ParseError("matrix response contains non-finite samples");
  }
}

// -- Parsing ----------------------------------------------------------------------

ScalarResponse parse_scalar_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("kind", "") != "scalar")
    throw ParseError("expected an object with \"kind\": \"scalar\"");
  const Unit unit = unit_from_string(doc.value("unit", "ohm"));
  FrequencyGrid grid(parse_freqs(doc));
  if (!doc.contains("values") || !doc["values"].is_array())
    throw ParseError("missing values array");
  const auto& vals = doc["values"];
  if (vals.size() != grid.size())
    throw ParseError("values length " + std::to_string(vals.size()) + " != freq_hz length " +
                     std::to_string(grid.size()));
  CVector v(static_cast<Index>(vals.size()));
  for (std::size_t k = 0; k < vals.size(); ++k) v[static_cast<Index>(k)] = parse_pair(vals[k], "values");
  return ScalarResponse(std::move(grid), std::move(v), unit);
}

ScalarResponse parse_scalar_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV");
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\r'; }),
             line.end());
  if (line != "freq_hz,re,im") throw ParseError("CSV header must be freq_hz,re,im");
  std::vector<double> hz;
  std::vector<Complex> vals;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::array<double, 3> cells{};
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t c = 0; c < 3; ++c) {
      if (!std::getline(ls, cell, ',')) throw ParseError("row " + std::to_string(row) + ": expected 3 columns");
      char* end = nullptr;
      cells[c] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ParseError("row " + std::to_string(row) + ": not a number");
    }
    if (!std::isfinite(cells[1]) || !std::isfinite(cells[2]))
      throw ParseError("row " + std::to_string(row) + ": non-finite sample");
    hz.push_back(cells[0]);
    vals.emplace_back(cells[1], cells[2]);
  }
  FrequencyGrid grid(std::move(hz));
  CVector v = Eigen::Map<const CVector>(vals.data(), static_cast<Index>(vals.size()));
  return ScalarResponse(std::move(grid), std::move(v), Unit::ohm);
}

MatrixResponse parse_matrix_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("kind", "") != "matrix")
    throw ParseError("expected an object with \"kind\": \"matrix\"");
  const Unit unit = unit_from_string(doc.value("unit", "siemens"));
  if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long>() <= 0)
    throw ParseError("dim must be a positive integer");
  const auto n = static_cast<Index>(doc["dim"].get<long>());
  FrequencyGrid grid(parse_freqs(doc));
  if (!doc.contains("values") || !doc["values"].is_array())
    throw ParseError("missing values array");
  const auto& vals = doc["values"];
  if (vals.size() != grid.size())
    throw DimensionError("values has " + std::to_string(vals.size()) + " matrices for " +
                         std::to_string(grid.size()) + " frequencies");
  std::vector<CMatrix> samples;
  samples.reserve(vals.size());
  for (const auto& point : vals) {
    if (!point.is_array() || static_cast<Index>(point.size()) != n * n)
      throw DimensionError("expected " + std::to_string(n * n) + " entries per frequency, got " +
                           std::to_string(point.is_array() ? point.size() : 0));
    CMatrix m(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c)
        m(r, c) = parse_pair(point[static_cast<std::size_t>(r * n + c)], "values");
    samples.push_back(std::move(m));
  }
  return MatrixResponse(std::move(grid), std::move(samples), unit);
}

ScalarResponse load_scalar_response(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".csv") return parse_scalar_csv(text);
  return parse_scalar_json(text);
}

MatrixResponse load_matrix_response(const std::filesystem::path& path) {
  return parse_matrix_json(read_text(path));
}

void save_scalar_response(const std::filesystem::path& path, const ScalarResponse& r) {
  json doc;
  doc["kind"] = "scalar";
  doc["unit"] = to_string(r.unit());
  doc["freq_hz"] = std::vector<double>(r.grid().hz().begin(), r.grid().hz().end());
  json vals = json::array();
  for (Index k = 0; k < r.values().size(); ++k) vals.push_back(pair_json(r.values()[k]));
  doc["values"] = std::move(vals);
  write_text(path, doc.dump());
}

void save_matrix_response(const std::filesystem::path& path, const MatrixResponse& r) {
  json doc;
  doc["kind"] = "matrix";
  doc["unit"] = to_string(r.unit());
  doc["dim"] = r.dim();
  doc["freq_hz"] = std::vector<double>(r.grid().hz().begin(), r.grid().hz().end());
  json vals = json::array();
  for (const auto& m : r.samples()) {
    json point = json::array();
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) point.push_back(pair_json(m(i, j)));
    vals.push_back(std::move(point));
  }
  doc["values"] = std::move(vals);
  write_text(path, doc.dump());
}

// -- Resampling -----------------------------------------------------------------

ScalarResponse resample(const ScalarResponse& r, const FrequencyGrid& target) {
  if (r.grid() == target) return r;
  const auto stencil = interpolation_stencil(r.grid(), target);
  CVector out(static_cast<Index>(target.size()));
  for (std::size_t k = 0; k < stencil.size(); ++k) {
    const auto [lo, w] = stencil[k];
    out[static_cast<Index>(k)] =
        w == 0.0 ? r[lo] : blend(r[lo], r[lo + 1], w);
  }
  return ScalarResponse(target, std::move(out), r.unit());
}

MatrixResponse resample(const MatrixResponse& r, const FrequencyGrid& target) {
  if (r.grid() == target) return r;
  const auto stencil = interpolation_stencil(r.grid(), target);
  std::vector<CMatrix> out;
  out.reserve(target.size());
  for (const auto& [lo, w] : stencil)
    out.push_back(w == 0.0 ? r[lo] : CMatrix(blend(r[lo], r[lo + 1], w)));
  return MatrixResponse(target, std::move(out), r.unit());
}

// -- Common grid -------------------------------------------------------------------

GridPolicy GridPolicy::parse(const std::string& text) {
  if (text == "finest-within-overlap") return {};
  const std::string prefix = "log-uniform:";
  if (text.rfind(prefix, 0) == 0) {
    GridPolicy p;
    p.kind = Kind::log_uniform;
    try {
      p.points_per_decade = std::stod(text.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ParseError("bad grid policy '" + text + "'");
    }
    if (!(p.points_per_decade > 0.0)) throw ParseError("grid policy density must be positive");
    return p;
  }
  throw ParseError("unknown grid policy '" + text + "'");
}

std::string GridPolicy::to_string() const {
  if (kind == Kind::finest_within_overlap) return "finest-within-overlap";
  std::ostringstream ss;
  ss << "log-uniform:" << points_per_decade;
  return ss.str();
}

FrequencyGrid common_grid(std::span<const FrequencyGrid> grids, const GridPolicy& policy) {
  if (grids.empty()) throw EmptyOverlapError("no responses to align");
  double lo = grids.front().front();
  double hi = grids.front().back();
  for (const auto& g : grids) {
    lo = std::max(lo, g.front());
    hi = std::min(hi, g.back());
  }
  if (!(lo < hi)) throw EmptyOverlapError("frequency spans do not overlap");

  if (policy.kind == GridPolicy::Kind::log_uniform)
    return FrequencyGrid::per_decade(lo, hi, policy.points_per_decade);

  // Finest source density inside the overlap.
  const double decades = std::log10(hi / lo);
  const FrequencyGrid* finest = nullptr;
  std::vector<double> finest_inside;
  for (const auto& g : grids) {
    std::vector<double> inside;
    for (double f : g.hz())
      if (f >= lo && f <= hi) inside.push_back(f);
    if (finest == nullptr || inside.size() > finest_inside.size()) {
      finest = &g;
      finest_inside = std::move(inside);
    }
  }
  // A source that already spans the overlap end to end is reused verbatim.
  if (finest_inside.size() >= 2 && finest_inside.front() == lo && finest_inside.back() == hi)
    return FrequencyGrid(std::move(finest_inside));
  const double density =
      finest_inside.size() >= 2 ? static_cast<double>(finest_inside.size() - 1) / decades : 1.0 / decades;
  return FrequencyGrid::per_decade(lo, hi, density);
}

}  // namespace mtdc
