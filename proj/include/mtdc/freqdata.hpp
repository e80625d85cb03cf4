#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtdc/types.hpp"

namespace mtdc {

/// Strictly increasing, positive, finite frequency axis in Hz (at least two points).
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> hz);

  /// `points` samples spaced uniformly in log10(f); the end points are exact.
  static FrequencyGrid log_uniform(double lo_hz, double hi_hz, std::size_t points);
  /// Log-uniform grid with (at least) `per_decade` intervals per decade.
  static FrequencyGrid per_decade(double lo_hz, double hi_hz, double per_decade);

  std::span<const double> hz() const noexcept { return hz_; }
  std::size_t size() const noexcept { return hz_.size(); }
  double operator[](std::size_t k) const { return hz_[k]; }
  double front() const noexcept { return hz_.front(); }
  double back() const noexcept { return hz_.back(); }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::vector<double> hz_;
};

enum class Unit { ohm, siemens, dimensionless, ohm_per_parameter };

std::string to_string(Unit unit);
Unit unit_from_string(const std::string& text);

/// One complex sample per grid point.
class ScalarResponse {
 public:
  ScalarResponse(FrequencyGrid grid, CVector values, Unit unit = Unit::dimensionless);

  const FrequencyGrid& grid() const noexcept { return grid_; }
  const CVector& values() const noexcept { return values_; }
  Complex operator[](std::size_t k) const { return values_[static_cast<Index>(k)]; }
  std::size_t size() const noexcept { return grid_.size(); }
  Unit unit() const noexcept { return unit_; }

 private:
  FrequencyGrid grid_;
  CVector values_;
  Unit unit_;
};

/// One n-by-n complex matrix per grid point.
class MatrixResponse {
 public:
  MatrixResponse(FrequencyGrid grid, std::vector<CMatrix> samples,
                 Unit unit = Unit::dimensionless);

  const FrequencyGrid& grid() const noexcept { return grid_; }
  Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const CMatrix& operator[](std::size_t k) const { return samples_[k]; }
  const std::vector<CMatrix>& samples() const noexcept { return samples_; }
  Unit unit() const noexcept { return unit_; }

 private:
  FrequencyGrid grid_;
  Index dim_;
  std::vector<CMatrix> samples_;
  Unit unit_;
};

// -- I/O ----------------------------------------------------------------------

/// Loads the JSON scalar schema, or a `freq_hz,re,im` CSV when the extension is .csv.
ScalarResponse load_scalar_response(const std::filesystem::path& path);
MatrixResponse load_matrix_response(const std::filesystem::path& path);

ScalarResponse parse_scalar_json(const std::string& text);
ScalarResponse parse_scalar_csv(const std::string& text);
MatrixResponse parse_matrix_json(const std::string& text);

void save_scalar_response(const std::filesystem::path& path, const ScalarResponse& r);
void save_matrix_response(const std::filesystem::path& path, const MatrixResponse& r);

// -- Grid alignment -------------------------------------------------------------

/// Entrywise linear interpolation of Re and Im against log10(f). Target points
/// that coincide with source points are copied exactly; extrapolation throws.
ScalarResponse resample(const ScalarResponse& r, const FrequencyGrid& target);
MatrixResponse resample(const MatrixResponse& r, const FrequencyGrid& target);

struct GridPolicy {
  enum class Kind { finest_within_overlap, log_uniform };
  Kind kind = Kind::finest_within_overlap;
  double points_per_decade = 0.0;  // used by Kind::log_uniform

  static GridPolicy parse(const std::string& text);
  std::string to_string() const;
};

/// Grid spanning the intersection of all source spans.
FrequencyGrid common_grid(std::span<const FrequencyGrid> grids, const GridPolicy& policy = {});

}  // namespace mtdc
