#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "mtdc/network.hpp"

namespace mtdc::cli {

inline constexpr int kExitStable = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnstable = 2;

/// Command-line overrides; unset fields keep the manifest's options.
struct RunOptions {
  std::filesystem::path out_dir = "mtdc-out";
  std::optional<double> delta;
  std::optional<double> prominence_db;
  std::optional<int> phase_window;
  std::optional<double> cond_limit;
  std::optional<std::string> grid_policy;
  std::optional<std::string> basis;
  bool plots = true;
};

/// Applies the overrides, validating that thresholds are positive.
void apply_overrides(AnalysisOptions& options, const RunOptions& run);

int cmd_check(const std::filesystem::path& manifest, const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_sense(const std::filesystem::path& manifest, const RunOptions& options, std::ostream& out, std::ostream& err);

struct SynthOptions {
  std::string kind;  // "two" or "four"
  bool unstable = false;
  std::optional<int> destabilizer;
  std::filesystem::path out_dir;
  bool force = false;
};

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

}  // namespace mtdc::cli
