#include "mtdc/cli.hpp"

#include <fstream>
#include <ostream>

#include "mtdc/plot.hpp"
#include "mtdc/synth.hpp"
#include "mtdc/workflow.hpp"

namespace mtdc::cli {

void apply_overrides(AnalysisOptions& o, const RunOptions& run) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
    return v;
  };
  if (run.delta) o.delta = positive(*run.delta, "--delta");
  if (run.prominence_db) o.prominence_db = positive(*run.prominence_db, "--prominence-db");
  if (run.phase_window) {
    if (*run.phase_window < 1) throw std::invalid_argument("--phase-window must be at least 1");
    o.phase_window = *run.phase_window;
  }
  if (run.cond_limit) o.cond_limit = positive(*run.cond_limit, "--cond-limit");
  if (run.grid_policy) o.grid_policy = GridPolicy::parse(*run.grid_policy);
  if (run.basis) {
    if (*run.basis != "current" && *run.basis != "voltage") throw std::invalid_argument("--basis must be current or voltage");
    o.voltage_basis = *run.basis == "voltage";
  }
}

namespace {

int run(const std::filesystem::path& manifest_path, const RunOptions& run, bool sensitivity, std::ostream& out,
        std::ostream& err) {
  std::optional<Analysis> result;
  try {
    SystemManifest manifest;
    try {
      manifest = load_manifest(manifest_path);
    } catch (const std::exception& e) {
      throw StageError("load", e.what());
    }
    try {
      apply_overrides(manifest.options, run);
    } catch (const std::exception& e) {
      throw StageError("options", e.what());
    }
    result = run_full_analysis(manifest, sensitivity);
    try {
      std::filesystem::create_directories(run.out_dir);
      std::ofstream f(run.out_dir / "report.json");
      f << report_to_json(result->report).dump(2) << '\n';
      if (!f) throw IoError("cannot write " + (run.out_dir / "report.json").string());
    } catch (const std::exception& e) {
      throw StageError("report", e.what());
    }
  } catch (const std::exception& e) {
    err << "mtdc-stab: " << e.what() << '\n';
    return kExitError;
  }

  const Analysis& analysis = *result;
  if (run.plots) {
    try {
      plot::write_analysis_plots(run.out_dir, analysis);
    } catch (const std::exception& e) {
      err << "mtdc-stab: warning: [plot] " << e.what() << '\n';
    }
  }

  const auto& r = analysis.report;
  out << (r.verdict.stable ? "stable" : "UNSTABLE") << ": P=" << r.verdict.P << " N=" << r.verdict.N << '\n';
  for (const auto& c : r.critical_loci) {
    out << "critical locus " << c.index + 1 << ": min |lambda+1| = " << c.min_distance << " at " << c.min_distance_hz
        << " Hz, range " << c.f_lo << "-" << c.f_hi << " Hz";
    if (c.phase_crossover_hz) out << ", phase crossover " << *c.phase_crossover_hz << " Hz";
    out << '\n';
  }
  if (r.sensitivity_computed) {
    out << "top ports:";
    for (std::size_t k = 0; k < r.port_ranking.size() && k < 3; ++k)
      out << ' ' << r.port_ranking[k].port + 1 << " (" << r.port_ranking[k].score << ")";
    out << "\ntop station: " << r.station_names.at(r.station_ranking.front().station);
    if (r.station_ranking.front().pole) out << ' ' << to_string(*r.station_ranking.front().pole) << " pole";
    out << " (" << r.station_ranking.front().score << ")\n";
  }
  for (const auto& n : r.notices) out << "note: " << n << '\n';
  for (const auto& w : r.warnings) err << "mtdc-stab: warning: " << w << '\n';
  out << "report: " << (run.out_dir / "report.json").string() << '\n';
  return r.verdict.stable ? kExitStable : kExitUnstable;
}

}  // namespace

int cmd_check(const std::filesystem::path& manifest, const RunOptions& options, std::ostream& out, std::ostream& err) {
  return run(manifest, options, false, out, err);
}

int cmd_sense(const std::filesystem::path& manifest, const RunOptions& options, std::ostream& out, std::ostream& err) {
  return run(manifest, options, true, out, err);
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  try {
    SyntheticSystem sys;
    if (o.kind == "two") {
      if (o.destabilizer) throw StageError("options", "--destabilizer applies to the four-terminal system");
      sys = make_two_terminal(!o.unstable);
    } else if (o.kind == "four") {
      if (o.unstable && !o.destabilizer) throw StageError("options", "four-terminal systems take --destabilizer M");
      try {
        sys = make_four_terminal(o.destabilizer);
      } catch (const std::exception& e) {
        throw StageError("options", e.what());
      }
    } else {
      throw StageError("options", "unknown system kind '" + o.kind + "' (expected two or four)");
    }
    const auto& dir = o.out_dir;
    if (std::filesystem::exists(dir) && !std::filesystem::is_empty(dir) && !o.force)
      throw StageError("synth", "output directory " + dir.string() + " is not empty; use --force to overwrite");
    std::filesystem::path manifest;
    try {
      manifest = write_dataset(sys, default_synth_grid(), dir);
    } catch (const std::exception& e) {
      throw StageError("synth", e.what());
    }
    out << "wrote " << manifest.string() << '\n';
    return kExitStable;
  } catch (const std::exception& e) {
    err << "mtdc-stab: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace mtdc::cli
