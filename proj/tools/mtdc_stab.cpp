#include <iostream>

#include <CLI11.hpp>

#include "mtdc/cli.hpp"
#include "mtdc/workflow.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GNSC stability and multi-level sensitivity analysis of multi-terminal DC networks"};
  app.set_version_flag("--version", mtdc::kToolVersion);
  app.require_subcommand(1);

  mtdc::cli::RunOptions run;
  std::string manifest;
  bool no_plots = false;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("manifest", manifest, "System manifest (JSON)")->required();
    sub->add_option("--out", run.out_dir, "Output directory for report.json and plots");
    sub->add_option("--delta", run.delta, "Criticality threshold on |lambda + 1|");
    sub->add_option("--prominence-db", run.prominence_db, "Resonant-peak prominence for the RHP-pole test (dB)");
    sub->add_option("--phase-window", run.phase_window, "Phase-slope fit half-width (points)");
    sub->add_option("--cond-limit", run.cond_limit, "Y_net condition warning threshold");
    sub->add_option("--grid-policy", run.grid_policy, "finest-within-overlap | log-uniform:N");
    sub->add_option("--basis", run.basis, "Return-ratio basis")->check(CLI::IsMember({"current", "voltage"}));
    sub->add_flag("--no-plots", no_plots, "Skip SVG plots");
  };
  auto* check = app.add_subcommand("check", "GNSC stability verdict");
  add_run_flags(check);
  auto* sense = app.add_subcommand("sense", "Stability verdict plus port and station sensitivity rankings");
  add_run_flags(sense);

  mtdc::cli::SynthOptions synth;
  int destabilizer = 0;
  auto* syn = app.add_subcommand("synth", "Write a synthetic test system");
  syn->add_option("kind", synth.kind, "two | four")->required()->check(CLI::IsMember({"two", "four"}));
  syn->add_option("--out", synth.out_dir, "Output directory");
  syn->add_flag("--unstable", synth.unstable, "Two-terminal: use the unstable station");
  syn->add_option("--destabilizer", destabilizer, "Four-terminal: 1-based station made unstable")
      ->check(CLI::Range(1, 4));
  syn->add_flag("--force", synth.force, "Write into a non-empty directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mtdc::cli::kExitError;
  }

  run.plots = !no_plots;
  if (*check) return mtdc::cli::cmd_check(manifest, run, std::cout, std::cerr);
  if (*sense) return mtdc::cli::cmd_sense(manifest, run, std::cout, std::cerr);
  if (destabilizer > 0) synth.destabilizer = destabilizer;
  if (synth.out_dir.empty()) synth.out_dir = synth.kind + "-terminal";
  return mtdc::cli::cmd_synth(synth, std::cout, std::cerr);
}
