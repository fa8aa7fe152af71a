/******************************************************************************
 * Copyright 2026 The coperc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#include <iostream>

#include "CLI11.hpp"

#include "commands.h"
#include "coperc/errors.h"

using namespace coperc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Cooperative perception map simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", COPERC_VERSION);

  GenTraceArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-trace", "Generate a synthetic multi-CAV trace");
  cmd_gen->add_option("--cavs", gen.cavs, "CAV count")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--frames", gen.frames, "Frame count")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--seed", gen.seed, "Generator seed");
  cmd_gen->add_option("--extent", gen.extent_m, "Road grid half-size in m");
  cmd_gen->add_option("--spacing", gen.spacing_m, "Road spacing in m");
  cmd_gen->add_option("--out", gen.out, "Trace file (JSON lines)")->required();
  cmd_gen->add_flag("--force", gen.force, "Replace existing output");

  ProfileArgs prof;
  auto* cmd_prof = app.add_subcommand("profile", "Build a measurement dataset");
  cmd_prof->add_option("--mode", prof.mode, "codec or surrogate")
      ->check(CLI::IsMember({"codec", "surrogate"}));
  cmd_prof->add_option("--out", prof.out, "Dataset file")->required();
  cmd_prof->add_option("--samples", prof.samples,
                       "Samples per key (surrogate) or clouds per bucket (codec)");
  cmd_prof->add_option("--seed", prof.seed, "Profiling seed");
  cmd_prof->add_flag("--force", prof.force, "Replace existing output");

  RunArgs run;
  auto* cmd_run = app.add_subcommand("run", "Run a policy over a trace");
  cmd_run->add_option("--trace", run.trace, "Trace file")->required();
  cmd_run->add_option("--config", run.config, "Run configuration (JSON)");
  cmd_run->add_option("--policy", run.policy, "Policy override");
  cmd_run->add_option("--out", run.out, "Output directory")->required();
  cmd_run->add_flag("--force", run.force, "Replace existing output");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "Sweep one parameter across policies");
  cmd_sweep->add_option("--param", sweep.param, "bandwidth, H or cavs")
      ->required()
      ->check(CLI::IsMember({"bandwidth", "H", "cavs"}));
  cmd_sweep->add_option("--values", sweep.values, "Values, comma separated")
      ->required()
      ->delimiter(',');
  cmd_sweep->add_option("--policy", sweep.policies, "Policies, comma separated")->delimiter(',');
  cmd_sweep->add_option("--trace", sweep.trace, "Trace file (generated if absent)");
  cmd_sweep->add_option("--config", sweep.config, "Base run configuration");
  cmd_sweep->add_option("--cavs", sweep.cavs, "CAVs for a generated trace")
      ->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--frames", sweep.frames, "Frames for a generated trace")
      ->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--trace-seed", sweep.trace_seed, "Seed for a generated trace");
  cmd_sweep->add_option("--out", sweep.out, "Output directory")->required();
  cmd_sweep->add_flag("--force", sweep.force, "Replace existing output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (cmd_gen->parsed()) return GenTrace(gen);
    if (cmd_prof->parsed()) return Profile(prof);
    if (cmd_run->parsed()) return Run(run);
    if (cmd_sweep->parsed()) return Sweep(sweep);
  } catch (const coperc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
