// Copyright 2026 The diffq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// diffq command-line front end.
//
//   diffq run             --config FILE [--workers N] [--out DIR] [--seed S]
//   diffq verify          --config FILE
//   diffq rate-distortion --config FILE [--workers N] [--out DIR] [--seed S]
//   diffq quantizer-test  --spec STRING [--dim L] [--trials T] [--seed S] [--b-hp B]
//
// Exit codes: 0 success, 1 configuration error, 2 contract or validation
// failure, 3 divergence.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "diffq/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized learning with differentially quantized exchanges"};
  app.set_version_flag("--version", std::string(diffq::kVersion));
  app.require_subcommand(1);

  diffq::CommandOptions opt;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub, bool outputs) {
    sub->add_option("--config", opt.config_path, "Experiment config file")->required();
    if (outputs) {
      sub->add_option("--workers", opt.workers, "Worker threads for Monte-Carlo runs")->check(CLI::PositiveNumber);
      sub->add_option("--out", opt.out_dir, "Output directory (overrides output.directory)");
    }
    sub->add_option("--seed", seed, "Master seed (overrides algorithm.seed)");
  };

  auto* run = app.add_subcommand("run", "Run Monte-Carlo experiments and write learning curves");
  add_common(run, true);
  auto* verify = app.add_subcommand("verify", "Build the network and check the combination matrix");
  add_common(verify, false);
  auto* rd = app.add_subcommand("rate-distortion", "Sweep quantizer parameters and write rate-distortion points");
  add_common(rd, true);

  auto* qt = app.add_subcommand("quantizer-test", "Monte-Carlo contract check for one quantizer");
  std::string spec;
  int dim = 4;
  int trials = 100000;
  int b_hp = diffq::kDefaultHighPrecisionBits;
  std::uint64_t qt_seed = 1;
  qt->add_option("--spec", spec, "Scheme string, e.g. uniform:delta=0.2")->required();
  qt->add_option("--dim", dim, "Vector dimension L")->check(CLI::PositiveNumber);
  qt->add_option("--trials", trials, "Monte-Carlo draws per input")->check(CLI::Range(2, 100000000));
  qt->add_option("--seed", qt_seed, "Seed for inputs and draws");
  qt->add_option("--b-hp", b_hp, "High-precision bits per value")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : diffq::kExitConfig;
  }
  opt.seed = seed;

  try {
    if (*run) return diffq::cmd_run(opt, std::cout);
    if (*verify) return diffq::cmd_verify(opt, std::cout);
    if (*rd) return diffq::cmd_rate_distortion(opt, std::cout);
    return diffq::cmd_quantizer_test(spec, trials, dim, qt_seed, b_hp, std::cout);
  } catch (const diffq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return diffq::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return diffq::kExitValidation;
  }
}
