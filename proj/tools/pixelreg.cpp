// Copyright 2026 The pixelreg Authors
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

// pixelreg: closed-loop simulation, verification suites and one-off view
// synthesis from the command line.
//
// Exit codes: 0 success, 1 check failure, 2 configuration error,
// 3 runtime abort.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pixelreg/pixelreg.hpp"

namespace fs = std::filesystem;
using namespace pixelreg;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeAbort = 3;

std::mutex g_io;

void say(std::ostream& os, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_io);
  os << msg << std::endl;
}

ExperimentConfig load(const std::string& path) {
  ExperimentConfig cfg = load_config(path);
  apply_seed_override(cfg);
  return cfg;
}

int run_one(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_text(dir / "config.json", dump_config(cfg));
  FrameSink sink;
  if (cfg.frame_stride > 0) {
    fs::create_directories(dir / "frames");
    sink = [&](int k, const Image& y) {
      write_ppm(y, (dir / "frames" / frame_name(k)).string());
    };
  }
  const SimulationResult res = run_closed_loop(cfg, sink);
  write_text(dir / "telemetry.csv", telemetry_csv(res));
  if (res.aborted) {
    if (res.diagnostic_frame) {
      write_ppm(*res.diagnostic_frame, (dir / "diagnostic.ppm").string());
    }
    say(std::cerr, "simulation aborted: " + res.abort_reason);
    return kRuntimeAbort;
  }
  const StepRecord& last = res.rows.back();
  say(std::cout, cfg.output_dir + ": " + std::to_string(res.rows.size()) +
                     " steps, final s = " + format_double(last.s) +
                     " m (target " + format_double(cfg.s_bar) + " m)");
  return kOk;
}

int cmd_simulate(const std::vector<std::string>& configs,
                 std::optional<int> frames, int jobs) {
  std::vector<ExperimentConfig> cfgs;
  std::set<std::string> dirs;
  for (const std::string& path : configs) {
    ExperimentConfig cfg = load(path);
    if (frames) {
      if (*frames < 0) throw ConfigError("--frames must be >= 0");
      cfg.frame_stride = *frames;
    }
    const std::string key = fs::weakly_canonical(cfg.output_dir).string();
    if (!dirs.insert(key).second) {
      throw ConfigError("configs share output_dir " + cfg.output_dir);
    }
    cfgs.push_back(std::move(cfg));
  }
  std::vector<int> codes(cfgs.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) {
      try {
        codes[i] = run_one(cfgs[i]);
      } catch (const std::exception& e) {
        say(std::cerr, std::string("error: ") + e.what());
        codes[i] = kRuntimeAbort;
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(cfgs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return *std::max_element(codes.begin(), codes.end());
}

int cmd_verify(const std::string& suite_name, const std::string& path,
               bool strict_quadratic) {
  Suite suite;
  try {
    suite = suite_from_string(suite_name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig cfg = load(path);
  if (strict_quadratic) cfg.verify.strict_quadratic = true;
  const SuiteReport rep = run_suite(suite, cfg);
  fs::create_directories(cfg.output_dir);
  const fs::path out = fs::path(cfg.output_dir) / (suite_name + "_report.csv");
  write_text(out, report_csv(rep));
  for (const SuiteRow& r : rep.rows) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.check << " value="
              << format_double(r.value) << (r.detail.empty() ? "" : "  ")
              << r.detail << "\n";
  }
  std::cout << suite_name << ": " << (rep.passed() ? "all checks passed" : "FAILED")
            << " (" << out.string() << ")" << std::endl;
  return rep.passed() ? kOk : kCheckFailed;
}

int cmd_synth(const std::string& path, double s, double sbar,
              const std::string& out, const std::string& flow_out) {
  const ExperimentConfig cfg = load(path);
  try {
    require_in_range(s, cfg.scene);
    require_in_range(sbar, cfg.scene);
  } catch (const OutOfRange& e) {
    throw ConfigError(e.what());
  }
  const Renderer camera(cfg.scene);
  const SynthesisReport rep =
      synthesize(sbar, camera.render(s), cfg.scene, camera.render(sbar));
  write_ppm(rep.output, out);
  if (!flow_out.empty()) write_aflw(rep.flow, flow_out);
  std::cout << "s_hat=" << format_double(rep.s_hat)
            << " eps1_sample=" << format_double(rep.eps1_sample) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal car-following control from raw camera pixels"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run closed-loop simulations");
  std::vector<std::string> sim_configs;
  std::optional<int> frames;
  int jobs = 1;
  sim->add_option("--config", sim_configs, "experiment config (JSON); repeatable")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--frames", frames, "dump every n-th camera frame as PPM");
  sim->add_option("--jobs", jobs, "worker threads across configs")
      ->check(CLI::PositiveNumber);

  auto* ver = app.add_subcommand("verify", "run a verification suite");
  std::string suite, ver_config;
  bool strict = false;
  ver->add_option("--suite", suite, "assumptions | sof | lyapunov | synth")
      ->required();
  ver->add_option("--config", ver_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  ver->add_flag("--strict-quadratic", strict,
                "require R^2 >= 0.95 over the full quadratic-fit range");

  auto* syn = app.add_subcommand("synth", "synthesize one reference view");
  std::string syn_config, out, flow_out;
  double s = 0.0, sbar = 0.0;
  syn->add_option("--config", syn_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  syn->add_option("--s", s, "spacing of the camera frame [m]")->required();
  syn->add_option("--sbar", sbar, "desired spacing [m]")->required();
  syn->add_option("--out", out, "output PPM")->required();
  syn->add_option("--flow", flow_out, "optional AFLW flow dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_configs, frames, jobs);
    if (ver->parsed()) return cmd_verify(suite, ver_config, strict);
    if (syn->parsed()) return cmd_synth(syn_config, s, sbar, out, flow_out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kRuntimeAbort;
  }
  return kConfigError;
}
