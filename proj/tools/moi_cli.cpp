// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// moi: command-line front end.
//
//   moi probe CONFIG [--out DIR] [--workers N] [--resume | --force] [--stop-after K]
//   moi metrics ARCHIVE --which METRIC [--out FILE]
//   moi compare ARCHIVE_A ARCHIVE_B --metric METRIC [--out FILE]
//   moi selfcheck [--tables N] [--report FILE] [--corrupt-weights]
//   moi serve-builtin --seed S --n N (--stdio | --port P) [--samples K]
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 selfcheck failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "moi/archive.hpp"
#include "moi/config.hpp"
#include "moi/error.hpp"
#include "moi/run.hpp"
#include "moi/selfcheck.hpp"
#include "moi/serve.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelfcheck = 3;

int exit_code_for(moi::ErrorCode code) {
  using moi::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidPlayer:
    case ErrorCode::kPlayerInCoalition:
    case ErrorCode::kSizeLimit:
    case ErrorCode::kExactSizeLimit:
    case ErrorCode::kDegenerateOrder:
    case ErrorCode::kIncompleteProfile:
    case ErrorCode::kMissingOrder:
    case ErrorCode::kOrderGridMismatch:
    case ErrorCode::kDeltasNotRetained:
    case ErrorCode::kBadGrid:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kFormatError:
    case ErrorCode::kConfigError:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    moi::write_file_atomic(out_path, text);
  }
}

void warn_degenerate(const moi::SampleRecordSet& records, moi::MetricKind kind) {
  const auto orders = moi::degenerate_orders(records, kind);
  if (orders.empty()) return;
  std::cerr << "note: " << moi::to_string(kind) << " is a convention, not a measurement, at order(s)";
  for (auto m : orders) std::cerr << " " << m;
  std::cerr << " (zero denominator)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-order interaction probing for black-box scorers"};
  app.set_version_flag("--version", std::string(moi::kEngineVersion));
  app.require_subcommand(1);

  // probe
  auto* probe = app.add_subcommand("probe", "Compute pair interaction profiles into an archive");
  std::string config_path, out_dir;
  int workers = 0, stop_after = -1;
  bool resume = false, force = false, quiet = false;
  probe->add_option("config", config_path, "Run configuration (YAML)")->required()->check(CLI::ExistingFile);
  probe->add_option("--out", out_dir, "Output directory (overrides the config)");
  probe->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  probe->add_flag("--resume", resume, "Continue an interrupted run with the same configuration");
  probe->add_flag("--force", force, "Replace an existing run in the output directory");
  probe->add_option("--stop-after", stop_after, "Stop after computing this many samples")->check(CLI::NonNegativeNumber);
  probe->add_flag("--quiet", quiet, "No progress output");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Aggregate one metric over an archive as CSV");
  std::string archive, which, metrics_out;
  metrics->add_option("archive", archive, "Run directory or record file")->required();
  metrics->add_option("--which", which, "strength|normalized|disentanglement|purity|average|eta")->required();
  metrics->add_option("--out", metrics_out, "Write CSV here instead of stdout");

  // compare
  auto* compare = app.add_subcommand("compare", "Per-order metric difference A - B as CSV");
  std::string archive_a, archive_b, compare_metric, compare_out;
  compare->add_option("a", archive_a, "Archive A")->required();
  compare->add_option("b", archive_b, "Archive B")->required();
  compare->add_option("--metric", compare_metric, "strength|normalized|disentanglement|purity|average|delta")->required();
  compare->add_option("--out", compare_out, "Write CSV here instead of stdout");

  // selfcheck
  auto* selfcheck = app.add_subcommand("selfcheck", "Check the attribution properties on seeded table games");
  int tables = 10;
  std::string report_path;
  bool corrupt = false;
  selfcheck->add_option("--tables", tables, "Tables per size")->check(CLI::PositiveNumber);
  selfcheck->add_option("--report", report_path, "Also write a JSON report");
  selfcheck->add_flag("--corrupt-weights", corrupt, "Negative control: skew one Shapley weight");

  // serve-builtin
  auto* serve = app.add_subcommand("serve-builtin", "Serve the built-in seeded network over the wire protocol");
  std::uint64_t serve_seed = 0;
  int serve_n = 0, serve_samples = 1, serve_hidden = moi::kDefaultHiddenWidth, serve_port = -1;
  std::string serve_host = "127.0.0.1";
  bool serve_stdio = false;
  serve->add_option("--seed", serve_seed, "Network and input seed")->required();
  serve->add_option("--n", serve_n, "Number of players (input length)")->required()->check(CLI::Range(1, moi::kMaxPlayers));
  serve->add_option("--samples", serve_samples, "Input vectors to serve (refs s0, s1, ...)")->check(CLI::PositiveNumber);
  serve->add_option("--hidden", serve_hidden, "Hidden width")->check(CLI::PositiveNumber);
  auto* stdio_flag = serve->add_flag("--stdio", serve_stdio, "One session on stdin/stdout");
  auto* port_opt = serve->add_option("--port", serve_port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_host, "TCP bind address");
  stdio_flag->excludes(port_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*probe) {
      auto config = moi::load_config(config_path);
      if (!out_dir.empty()) config.output = out_dir;
      if (workers > 0) config.workers = workers;
      moi::ProbeOptions options;
      options.resume = resume;
      options.force = force;
      options.stop_after = stop_after;
      options.log = quiet ? nullptr : &std::cerr;
      const auto result = moi::run_probe(config, options);
      if (!quiet) {
        std::cerr << (result.complete ? "complete: " : "partial: ") << result.computed << " computed, "
                  << result.skipped << " reused, " << result.samples_total << " total; cache hit rate "
                  << result.stats.hit_rate() << "\n";
        if (!result.complete) std::cerr << "rerun with --resume to finish\n";
      }
      return kExitOk;
    }
    if (*metrics) {
      const auto kind = moi::parse_metric_kind(which);
      const auto records = moi::read_archive(archive);
      emit(moi::metrics_csv(records, kind), metrics_out);
      warn_degenerate(records, kind);
      return kExitOk;
    }
    if (*compare) {
      const auto kind = moi::parse_metric_kind(compare_metric);
      const auto a = moi::read_archive(archive_a);
      const auto b = moi::read_archive(archive_b);
      emit(moi::compare_csv(a, b, kind), compare_out);
      return kExitOk;
    }
    if (*selfcheck) {
      moi::SelfcheckOptions options;
      options.tables_per_size = tables;
      options.corrupt_weights = corrupt;
      const auto report = moi::run_selfcheck(options);
      nlohmann::json j{{"tables", report.tables}, {"passed", report.passed()}};
      for (const auto& p : report.properties) {
        std::printf("%-22s max deviation %.3e  %s\n", p.name.c_str(), p.max_deviation, p.passed ? "PASS" : "FAIL");
        j["properties"].push_back({{"name", p.name}, {"max_deviation", p.max_deviation}, {"passed", p.passed}});
      }
      for (const auto& t : report.timings) {
        std::printf("n=%d: %.3f s\n", t.n, t.seconds);
        j["timing"].push_back({{"n", t.n}, {"seconds", t.seconds}});
      }
      std::printf("%s\n", report.passed() ? "selfcheck passed" : "selfcheck FAILED");
      if (!report_path.empty()) moi::write_file_atomic(report_path, j.dump(2) + "\n");
      return report.passed() ? kExitOk : kExitSelfcheck;
    }
    if (*serve) {
      auto backend = std::make_shared<moi::BuiltinBackend>(serve_seed, serve_n, serve_samples, serve_hidden);
      if (serve_stdio) {
        moi::serve_stdio(*backend);
        return kExitOk;
      }
      if (serve_port < 0) {
        std::cerr << "serve-builtin: pass --stdio or --port\n";
        return kExitValidation;
      }
      moi::TcpServer server(backend, {serve_host, serve_port});
      std::cout << "listening on " << server.address() << std::endl;
      server.wait();
      return kExitOk;
    }
  } catch (const moi::Error& e) {
    std::cerr << "moi: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "moi: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
