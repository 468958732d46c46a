// Copyright 2026 The kaon-lindblad Authors
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

// kaon: mean-value time series, figure datasets and verification suites.
//
// Exit status: 0 success, 1 usage error, 2 verification failure,
// 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "runner.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kVerifyFailed = 2;
constexpr int kNumerical = 3;

struct Options {
  std::string params_path;
  std::string observable = "total-number";
  std::string state = "1,0";
  double t_start = 0.0;
  double t_end = 9.0;
  int samples = 901;
  std::string mode = "closed-form";
  std::string format = "csv";
  unsigned cutoff = 4;
  std::string out;
  std::optional<double> tol;
  std::string suite = "all";
};

kaon::cli::Format require_format(const std::string& s) {
  const auto f = kaon::cli::parse_format(s);
  if (!f) throw kaon::cli::UsageError("format: expected csv or json, got '" + s + "'");
  return *f;
}

int do_run(const Options& o) {
  using namespace kaon::cli;
  RunSpec spec;
  std::tie(spec.params_source, spec.params) = resolve_params(o.params_path);
  const auto kind = kaon::parse_observable_kind(o.observable);
  if (!kind) throw UsageError("observable: unknown kind '" + o.observable + "'");
  spec.observable = *kind;
  spec.state_text = o.state;
  spec.state = parse_state(o.state);
  spec.grid = {o.t_start, o.t_end, o.samples};
  const auto mode = parse_run_mode(o.mode);
  if (!mode) throw UsageError("mode: expected closed-form, ode, fock or compare, got '" + o.mode + "'");
  spec.mode = *mode;
  spec.format = require_format(o.format);
  spec.cutoff = o.cutoff;
  if (o.tol) spec.tol = *o.tol;

  const auto ts = run(spec);
  if (o.out.empty()) {
    write_series(ts, spec.format, std::cout);
  } else {
    std::ofstream file(o.out);
    if (!file) throw std::runtime_error("cannot write " + o.out);
    write_series(ts, spec.format, file);
  }
  if (spec.mode == RunMode::Compare && ts.max_deviation > spec.tol) {
    std::cerr << "kaon: compare: max deviation " << format_double(ts.max_deviation)
              << " exceeds tolerance " << format_double(spec.tol) << '\n';
    return kVerifyFailed;
  }
  return 0;
}

int do_figures(const Options& o) {
  using namespace kaon::cli;
  const auto params = resolve_params(o.params_path).second;
  Grid grid{o.t_start, o.t_end, o.samples};
  RunSpec probe;
  probe.grid = grid;
  validate(probe);
  const std::string dir = o.out.empty() ? "figures" : o.out;
  for (const auto& path : figures(dir, params, grid, require_format(o.format))) {
    std::cout << path.string() << '\n';
  }
  return 0;
}

int do_verify(const Options& o) {
  const auto report = kaon::cli::verify(o.suite, o.tol);
  const auto text = kaon::cli::to_json(report).dump(2);
  if (o.out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream file(o.out);
    if (!file) throw std::runtime_error("cannot write " + o.out);
    file << text << '\n';
  }
  for (const auto& c : report.checks) {
    if (!c.passed) {
      std::cerr << "kaon: FAIL " << c.suite << ": " << c.name << " deviation "
                << kaon::cli::format_double(c.deviation) << " > "
                << kaon::cli::format_double(c.tolerance) << '\n';
    }
  }
  return report.passed() ? 0 : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neutral-kaon open-system mean values"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Evaluate one observable over a time grid");
  run->add_option("--params", o.params_path, "Parameter file (default: $KAON_PARAMS, else experimental values)");
  run->add_option("--observable", o.observable, "total-number | strangeness | number-k0 | number-k0bar | number-ks | number-kl");
  run->add_option("--state", o.state, "n,nbar | ns:<n> | nl:<n> | mixed:p1,p2,re_w,im_w");
  run->add_option("--t-start", o.t_start, "First time [ns]");
  run->add_option("--t-end", o.t_end, "Last time [ns]");
  run->add_option("--samples", o.samples, "Number of grid points");
  run->add_option("--mode", o.mode, "closed-form | ode | fock | compare");
  run->add_option("--format", o.format, "csv | json");
  run->add_option("--cutoff", o.cutoff, "Fock-space cutoff on total particle number");
  run->add_option("--out", o.out, "Output file (default: stdout)");
  run->add_option("--tol", o.tol, "Compare-mode tolerance (default 1e-8)");

  auto* fig = app.add_subcommand("figures", "Write the four figure datasets");
  fig->add_option("--params", o.params_path, "Parameter file");
  fig->add_option("--t-start", o.t_start, "First time [ns]");
  fig->add_option("--t-end", o.t_end, "Last time [ns]");
  fig->add_option("--samples", o.samples, "Number of grid points");
  fig->add_option("--format", o.format, "csv | json");
  fig->add_option("--out", o.out, "Output directory (default: figures)");

  auto* ver = app.add_subcommand("verify", "Run the oracle and invariant suites");
  ver->add_option("--suite", o.suite, "oracle | invariants | all");
  ver->add_option("--tol", o.tol, "Replace every check tolerance");
  ver->add_option("--out", o.out, "Report file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) return do_run(o);
    if (*fig) return do_figures(o);
    return do_verify(o);
  } catch (const kaon::cli::UsageError& e) {
    std::cerr << "kaon: " << e.what() << '\n';
    return kUsage;
  } catch (const kaon::DomainError& e) {
    std::cerr << "kaon: " << e.what() << '\n';
    return kUsage;
  } catch (const kaon::IntegrationError& e) {
    std::cerr << "kaon: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "kaon: " << e.what() << '\n';
    return kNumerical;
  }
}
