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

#pragma once

// Library half of the `kaon` command-line tool: run specifications, time
// series, figure datasets and the verification suites. Kept header-only so
// the test suite can drive it without spawning processes.

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kaon/fock.hpp"
#include "kaon/observables.hpp"

namespace kaon::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Bad command-line input. Maps to exit status 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class RunMode { ClosedForm, Ode, Fock, Compare };
enum class Format { Csv, Json };

inline std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::ClosedForm: return "closed-form";
    case RunMode::Ode: return "ode";
    case RunMode::Fock: return "fock";
    case RunMode::Compare: return "compare";
  }
  return "?";
}

inline std::optional<RunMode> parse_run_mode(std::string_view s) {
  for (auto m : {RunMode::ClosedForm, RunMode::Ode, RunMode::Fock, RunMode::Compare}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  return std::nullopt;
}

struct Grid {
  double t_start = 0.0;
  double t_end = 9.0;
  int samples = 901;

  std::vector<double> times() const {
    std::vector<double> out(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
      out[k] = k + 1 == samples ? t_end : t_start + (t_end - t_start) * k / (samples - 1);
    }
    return out;
  }
};

struct RunSpec {
  std::string params_source = "pdg-default";
  PhysParams params = pdg_defaults();
  ObservableKind observable = ObservableKind::TotalNumber;
  std::string state_text = "1,0";
  InitialState state = FlavorCount{1, 0};
  Grid grid;
  RunMode mode = RunMode::ClosedForm;
  Format format = Format::Csv;
  unsigned cutoff = 4;
  double tol = 1e-8;  // compare mode
};

struct TimeSeries {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;  // excluding t_ns
  std::vector<double> t;
  std::vector<std::vector<double>> rows;  // rows[k][column]
  double max_deviation = 0.0;             // compare mode only
};

// ---------------------------------------------------------------------------
// Formatting and hashing

// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::vector<std::pair<std::string, std::string>> params_metadata(const PhysParams& p) {
  return {{"tau_S_ns", format_double(p.tau_S)},
          {"tau_L_ns", format_double(p.tau_L)},
          {"delta_m_per_ns", format_double(p.delta_m)},
          {"A_L", format_double(p.A_L)},
          {"phase_pq_rad", format_double(p.phase_pq)},
          {"mass_mean_MeV", format_double(p.mass_mean)}};
}

inline std::string params_hash(const PhysParams& p) {
  std::string canon;
  for (const auto& [k, v] : params_metadata(p)) canon += k + "=" + v + "\n";
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

// ---------------------------------------------------------------------------
// Parsing

inline std::string trim(std::string_view s) {
  auto b = s.begin(), e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

inline double parse_number(std::string_view text, std::string_view field) {
  const std::string s = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw UsageError(std::string(field) + ": not a finite number: '" + s + "'");
  }
  return v;
}

inline unsigned parse_count(std::string_view text, std::string_view field) {
  const double v = parse_number(text, field);
  if (v < 0 || v != std::floor(v) || v > 1000) {
    throw UsageError(std::string(field) + ": expected a non-negative integer, got '" +
                     trim(text) + "'");
  }
  return static_cast<unsigned>(v);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// `n,nbar | ns:<n> | nl:<n> | mixed:p1,p2,re_w,im_w`
inline InitialState parse_state(std::string_view text) {
  const std::string s = trim(text);
  auto tail = [&](std::string_view prefix) { return std::string_view(s).substr(prefix.size()); };
  if (s.starts_with("ns:")) return ShortLivedState{parse_count(tail("ns:"), "state")};
  if (s.starts_with("nl:")) return LongLivedState{parse_count(tail("nl:"), "state")};
  if (s.starts_with("mixed:")) {
    const auto parts = split(tail("mixed:"), ',');
    if (parts.size() != 4) throw UsageError("state: mixed needs p1,p2,re_w,im_w");
    MixedSingleState m{parse_number(parts[0], "state p1"), parse_number(parts[1], "state p2"),
                       Complex(parse_number(parts[2], "state re_w"),
                               parse_number(parts[3], "state im_w"))};
    try {
      validate(m);
    } catch (const DomainError& e) {
      throw UsageError(std::string("state: ") + e.what());
    }
    return m;
  }
  const auto parts = split(s, ',');
  if (parts.size() != 2) {
    throw UsageError("state: expected 'n,nbar', 'ns:<n>', 'nl:<n>' or 'mixed:p1,p2,re_w,im_w', got '" +
                     s + "'");
  }
  return FlavorCount{parse_count(parts[0], "state n"), parse_count(parts[1], "state nbar")};
}

/// Key-value parameter file. Lines are `key = value`; `#` starts a comment.
/// Keys left out keep their experimental default.
inline PhysParams parse_params_text(std::string_view text) {
  const auto base = pdg_defaults();
  double tau_s = base.tau_S, tau_l = base.tau_L, dm = base.delta_m, a = base.A_L,
         phase = base.phase_pq, mass = base.mass_mean;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("params line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string_view value = std::string_view(line).substr(eq + 1);
    if (key == "tau_S_ns") tau_s = parse_number(value, key);
    else if (key == "tau_L_ns") tau_l = parse_number(value, key);
    else if (key == "delta_m_per_ns") dm = parse_number(value, key);
    else if (key == "A_L") a = parse_number(value, key);
    else if (key == "phase_pq_rad") phase = parse_number(value, key);
    else if (key == "mass_mean_MeV") mass = parse_number(value, key);
    else throw UsageError("params line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  try {
    return from_raw(tau_s, tau_l, dm, a, phase, mass);
  } catch (const DomainError& e) {
    throw UsageError(std::string("params: ") + e.what());
  }
}

inline PhysParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("params: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_params_text(ss.str());
}

/// Explicit path first, then $KAON_PARAMS, then the experimental defaults.
/// Returns (source label, params).
inline std::pair<std::string, PhysParams> resolve_params(const std::string& explicit_path) {
  std::string path = explicit_path;
  if (path.empty()) {
    if (const char* env = std::getenv("KAON_PARAMS"); env != nullptr && *env != '\0') path = env;
  }
  if (path.empty()) return {"pdg-default", pdg_defaults()};
  return {path, load_params_file(path)};
}

/// Field-by-field check; all problems are reported together.
inline void validate(const RunSpec& spec) {
  std::vector<std::string> problems;
  const auto& g = spec.grid;
  if (!(std::isfinite(g.t_start) && g.t_start >= 0.0)) problems.push_back("t-start: must be >= 0");
  if (!(std::isfinite(g.t_end) && g.t_end > g.t_start)) problems.push_back("t-end: must exceed t-start");
  if (g.samples < 2) problems.push_back("samples: must be >= 2");
  if (!(spec.tol > 0.0)) problems.push_back("tol: must be positive");
  const bool needs_fock = spec.mode == RunMode::Fock || spec.mode == RunMode::Compare;
  if (needs_fock && particle_count(spec.state) > spec.cutoff) {
    problems.push_back("cutoff: state has " + std::to_string(particle_count(spec.state)) +
                       " particles, cutoff is " + std::to_string(spec.cutoff));
  }
  if (needs_fock && spec.cutoff > 12) problems.push_back("cutoff: at most 12");
  if (!problems.empty()) {
    std::string msg = "invalid run specification:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw UsageError(msg);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

inline DensityMatrix fock_state(const FockBasis& basis, const PhysParams& params,
                                const InitialState& state) {
  return std::visit(
      [&](const auto& s) -> DensityMatrix {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlavorCount>) return make_state_flavor(basis, s.n, s.n_bar);
        else if constexpr (std::is_same_v<S, ShortLivedState>) return make_state_KS(basis, params, s.n);
        else if constexpr (std::is_same_v<S, LongLivedState>) return make_state_KL(basis, params, s.n);
        else return make_state_mixed_single(basis, s.p1, s.p2, s.w);
      },
      state);
}

inline std::vector<double> series_closed_form(const RunSpec& spec, const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(mean_closed_form(spec.observable, spec.params, spec.state, t));
  return out;
}

inline std::vector<double> series_ode(const RunSpec& spec, const std::vector<double>& times) {
  const auto moments = one_body_moments(spec.state, spec.params);
  const auto obs = propagate_ode_grid(spec.params, make_initial(spec.observable, spec.params), times);
  std::vector<double> out;
  out.reserve(times.size());
  for (const auto& o : obs) out.push_back(expectation(o, moments));
  return out;
}

inline std::vector<double> series_fock(const RunSpec& spec, const std::vector<double>& times) {
  const FockBasis basis(spec.cutoff);
  const auto ops = build_lindblad_set(spec.params, basis);
  const auto op = observable_matrix(basis, make_initial(spec.observable, spec.params));
  const auto states = evolve_density_grid(ops, fock_state(basis, spec.params, spec.state), times);
  std::vector<double> out;
  out.reserve(times.size());
  for (const auto& rho : states) out.push_back(rho.expectation(op));
  return out;
}

inline TimeSeries run(const RunSpec& spec) {
  validate(spec);
  TimeSeries ts;
  ts.metadata = {{"tool", "kaon " + std::string(kToolVersion)},
                 {"params_source", spec.params_source}};
  for (auto& kv : params_metadata(spec.params)) ts.metadata.push_back(std::move(kv));
  ts.metadata.push_back({"params_hash", params_hash(spec.params)});
  ts.metadata.push_back({"observable", std::string(to_string(spec.observable))});
  ts.metadata.push_back({"state", spec.state_text});
  ts.metadata.push_back({"mode", std::string(to_string(spec.mode))});
  ts.metadata.push_back({"t_start_ns", format_double(spec.grid.t_start)});
  ts.metadata.push_back({"t_end_ns", format_double(spec.grid.t_end)});
  ts.metadata.push_back({"samples", std::to_string(spec.grid.samples)});
  if (spec.mode == RunMode::Fock || spec.mode == RunMode::Compare) {
    ts.metadata.push_back({"cutoff", std::to_string(spec.cutoff)});
  }

  ts.t = spec.grid.times();
  std::vector<std::vector<double>> cols;
  switch (spec.mode) {
    case RunMode::ClosedForm:
      ts.columns = {std::string(to_string(spec.observable))};
      cols.push_back(series_closed_form(spec, ts.t));
      break;
    case RunMode::Ode:
      ts.columns = {std::string(to_string(spec.observable))};
      cols.push_back(series_ode(spec, ts.t));
      break;
    case RunMode::Fock:
      ts.columns = {std::string(to_string(spec.observable))};
      cols.push_back(series_fock(spec, ts.t));
      break;
    case RunMode::Compare: {
      ts.columns = {"closed", "ode", "fock", "max_dev"};
      cols.push_back(series_closed_form(spec, ts.t));
      cols.push_back(series_ode(spec, ts.t));
      cols.push_back(series_fock(spec, ts.t));
      std::vector<double> dev(ts.t.size());
      for (std::size_t k = 0; k < ts.t.size(); ++k) {
        dev[k] = std::max({std::abs(cols[0][k] - cols[1][k]), std::abs(cols[0][k] - cols[2][k]),
                           std::abs(cols[1][k] - cols[2][k])});
        ts.max_deviation = std::max(ts.max_deviation, dev[k]);
      }
      cols.push_back(std::move(dev));
      ts.metadata.push_back({"tol", format_double(spec.tol)});
      ts.metadata.push_back({"max_dev", format_double(ts.max_deviation)});
      break;
    }
  }
  ts.rows.assign(ts.t.size(), std::vector<double>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t k = 0; k < ts.t.size(); ++k) ts.rows[k][c] = cols[c][k];
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Output

inline void write_csv(const TimeSeries& ts, std::ostream& out) {
  for (const auto& [k, v] : ts.metadata) out << "# " << k << ": " << v << '\n';
  out << "t_ns";
  for (const auto& c : ts.columns) out << ',' << c;
  out << '\n';
  for (std::size_t k = 0; k < ts.t.size(); ++k) {
    out << format_double(ts.t[k]);
    for (double v : ts.rows[k]) out << ',' << format_double(v);
    out << '\n';
  }
}

inline nlohmann::ordered_json to_json(const TimeSeries& ts) {
  nlohmann::ordered_json j;
  auto& meta = j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ts.metadata) meta[k] = v;
  auto& columns = j["columns"] = nlohmann::ordered_json::array({"t_ns"});
  for (const auto& c : ts.columns) columns.push_back(c);
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < ts.t.size(); ++k) {
    auto row = nlohmann::ordered_json::array({ts.t[k]});
    for (double v : ts.rows[k]) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return j;
}

inline void write_series(const TimeSeries& ts, Format format, std::ostream& out) {
  if (format == Format::Csv) write_csv(ts, out);
  else out << to_json(ts).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Figure datasets

struct Curve {
  std::string name;
  std::function<double(double)> value;
};

inline TimeSeries tabulate(std::string title, const PhysParams& params, const Grid& grid,
                           const std::vector<Curve>& curves) {
  TimeSeries ts;
  ts.metadata = {{"tool", "kaon " + std::string(kToolVersion)}, {"figure", std::move(title)}};
  for (auto& kv : params_metadata(params)) ts.metadata.push_back(std::move(kv));
  ts.metadata.push_back({"params_hash", params_hash(params)});
  ts.t = grid.times();
  for (const auto& c : curves) ts.columns.push_back(c.name);
  for (double t : ts.t) {
    std::vector<double> row;
    row.reserve(curves.size());
    for (const auto& c : curves) row.push_back(c.value(t));
    ts.rows.push_back(std::move(row));
  }
  return ts;
}

inline std::string fmt_int(double x) { return std::to_string(static_cast<int>(std::lround(x))); }

/// Datasets for the four mean-value figures. Difference curves are the
/// exact mean minus its CP-symmetric counterpart.
inline std::vector<std::pair<std::string, TimeSeries>> figure_datasets(const PhysParams& params,
                                                                       const Grid& grid) {
  using K = ObservableKind;
  std::vector<std::pair<std::string, TimeSeries>> out;

  std::vector<Curve> number_curves;
  for (int sum = 1; sum <= 5; ++sum) {
    const FlavorWeights s(sum, 0);
    number_curves.push_back({"N_n" + fmt_int(sum) + "_nbar0",
                    [=](double t) { return mean_total_number(params, s, t); }});
  }
  for (int diff = 0; diff <= 4; ++diff) {
    const auto s = FlavorWeights::from_sum_difference(4, diff);
    number_curves.push_back({"dN_sum4_diff" + fmt_int(diff), [=](double t) {
                      return mean_total_number(params, s, t) - mean_total_number_cp(params, s, t);
                    }});
  }
  out.emplace_back("total_number", tabulate("mean total number", params, grid, number_curves));

  std::vector<Curve> strangeness_curves;
  for (int diff = 0; diff <= 4; ++diff) {
    const auto s = FlavorWeights::from_sum_difference(4, diff);
    strangeness_curves.push_back({"S_sum4_diff" + fmt_int(diff),
                    [=](double t) { return mean_strangeness(params, s, t); }});
  }
  for (int sum = 1; sum <= 5; ++sum) {
    const auto s = FlavorWeights::from_sum_difference(sum, 0);
    strangeness_curves.push_back({"dS_sum" + fmt_int(sum) + "_diff0", [=](double t) {
                      return mean_strangeness(params, s, t) - mean_strangeness_cp(params, s, t);
                    }});
  }
  out.emplace_back("strangeness", tabulate("mean strangeness", params, grid, strangeness_curves));

  for (auto kind : {K::NumberK0, K::NumberK0bar}) {
    std::vector<Curve> curves;
    for (unsigned n = 1; n <= 3; ++n) {
      for (unsigned nb = 0; nb <= 2; ++nb) {
        const FlavorCount s{n, nb};
        curves.push_back({std::string(kind == K::NumberK0 ? "NK0" : "NK0bar") + "_n" +
                              std::to_string(n) + "_nbar" + std::to_string(nb),
                          [=](double t) { return mean_flavor(kind, params, s, t); }});
      }
    }
    const bool k0 = kind == K::NumberK0;
    out.emplace_back(k0 ? "number_k0" : "number_k0bar",
                     tabulate(k0 ? "mean number of K0" : "mean number of K0bar", params, grid, curves));
  }
  return out;
}

/// Writes one file per figure into `out_dir`; returns the paths written.
inline std::vector<std::filesystem::path> figures(const std::filesystem::path& out_dir,
                                                  const PhysParams& params, const Grid& grid = {},
                                                  Format format = Format::Csv) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, ts] : figure_datasets(params, grid)) {
    const auto path = out_dir / (name + (format == Format::Csv ? ".csv" : ".json"));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_series(ts, format, out);
    written.push_back(path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Verification suites

struct Check {
  std::string name;
  std::string suite;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct Report {
  std::string suite;
  std::vector<Check> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["passed"] = r.passed();
  auto& arr = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    arr.push_back({{"name", c.name},
                   {"suite", c.suite},
                   {"deviation", c.deviation},
                   {"tolerance", c.tolerance},
                   {"passed", c.passed}});
  }
  return j;
}

namespace detail {

inline double rel_dev(double got, double want) { return std::abs(got - want) / std::abs(want); }

inline double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

inline std::vector<std::pair<std::string, std::pair<double, double>>> oracle_checks() {
  // (name, (deviation, default tolerance)). Reference values are 30-digit
  // evaluations of the same expressions.
  using K = ObservableKind;
  const auto pp = pdg_defaults();
  std::vector<std::pair<std::string, std::pair<double, double>>> out;
  auto add = [&](std::string name, double dev, double tol) {
    out.push_back({std::move(name), {dev, tol}});
  };
  add("gamma_S", rel_dev(pp.gamma_S, 11.1681929863748045566), 1e-14);
  add("gamma_L", rel_dev(pp.gamma_L, 0.0195465207193119624707), 1e-14);
  add("gamma", rel_dev(pp.gamma, 5.59386975354705825955), 1e-14);
  add("delta_gamma", rel_dev(pp.delta_gamma, 11.1486464656554925942), 1e-14);
  add("p", rel_dev(pp.p.real(), 0.708279605805503904317), 1e-14);
  add("q", rel_dev(pp.q.real(), 0.705932008057433247875), 1e-14);
  add("N(tau_S) single K0",
      rel_dev(mean_total_number(pp, FlavorCount{1, 0}, pp.tau_S), 0.682589356421014247735), 1e-12);
  add("N(1 ns) single K0",
      rel_dev(mean_total_number(pp, FlavorCount{1, 0}, 1.0), 0.488712943758796664458), 1e-12);
  add("S(2 ns) for (2,2)",
      rel_dev(mean_strangeness(pp, FlavorCount{2, 2}, 2.0), 0.00638557416306981601161), 1e-10);
  add("N_KS in 2_S at 1 ns",
      rel_dev(mean_heisenberg(K::NumberKS, pp, ShortLivedState{2}, 1.0), 2.82322446532606747336e-5),
      1e-9);
  add("N_KS in 2_L at 1 ns",
      rel_dev(mean_heisenberg(K::NumberKS, pp, LongLivedState{2}, 1.0), 2.16180848444049526613e-5),
      1e-6);

  const auto times = Grid{0.0, 9.0, 20}.times();
  double ode_dev = 0.0;
  for (auto kind : kAllObservableKinds) {
    RunSpec spec;
    spec.observable = kind;
    spec.state = FlavorCount{1, 1};
    const auto a = series_closed_form(spec, times);
    const auto b = series_ode(spec, times);
    for (std::size_t k = 0; k < times.size(); ++k) ode_dev = std::max(ode_dev, std::abs(a[k] - b[k]));
  }
  add("closed form vs ODE, (1,1)", ode_dev, 1e-9);

  RunSpec spec;
  spec.state = FlavorCount{2, 1};
  spec.cutoff = 3;
  const auto a = series_closed_form(spec, times);
  const auto b = series_fock(spec, times);
  double fock_dev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) fock_dev = std::max(fock_dev, std::abs(a[k] - b[k]));
  add("closed form vs Fock, total number (2,1)", fock_dev, 1e-8);
  return out;
}

inline std::vector<std::pair<std::string, std::pair<double, double>>> invariant_checks() {
  const auto pp = from_raw(0.08954, 51.16, 5.293, 0.00332, 0.4);
  std::vector<std::pair<std::string, std::pair<double, double>>> out;
  auto add = [&](std::string name, double dev, double tol) {
    out.push_back({std::move(name), {dev, tol}});
  };
  const FockBasis b1(1), b3(3);
  const Complex overlap = mass_eigen_ket(b1, pp, 1, +1).dot(mass_eigen_ket(b1, pp, 1, -1));
  add("<1_S|1_L> = A_L", std::abs(overlap - pp.A_L), 1e-12);

  const auto cs = short_lived_annihilator(b3, pp);
  const auto cl = long_lived_annihilator(b3, pp);
  const auto proj = interior_projector(b3);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(b3.size(), b3.size());
  add("[c_S, c_L^+] = A_L on interior",
      max_abs(proj * (cs * cl.adjoint() - cl.adjoint() * cs - pp.A_L * id) * proj), 1e-12);

  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.0, 10.0 * pp.tau_S), u5(0.0, 5.0);
  double herm = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto obs = BilinearObservable::hermitian(u(rng), Complex(u(rng), u(rng)), u(rng));
    herm = std::max(herm, propagate_closed_form(pp, obs, ut(rng)).hermiticity_defect());
  }
  add("Hermiticity preserved", herm, 1e-12);

  double semi = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t1 = u5(rng), t2 = u5(rng);
    const auto m12 = propagator_matrix(pp, t1 + t2).m;
    const auto prod = propagator_matrix(pp, t2).m * propagator_matrix(pp, t1).m;
    semi = std::max(semi, (m12 - prod).cwiseAbs().maxCoeff());
  }
  add("semigroup M(t1+t2) = M(t2) M(t1)", semi, 1e-10);

  const auto ops = build_lindblad_set(pp, b3);
  const Eigen::MatrixXcd k_def =
      -0.5 * (ops.jump_short.adjoint() * ops.jump_short + ops.jump_long.adjoint() * ops.jump_long);
  add("K = -1/2 sum L^+ L", max_abs(ops.dissipative - k_def), 1e-12);

  const auto flavor1 = build_lindblad_set(pp, b1);
  const auto mass1 = build_mass_basis_set(pp);
  add("mass-basis operators equal flavor-basis operators",
      std::max({max_abs(flavor1.hamiltonian - mass1.hamiltonian),
                max_abs(flavor1.jump_short - mass1.jump_short),
                max_abs(flavor1.jump_long - mass1.jump_long)}),
      1e-12);

  const auto times = Grid{0.0, 9.0, 200}.times();
  const auto n_op = observable_matrix(b3, {1, 0, 0, 1});
  const auto states = evolve_density_grid(ops, make_state_KL(b3, pp, 3), times);
  double trace = 0.0, neg = 0.0, rise = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto d = states[k].diagnostics();
    trace = std::max(trace, d.trace_error);
    neg = std::max(neg, -d.min_eigenvalue);
    if (k > 0) rise = std::max(rise, states[k].expectation(n_op) - states[k - 1].expectation(n_op));
  }
  add("trace preserved", trace, 1e-9);
  add("positivity (negated min eigenvalue)", neg, 1e-9);
  add("total number non-increasing", std::max(rise, 0.0), 1e-12);

  add("two-particle factorization at 1 ns",
      check_two_particle_factorization(pp, 1.0).max_deviation, 1e-8);
  return out;
}

}  // namespace detail

/// Runs `suite` ("oracle", "invariants" or "all"). A positive `tol_override`
/// replaces every default tolerance.
inline Report verify(const std::string& suite, std::optional<double> tol_override = std::nullopt) {
  if (suite != "oracle" && suite != "invariants" && suite != "all") {
    throw UsageError("suite: expected oracle, invariants or all, got '" + suite + "'");
  }
  if (tol_override && !(*tol_override > 0.0)) throw UsageError("tol: must be positive");
  Report report{suite, {}};
  auto collect = [&](const std::string& name, const auto& checks) {
    for (const auto& [check, dt] : checks) {
      const double tol = tol_override.value_or(dt.second);
      report.checks.push_back({check, name, dt.first, tol, dt.first <= tol});
    }
  };
  if (suite != "invariants") collect("oracle", detail::oracle_checks());
  if (suite != "oracle") collect("invariants", detail::invariant_checks());
  return report;
}

}  // namespace kaon::cli
