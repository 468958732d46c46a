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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "runner.hpp"

namespace {

using namespace kaon::cli;
using kaon::ObservableKind;

std::string render(const TimeSeries& ts, Format f) {
  std::ostringstream out;
  write_series(ts, f, out);
  return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kaon_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(ParseState, AllForms) {
  EXPECT_EQ(std::get<kaon::FlavorCount>(parse_state("2,1")), (kaon::FlavorCount{2, 1}));
  EXPECT_EQ(std::get<kaon::ShortLivedState>(parse_state("ns:3")).n, 3u);
  EXPECT_EQ(std::get<kaon::LongLivedState>(parse_state(" nl:2 ")).n, 2u);
  const auto m = std::get<kaon::MixedSingleState>(parse_state("mixed:0.5,0.3,0.1,-0.2"));
  EXPECT_DOUBLE_EQ(m.p1, 0.5);
  EXPECT_DOUBLE_EQ(m.w.imag(), -0.2);
}

TEST(ParseState, RejectsMalformed) {
  for (const char* bad : {"", "1", "1,2,3", "a,b", "-1,0", "1.5,0", "ns:", "mixed:0.7,0.5,0,0",
                          "mixed:0.1,0.1,0.5,0", "mixed:1,2"}) {
    EXPECT_THROW(parse_state(bad), UsageError) << bad;
  }
}

TEST(ParseParams, KeysCommentsAndDefaults) {
  const auto pp = parse_params_text("# comment\ntau_S_ns = 0.1\n\nA_L=0  # CP symmetric\n");
  EXPECT_DOUBLE_EQ(pp.tau_S, 0.1);
  EXPECT_DOUBLE_EQ(pp.A_L, 0.0);
  EXPECT_DOUBLE_EQ(pp.tau_L, kaon::pdg_defaults().tau_L);
  EXPECT_EQ(parse_params_text(""), kaon::pdg_defaults());
}

TEST(ParseParams, RejectsBadInput) {
  EXPECT_THROW(parse_params_text("tau_S_ns 0.1"), UsageError);
  EXPECT_THROW(parse_params_text("tau_s_ns = 0.1"), UsageError);
  EXPECT_THROW(parse_params_text("A_L = abc"), UsageError);
  EXPECT_THROW(parse_params_text("A_L = 1.5"), UsageError);
  EXPECT_THROW(parse_params_text("tau_S_ns = -1"), UsageError);
  EXPECT_THROW(load_params_file("/nonexistent/kaon.params"), UsageError);
}

TEST(ResolveParams, ExplicitPathThenEnvironmentThenDefaults) {
  const auto dir = scratch_dir("params");
  const auto file = dir / "p.txt";
  std::ofstream(file) << "A_L = 0.001\n";
  ::unsetenv("KAON_PARAMS");
  EXPECT_EQ(resolve_params("").first, "pdg-default");
  ::setenv("KAON_PARAMS", file.c_str(), 1);
  EXPECT_DOUBLE_EQ(resolve_params("").second.A_L, 0.001);
  EXPECT_EQ(resolve_params("").first, file.string());
  ::unsetenv("KAON_PARAMS");
  EXPECT_DOUBLE_EQ(resolve_params(file.string()).second.A_L, 0.001);
}

TEST(Validate, ReportsEveryBadField) {
  RunSpec spec;
  spec.grid = {-1.0, -2.0, 1};
  spec.mode = RunMode::Fock;
  spec.state = kaon::FlavorCount{3, 3};
  spec.cutoff = 4;
  try {
    validate(spec);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    for (const char* field : {"t-start", "t-end", "samples", "cutoff"}) {
      EXPECT_NE(msg.find(field), std::string::npos) << field;
    }
  }
}

TEST(Run, TotalNumberStartsAtOneAndDecreases) {
  RunSpec spec;
  const auto ts = run(spec);
  ASSERT_EQ(ts.t.size(), 901u);
  EXPECT_DOUBLE_EQ(ts.t.front(), 0.0);
  EXPECT_DOUBLE_EQ(ts.t.back(), 9.0);
  EXPECT_DOUBLE_EQ(ts.rows.front()[0], 1.0);
  for (std::size_t k = 1; k < ts.t.size(); ++k) {
    EXPECT_GT(ts.t[k], ts.t[k - 1]);
    EXPECT_LT(ts.rows[k][0], ts.rows[k - 1][0]);
  }
}

TEST(Run, CpSymmetricStrangenessIsDampedCosine) {
  RunSpec spec;
  spec.params = kaon::with_asymmetry(kaon::pdg_defaults(), 0.0);
  spec.observable = ObservableKind::Strangeness;
  const auto ts = run(spec);
  for (std::size_t k = 0; k < ts.t.size(); ++k) {
    const double t = ts.t[k];
    EXPECT_NEAR(ts.rows[k][0], std::exp(-spec.params.gamma * t) * std::cos(spec.params.delta_m * t),
                1e-14);
  }
}

TEST(Run, CompareModeAgreesAcrossEngines) {
  for (const char* state : {"1,0", "ns:2", "nl:1", "mixed:0.4,0.5,0.2,-0.3"}) {
    RunSpec spec;
    spec.state_text = state;
    spec.state = parse_state(state);
    spec.mode = RunMode::Compare;
    spec.observable = ObservableKind::NumberK0bar;
    spec.grid.samples = 91;
    const auto ts = run(spec);
    EXPECT_EQ(ts.columns, (std::vector<std::string>{"closed", "ode", "fock", "max_dev"}));
    EXPECT_LE(ts.max_deviation, 1e-8) << state;
  }
}

TEST(Run, ModesProduceSameSeries) {
  RunSpec spec;
  spec.observable = ObservableKind::NumberKL;
  spec.state = kaon::FlavorCount{1, 2};
  spec.grid = {0.5, 3.0, 11};
  std::vector<std::vector<double>> results;
  for (auto mode : {RunMode::ClosedForm, RunMode::Ode, RunMode::Fock}) {
    spec.mode = mode;
    const auto ts = run(spec);
    std::vector<double> col;
    for (const auto& r : ts.rows) col.push_back(r[0]);
    results.push_back(col);
  }
  for (std::size_t k = 0; k < results[0].size(); ++k) {
    EXPECT_NEAR(results[0][k], results[1][k], 1e-9);
    EXPECT_NEAR(results[0][k], results[2][k], 1e-8);
  }
}

TEST(Output, CsvLayoutAndMetadata) {
  RunSpec spec;
  spec.grid.samples = 3;
  const auto text = render(run(spec), Format::Csv);
  for (const char* key : {"# params_hash: ", "# tau_S_ns: 0.08954", "# A_L: 0.00332", "# mode: closed-form",
                          "# observable: total-number", "# state: 1,0"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_NE(text.find("\nt_ns,total-number\n0,1\n4.5,"), std::string::npos);
}

TEST(Output, JsonMirrorsCsv) {
  RunSpec spec;
  spec.grid.samples = 5;
  const auto ts = run(spec);
  const auto j = nlohmann::json::parse(render(ts, Format::Json));
  EXPECT_EQ(j["columns"], nlohmann::json({"t_ns", "total-number"}));
  ASSERT_EQ(j["rows"].size(), 5u);
  EXPECT_DOUBLE_EQ(j["rows"][2][1].get<double>(), ts.rows[2][0]);
  EXPECT_EQ(j["metadata"]["params_hash"], params_hash(spec.params));
}

TEST(Output, DeterministicAndHashSensitive) {
  RunSpec spec;
  spec.mode = RunMode::Compare;
  spec.grid.samples = 21;
  EXPECT_EQ(render(run(spec), Format::Csv), render(run(spec), Format::Csv));
  EXPECT_EQ(render(run(spec), Format::Json), render(run(spec), Format::Json));
  auto other = spec.params;
  other = kaon::with_asymmetry(other, 0.00333);
  EXPECT_NE(params_hash(spec.params), params_hash(other));
}

TEST(Figures, WritesFourDatasets) {
  const auto dir = scratch_dir("figures");
  const auto files = figures(dir, kaon::pdg_defaults(), Grid{0.0, 9.0, 91});
  ASSERT_EQ(files.size(), 4u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
}

TEST(Figures, CurveFamilies) {
  const auto pp = kaon::pdg_defaults();
  const auto data = figure_datasets(pp, Grid{0.0, 9.0, 901});
  ASSERT_EQ(data.size(), 4u);

  const auto& number_curves = data[0].second;
  ASSERT_EQ(number_curves.columns.size(), 10u);
  for (int c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(number_curves.rows[0][c], c + 1.0);

  // Equal K0 and K0bar content: strangeness is A_L-suppressed.
  const auto& strangeness_curves = data[1].second;
  for (std::size_t k = 0; k < strangeness_curves.t.size(); ++k) {
    const double t = strangeness_curves.t[k];
    const double bound = pp.A_L * 4.0 *
                         (0.5 * (std::exp(-pp.gamma_S * t) + std::exp(-pp.gamma_L * t)) +
                          std::exp(-pp.gamma * t));
    EXPECT_LE(std::abs(strangeness_curves.rows[k][0]), bound * 1.01 + 1e-15);
  }

  // After about 8 ns each bundle has converged.
  for (int f : {2, 3}) {
    const auto& fig = data[f].second;
    const auto it = std::find(fig.t.begin(), fig.t.end(), 8.0);
    ASSERT_NE(it, fig.t.end());
    const auto& row = fig.rows[it - fig.t.begin()];
    // Curves sharing n + nbar collapse together; compare within each total.
    for (unsigned total = 2; total <= 4; ++total) {
      double lo = 1e300, hi = -1e300;
      for (unsigned n = 1; n <= 3; ++n) {
        for (unsigned nb = 0; nb <= 2; ++nb) {
          if (n + nb != total) continue;
          const double v = row[(n - 1) * 3 + nb];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      EXPECT_LE((hi - lo) / hi, 0.02) << "dataset " << f << " total " << total;
    }
  }
}

TEST(Verify, DefaultSuitesPass) {
  const auto report = verify("all");
  EXPECT_TRUE(report.passed());
  bool has_braket = false;
  for (const auto& c : report.checks) has_braket |= c.name.find("<1_S|1_L>") != std::string::npos;
  EXPECT_TRUE(has_braket);
}

TEST(Verify, UnattainableToleranceFails) {
  const auto report = verify("oracle", 1e-30);
  EXPECT_FALSE(report.passed());
  for (const auto& c : report.checks) EXPECT_EQ(c.tolerance, 1e-30);
}

TEST(Verify, RejectsUnknownSuite) {
  EXPECT_THROW(verify("everything"), UsageError);
  EXPECT_THROW(verify("all", -1.0), UsageError);
}

}  // namespace
