// Copyright 2026 The wignerbell Authors
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

// Command-line front end. Exit codes: 0 success, 1 usage or I/O error,
// 2 invalid configuration, 3 sampling check failed, 4 estimator undefined.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wignerbell/wignerbell.hpp"

namespace {

using namespace wignerbell;

struct Overrides {
  std::string config_file;
  std::optional<std::string> engine;
  std::optional<std::uint64_t> trajectories;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> batches;
  std::optional<double> gain;
  std::optional<double> eta;
  std::optional<std::string> out;
  std::vector<std::uint64_t> snapshots;
  std::vector<double> gains;
  std::vector<double> etas;
  bool literal_angles = false;
  bool print_config = false;
  unsigned threads = default_threads();
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_file, "INI configuration file")->check(CLI::ExistingFile);
  app->add_option("--engine", o.engine, "mode or spatial");
  app->add_option("-n,--trajectories", o.trajectories, "trajectories per point");
  app->add_option("-s,--seed", o.seed, "master seed");
  app->add_option("--batches", o.batches, "jackknife batches");
  app->add_option("-G,--gain", o.gain, "mean photons per mode");
  app->add_option("--eta", o.eta, "detector efficiency");
  app->add_option("-o,--out", o.out, "output directory");
  app->add_option("-j,--threads", o.threads, "worker threads (results do not depend on it)");
  app->add_flag("--literal-angles", o.literal_angles, "use theta2' = -pi/4 instead of +pi/4");
  app->add_flag("--print-config", o.print_config, "print the effective configuration first");
}

RunConfig effective_config(const Overrides& o) {
  RunConfig c = o.config_file.empty() ? RunConfig{} : load_config(o.config_file);
  if (o.engine) {
    if (*o.engine == "mode") c.engine = Engine::kMode;
    else if (*o.engine == "spatial") c.engine = Engine::kSpatial;
    else throw ConfigError("--engine must be mode or spatial");
  }
  if (o.trajectories) c.trajectories = *o.trajectories;
  if (o.seed) c.master_seed = *o.seed;
  if (o.batches) c.batches = *o.batches;
  if (o.gain) c.gain = *o.gain;
  if (o.eta) c.efficiency = *o.eta;
  if (o.out) c.output_dir = *o.out;
  if (!o.snapshots.empty()) c.snapshots = o.snapshots;
  if (!o.gains.empty()) c.sweep_gains = o.gains;
  if (!o.etas.empty()) c.sweep_efficiencies = o.etas;
  if (o.literal_angles) c.angles = literal_published_angles();
  c.validate();
  if (o.print_config) std::cout << serialize_config(c) << "\n";
  return c;
}

void print_result(const BellResult& r) {
  std::cout << fmt::format("n = {}\nB = {:.5f} +- {:.5f}\nC = {:.5f} +- {:.5f}\n"
                           "negative fraction = {:.4f}\n",
                           r.n_trajectories, r.B, r.stderr_B, r.C, r.stderr_C, r.negative_fraction);
}

int oracle(const Overrides& o) {
  const RunConfig c = effective_config(o);
  const double G = c.gain, eta = c.efficiency;
  const WickPrediction w = wick_oracle(G, eta, c.angles);
  const AnalyticMoments m = analytic_moments(G);
  std::cout << fmt::format("G = {}\neta = {}\n", G, eta);
  std::cout << fmt::format("analytic B = {:.10f}\nanalytic C (leading order) = {:.10f}\n",
                           analytic_B(G), analytic_C(G, eta));
  std::cout << fmt::format("<N1> = {}\nVar(N1) = {}\nCov(N1,N2) = {}\n<N1 N2> = {}\n",
                           m.mean_pixel, m.var_pixel, m.cov_pixels, m.mean_pixel_product);
  if (w.defined) {
    std::cout << fmt::format("exact E = {:.10f} {:.10f} {:.10f} {:.10f}\n", w.E[0], w.E[1], w.E[2],
                             w.E[3]);
    std::cout << fmt::format("exact B = {:.10f}\nexact C = {:.10f}\n", w.B, w.C);
  } else {
    std::cout << "exact B, C undefined (no light)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wigner-representation Monte Carlo of Bell tests with parametric down-conversion"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "single point with convergence rows and summary");
  add_common(run, o);
  auto* converge = app.add_subcommand("converge", "single point with explicit snapshot sizes");
  add_common(converge, o);
  converge->add_option("--snapshots", o.snapshots, "ensemble sizes for convergence rows")->delimiter(',');
  auto* sg = app.add_subcommand("sweep-gain", "B and C versus G");
  add_common(sg, o);
  sg->add_option("--gains", o.gains, "comma-separated G values")->delimiter(',');
  auto* se = app.add_subcommand("sweep-eta", "B and C versus detector efficiency");
  add_common(se, o);
  se->add_option("--etas", o.etas, "comma-separated efficiencies")->delimiter(',');
  auto* si = app.add_subcommand("spatial-image", "far-field mean images and intersection pixels");
  add_common(si, o);
  auto* orc = app.add_subcommand("oracle", "closed-form and exact Gaussian predictions");
  add_common(orc, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*orc) return oracle(o);
    const RunConfig c = effective_config(o);
    if (*run || *converge) {
      const RunPointResult r = run_point(c, o.threads);
      print_result(r.result);
      std::cout << "wrote " << c.output_dir << "/convergence.csv and summary.json\n";
    } else if (*sg) {
      sweep_gain(c, o.threads);
      std::cout << "wrote " << c.output_dir << "/sweep_gain.csv\n";
    } else if (*se) {
      sweep_efficiency(c, o.threads);
      std::cout << "wrote " << c.output_dir << "/sweep_eta.csv\n";
    } else if (*si) {
      const SpatialImageResult r = spatial_image(c, o.threads);
      std::cout << "sampling: " << r.diagnostic.message << "\n";
      if (r.selection) {
        const auto& p = *r.selection;
        std::cout << fmt::format("intersection pixels: ({}, {}) and ({}, {})\n", p.x1, p.y1, p.x2, p.y2);
      } else {
        std::cout << "intersection scan: " << r.scan_message << "\n";
      }
      std::cout << "wrote " << c.output_dir << "/mean_intensity.pgm\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SamplingError& e) {
    std::cerr << "sampling error: " << e.what() << "\n";
    return 3;
  } catch (const StatisticsError& e) {
    std::cerr << "statistics error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
