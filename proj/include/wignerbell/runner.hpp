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

// Run configuration, deterministic parallel orchestration and file output.
//
// Trajectory i always draws from RNG stream i of the master seed. Work is
// cut into segments whose boundaries depend only on the configuration, each
// segment is simulated by whichever worker picks it up, and results are
// combined in segment order, so outputs do not depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wignerbell/convergence.hpp"
#include "wignerbell/error.hpp"
#include "wignerbell/estimators.hpp"
#include "wignerbell/mode_engine.hpp"
#include "wignerbell/rng.hpp"
#include "wignerbell/spatial_engine.hpp"
#include "wignerbell/statistics.hpp"

namespace wignerbell {

inline constexpr const char* kVersion = "1.0.0";

enum class Engine { kMode, kSpatial };

struct SpatialConfig {
  std::size_t nx = 128;
  std::size_t ny = 128;
  double dx = 1.0;
  CrystalParams crystal = design_crystal(RingDesign{});
  PixelPairSelection pixels = design_intersection(RingDesign{});
  bool enforce_sampling = true;
};

struct RunConfig {
  // [run]
  Engine engine = Engine::kMode;
  std::uint64_t trajectories = 20000;
  std::uint64_t master_seed = 1;
  std::uint64_t batches = 20;
  /// Ensemble sizes at which convergence rows are taken; empty means
  /// 1000, 2000, 4000, ... and the final size.
  std::vector<std::uint64_t> snapshots;
  /// Required significance of estimator denominators in run_point.
  double denominator_z = 3.0;
  // [source]
  double gain = 0.01;
  // [analyzer]
  AnalyzerSetting angles = optimal_angles();
  // [detector]
  double efficiency = 1.0;
  // [sweep]
  std::vector<double> sweep_gains = {0.01, 0.05, 0.1, 0.2, 0.46};
  std::vector<double> sweep_efficiencies = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  // [spatial]
  SpatialConfig spatial;
  // [output]
  std::string output_dir = "out";

  void validate() const;
};

// ---------------------------------------------------------------------------
// Serialization

namespace config_detail {

inline std::string fmt_double(double x) { return fmt::format("{}", x); }

inline double parse_double(const std::string& key, const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ConfigError("config: '" + key + "' is not a number: " + s);
  return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config: '" + key + "' is not a non-negative integer: " + s);
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' out of range: " + s);
  }
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: '" + key + "' must be true or false: " + s);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += f(v[i]);
  }
  return s;
}

}  // namespace config_detail

/// Canonical INI text of a configuration. Doubles use the shortest
/// representation that parses back to the same value.
inline std::string serialize_config(const RunConfig& c) {
  using config_detail::fmt_double;
  using config_detail::join;
  auto u64 = [](std::uint64_t v) { return std::to_string(v); };
  const CrystalParams& k = c.spatial.crystal;
  const PixelPairSelection& p = c.spatial.pixels;
  std::ostringstream o;
  o << "[run]\n"
    << "engine = " << (c.engine == Engine::kMode ? "mode" : "spatial") << "\n"
    << "trajectories = " << c.trajectories << "\n"
    << "master_seed = " << c.master_seed << "\n"
    << "batches = " << c.batches << "\n"
    << "snapshots = " << join(c.snapshots, u64) << "\n"
    << "denominator_z = " << fmt_double(c.denominator_z) << "\n\n"
    << "[source]\n"
    << "gain = " << fmt_double(c.gain) << "\n\n"
    << "[analyzer]\n"
    << "theta1 = " << fmt_double(c.angles.theta1) << "\n"
    << "theta1_prime = " << fmt_double(c.angles.theta1_prime) << "\n"
    << "theta2 = " << fmt_double(c.angles.theta2) << "\n"
    << "theta2_prime = " << fmt_double(c.angles.theta2_prime) << "\n\n"
    << "[detector]\n"
    << "efficiency = " << fmt_double(c.efficiency) << "\n\n"
    << "[sweep]\n"
    << "gains = " << join(c.sweep_gains, fmt_double) << "\n"
    << "efficiencies = " << join(c.sweep_efficiencies, fmt_double) << "\n\n"
    << "[spatial]\n"
    << "nx = " << c.spatial.nx << "\n"
    << "ny = " << c.spatial.ny << "\n"
    << "dx = " << fmt_double(c.spatial.dx) << "\n"
    << "length = " << fmt_double(k.length) << "\n"
    << "nsteps = " << k.nsteps << "\n"
    << "gain_per_length = " << fmt_double(k.gain) << "\n"
    << "pump_waist = " << fmt_double(k.pump_waist) << "\n"
    << "diffraction = " << fmt_double(k.diffraction_coeff) << "\n"
    << "mismatch = " << fmt_double(k.mismatch_coeff) << "\n"
    << "ring_radius = " << fmt_double(k.ring_radius) << "\n"
    << "ring_offset = " << fmt_double(k.ring_offset) << "\n"
    << "gain_threshold = " << fmt_double(k.gain_threshold) << "\n"
    << "pixels = " << p.x1 << "," << p.y1 << "," << p.x2 << "," << p.y2 << "\n"
    << "enforce_sampling = " << (c.spatial.enforce_sampling ? "true" : "false") << "\n\n"
    << "[output]\n"
    << "directory = " << c.output_dir << "\n";
  return o.str();
}

/// Parses INI text on top of the defaults. Unknown sections or keys are
/// errors, so typos do not pass silently.
inline RunConfig parse_config(const std::string& text, RunConfig c = {}) {
  namespace pt = boost::property_tree;
  using namespace config_detail;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const std::string v = node.get_value<std::string>();
      auto dbl = [&] { return parse_double(name, v); };
      auto u64 = [&] { return parse_u64(name, v); };
      CrystalParams& k = c.spatial.crystal;

      if (name == "run.engine") {
        if (v == "mode") c.engine = Engine::kMode;
        else if (v == "spatial") c.engine = Engine::kSpatial;
        else throw ConfigError("config: run.engine must be mode or spatial");
      } else if (name == "run.trajectories") c.trajectories = u64();
      else if (name == "run.master_seed") c.master_seed = u64();
      else if (name == "run.batches") c.batches = u64();
      else if (name == "run.snapshots") {
        c.snapshots.clear();
        for (const auto& s : split_list(v)) c.snapshots.push_back(parse_u64(name, s));
      } else if (name == "run.denominator_z") c.denominator_z = dbl();
      else if (name == "source.gain") c.gain = dbl();
      else if (name == "analyzer.theta1") c.angles.theta1 = dbl();
      else if (name == "analyzer.theta1_prime") c.angles.theta1_prime = dbl();
      else if (name == "analyzer.theta2") c.angles.theta2 = dbl();
      else if (name == "analyzer.theta2_prime") c.angles.theta2_prime = dbl();
      else if (name == "detector.efficiency") c.efficiency = dbl();
      else if (name == "sweep.gains") {
        c.sweep_gains.clear();
        for (const auto& s : split_list(v)) c.sweep_gains.push_back(parse_double(name, s));
      } else if (name == "sweep.efficiencies") {
        c.sweep_efficiencies.clear();
        for (const auto& s : split_list(v)) c.sweep_efficiencies.push_back(parse_double(name, s));
      } else if (name == "spatial.nx") c.spatial.nx = u64();
      else if (name == "spatial.ny") c.spatial.ny = u64();
      else if (name == "spatial.dx") c.spatial.dx = dbl();
      else if (name == "spatial.length") k.length = dbl();
      else if (name == "spatial.nsteps") k.nsteps = static_cast<int>(u64());
      else if (name == "spatial.gain_per_length") k.gain = dbl();
      else if (name == "spatial.pump_waist") k.pump_waist = dbl();
      else if (name == "spatial.diffraction") k.diffraction_coeff = dbl();
      else if (name == "spatial.mismatch") k.mismatch_coeff = dbl();
      else if (name == "spatial.ring_radius") k.ring_radius = dbl();
      else if (name == "spatial.ring_offset") k.ring_offset = dbl();
      else if (name == "spatial.gain_threshold") k.gain_threshold = dbl();
      else if (name == "spatial.pixels") {
        const auto items = split_list(v);
        if (items.size() != 4) throw ConfigError("config: spatial.pixels needs x1,y1,x2,y2");
        c.spatial.pixels = {parse_u64(name, items[0]), parse_u64(name, items[1]),
                            parse_u64(name, items[2]), parse_u64(name, items[3])};
      } else if (name == "spatial.enforce_sampling") c.spatial.enforce_sampling = parse_bool(name, v);
      else if (name == "output.directory") c.output_dir = v;
      else throw ConfigError("config: unknown key '" + name + "'");
    }
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig defaults = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str(), std::move(defaults));
}

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

inline void RunConfig::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (trajectories < 1) throw ConfigError("trajectories must be >= 1");
  if (batches < 1) throw ConfigError("batches must be >= 1");
  if (!(denominator_z >= 0.0)) throw ConfigError("denominator_z must be >= 0");
  if (!(gain >= 0.0) || !finite(gain)) throw ConfigError("gain G must be finite and >= 0");
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ConfigError("efficiency must lie in [0, 1]");
  for (double a : {angles.theta1, angles.theta1_prime, angles.theta2, angles.theta2_prime}) {
    if (!finite(a)) throw ConfigError("analyzer angles must be finite");
  }
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i] < 1 || snapshots[i] > trajectories) {
      throw ConfigError("snapshots must lie in [1, trajectories]");
    }
    if (i && snapshots[i] < snapshots[i - 1]) throw ConfigError("snapshots must be non-decreasing");
  }
  for (double g : sweep_gains) {
    if (!(g >= 0.0) || !finite(g)) throw ConfigError("sweep gains must be finite and >= 0");
  }
  for (double e : sweep_efficiencies) {
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("sweep efficiencies must lie in [0, 1]");
  }
  if (!is_power_of_two(spatial.nx) || !is_power_of_two(spatial.ny)) {
    throw ConfigError("spatial grid dimensions must be powers of two");
  }
  if (!(spatial.dx > 0.0) || !finite(spatial.dx)) throw ConfigError("spatial dx must be > 0");
  spatial.crystal.validate();
  if (engine == Engine::kSpatial && !is_symmetric_pair(spatial.pixels, spatial.nx, spatial.ny)) {
    throw ConfigError("spatial.pixels must be inside the grid and point-symmetric about its centre");
  }
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

// ---------------------------------------------------------------------------
// Parallel execution

inline unsigned default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? n : 1;
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. If any call
/// throws, the exception of the lowest index is rethrown after all workers
/// finish.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Boundaries floor(k n / parts), k = 0..parts, deduplicated.
inline std::vector<std::uint64_t> even_boundaries(std::uint64_t n, std::uint64_t parts) {
  std::vector<std::uint64_t> b;
  for (std::uint64_t k = 0; k <= parts; ++k) {
    const auto v = static_cast<std::uint64_t>((static_cast<unsigned __int128>(k) * n) / parts);
    if (b.empty() || b.back() != v) b.push_back(v);
  }
  return b;
}

/// Snapshot sizes when none are configured: 1000 doubling up to n, then n.
inline std::vector<std::uint64_t> default_snapshots(std::uint64_t n) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t k = 1000; k < n; k *= 2) s.push_back(k);
  s.push_back(n);
  return s;
}

// ---------------------------------------------------------------------------
// Trajectory sources

/// Produces the port intensities of trajectory i for either engine.
class TrajectorySource {
 public:
  explicit TrajectorySource(const RunConfig& c)
      : config_(c), gain_(SqueezerGain::from_photons(c.gain)), detector_(c.efficiency) {
    if (c.engine == Engine::kSpatial) {
      const SpatialConfig& s = c.spatial;
      if (s.enforce_sampling) {
        const SamplingDiagnostic d = check_sampling(s.crystal, s.nx, s.ny, s.dx);
        if (!d.passed) throw SamplingError("sampling check failed: " + d.message);
      }
      propagator_.emplace(s.crystal, s.nx, s.ny, s.dx);
    }
  }

  TrajectoryPorts operator()(std::uint64_t i) const {
    RngStream rng(config_.master_seed, i);
    FourModeState state;
    if (config_.engine == Engine::kMode) {
      state = generate_bell_trajectory(gain_, rng);
    } else {
      state = extract_pixel_pair(far_field_of(rng), config_.spatial.pixels);
    }
    return analyze_trajectory(state, config_.angles, detector_, rng);
  }

  /// Far field of trajectory i (spatial engine only).
  FieldGrid far_field_at(std::uint64_t i) const {
    RngStream rng(config_.master_seed, i);
    return far_field_of(rng);
  }

 private:
  FieldGrid far_field_of(RngStream& rng) const {
    if (!propagator_) throw std::logic_error("TrajectorySource: spatial engine not configured");
    const SpatialConfig& s = config_.spatial;
    FieldGrid g = init_vacuum_grid(s.nx, s.ny, s.dx, rng);
    (*propagator_)(g);
    return far_field(g);
  }

  RunConfig config_;
  SqueezerGain gain_;
  DetectorModel detector_;
  std::optional<SplitStepPropagator> propagator_;
};

/// Moment batches over [b_k, b_{k+1}) for consecutive boundaries.
inline std::vector<MomentBatch> simulate_segments(const TrajectorySource& source,
                                                  const std::vector<std::uint64_t>& bounds,
                                                  unsigned threads) {
  const std::size_t n = bounds.size() > 1 ? bounds.size() - 1 : 0;
  std::vector<MomentBatch> out(n);
  parallel_for(n, threads, [&](std::size_t s) {
    MomentBatch b;
    b.first_index = bounds[s];
    for (std::uint64_t i = bounds[s]; i < bounds[s + 1]; ++i) b.update(source(i));
    out[s] = std::move(b);
  });
  return out;
}

/// Accumulator over [0, n) whose jackknife groups are the `groups` even
/// slices of [0, n), assembled from finer segments.
inline MomentAccumulator assemble_snapshot(const std::vector<MomentBatch>& segments,
                                           std::uint64_t n, std::uint64_t groups,
                                           const RunConfig& c) {
  MomentAccumulator acc(c.angles, c.efficiency);
  const auto g = even_boundaries(n, groups);
  std::size_t s = 0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    std::vector<MomentBatch> parts;
    while (s < segments.size() && segments[s].first_index < g[k + 1]) {
      if (segments[s].first_index < g[k]) throw std::logic_error("assemble_snapshot: misaligned segments");
      parts.push_back(segments[s++]);
    }
    if (parts.empty()) continue;
    MomentBatch merged = reduce_batches(std::move(parts));
    merged.first_index = g[k];
    acc.add_batch(std::move(merged));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// CSV and image output

namespace output_detail {

inline std::string num(double x) { return fmt::format("{:.17g}", x); }

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace output_detail

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  using output_detail::num;
  std::string s =
      "n,B,C,stderr_B,stderr_C,negative_fraction,"
      "B_ci_lo,B_ci_hi,C_ci_lo,C_ci_hi,"
      "B_theory_ci_lo,B_theory_ci_hi,C_theory_ci_lo,C_theory_ci_hi\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.n, num(r.B), num(r.C),
                     num(r.stderr_B), num(r.stderr_C), num(r.negative_fraction), num(r.B_ci.lo),
                     num(r.B_ci.hi), num(r.C_ci.lo), num(r.C_ci.hi), num(r.B_theory_ci.lo),
                     num(r.B_theory_ci.hi), num(r.C_theory_ci.lo), num(r.C_theory_ci.hi));
  }
  return s;
}

struct GainRow {
  double G = 0.0;
  BellResult result;
  double B_analytic = 0.0;
  double C_analytic = 0.0;
};

inline std::string sweep_gain_csv(const std::vector<GainRow>& rows) {
  using output_detail::num;
  std::string s = "G,B_mc,stderr_B,B_analytic,C_mc,stderr_C,C_analytic,negative_fraction\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{},{},{},{}\n", num(r.G), num(r.result.B), num(r.result.stderr_B),
                     num(r.B_analytic), num(r.result.C), num(r.result.stderr_C), num(r.C_analytic),
                     num(r.result.negative_fraction));
  }
  return s;
}

struct EfficiencyRow {
  double eta = 0.0;
  BellResult result;
  double C_analytic = 0.0;
  double C_exact = 0.0;
};

inline std::string sweep_efficiency_csv(const std::vector<EfficiencyRow>& rows) {
  using output_detail::num;
  std::string s = "eta,B_mc,stderr_B,C_mc,stderr_C,C_analytic,C_exact,negative_fraction\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{},{},{},{}\n", num(r.eta), num(r.result.B),
                     num(r.result.stderr_B), num(r.result.C), num(r.result.stderr_C),
                     num(r.C_analytic), num(r.C_exact), num(r.result.negative_fraction));
  }
  return s;
}

/// Binary P5 greymap, linear from [lo, hi] onto [0, maxval]; maxval is 255
/// or 65535 (big-endian samples).
inline std::string encode_pgm(const std::vector<double>& img, std::size_t nx, std::size_t ny,
                              double lo, double hi, unsigned maxval = 65535) {
  if (maxval != 255 && maxval != 65535) throw std::invalid_argument("encode_pgm: maxval");
  if (img.size() != nx * ny) throw std::invalid_argument("encode_pgm: size");
  std::string s = fmt::format("P5\n{} {}\n{}\n", nx, ny, maxval);
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : img) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(t * maxval));
    if (maxval == 255) {
      s.push_back(static_cast<char>(q));
    } else {
      s.push_back(static_cast<char>(q >> 8));
      s.push_back(static_cast<char>(q & 0xff));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Experiments

inline nlohmann::json summary_header(const RunConfig& c, const std::string& op) {
  return {{"version", kVersion},
          {"operation", op},
          {"master_seed", c.master_seed},
          {"config_hash", config_hash(c)},
          {"engine", c.engine == Engine::kMode ? "mode" : "spatial"}};
}

inline nlohmann::json result_json(const BellResult& r) {
  return {{"E", r.E},
          {"B", r.B},
          {"stderr_B", r.stderr_B},
          {"C", r.C},
          {"stderr_C", r.stderr_C},
          {"negative_fraction", r.negative_fraction},
          {"n_trajectories", r.n_trajectories}};
}

struct RunPointResult {
  BellResult result;
  std::vector<ConvergenceRow> convergence;
  std::string csv;
  std::string summary;
};

/// Runs config.trajectories trajectories, takes convergence snapshots, and
/// writes convergence.csv and summary.json to config.output_dir (skipped
/// when write is false).
inline RunPointResult run_point(const RunConfig& c, unsigned threads = default_threads(),
                                bool write = true) {
  c.validate();
  const TrajectorySource source(c);
  const auto snaps = c.snapshots.empty() ? default_snapshots(c.trajectories) : c.snapshots;

  std::vector<std::uint64_t> bounds;
  for (std::uint64_t n : snaps) {
    const auto b = even_boundaries(n, c.batches);
    bounds.insert(bounds.end(), b.begin(), b.end());
  }
  {
    const auto b = even_boundaries(c.trajectories, c.batches);
    bounds.insert(bounds.end(), b.begin(), b.end());
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  const auto segments = simulate_segments(source, bounds, threads);
  std::vector<MomentAccumulator> snapshot_accs;
  for (std::uint64_t n : snaps) snapshot_accs.push_back(assemble_snapshot(segments, n, c.batches, c));
  const MomentAccumulator full = assemble_snapshot(segments, c.trajectories, c.batches, c);

  const WickPrediction wick = wick_oracle(c.gain, c.efficiency, c.angles);
  ConvergenceTheory theory{analytic_B(c.gain), analytic_C(c.gain, c.efficiency)};
  RunPointResult out;
  out.convergence = convergence_series(snapshot_accs, theory);
  out.csv = convergence_csv(out.convergence);
  out.result = estimate_bell(full, c.denominator_z);

  nlohmann::json j = summary_header(c, "run");
  j["G"] = c.gain;
  j["efficiency"] = c.efficiency;
  j["result"] = result_json(out.result);
  j["analytic"] = {{"B", theory.B}, {"C", theory.C}};
  if (wick.defined) j["exact"] = {{"B", wick.B}, {"C", wick.C}};
  out.summary = j.dump(2) + "\n";

  if (write) {
    const std::filesystem::path dir(c.output_dir);
    output_detail::write_file(dir / "convergence.csv", out.csv);
    output_detail::write_file(dir / "summary.json", out.summary);
  }
  return out;
}

/// Full-ensemble estimate without intermediate snapshots.
inline BellResult estimate_point(const RunConfig& c, unsigned threads, double min_denominator_z) {
  c.validate();
  const TrajectorySource source(c);
  const auto segments = simulate_segments(source, even_boundaries(c.trajectories, c.batches), threads);
  return estimate_bell(assemble_snapshot(segments, c.trajectories, c.batches, c), min_denominator_z);
}

struct SweepResult {
  std::string csv;
  std::string summary;
};

/// One point per c.sweep_gains, each with the same master seed.
inline SweepResult sweep_gain(const RunConfig& c, unsigned threads = default_threads(),
                              bool write = true, std::vector<GainRow>* rows_out = nullptr) {
  c.validate();
  std::vector<GainRow> rows;
  for (double G : c.sweep_gains) {
    RunConfig p = c;
    p.gain = G;
    GainRow row;
    row.G = G;
    row.result = estimate_point(p, threads, c.denominator_z);
    row.B_analytic = analytic_B(G);
    row.C_analytic = analytic_C(G, c.efficiency);
    rows.push_back(row);
  }
  SweepResult out;
  out.csv = sweep_gain_csv(rows);
  nlohmann::json j = summary_header(c, "sweep-gain");
  j["efficiency"] = c.efficiency;
  j["n_trajectories_per_point"] = c.trajectories;
  out.summary = j.dump(2) + "\n";
  if (write) {
    const std::filesystem::path dir(c.output_dir);
    output_detail::write_file(dir / "sweep_gain.csv", out.csv);
    output_detail::write_file(dir / "sweep_gain.json", out.summary);
  }
  if (rows_out) *rows_out = std::move(rows);
  return out;
}

/// One point per c.sweep_efficiencies at gain c.gain, each with the same
/// master seed.
inline SweepResult sweep_efficiency(const RunConfig& c, unsigned threads = default_threads(),
                                    bool write = true,
                                    std::vector<EfficiencyRow>* rows_out = nullptr) {
  c.validate();
  std::vector<EfficiencyRow> rows;
  for (double eta : c.sweep_efficiencies) {
    RunConfig p = c;
    p.efficiency = eta;
    EfficiencyRow row;
    row.eta = eta;
    row.result = estimate_point(p, threads, c.denominator_z);
    row.C_analytic = analytic_C(c.gain, eta);
    const WickPrediction w = wick_oracle(c.gain, eta, c.angles);
    row.C_exact = w.defined ? w.C : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  SweepResult out;
  out.csv = sweep_efficiency_csv(rows);
  nlohmann::json j = summary_header(c, "sweep-eta");
  j["G"] = c.gain;
  j["n_trajectories_per_point"] = c.trajectories;
  out.summary = j.dump(2) + "\n";
  if (write) {
    const std::filesystem::path dir(c.output_dir);
    output_detail::write_file(dir / "sweep_eta.csv", out.csv);
    output_detail::write_file(dir / "sweep_eta.json", out.summary);
  }
  if (rows_out) *rows_out = std::move(rows);
  return out;
}

struct SpatialImageResult {
  SpatialAccumulator accumulator{1, 1};
  std::optional<PixelPairSelection> selection;
  std::string scan_message;
  SamplingDiagnostic diagnostic;
  std::string pixels_csv;
  std::string summary;
};

/// Mean far-field images over config.trajectories spatial trajectories and
/// the intersection pixel pair found by scan_intersection_pixels. Writes
/// mean_intensity.pgm (+ .txt sidecar), mean_intensity.csv,
/// intersection_pixels.csv and spatial_image.json.
inline SpatialImageResult spatial_image(const RunConfig& c, unsigned threads = default_threads(),
                                        bool write = true) {
  c.validate();
  const SpatialConfig& s = c.spatial;
  SpatialImageResult out;
  out.diagnostic = check_sampling(s.crystal, s.nx, s.ny, s.dx);
  if (s.enforce_sampling && !out.diagnostic.passed) {
    throw SamplingError("sampling check failed: " + out.diagnostic.message);
  }
  RunConfig sc = c;
  sc.engine = Engine::kSpatial;
  sc.spatial.enforce_sampling = false;  // already checked above
  const TrajectorySource source(sc);

  const auto bounds = even_boundaries(c.trajectories, c.batches);
  const std::size_t nseg = bounds.size() - 1;
  std::vector<SpatialAccumulator> parts(nseg, SpatialAccumulator(s.nx, s.ny));
  parallel_for(nseg, threads, [&](std::size_t k) {
    for (std::uint64_t i = bounds[k]; i < bounds[k + 1]; ++i) parts[k].update(source.far_field_at(i));
  });
  while (parts.size() > 1) {
    std::vector<SpatialAccumulator> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      next.push_back(std::move(parts[i]));
      next.back().merge(parts[i + 1]);
    }
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  out.accumulator = std::move(parts.front());
  const SpatialAccumulator& acc = out.accumulator;

  try {
    out.selection = scan_intersection_pixels(acc);
    out.scan_message = "ok";
  } catch (const StatisticsError& e) {
    out.scan_message = e.what();
  }

  using output_detail::num;
  out.pixels_csv = "x1,y1,x2,y2,covariance_N1N2,mean_N1,mean_N2\n";
  if (out.selection) {
    const auto& p = *out.selection;
    const std::size_t i1 = p.y1 * s.nx + p.x1, i2 = p.y2 * s.nx + p.x2;
    out.pixels_csv += fmt::format(
        "{},{},{},{},{},{},{}\n", p.x1, p.y1, p.x2, p.y2, num(acc.pair_covariance(i1)),
        num(acc.corrected_mean_h(i1) + acc.corrected_mean_v(i1)),
        num(acc.corrected_mean_h(i2) + acc.corrected_mean_v(i2)));
  }

  const auto image = acc.mean_total_image();
  const auto [lo_it, hi_it] = std::minmax_element(image.begin(), image.end());
  const double lo = *lo_it, hi = *hi_it;

  nlohmann::json j = summary_header(c, "spatial-image");
  j["n_trajectories"] = acc.count();
  j["grid"] = {{"nx", s.nx}, {"ny", s.ny}, {"dx", s.dx}};
  j["sampling"] = {{"passed", out.diagnostic.passed}, {"message", out.diagnostic.message}};
  j["scan"] = out.scan_message;
  if (out.selection) {
    const auto& p = *out.selection;
    j["selection"] = {p.x1, p.y1, p.x2, p.y2};
  } else {
    j["selection"] = nullptr;
  }
  out.summary = j.dump(2) + "\n";

  if (write) {
    const std::filesystem::path dir(c.output_dir);
    output_detail::write_file(dir / "mean_intensity.pgm", encode_pgm(image, s.nx, s.ny, lo, hi));
    output_detail::write_file(
        dir / "mean_intensity.pgm.txt",
        fmt::format("# mean uncorrected H+V intensity per far-field pixel\n"
                    "maxval = 65535\nscaling = linear\nvalue_at_0 = {}\nvalue_at_maxval = {}\n",
                    num(lo), num(hi)));
    std::string csv = "x,y,mean_H,mean_V,stderr_H,stderr_V\n";
    for (std::size_t y = 0; y < s.ny; ++y) {
      for (std::size_t x = 0; x < s.nx; ++x) {
        const std::size_t i = y * s.nx + x;
        csv += fmt::format("{},{},{},{},{},{}\n", x, y, num(acc.mean_h()[i]), num(acc.mean_v()[i]),
                           num(acc.stderr_h(i)), num(acc.stderr_v(i)));
      }
    }
    output_detail::write_file(dir / "mean_intensity.csv", csv);
    output_detail::write_file(dir / "intersection_pixels.csv", out.pixels_csv);
    output_detail::write_file(dir / "spatial_image.json", out.summary);
  }
  return out;
}

}  // namespace wignerbell
