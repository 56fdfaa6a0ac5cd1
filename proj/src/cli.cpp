// Copyright 2026 The she2d Authors
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

#include "she2d/cli.hpp"

#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "she2d/core.hpp"
#include "she2d/decoupling.hpp"
#include "she2d/errors.hpp"
#include "she2d/io.hpp"
#include "she2d/linear_oracle.hpp"
#include "she2d/parallel.hpp"
#include "she2d/sde.hpp"
#include "she2d/spde.hpp"
#include "she2d/stats.hpp"

namespace she2d {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Strict view of a JSON object: every key must be consumed before finish().
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), path(key));
  }

  template <typename T>
  T req(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return convert<T>(j_.at(key), path(key));
  }

  Obj sub(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return Obj(j_.at(key), path(key));
  }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) {
        throw ConfigError(where + " must be a nonnegative integer");
      }
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
      std::vector<double> out;
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + " must be an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) throw ConfigError(where + " must be an array of integers");
      std::vector<int> out;
      for (const auto& e : v) {
        if (!e.is_number_integer()) {
          throw ConfigError(where + " must be an array of integers");
        }
        out.push_back(e.get<int>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

struct Context {
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::ostream& out;
  json artifacts = json::array();

  SeededRng rng() const { return SeededRng{seed, 0}; }

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return out_dir / name;
  }
};

// --- config sections ----------------------------------------------------------

Nonlinearity parse_nonlinearity(Obj o) {
  const auto kind = nonlinearity_kind_from_string(o.req<std::string>("kind"));
  std::optional<Nonlinearity> nl;
  if (kind == NonlinearityKind::PiecewiseLinearTable) {
    const json& raw = o.raw("knots");
    if (!raw.is_array()) throw ConfigError(o.path("knots") + " must be an array of [u, sigma] pairs");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : raw) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
        throw ConfigError(o.path("knots") + " must be an array of [u, sigma] pairs");
      }
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    nl = Nonlinearity::table(std::move(knots));
  } else {
    const double beta = o.req<double>("beta");
    nl = kind == NonlinearityKind::Linear ? Nonlinearity::linear(beta)
                                          : Nonlinearity::saturating(beta);
  }
  o.finish();
  return *nl;
}

GridSpec parse_grid(Obj o) {
  GridSpec spec;
  spec.q_step = o.get("q_step", spec.q_step);
  spec.b_max = o.get("b_max", spec.b_max);
  spec.b_step = o.get("b_step", spec.b_step);
  o.finish();
  spec.validate();
  return spec;
}

GridSpec parse_grid_optional(Obj& parent, const std::string& key) {
  return parent.has(key) ? parse_grid(parent.sub(key)) : GridSpec{};
}

PicardParams parse_picard(Obj o) {
  PicardParams p;
  p.n_paths_per_node = o.get<std::int64_t>("n_paths_per_node", p.n_paths_per_node);
  p.dt = o.get("dt", p.dt);
  p.max_iters = o.get("max_iters", p.max_iters);
  p.tol = o.get("tol", p.tol);
  p.damping = o.get("damping", p.damping);
  o.finish();
  return p;
}

PdeParams parse_pde(Obj o) {
  PdeParams p;
  p.dq = o.get("dq", p.dq);
  if (o.has("scheme")) p.scheme = pde_scheme_from_string(o.req<std::string>("scheme"));
  o.finish();
  return p;
}

SdeParams parse_sde(Obj o) {
  SdeParams p;
  p.a = o.get("a", p.a);
  p.Q = o.get("Q", p.Q);
  p.dt = o.get("dt", p.dt);
  p.n_paths = o.get<std::int64_t>("n_paths", p.n_paths);
  p.record_times = o.get("record_times", p.record_times);
  o.finish();
  p.validate();
  return p;
}

DecouplingGrid parse_j(Obj o) {
  const auto kind = o.req<std::string>("kind");
  DecouplingGrid grid;
  if (kind == "zero") {
    const double beta = o.get("beta", 0.0);
    require_subcritical(beta);
    grid = DecouplingGrid::zeros(parse_grid_optional(o, "grid"), beta);
  } else if (kind == "linear") {
    const double beta = o.req<double>("beta");
    grid = exact_linear_grid(parse_grid_optional(o, "grid"), beta);
  } else if (kind == "csv") {
    const double beta = o.req<double>("beta");
    require_subcritical(beta);
    grid = read_grid_csv(o.req<std::string>("path"), beta);
  } else {
    throw ConfigError(o.path("kind") + ": expected zero, linear or csv, got '" + kind + "'");
  }
  o.finish();
  if (auto bad = grid.invariant_violations(); !bad.empty()) {
    throw ConfigError("decoupling grid is invalid: " + bad.front());
  }
  return grid;
}

double parse_distance(const json& v, const std::string& where) {
  if (v.is_null()) return UltrametricConfig::kSelf;
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError(where + ": distances must be numbers, null or \"-inf\"");
}

UltrametricConfig parse_ultrametric(Obj o, double Q) {
  UltrametricConfig cfg;
  cfg.Q = o.get("Q", Q);
  const json& d = o.raw("d");
  if (!d.is_array() || d.empty()) throw ConfigError(o.path("d") + " must be a square matrix");
  cfg.n = static_cast<int>(d.size());
  for (const auto& row : d) {
    if (!row.is_array() || row.size() != d.size()) {
      throw ConfigError(o.path("d") + " must be a square matrix");
    }
    for (const auto& v : row) cfg.d.push_back(parse_distance(v, o.path("d")));
  }
  if (o.has("n") && o.req<int>("n") != cfg.n) {
    throw ConfigError(o.path("n") + " does not match the size of d");
  }
  o.finish();
  if (auto bad = validate_ultrametric(cfg)) throw ConfigError(*bad);
  return cfg;
}

SpdeConfig parse_spde(Obj o) {
  SpdeConfig c;
  c.L = o.get("L", c.L);
  c.n_grid = o.get("n_grid", c.n_grid);
  c.eps = o.get("eps", c.eps);
  c.a = o.get("a", c.a);
  c.dt_factor = o.get("dt_factor", c.dt_factor);
  c.T = o.req<double>("T");
  if (o.has("attenuation")) {
    const auto att = o.req<std::string>("attenuation");
    if (att == "logarithmic" || att == "paper") {
      c.attenuation = Attenuation::Logarithmic;
    } else if (att == "custom") {
      c.attenuation = Attenuation::Custom;
    } else {
      throw ConfigError(o.path("attenuation") + ": expected logarithmic or custom");
    }
  }
  c.delta = o.get("delta", c.delta);
  if (o.has("scale")) c.scale = spde_scale_from_string(o.req<std::string>("scale"));
  o.finish();
  c.validate();
  return c;
}

json mean_json(const MeanEstimate& m) {
  return {{"estimate", m.mean}, {"stderr", m.std_error}};
}

// --- subcommands -----------------------------------------------------------------

void cmd_solve_j(Obj& root, Context& ctx) {
  const Nonlinearity nl = parse_nonlinearity(root.sub("nonlinearity"));
  const GridSpec spec = parse_grid_optional(root, "grid");
  const PicardParams params = root.has("picard") ? parse_picard(root.sub("picard")) : PicardParams{};
  const FixedPointResult r = fixed_point_solve(nl, spec, params, ctx.rng());
  write_grid_csv(ctx.artifact("grid.csv"), r.grid);
  write_json(ctx.artifact("diagnostics.json"), r.diagnostics.to_json());
  ctx.out << "solve-j: " << r.diagnostics.iterations << " iterations, converged="
          << (r.diagnostics.converged ? "true" : "false") << '\n';
  if (!r.diagnostics.warning.empty()) ctx.out << "warning: " << r.diagnostics.warning << '\n';
}

void cmd_solve_j_pde(Obj& root, Context& ctx) {
  const Nonlinearity nl = parse_nonlinearity(root.sub("nonlinearity"));
  const GridSpec spec = parse_grid_optional(root, "grid");
  const PdeParams params = root.has("pde") ? parse_pde(root.sub("pde")) : PdeParams{};
  const PdeResult r = direct_pde_solve_detailed(nl, spec, params);
  write_grid_csv(ctx.artifact("grid.csv"), r.grid);
  write_json(ctx.artifact("diagnostics.json"), r.diagnostics.to_json());
  ctx.out << "solve-j-pde: " << r.diagnostics.steps << " steps, "
          << r.diagnostics.negative_clamps << " negative clamps\n";
}

void cmd_simulate_xi(Obj& root, Context& ctx) {
  const DecouplingGrid J = parse_j(root.sub("j"));
  const SdeParams p = parse_sde(root.sub("sde"));
  const PathEnsemble ens = simulate_xi(J, p, ctx.rng());
  write_terminal_csv(ctx.artifact("terminal.csv"), ens.terminal);

  json summary;
  summary["n_paths"] = ens.n_paths();
  std::vector<double> sq(ens.n_paths());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = ens.terminal[i] * ens.terminal[i];
  summary["mean"] = mean_json(mean_with_stderr(ens.terminal));
  summary["second_moment"] = mean_json(mean_with_stderr(sq));
  if (!p.record_times.empty()) {
    write_snapshot_csv(ctx.artifact("snapshots.csv"), ens, ens.snapshots);
    const std::vector<double> y = y_process(J, ens);
    write_snapshot_csv(ctx.artifact("y.csv"), ens, y);
    json ys = json::array();
    const std::size_t nr = p.record_times.size();
    std::vector<double> col(ens.n_paths());
    for (std::size_t k = 0; k < nr; ++k) {
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = y[i * nr + k];
      json e = mean_json(mean_with_stderr(col));
      e["q"] = p.record_times[k];
      ys.push_back(e);
    }
    summary["y_mean"] = ys;
  }
  write_json(ctx.artifact("summary.json"), summary);
  ctx.out << "simulate-xi: " << ens.n_paths() << " paths\n";
}

void cmd_simulate_multipoint(Obj& root, Context& ctx) {
  const DecouplingGrid J = parse_j(root.sub("j"));
  const SdeParams p = parse_sde(root.sub("sde"));
  const UltrametricConfig cfg = parse_ultrametric(root.sub("ultrametric"), p.Q);
  const MultipointResult r = simulate_multipoint(J, cfg, p, ctx.rng());
  write_multipoint_csv(ctx.artifact("terminal.csv"), r.coords);
  json diag;
  diag["inserted_breakpoints"] = r.inserted_breakpoints;
  write_json(ctx.artifact("diagnostics.json"), diag);
  ctx.out << "simulate-multipoint: " << p.n_paths << " replicas of " << cfg.n
          << " coordinates\n";
}

void cmd_simulate_spde(Obj& root, Context& ctx) {
  const Nonlinearity nl = parse_nonlinearity(root.sub("nonlinearity"));
  const SpdeConfig cfg = parse_spde(root.sub("spde"));
  const auto times = root.req<std::vector<double>>("sample_times");
  const auto n_real = root.get<std::int64_t>("n_realizations", 1);
  if (n_real < 1) throw ConfigError("n_realizations must be >= 1");
  const auto n = static_cast<std::size_t>(n_real);
  std::vector<std::vector<std::int64_t>> negatives(n);
  std::vector<std::string> names;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      names.push_back("field_r" + std::to_string(r) + "_t" + std::to_string(k) + ".csv");
      ctx.artifacts.push_back(names.back());
    }
  }
  parallel_for(n, [&](std::size_t r) {
    const auto snaps = simulate_spde(cfg, nl, times, ctx.rng().derive(r));
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      write_field_csv(ctx.out_dir / names[r * times.size() + k], snaps[k]);
      negatives[r].push_back(snaps[k].negative_count);
    }
  });
  json summary;
  summary["times"] = times;
  json seeds = json::array();
  for (std::size_t r = 0; r < n; ++r) {
    const SeededRng s = ctx.rng().derive(r);
    seeds.push_back({{"realization", r}, {"master_seed", s.master_seed}, {"stream_id", s.stream_id}});
  }
  summary["seeds"] = seeds;
  summary["negative_counts"] = negatives;
  write_json(ctx.artifact("summary.json"), summary);
  ctx.out << "simulate-spde: " << n << " realizations x " << times.size() << " times\n";
}

void cmd_estimate_jeps(Obj& root, Context& ctx) {
  const Nonlinearity nl = parse_nonlinearity(root.sub("nonlinearity"));
  const SpdeConfig cfg = parse_spde(root.sub("spde"));
  const auto q_list = root.req<std::vector<double>>("q_list");
  const double a = root.get("a", cfg.a);
  const auto n_real = root.req<std::int64_t>("n_realizations");
  const auto est = estimate_j_eps(cfg, nl, q_list, a, n_real, ctx.rng());
  write_jeps_csv(ctx.artifact("jeps.csv"), est);
  for (const auto& e : est) {
    ctx.out << "q=" << e.q << " t=" << e.t << " J_eps=" << e.j_eps << " +- " << e.std_error << '\n';
  }
}

void cmd_ew_variance(Obj& root, Context& ctx) {
  const Nonlinearity nl = parse_nonlinearity(root.sub("nonlinearity"));
  const SpdeConfig cfg = parse_spde(root.sub("spde"));
  const DecouplingGrid J = parse_j(root.sub("j"));
  Obj b = root.sub("bump");
  GaussianBump bump{b.req<double>("cx"), b.req<double>("cy"), b.req<double>("width")};
  b.finish();
  const auto n_real = root.req<std::int64_t>("n_realizations");
  const auto xi_paths = root.get<std::int64_t>("xi_paths", 100000);
  const EwResult r = ew_variance_functional(cfg, nl, bump, J, n_real, ctx.rng(), xi_paths);
  json j{{"empirical_variance", r.empirical_variance},
         {"empirical_stderr", r.empirical_std_error},
         {"sigma2_mean", r.sigma2_mean},
         {"kernel_integral", r.kernel_integral},
         {"limit_prediction", r.limit_prediction}};
  write_json(ctx.artifact("ew.json"), j);
  ctx.out << j.dump(2) << '\n';
}

void cmd_compare(Obj& root, Context& ctx) {
  const auto kind = root.req<std::string>("kind");
  json report;
  if (kind == "grid") {
    const double beta = root.req<double>("beta");
    require_subcritical(beta);
    const DecouplingGrid g = read_grid_csv(root.req<std::string>("grid_csv"), beta);
    DecouplingGrid ref;
    const auto ref_kind = root.get<std::string>("reference", "linear");
    if (ref_kind == "linear") {
      std::vector<double> v;
      for (double q : g.q_nodes()) {
        for (double bb : g.b_nodes()) v.push_back(bb * jbar(q, beta));
      }
      ref = DecouplingGrid(g.q_nodes(), g.b_nodes(), std::move(v), beta);
    } else if (ref_kind == "csv") {
      ref = read_grid_csv(root.req<std::string>("reference_csv"), beta);
    } else {
      throw ConfigError("config.reference: expected linear or csv");
    }
    if (!ref.same_shape(g)) ref = ref.resampled(g.q_nodes(), g.b_nodes());
    const GridComparison c = compare_grids(g, ref, root.get("b_min", 0.1));
    report = to_json(c);
    const auto slopes = max_b_slopes(g);
    json ratios = json::array();
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      const double bound = lip_bound(g.q_nodes()[i], beta);
      ratios.push_back(bound > 0.0 ? slopes[i] / bound : 0.0);
    }
    report["slope_to_bound"] = ratios;
  } else if (kind == "terminal") {
    const auto x = read_terminal_csv(root.req<std::string>("terminal_csv"));
    const double a = root.req<double>("a");
    const double Q = root.req<double>("Q");
    const double beta = root.req<double>("beta");
    const LogNormalLaw law = lognormal_params(a, Q, beta);
    report["ks_distance"] = ks_distance(x, [&law](double v) { return lognormal_cdf(law, v); });
    const auto orders = root.get<std::vector<int>>("moments", {1, 2});
    json ms = json::array();
    for (const auto& m : empirical_moments(x, orders)) ms.push_back(to_json(m));
    report["moments"] = ms;
    report["oracle"] = {{"mu_log", law.mu_log},
                        {"s2", law.s2},
                        {"mean", a},
                        {"second_moment", linear_second_moment(a, Q, beta)}};
  } else if (kind == "multipoint") {
    const auto cols = read_multipoint_csv(root.req<std::string>("terminal_csv"));
    if (cols.size() != 2) throw ConfigError("multipoint comparison needs exactly 2 coordinates");
    const double Q = root.req<double>("Q");
    const double beta = root.req<double>("beta");
    const double d = root.req<double>("d");
    report["log_cov"] = to_json(empirical_log_cov(cols[0], cols[1]));
    report["oracle_cov"] = multipoint_cov(Q, beta, d);
  } else {
    throw ConfigError("config.kind: expected grid, terminal or multipoint, got '" + kind + "'");
  }
  write_json(ctx.artifact("comparison.json"), report);
  ctx.out << report.dump(2) << '\n';
}

json oracle_json(double Q, double beta, double a) {
  const LogNormalLaw law = lognormal_params(a, Q, beta);
  return {{"s2", law.s2},
          {"mu_log", law.mu_log},
          {"jbar_Q", jbar(Q, beta)},
          {"Q", Q},
          {"beta", beta},
          {"a", a},
          {"mean", law.mean()},
          {"median", law.median()},
          {"second_moment", linear_second_moment(a, Q, beta)}};
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::ostringstream msg;
    msg << path << ":" << line << ":" << col << ": malformed JSON: " << e.what();
    throw ConfigError(msg.str());
  }
}

json versions() {
  std::string compiler = "unknown";
#if defined(__clang__)
  compiler = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  compiler = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
             std::to_string(__GNUC_PATCHLEVEL__);
#endif
  return {{"she2d", kVersion},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", compiler}};
}

using Handler = std::function<void(Obj&, Context&)>;

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;
  std::optional<double> Q, beta, a;
};

int execute(const std::string& name, const Handler& handler, const Options& opt,
            bool seed_given, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  set_thread_count(opt.threads);
  json config = opt.config.empty() ? json::object() : load_config(opt.config);
  Obj root(config, "config");

  const std::uint64_t seed =
      seed_given ? opt.seed : root.get<std::uint64_t>("master_seed", std::uint64_t{0});
  const bool stochastic = name != "linear-oracle" && name != "compare" && name != "solve-j-pde";
  if (stochastic && !seed_given && !config.contains("master_seed")) {
    throw ConfigError("config: missing required key 'master_seed' (or pass --seed)");
  }
  std::string output_dir = root.get<std::string>("output_dir", "");
  if (!opt.output.empty()) output_dir = opt.output;
  root.get<std::string>("label", "");

  if (name == "linear-oracle") {
    const double Q = opt.Q ? *opt.Q : root.get("Q", 2.0);
    const double beta = opt.beta ? *opt.beta : root.get("beta", 1.0);
    const double a = opt.a ? *opt.a : root.get("a", 1.0);
    std::optional<GridSpec> spec;
    if (root.has("grid")) spec = parse_grid(root.sub("grid"));
    root.finish();
    const json result = oracle_json(Q, beta, a);
    out << result.dump(2) << '\n';
    if (output_dir.empty()) return kExitOk;
    Context ctx{output_dir, seed, out};
    fs::create_directories(ctx.out_dir);
    write_json(ctx.artifact("oracle.json"), result);
    if (spec) write_grid_csv(ctx.artifact("oracle_grid.csv"), exact_linear_grid(*spec, beta));
    json manifest{{"subcommand", name}, {"config_path", opt.config}, {"config", config},
                  {"seed", seed}, {"versions", versions()}, {"threads", thread_count()},
                  {"wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                  {"artifacts", ctx.artifacts}};
    write_json(ctx.out_dir / "manifest.json", manifest);
    return kExitOk;
  }

  if (output_dir.empty()) {
    throw ConfigError("config: missing required key 'output_dir' (or pass --output)");
  }
  Context ctx{output_dir, seed, out};
  fs::create_directories(ctx.out_dir);
  handler(root, ctx);
  root.finish();
  json manifest{{"subcommand", name},
                {"config_path", opt.config},
                {"config", config},
                {"seed", seed},
                {"versions", versions()},
                {"threads", thread_count()},
                {"wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                {"artifacts", ctx.artifacts}};
  write_json(ctx.out_dir / "manifest.json", manifest);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlinear 2D stochastic heat equation: decoupling function, "
               "limiting diffusions and field simulation"};
  app.name(args.empty() ? "she2d" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> commands{
      {"solve-j", {"Picard/Monte Carlo fixed point for J", cmd_solve_j}},
      {"solve-j-pde", {"Finite differences for J^2", cmd_solve_j_pde}},
      {"simulate-xi", {"One-point limiting diffusion", cmd_simulate_xi}},
      {"simulate-multipoint", {"Branching multipoint diffusions", cmd_simulate_multipoint}},
      {"simulate-spde", {"Field snapshots of the SPDE", cmd_simulate_spde}},
      {"estimate-jeps", {"Empirical decoupling function J_eps", cmd_estimate_jeps}},
      {"linear-oracle", {"Closed forms of the linear case", nullptr}},
      {"compare", {"Grid or ensemble against closed forms", cmd_compare}},
      {"ew-variance", {"Edwards-Wilkinson variance functional", cmd_ew_variance}},
  };

  Options opt;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, CLI::Option*> seed_opts;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config, "JSON config file");
    seed_opts[name] = sub->add_option("--seed", opt.seed, "Master seed (overrides config)");
    sub->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
    sub->add_option("--output", opt.output, "Output directory (overrides config)");
    if (name == "linear-oracle") {
      sub->add_option("--Q", opt.Q, "Terminal time in [0, 2]");
      sub->add_option("--beta", opt.beta, "Lipschitz constant");
      sub->add_option("--a", opt.a, "Initial value");
    }
    subs[name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  for (const auto& [name, entry] : commands) {
    if (!subs[name]->parsed()) continue;
    try {
      return execute(name, entry.second, opt, seed_opts[name]->count() > 0, out);
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const NumericalError& e) {
      err << "numerical failure: " << e.what() << '\n';
      return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const std::exception& e) {
      err << "numerical failure: " << e.what() << '\n';
      return kExitNumerical;
    }
  }
  return kExitInvalid;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace she2d
