// carnot-lw: run Loomis-Whitney type checks on corank-1 Carnot groups and persist the reports.
//
// Exit codes: 0 all checks pass, 1 an inequality is violated beyond tolerance,
// 2 bad arguments or configuration, 3 numerical failure.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "carnot_lw/carnot_lw.hpp"

namespace {

using namespace carnot_lw;

constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string group = "h1";
  std::string preset;
  std::size_t res = 2;
  std::uint64_t seed = 0;
  std::optional<double> r_norm;
  std::string out;
  std::string input;  // grid file replacing the preset
  double width = 0.25;
};

// Grid file from --input checked against the group's dimension, or the named preset.
GridDensity loaded_grid(const CorankGroup& g, const Options& o) {
  auto f = load_grid(o.input);
  require(f.geometry().dim() == g.topo_dim(), "grid file " + o.input + " has dimension " +
                                                  std::to_string(f.geometry().dim()) + ", group needs " +
                                                  std::to_string(g.topo_dim()));
  return f;
}

GridDensity density_arg(const CorankGroup& g, const Options& o) {
  if (o.input.empty()) return preset_density(g, o.preset, o.res, o.seed, o.width);
  auto f = loaded_grid(g, o);
  require(total_mass(f) > 0.0, "grid file " + o.input + " has no mass");
  return normalize(f);
}

GridDensity set_arg(const CorankGroup& g, const Options& o) {
  if (o.input.empty()) return preset_set(g, o.preset, o.res, o.seed);
  auto e = loaded_grid(g, o);
  for (double v : e.values()) require(v == 0.0 || v == 1.0, "set raster " + o.input + " must hold only 0 and 1");
  return e;
}

CorankGroup group_arg(const std::string& text) {
  if (text == "h1") return CorankGroup::heisenberg();
  return parse_group(text);
}

double r_norm_arg(const Options& o) {
  if (!o.r_norm) return default_r_norm();
  require(std::isfinite(*o.r_norm) && *o.r_norm > 0.0, "--r-norm must be a positive number");
  return *o.r_norm;
}

void add_common(CLI::App* cmd, Options& o, bool with_group, std::size_t res_default) {
  o.res = res_default;
  if (with_group)
    cmd->add_option("--group", o.group, R"(group as JSON {"d":D,"n":N,"alpha":[...]} or "h1")")->capture_default_str();
  cmd->add_option("--res", o.res, "cells per axis (reduced for grids above three dimensions)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 16))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed of the random presets")->capture_default_str();
  cmd->add_option("--r-norm", o.r_norm, "override the Radon operator norm (default: $CARNOT_LW_RNORM or built-in)");
  cmd->add_option("--out", o.out, "write PREFIX.jsonl and PREFIX.csv");
}

/// sample_with_gradient for the named smooth preset; only the Gaussian bump exists.
SampledFunction smooth_preset(const CorankGroup& g, const std::string& preset, std::size_t res, double dilation) {
  require(preset == "bump", "unknown smooth preset '" + preset + "' (expected bump)");
  return sampled_bump(g, res, dilation);
}

BLDatum datum_arg(const std::string& spec, const CorankGroup& g) {
  auto number_after = [&](const std::string& prefix) {
    const auto v = spec.substr(prefix.size());
    try {
      std::size_t used = 0;
      const int n = std::stoi(v, &used);
      require(used == v.size() && n >= 1, "");
      return n;
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad datum size in '" + spec + "'");
    }
  };
  if (spec.rfind("lw:", 0) == 0) return lw_datum(number_after("lw:"));
  if (spec.rfind("pair-deletion:", 0) == 0) return pair_deletion_datum(number_after("pair-deletion:"));
  if (spec == "corank") return corank_linearized_datum(static_cast<int>(g.topo_dim()));
  std::ifstream is(spec);
  if (!is) throw InvalidArgument("datum '" + spec + "' is neither lw:K, pair-deletion:N, corank nor a readable file");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("datum file is not valid JSON: " + std::string(e.what()));
  }
  return datum_from_json(j);
}

/// "h1", "line", a group JSON, or scaled data {"c": [...], "D": ..., "Q": ...}.
ScaledData scaled_arg(const std::string& text) {
  if (text == "h1") return corank_constants(CorankGroup::heisenberg());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("'" + text + "' is neither h1 nor valid JSON: " + e.what());
  }
  if (j.contains("c")) return scaled_data_from_json(j);
  return corank_constants(group_from_json(j));
}

std::string join_rationals(const std::vector<Rational>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
  return s;
}

std::vector<Report> product_command(const std::string& left, const std::string& right, double r_norm) {
  const ScaledData a = scaled_arg(left);
  const bool line = right == "line";
  const ScaledData b = line ? ScaledData{} : scaled_arg(right);
  const ScaledData p = line ? product_combine_line(a) : product_combine(a, b);
  const Rational sa = a.weight_sum();
  Rational wa, wb;
  if (line) {
    wa = 1 / sa;
  } else {
    const Rational sb = b.weight_sum(), den = sa * sb - 1;
    wa = (sb - 1) / den;
    wb = (sa - 1) / den;
  }
  std::cout << "c-bar: " << join_rationals(p.c) << '\n';
  std::cout << "exponents: " << join_rationals(p.exponents()) << '\n';
  if (line)
    std::cout << "D-bar = " << to_string(wa) << " D\n";
  else
    std::cout << "D-bar = " << to_string(wa) << " D + " << to_string(wb) << " D'\n";
  std::cout << "      = " << p.D.describe() << " = " << format_double(p.D.value(r_norm)) << '\n';
  if (p.Q) std::cout << "Q-bar: " << *p.Q << '\n';

  nlohmann::json meta = to_json(p, r_norm);
  meta["r_norm"] = r_norm;
  const bool ok = !p.Q || p.weight_sum() == Rational(*p.Q, *p.Q - 1);
  return {exact_report("product_weights", ok, std::move(meta))};
}

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  Options opt;
  std::function<std::vector<Report>(const Options&)> run;
};

int finish(const std::string& command, const Options& o, std::vector<Report> rs) {
  for (const auto& r : rs)
    if (std::isnan(r.lhs) || std::isnan(r.rhs))
      throw NumericalError("check '" + r.name + "' produced NaN");
  for (auto& r : rs) {
    r.metadata["command"] = command;
    r.metadata["seed"] = o.seed;
  }
  write_table(std::cout, rs);
  if (!o.out.empty()) persist_reports(o.out, rs);
  return all_pass(rs) ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of Loomis-Whitney inequalities on corank-1 Carnot groups H(d, alpha)."};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 pass, 1 inequality violated, 2 bad arguments, 3 numerical failure.");

  std::deque<Command> commands;  // deque: references stay valid while adding
  auto add = [&](const std::string& name, const std::string& help, bool with_group, std::size_t res) -> Command& {
    auto& c = commands.emplace_back();
    c.name = name;
    c.app = app.add_subcommand(name, help);
    add_common(c.app, c.opt, with_group, res);
    return c;
  };
  auto preset_option = [](Command& c, const std::string& def, const std::string& help) {
    c.opt.preset = def;
    c.app->add_option("--preset", c.opt.preset, help)->capture_default_str();
  };
  auto input_option = [](Command& c, const std::string& what) {
    c.app->add_option("--input", c.opt.input, what + " grid file (text or binary), overrides --preset")
        ->check(CLI::ExistingFile);
  };
  auto density_options = [&](Command& c, const std::string& def) {
    preset_option(c, def, "gauss, gaussian, bumps, uniform-box, product or triangle");
    c.app->add_option("--width", c.opt.width, "scale of the analytic presets, in (0, 1]")->capture_default_str();
    input_option(c, "density");
  };

  auto& bl = add("bl-constant", "Brascamp-Lieb constant by Gaussian ascent", true, 2);
  std::string datum = "lw:3";
  int bl_iters = 400;
  bl.app->add_option("--datum", datum, "lw:K, pair-deletion:N, corank (linearized --group) or a JSON file {k, maps, exps}")
      ->capture_default_str();
  bl.app->add_option("--iters", bl_iters, "ascent iterations per start")->check(CLI::PositiveNumber)->capture_default_str();
  bl.run = [&](const Options& o) {
    const auto d = datum_arg(datum, group_arg(o.group));
    BLOptions opt;
    opt.iters = bl_iters;
    opt.seed = o.seed;
    const auto res = bl_constant(d, opt);
    nlohmann::json meta = {{"datum", to_json(d)}, {"converged", res.converged}, {"reason", res.reason}};
    if (check_geometric(d)) return std::vector<Report>{closeness_report("bl_constant", res.estimate, 1.0, 1e-6, meta)};
    // no reference value for a general datum: record the estimate only
    auto r = make_report("bl_constant", res.estimate, std::numeric_limits<double>::infinity(), 0.0, meta);
    r.informational = true;
    return std::vector<Report>{r};
  };

  auto& lw = add("lw-verify", "multilinear inequality with constant C(d, alpha) on preset inputs", true, 128);
  preset_option(lw, "gauss", "gauss, bumps or cube");
  lw.run = [](const Options& o) {
    const auto g = group_arg(o.group);
    return std::vector<Report>{verify_lw(g, lw_inputs(g, o.preset, o.res, o.seed, false), r_norm_arg(o), o.res)};
  };

  auto& nl = add("nonlinear-lw", "nonlinear inequality over all d+2n+1 projections, constant 1", true, 128);
  preset_option(nl, "gauss", "gauss, bumps or cube");
  nl.run = [](const Options& o) {
    const auto g = group_arg(o.group);
    return std::vector<Report>{verify_nonlinear_lw(g, lw_inputs(g, o.preset, o.res, o.seed, true), o.res)};
  };

  auto& st = add("set-lw", "set inequality m(E) <= C prod m(pi_j E)^{c_j} on a raster", true, 128);
  preset_option(st, "cube", "cube, ball or random");
  input_option(st, "0/1 set");
  st.run = [](const Options& o) {
    const auto g = group_arg(o.group);
    return std::vector<Report>{verify_set_lw(g, set_arg(g, o), r_norm_arg(o))};
  };

  auto& en = add("entropy-check", "entropy subadditivity sum c_j S(f_(pi_j)) <= S(f) + D", true, 128);
  density_options(en, "gauss");
  en.run = [](const Options& o) {
    const auto g = group_arg(o.group);
    return std::vector<Report>{subadditivity_check(g, density_arg(g, o), corank_constants(g), r_norm_arg(o))};
  };

  auto& pc = add("proof-chain", "intermediate entropy inequalities on H(0, alpha), n >= 2; --res is per axis", true, 24);
  pc.opt.group = R"({"d":0,"n":2,"alpha":[1,1]})";
  preset_option(pc, "gauss", "gauss (streamed, sigma 0.5) or bumps (stored)");
  input_option(pc, "density");
  bool no_fiber = false;
  pc.app->add_flag("--no-fiber", no_fiber, "skip the per-fiber report");
  pc.run = [&](const Options& o) {
    const auto g = group_arg(o.group);
    const ProofChainOptions opt{!no_fiber, 1e-2};
    if (!o.input.empty()) return proof_chain_checks(g, density_arg(g, o), r_norm_arg(o), opt);
    const auto geom = GridGeometry::cube(g.topo_dim(), -2.0, 2.0, o.res);
    if (o.preset == "gauss") {
      const std::vector<double> sig(g.topo_dim(), 0.5);
      return proof_chain_checks(g, normalize(GaussianField::diagonal(geom, sig)), r_norm_arg(o), opt);
    }
    require(o.preset == "bumps", "unknown proof-chain preset '" + o.preset + "' (expected gauss or bumps)");
    require(geom.size() <= (std::size_t{1} << 28), "grid too large for a stored density; use --preset gauss");
    std::mt19937_64 rng(o.seed);
    const auto b = random_bump_sum(g.topo_dim(), rng);
    return proof_chain_checks(g, normalize(GridDensity::sample(geom, b)), r_norm_arg(o), opt);
  };

  auto& rn = add("radon-norm", "lower bound on ||R||_{3/2->3}; passes when the configured norm is not below it", false, 2);
  std::vector<std::string> families = radon_family_names();
  std::vector<std::size_t> radon_res{256, 512};
  rn.app->add_option("--families,--family", families, "test families, space or comma separated")
      ->delimiter(',')
      ->capture_default_str();
  rn.app->add_option("--resolutions", radon_res, "grid resolutions; each ratio is the minimum over them")
      ->capture_default_str();
  rn.run = [&](const Options& o) {
    // a plain --res means that single resolution
    if (rn.app->count("--res") > 0 && rn.app->count("--resolutions") == 0) radon_res = {o.res};
    const auto est = estimate_radon_norm_lb(families, radon_res, o.seed);
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& [d, r] : est.ratios) ratios.push_back({{"member", nlohmann::json::parse(d)}, {"ratio", r}});
    return std::vector<Report>{make_report("radon_lb", est.lb, r_norm_arg(o), 0.0,
                                           {{"best", nlohmann::json::parse(est.best)}, {"ratios", ratios}})};
  };

  auto& pr = add("product-combine", "weights and constant on a product of two spaces", false, 2);
  std::string left, right;
  pr.app->add_option("--left", left, "h1, a group JSON, or scaled data {\"c\": [...], \"D\": ..., \"Q\": ...}")->required();
  pr.app->add_option("--right", right, "same forms as --left, or 'line' for the product with R")->required();
  pr.run = [&](const Options& o) { return product_command(left, right, r_norm_arg(o)); };

  auto& sb = add("sobolev-check", "level-set estimate and ||f||_{Q/(Q-1)} <= C ||grad_H f||_1 on a smooth bump", true, 128);
  preset_option(sb, "bump", "bump");
  double dilation = 1.0;
  sb.app->add_option("--dilate", dilation, "sample f o delta_r instead of f")->check(CLI::PositiveNumber)->capture_default_str();
  sb.run = [&](const Options& o) {
    const auto g = group_arg(o.group);
    const auto f = smooth_preset(g, o.preset, o.res, dilation);
    return std::vector<Report>{level_set_check(g, f), sobolev_check(g, f, r_norm_arg(o))};
  };

  auto& is = add("iso-check", "isoperimetric inequality with the perimeter of a mollified indicator", true, 64);
  preset_option(is, "ball", "cube, ball or random");
  input_option(is, "0/1 set");
  double width = 0.25;
  std::size_t points = 7;
  is.app->add_option("--width", width, "mollifier width")->check(CLI::PositiveNumber)->capture_default_str();
  is.app->add_option("--points", points, "quadrature points per axis of the mollifier")
      ->check(CLI::Range(std::size_t{2}, std::size_t{64}))
      ->capture_default_str();
  is.run = [&](const Options& o) {
    const auto g = group_arg(o.group);
    return std::vector<Report>{isoperimetric_check(g, set_arg(g, o), width, r_norm_arg(o), points)};
  };

  auto& su = add("suite", "pinned bundle: core, entropy, products or sobolev", false, 2);
  std::string suite;
  su.app->add_option("name", suite, "suite name")->required();
  su.run = [&](const Options& o) { return run_suite(suite, r_norm_arg(o)); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (const auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      return finish(c.name, c.opt, c.run(c.opt));
    } catch (const InvalidArgument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "numerical error: " << e.what() << '\n';
      return kExitNumerical;
    }
  }
  return kExitUsage;
}
