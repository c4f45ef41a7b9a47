// pena_mpp: tail-bound evaluation and Monte Carlo certification of
// exponential inequalities for stochastic integrals of marked point
// processes, plus the Lambda-coalescent block counting application.
//
// Exit codes: 0 all verdicts pass, 1 verdict failure, 2 hypothesis failure,
// 3 usage/config error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pena/pena.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitHypothesisFail = 2;
constexpr int kExitUsage = 3;

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pena::ConfigError("cannot open output file '" + path + "'");
  out << text;
}

pena::Json report_to_json(const pena::MonteCarloReport& rep, bool timings) {
  pena::Json j;
  j["event"] = rep.event;
  j["n_paths"] = rep.n_paths;
  j["hits"] = rep.hits;
  j["p_hat"] = rep.p_hat;
  j["se"] = rep.se;
  j["ci95"] = {rep.ci_lo, rep.ci_hi};
  j["bound_name"] = rep.bound_name;
  j["bound_value"] = rep.bound_value;
  j["slack"] = rep.slack;
  j["pass"] = rep.pass;
  j["seed"] = rep.seed;
  if (timings) j["wall_seconds"] = rep.wall_seconds;
  return j;
}

pena::Json report_to_json(const pena::MeanReport& rep, bool timings) {
  pena::Json j;
  j["quantity"] = rep.quantity;
  j["n_paths"] = rep.n_paths;
  j["mean"] = rep.mean;
  j["se"] = rep.se;
  j["lambda"] = rep.lambda;
  j["t_probe"] = rep.t_probe;
  j["pass"] = rep.pass;
  if (rep.heavy_tail_warning) j["heavy_tail_warning"] = true;
  j["seed"] = rep.seed;
  if (timings) j["wall_seconds"] = rep.wall_seconds;
  return j;
}

// Tabular (CSV) form of a check list, one row per verdict.
struct ReportRows {
  std::string csv = "type,name,n_paths,estimate,se,target_name,target,pass\n";

  void add(const pena::MonteCarloReport& rep) {
    csv += "tail," + rep.event + "," + std::to_string(rep.n_paths) + "," +
           pena::format_double(rep.p_hat) + "," + pena::format_double(rep.se) + "," +
           rep.bound_name + "," + pena::format_double(rep.bound_value) + "," +
           (rep.pass ? "true" : "false") + "\n";
  }

  void add(const pena::MeanReport& rep) {
    csv += "mean," + rep.quantity + "," + std::to_string(rep.n_paths) + "," +
           pena::format_double(rep.mean) + "," + pena::format_double(rep.se) + ",one," +
           pena::format_double(1.0) + "," + (rep.pass ? "true" : "false") + "\n";
  }
};

std::string load_config_text(const std::string& config_path, const std::string& preset) {
  if (!preset.empty()) {
    const auto& presets = pena::bundled_configs();
    auto it = presets.find(preset);
    if (it == presets.end()) {
      std::string names;
      for (const auto& [name, text] : presets) names += " " + name;
      throw pena::ConfigError("unknown preset '" + preset + "'; available:" + names);
    }
    return it->second;
  }
  if (config_path.empty())
    throw pena::ConfigError("either --config or --preset is required");
  std::ifstream in(config_path);
  if (!in) throw pena::ConfigError("cannot read config file '" + config_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint64_t n_paths = 0;
  int workers = -1;
  bool timings = false;
  bool dump_config = false;
};

void apply_overrides(pena::RunConfig& cfg, const CommonFlags& flags) {
  if (flags.seed_given) cfg.engine.seed = flags.seed;
  if (flags.n_paths > 0) cfg.engine.n_paths = flags.n_paths;
  if (flags.workers >= 0) {
    cfg.engine.workers = flags.workers;
  } else if (cfg.engine.workers == 0) {
    if (const char* env = std::getenv("PENA_MPP_WORKERS")) cfg.engine.workers = std::atoi(env);
  }
  if (!flags.format.empty()) cfg.output_format = flags.format;
  if (!flags.out_path.empty()) cfg.output_path = flags.out_path;
}

pena::McOptions engine_options(const pena::RunConfig& cfg) {
  pena::McOptions opts;
  opts.n_paths = cfg.engine.n_paths;
  opts.seed = cfg.engine.seed;
  opts.workers = cfg.engine.workers;
  opts.slack = cfg.engine.slack;
  opts.quad = cfg.engine.quad;
  return opts;
}

int run_verify(const CommonFlags& flags) {
  const std::string text = load_config_text(flags.config_path, flags.preset);
  if (flags.dump_config) {
    pena::parse_run_config_text(text);  // validate before emitting
    write_output(text + "\n", flags.out_path);
    return kExitPass;
  }
  pena::RunConfig cfg = pena::parse_run_config_text(text);
  apply_overrides(cfg, flags);
  const pena::McOptions opts = engine_options(cfg);

  pena::Json report;
  report["schema_version"] = pena::kSchemaVersion;
  report["command"] = "verify";
  report["model"] = cfg.model_kind;
  report["engine"] = {{"n_paths", opts.n_paths},
                      {"seed", opts.seed},
                      {"slack", opts.slack},
                      {"horizon", cfg.engine.horizon},
                      {"atom_sign_convention",
                       cfg.engine.convention == pena::AtomSignConvention::compensator_consistent
                           ? "compensator_consistent"
                           : "paper_as_written"}};
  report["checks"] = pena::Json::array();
  ReportRows rows;

  bool all_pass = true;

  if (cfg.model_kind == "coalescent") {
    const pena::CoalescentModel model = pena::make_coalescent_model(cfg);
    const pena::CoalescentJumpModel jump_model(model);
    std::vector<pena::TailCheck> checks;
    for (const auto& tc : cfg.tail_checks) {
      pena::TailCheck check{tc.event, {}};
      for (const auto& name : tc.bounds) check.bounds.push_back(pena::evaluate_bound(name, tc.event));
      checks.push_back(std::move(check));
    }
    if (!checks.empty()) {
      for (const auto& rep : pena::estimate_tail(jump_model, checks, opts)) {
        report["checks"].push_back(report_to_json(rep, flags.timings));
        rows.add(rep);
        all_pass = all_pass && rep.pass;
      }
    }
  } else {
    const pena::PPModel model = pena::make_pp_model(cfg);
    if (!cfg.tail_checks.empty()) {
      const pena::PPJumpModel jump_model(model, cfg.engine.horizon, {cfg.engine.quad});
      std::vector<pena::TailCheck> checks;
      for (const auto& tc : cfg.tail_checks) {
        pena::TailCheck check{tc.event, {}};
        for (const auto& name : tc.bounds)
          check.bounds.push_back(pena::evaluate_bound(name, tc.event));
        checks.push_back(std::move(check));
      }
      for (const auto& rep : pena::estimate_tail(jump_model, checks, opts)) {
        report["checks"].push_back(report_to_json(rep, flags.timings));
        rows.add(rep);
        all_pass = all_pass && rep.pass;
      }
    }
    for (const auto& rc : cfg.ratio_checks) {
      const pena::PenaltyFamily family = rc.family == "poissonian"
                                             ? pena::PenaltyFamily::poissonian()
                                             : pena::PenaltyFamily::gaussian();
      pena::MeanReport rep;
      if (rc.type == "supermartingale") {
        rep = pena::check_supermartingale(model, rc.lambda, family, rc.t_probe, opts,
                                          cfg.engine.convention);
      } else {
        rep = pena::check_martingale_ratio(model, rc.lambda, family, rc.t_probe, opts,
                                           cfg.engine.convention);
      }
      report["checks"].push_back(report_to_json(rep, flags.timings));
      rows.add(rep);
      all_pass = all_pass && rep.pass;
    }
  }

  report["all_pass"] = all_pass;
  if (cfg.output_format == "csv") {
    write_output(rows.csv, cfg.output_path);
  } else {
    write_output(report.dump(2) + "\n", cfg.output_path);
  }
  return all_pass ? kExitPass : kExitVerdictFail;
}

int run_coalescent(const CommonFlags& flags, const std::string& trajectory_out) {
  const std::string text = load_config_text(flags.config_path, flags.preset);
  if (flags.dump_config) {
    pena::parse_run_config_text(text);
    write_output(text + "\n", flags.out_path);
    return kExitPass;
  }
  pena::RunConfig cfg = pena::parse_run_config_text(text);
  apply_overrides(cfg, flags);
  if (cfg.model_kind != "coalescent")
    throw pena::ConfigError("coalescent command requires a coalescent model config");
  const pena::McOptions opts = engine_options(cfg);

  const pena::CoalescentModel model = pena::make_coalescent_model(cfg);

  // One sample trajectory, serialized for inspection/plotting.
  pena::PhiloxStream rng(opts.seed, 0);
  const pena::CoalescentTrajectory traj = pena::simulate_block_counting(model, rng);
  const pena::MartingalePath mp = pena::coalescent_martingale(traj, model);
  write_output(pena::coalescent_to_csv(traj, mp),
               trajectory_out.empty() ? "trajectory.csv" : trajectory_out);

  pena::Json report;
  report["schema_version"] = pena::kSchemaVersion;
  report["command"] = "coalescent";
  report["measure"] = cfg.coalescent.measure.kind() == pena::LambdaMeasure::Kind::beta
                          ? "beta"
                          : (cfg.coalescent.measure.points().empty() ||
                                     cfg.coalescent.measure.points()[0] != 0.0
                                 ? "dirac"
                                 : "kingman");
  report["n0"] = cfg.coalescent.n0;
  report["t0"] = model.t0;
  report["v0"] = model.v0;
  report["horizon"] = model.horizon;
  report["checks"] = pena::Json::array();
  ReportRows rows;

  const pena::CoalescentJumpModel jump_model(model);
  std::vector<pena::TailCheck> checks;
  for (const auto& tc : cfg.tail_checks) {
    pena::TailCheck check{tc.event, {}};
    for (const auto& name : tc.bounds) check.bounds.push_back(pena::evaluate_bound(name, tc.event));
    checks.push_back(std::move(check));
  }
  bool all_pass = true;
  if (!checks.empty()) {
    for (const auto& rep : pena::estimate_tail(jump_model, checks, opts)) {
      report["checks"].push_back(report_to_json(rep, flags.timings));
      rows.add(rep);
      all_pass = all_pass && rep.pass;
    }
  }
  report["all_pass"] = all_pass;
  if (cfg.output_format == "csv") {
    write_output(rows.csv, cfg.output_path);
  } else {
    write_output(report.dump(2) + "\n", cfg.output_path);
  }
  return all_pass ? kExitPass : kExitVerdictFail;
}

std::vector<double> parse_list(const std::vector<std::string>& raw, const char* what) {
  std::vector<double> out;
  for (const std::string& chunk : raw) {
    std::stringstream ss(chunk);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw pena::ConfigError(std::string("cannot parse ") + what + " value '" + item + "'");
      }
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential tail-bound laboratory for marked point processes"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the closed-form tail bounds on a grid");
  std::vector<std::string> xs_raw, v2s_raw;
  double freedman_c = 1.0;
  std::string bounds_out;
  bool long_format = false;
  bounds_cmd->add_option("--x", xs_raw, "deviation levels (comma separated, repeatable)")
      ->required();
  bounds_cmd->add_option("--v2", v2s_raw, "quadratic variation levels")->required();
  bounds_cmd->add_option("--c", freedman_c, "bounded-jump constant for the Freedman column");
  bounds_cmd->add_option("--out", bounds_out, "output file (default stdout)");
  bounds_cmd->add_flag("--long", long_format, "emit long format (x,v2,bound_name,value)");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--preset", flags.preset, "bundled config name");
    cmd->add_option("--seed", flags.seed, "engine seed override")
        ->each([&](const std::string&) { flags.seed_given = true; });
    cmd->add_option("--n-paths", flags.n_paths, "number of Monte Carlo paths override");
    cmd->add_option("--workers", flags.workers, "worker thread count (0 = auto)");
    cmd->add_option("--out", flags.out_path, "report output path (default stdout)");
    cmd->add_option("--format", flags.format, "report format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--timings", flags.timings, "include wall-clock timings in reports");
    cmd->add_flag("--dump-config", flags.dump_config,
                  "print the loaded configuration and exit");
  };

  auto* verify_cmd = app.add_subcommand("verify", "Run the configured certification checks");
  add_common(verify_cmd);

  auto* coalescent_cmd =
      app.add_subcommand("coalescent", "Simulate a Lambda-coalescent and certify its martingale");
  add_common(coalescent_cmd);
  std::string trajectory_out;
  coalescent_cmd->add_option("--trajectory-out", trajectory_out,
                             "CSV path for one sample trajectory (default trajectory.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (bounds_cmd->parsed()) {
      const std::vector<double> xs = parse_list(xs_raw, "--x");
      const std::vector<double> v2s = parse_list(v2s_raw, "--v2");
      std::string csv;
      if (long_format) {
        csv = pena::bound_rows_to_csv(pena::bound_grid_scan(xs, v2s, freedman_c));
      } else {
        csv = pena::bound_table_to_csv(pena::compare_bounds(xs, v2s, freedman_c));
      }
      write_output(csv, bounds_out);
      return kExitPass;
    }
    if (verify_cmd->parsed()) return run_verify(flags);
    if (coalescent_cmd->parsed()) return run_coalescent(flags, trajectory_out);
  } catch (const pena::HypothesisError& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return kExitHypothesisFail;
  } catch (const pena::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pena::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
