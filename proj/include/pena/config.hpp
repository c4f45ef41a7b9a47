#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pena/coalescent.hpp"
#include "pena/errors.hpp"
#include "pena/mark_law.hpp"
#include "pena/mc.hpp"
#include "pena/models.hpp"

namespace pena {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Config sections (JSON-compatible key/value structure, schema_version 1).
// ---------------------------------------------------------------------------

struct EngineConfig {
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double horizon = 1.0;
  int workers = 0;
  double slack = 1.96;
  AtomSignConvention convention = AtomSignConvention::compensator_consistent;
  QuadratureOptions quad;
};

struct TailCheckConfig {
  TailEvent event;
  std::vector<std::string> bounds;  // pena_poisson | pena_gauss | ratio_half | ratio_quarter
};

struct RatioCheckConfig {
  std::string type;  // "supermartingale" | "martingale_ratio"
  std::string family;  // "poissonian" | "gaussian"
  double lambda = 0.5;
  double t_probe = 1.0;
};

struct CoalescentConfig {
  LambdaMeasure measure = LambdaMeasure::kingman();
  int n0 = 20;
  double v0 = 20.0;
  std::optional<double> t0;  // defaults to the Kingman closed form when absent
  double horizon = 5.0;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string model_kind;  // compound_poisson | atom_grid | point_process | coalescent
  double kappa = 1.0;
  MarkLaw mark_law = MarkLaw::rademacher();
  bool allow_nonzero_mean = false;
  std::vector<double> atom_times;
  std::vector<double> atom_masses;
  std::vector<MarkLaw> atom_laws;
  CoalescentConfig coalescent;
  std::vector<TailCheckConfig> tail_checks;
  std::vector<RatioCheckConfig> ratio_checks;
  EngineConfig engine;
  std::string output_format = "json";
  std::string output_path;
};

namespace config_detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing field '" + key + "' in " + where);
  return *it;
}

inline MarkLaw parse_mark_law(const Json& j) {
  const std::string kind = require(j, "kind", "mark_law").get<std::string>();
  if (kind == "rademacher") return MarkLaw::rademacher();
  if (kind == "constant") return MarkLaw::constant(require(j, "value", "mark_law").get<double>());
  if (kind == "two_point")
    return MarkLaw::two_point(require(j, "p_minus", "mark_law").get<double>(),
                              require(j, "x_minus", "mark_law").get<double>(),
                              require(j, "x_plus", "mark_law").get<double>());
  if (kind == "uniform")
    return MarkLaw::uniform(require(j, "a", "mark_law").get<double>(),
                            require(j, "b", "mark_law").get<double>());
  if (kind == "finite_discrete") {
    std::vector<std::pair<double, double>> vp;
    for (const auto& row : require(j, "support", "mark_law"))
      vp.emplace_back(require(row, "value", "support").get<double>(),
                      require(row, "prob", "support").get<double>());
    return MarkLaw::finite_discrete(std::move(vp));
  }
  throw ConfigError("unknown mark_law kind '" + kind + "'");
}

inline LambdaMeasure parse_measure(const Json& j) {
  const std::string kind = require(j, "kind", "measure").get<std::string>();
  if (kind == "kingman") return LambdaMeasure::kingman();
  if (kind == "dirac") return LambdaMeasure::dirac(require(j, "p", "measure").get<double>());
  if (kind == "beta")
    return LambdaMeasure::beta(require(j, "a", "measure").get<double>(),
                               require(j, "b", "measure").get<double>());
  if (kind == "uniform01") return LambdaMeasure::uniform01();
  if (kind == "finite_mixture") {
    std::vector<double> points, weights;
    for (const auto& row : require(j, "components", "measure")) {
      points.push_back(require(row, "p", "components").get<double>());
      weights.push_back(require(row, "weight", "components").get<double>());
    }
    return LambdaMeasure::finite_mixture(std::move(points), std::move(weights));
  }
  throw ConfigError("unknown measure kind '" + kind + "'");
}

inline TailEvent parse_event(const Json& j) {
  const std::string kind = require(j, "kind", "event").get<std::string>();
  if (kind == "B1")
    return TailEvent::b1(require(j, "x", "event").get<double>(),
                         require(j, "v2", "event").get<double>());
  if (kind == "B2") {
    const std::string cs = j.value("constraint", "vs_pqv");
    if (cs != "vs_pqv" && cs != "vs_level")
      throw ConfigError("unknown B2 constraint '" + cs + "'");
    return TailEvent::b2(require(j, "x", "event").get<double>(),
                         require(j, "alpha", "event").get<double>(),
                         require(j, "beta", "event").get<double>(),
                         require(j, "v2", "event").get<double>(),
                         cs == "vs_pqv" ? TailEvent::B2Constraint::vs_pqv
                                        : TailEvent::B2Constraint::vs_level);
  }
  throw ConfigError("unknown event kind '" + kind + "'");
}

}  // namespace config_detail

inline RunConfig parse_run_config(const Json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  cfg.schema_version = j.value("schema_version", 0);
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version) +
                      " (expected " + std::to_string(kSchemaVersion) + ")");

  const Json& model = config_detail::require(j, "model", "config");
  cfg.model_kind = config_detail::require(model, "kind", "model").get<std::string>();
  if (cfg.model_kind == "compound_poisson") {
    cfg.kappa = config_detail::require(model, "kappa", "model").get<double>();
    cfg.mark_law = config_detail::parse_mark_law(config_detail::require(model, "mark_law", "model"));
    cfg.allow_nonzero_mean = model.value("allow_nonzero_mean", false);
  } else if (cfg.model_kind == "atom_grid" || cfg.model_kind == "point_process") {
    if (cfg.model_kind == "point_process") {
      cfg.kappa = model.value("kappa", 0.0);
      if (cfg.kappa < 0.0) throw ConfigError("point_process kappa must be nonnegative");
      if (cfg.kappa > 0.0)
        cfg.mark_law =
            config_detail::parse_mark_law(config_detail::require(model, "mark_law", "model"));
    }
    if (model.contains("atoms")) {
      for (const auto& atom : model["atoms"]) {
        cfg.atom_times.push_back(config_detail::require(atom, "time", "atom").get<double>());
        cfg.atom_masses.push_back(config_detail::require(atom, "mass", "atom").get<double>());
        cfg.atom_laws.push_back(
            config_detail::parse_mark_law(config_detail::require(atom, "mark_law", "atom")));
      }
    } else if (cfg.model_kind == "atom_grid") {
      throw ConfigError("missing field 'atoms' in model");
    }
  } else if (cfg.model_kind == "coalescent") {
    cfg.coalescent.measure =
        config_detail::parse_measure(config_detail::require(model, "measure", "model"));
    cfg.coalescent.n0 = config_detail::require(model, "n0", "model").get<int>();
    if (cfg.coalescent.n0 < 2) throw ConfigError("coalescent n0 must be at least 2");
    cfg.coalescent.v0 = model.value("v0", double(cfg.coalescent.n0));
    if (model.contains("t0") && !model["t0"].is_null())
      cfg.coalescent.t0 = model["t0"].get<double>();
    cfg.coalescent.horizon = model.value("horizon", 5.0);
  } else {
    throw ConfigError("unknown model kind '" + cfg.model_kind + "'");
  }

  if (j.contains("checks")) {
    for (const auto& check : j["checks"]) {
      const std::string type = config_detail::require(check, "type", "check").get<std::string>();
      if (type == "tail") {
        TailCheckConfig tc;
        tc.event = config_detail::parse_event(config_detail::require(check, "event", "check"));
        for (const auto& b : config_detail::require(check, "bounds", "check"))
          tc.bounds.push_back(b.get<std::string>());
        cfg.tail_checks.push_back(std::move(tc));
      } else if (type == "supermartingale" || type == "martingale_ratio") {
        RatioCheckConfig rc;
        rc.type = type;
        rc.family = config_detail::require(check, "family", "check").get<std::string>();
        if (rc.family != "poissonian" && rc.family != "gaussian")
          throw ConfigError("unknown penalty family '" + rc.family + "'");
        rc.lambda = config_detail::require(check, "lambda", "check").get<double>();
        rc.t_probe = config_detail::require(check, "t_probe", "check").get<double>();
        cfg.ratio_checks.push_back(std::move(rc));
      } else {
        throw ConfigError("unknown check type '" + type + "'");
      }
    }
  }

  const Json& engine = config_detail::require(j, "engine", "config");
  cfg.engine.n_paths = config_detail::require(engine, "n_paths", "engine").get<std::uint64_t>();
  if (cfg.engine.n_paths < 2) throw ConfigError("engine.n_paths must be at least 2");
  cfg.engine.seed = config_detail::require(engine, "seed", "engine").get<std::uint64_t>();
  cfg.engine.seed_set = true;
  cfg.engine.horizon = engine.value("horizon", 1.0);
  if (!(cfg.engine.horizon > 0.0)) throw ConfigError("engine.horizon must be positive");
  cfg.engine.workers = engine.value("workers", 0);
  cfg.engine.slack = engine.value("slack", 1.96);
  const std::string conv = engine.value("atom_sign_convention", "compensator_consistent");
  if (conv == "compensator_consistent")
    cfg.engine.convention = AtomSignConvention::compensator_consistent;
  else if (conv == "paper_as_written")
    cfg.engine.convention = AtomSignConvention::paper_as_written;
  else
    throw ConfigError("unknown atom_sign_convention '" + conv + "'");
  cfg.engine.quad.abs_tol = engine.value("quad_abs_tol", 1e-10);
  cfg.engine.quad.rel_tol = engine.value("quad_rel_tol", 1e-8);

  if (j.contains("output")) {
    cfg.output_format = j["output"].value("format", "json");
    cfg.output_path = j["output"].value("path", "");
    if (cfg.output_format != "json" && cfg.output_format != "csv")
      throw ConfigError("unknown output format '" + cfg.output_format + "'");
  }
  return cfg;
}

inline RunConfig parse_run_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  return parse_run_config(j);
}

// Builds the point-process model described by the config (compound_poisson,
// atom_grid, or the general point_process kind with constant intensity).
inline PPModel make_pp_model(const RunConfig& cfg) {
  if (cfg.model_kind == "compound_poisson")
    return compound_poisson_model(cfg.kappa, cfg.mark_law, cfg.allow_nonzero_mean);
  if (cfg.model_kind == "atom_grid")
    return atom_grid_model(cfg.atom_times, cfg.atom_masses, cfg.atom_laws);
  if (cfg.model_kind == "point_process") {
    PPModel model = atom_grid_model(cfg.atom_times, cfg.atom_masses, cfg.atom_laws);
    if (cfg.kappa > 0.0) {
      model.spec.ac = AbsContSpec::homogeneous(cfg.kappa, cfg.mark_law);
      const bool zero_mean = std::fabs(cfg.mark_law.mean()) <= 1e-12;
      model.spec.drift_sign_hint =
          zero_mean ? DriftSignHint::zero_drift
                    : (cfg.mark_law.mean() > 0 ? DriftSignHint::nonneg_weight
                                               : DriftSignHint::nonpos_weight);
      model.weight.drift_monotone =
          zero_mean ? DriftMonotone::constant
                    : (cfg.mark_law.mean() > 0 ? DriftMonotone::nonincreasing_between_jumps
                                               : DriftMonotone::nondecreasing_between_jumps);
    }
    const auto report = validate_compensator(model.spec);
    if (!report.ok()) throw ConfigError("invalid point_process spec: " + report.violations[0]);
    return model;
  }
  throw ConfigError("model kind '" + cfg.model_kind + "' is not a point-process model");
}

inline CoalescentModel make_coalescent_model(const RunConfig& cfg) {
  const CoalescentConfig& cc = cfg.coalescent;
  double t0;
  if (cc.t0) {
    t0 = *cc.t0;
  } else if (cc.measure.kind() == LambdaMeasure::Kind::dirac && cc.measure.points()[0] == 0.0) {
    t0 = kingman_t0_for(cc.v0);
  } else {
    throw ConfigError("coalescent t0 must be given explicitly for non-Kingman measures");
  }
  return CoalescentModel::build(cc.measure, cc.n0, t0, cc.v0, cc.horizon);
}

// Named bound evaluation for tail checks.
inline NamedBound evaluate_bound(const std::string& name, const TailEvent& event) {
  if (name == "pena_poisson") return {name, pena_poisson_bound(event.x, event.v2)};
  if (name == "pena_gauss") return {name, pena_gauss_bound(event.x, event.v2)};
  if (name == "ratio_half")
    return {name, ratio_bound(event.x, event.alpha, event.beta, event.v2, RatioScale::half)};
  if (name == "ratio_quarter")
    return {name, ratio_bound(event.x, event.alpha, event.beta, event.v2, RatioScale::quarter)};
  throw ConfigError("unknown bound name '" + name + "'");
}

// Bundled configurations, addressable by name from the command line.
inline const std::map<std::string, std::string>& bundled_configs() {
  static const std::map<std::string, std::string> presets = {
      {"thm21_compound_poisson", R"JSON({
  "schema_version": 1,
  "model": {"kind": "compound_poisson", "kappa": 1.0,
            "mark_law": {"kind": "two_point", "p_minus": 0.5, "x_minus": -1.0, "x_plus": 1.0}},
  "checks": [
    {"type": "tail", "event": {"kind": "B1", "x": 1.0, "v2": 1.0}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B1", "x": 2.0, "v2": 2.0}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B1", "x": 3.0, "v2": 4.0}, "bounds": ["pena_poisson"]},
    {"type": "supermartingale", "family": "poissonian", "lambda": 0.5, "t_probe": 1.0}
  ],
  "engine": {"n_paths": 200000, "seed": 20240817, "horizon": 10.0}
})JSON"},
      {"thm23_compound_poisson", R"JSON({
  "schema_version": 1,
  "model": {"kind": "compound_poisson", "kappa": 1.0,
            "mark_law": {"kind": "two_point", "p_minus": 0.5, "x_minus": -1.0, "x_plus": 1.0}},
  "checks": [
    {"type": "tail", "event": {"kind": "B1", "x": 1.0, "v2": 1.0}, "bounds": ["pena_gauss"]},
    {"type": "tail", "event": {"kind": "B1", "x": 2.0, "v2": 2.0}, "bounds": ["pena_gauss"]},
    {"type": "tail", "event": {"kind": "B1", "x": 3.0, "v2": 4.0}, "bounds": ["pena_gauss"]},
    {"type": "supermartingale", "family": "gaussian", "lambda": 0.5, "t_probe": 1.0},
    {"type": "martingale_ratio", "family": "gaussian", "lambda": 0.3, "t_probe": 1.0}
  ],
  "engine": {"n_paths": 200000, "seed": 20240817, "horizon": 10.0}
})JSON"},
      {"thm2425_compound_poisson", R"JSON({
  "schema_version": 1,
  "model": {"kind": "compound_poisson", "kappa": 1.0,
            "mark_law": {"kind": "two_point", "p_minus": 0.5, "x_minus": -1.0, "x_plus": 1.0}},
  "checks": [
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_pqv", "x": 1.0, "alpha": 0.0, "beta": 1.0, "v2": 1.0},
     "bounds": ["ratio_half"]},
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_level", "x": 1.0, "alpha": 0.0, "beta": 1.0, "v2": 1.0},
     "bounds": ["ratio_quarter"]},
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_pqv", "x": 1.0, "alpha": 1.0, "beta": 0.5, "v2": 2.0},
     "bounds": ["ratio_half"]},
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_level", "x": 1.0, "alpha": 1.0, "beta": 0.5, "v2": 2.0},
     "bounds": ["ratio_quarter"]}
  ],
  "engine": {"n_paths": 200000, "seed": 20240817, "horizon": 10.0}
})JSON"},
      {"thm23_not_heavy", R"JSON({
  "schema_version": 1,
  "model": {"kind": "compound_poisson", "kappa": 1.0,
            "mark_law": {"kind": "two_point", "p_minus": 0.3333333333333333, "x_minus": -2.0, "x_plus": 1.0}},
  "checks": [
    {"type": "supermartingale", "family": "gaussian", "lambda": 0.2, "t_probe": 1.0}
  ],
  "engine": {"n_paths": 50000, "seed": 20240817, "horizon": 10.0}
})JSON"},
      {"atom_discriminator", R"JSON({
  "schema_version": 1,
  "model": {"kind": "atom_grid",
            "atoms": [{"time": 1.0, "mass": 0.5, "mark_law": {"kind": "constant", "value": 2.0}}]},
  "checks": [
    {"type": "martingale_ratio", "family": "gaussian", "lambda": 0.4, "t_probe": 1.0}
  ],
  "engine": {"n_paths": 100000, "seed": 20240817, "horizon": 1.0}
})JSON"},
      {"coalescent_kingman", R"JSON({
  "schema_version": 1,
  "model": {"kind": "coalescent", "measure": {"kind": "kingman"}, "n0": 20, "v0": 20.0, "horizon": 5.0},
  "checks": [
    {"type": "tail", "event": {"kind": "B1", "x": 0.5, "v2": 0.5}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B1", "x": 1.0, "v2": 1.0}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_pqv", "x": 1.0, "alpha": 0.0, "beta": 1.0, "v2": 0.5},
     "bounds": ["ratio_half"]}
  ],
  "engine": {"n_paths": 100000, "seed": 20240817}
})JSON"},
      {"coalescent_beta", R"JSON({
  "schema_version": 1,
  "model": {"kind": "coalescent", "measure": {"kind": "beta", "a": 1.5, "b": 1.5},
            "n0": 20, "v0": 20.0, "t0": 0.2, "horizon": 5.0},
  "checks": [
    {"type": "tail", "event": {"kind": "B1", "x": 0.5, "v2": 0.5}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B1", "x": 1.0, "v2": 1.0}, "bounds": ["pena_poisson"]},
    {"type": "tail", "event": {"kind": "B2", "constraint": "vs_pqv", "x": 1.0, "alpha": 0.0, "beta": 1.0, "v2": 0.5},
     "bounds": ["ratio_half"]}
  ],
  "engine": {"n_paths": 100000, "seed": 20240817}
})JSON"}};
  return presets;
}

}  // namespace pena
