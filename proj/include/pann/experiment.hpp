#pragma once

// Experiment configuration: JSON schema, reference defaults, validation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pann/dataset.hpp"
#include "pann/dataset_io.hpp"
#include "pann/error.hpp"
#include "pann/linalg.hpp"
#include "pann/signals.hpp"
#include "pann/statespace.hpp"
#include "pann/training.hpp"

namespace pann {

inline constexpr const char* kConfigSchema = "pann.config/1";
inline constexpr const char* kOutputRootEnv = "PANN_OUTPUT_ROOT";

// ---------------------------------------------------------------------------
// JSON <-> Eigen
// ---------------------------------------------------------------------------

inline ordered_json vector_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ordered_json matrix_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

inline Vector vector_from_json(const ordered_json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const ordered_json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(what + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(r)], what);
    if (row.size() != cols) throw ConfigError(what + ": ragged matrix");
    m.row(r) = row.transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generic affine model file
// ---------------------------------------------------------------------------

// A(theta) = a0 + sum theta_i a_terms[i], B(theta) = b0 + sum theta_i b_terms[i];
// `input` is a constant excitation, `z_bound` the step-input magnitude box.
struct GenericModelSpec {
  Matrix a0;
  MatrixStack a_terms;
  Matrix b0;
  MatrixStack b_terms;
  Vector input;
  Vector z_bound;

  ContinuousModel model() const { return affine_model(a0, a_terms, b0, b_terms); }
};

inline GenericModelSpec generic_model_from_json(const ordered_json& j) {
  GenericModelSpec g;
  g.a0 = matrix_from_json(j.at("a0"), "a0");
  g.b0 = matrix_from_json(j.at("b0"), "b0");
  for (const auto& t : j.at("a_terms")) g.a_terms.push_back(matrix_from_json(t, "a_terms"));
  for (const auto& t : j.at("b_terms")) g.b_terms.push_back(matrix_from_json(t, "b_terms"));
  g.input = j.contains("input") ? vector_from_json(j["input"], "input") : Vector::Zero(g.b0.cols());
  g.z_bound = j.contains("z_bound") ? vector_from_json(j["z_bound"], "z_bound")
                                    : Vector::Ones(g.a0.rows() + g.b0.cols());
  if (g.input.size() != g.b0.cols()) throw ConfigError("generic model: input must have D_u entries");
  if (g.z_bound.size() != g.a0.rows() + g.b0.cols()) throw ConfigError("generic model: z_bound must have D_z entries");
  return g;
}

inline ordered_json to_json(const GenericModelSpec& g) {
  ordered_json at = ordered_json::array(), bt = ordered_json::array();
  for (const auto& m : g.a_terms) at.push_back(matrix_json(m));
  for (const auto& m : g.b_terms) bt.push_back(matrix_json(m));
  return ordered_json{{"a0", matrix_json(g.a0)}, {"a_terms", at},
                      {"b0", matrix_json(g.b0)}, {"b_terms", bt},
                      {"input", vector_json(g.input)}, {"z_bound", vector_json(g.z_bound)}};
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ModelKind { dab, generic };

struct SimulateSettings {
  double phase_shift = 0.25;
  bool zero_input = false;
  std::size_t max_cycles = 200;
  double settle_tol = 1e-9;
};

struct LipschitzSettings {
  NormKind norm = NormKind::infinity;  // step-map norm
  std::size_t theta_samples = 10000;   // draws for the theta suprema
  std::size_t mc_samples_z = 100000;
  std::size_t mc_samples_theta = 10000;
  double delta = 1e-6;
};

struct TrainingSettings {
  std::vector<Strategy> strategies{Strategy::s1, Strategy::s2, Strategy::s3,
                                   Strategy::s4, Strategy::s5, Strategy::s6};
  AdamConfig adam;  // alpha is filled per strategy
  double scale_c = 1.0;
  RateLimits limits;
  double convergence_band = 0.01;
  std::size_t identification_epochs = 200;
  std::optional<Vector> theta_initial;  // default: box centre
};

struct ExperimentConfig {
  ModelKind model = ModelKind::dab;
  std::string model_file;  // generic only
  std::optional<GenericModelSpec> generic;

  std::vector<std::string> names;
  Vector theta_true;
  Vector lower;
  Vector upper;

  ModulationSpec modulation;
  double phase_lo = 0.05;
  double phase_hi = 0.45;
  SplitCounts counts;
  double noise_sigma = 0.0;
  SynthesisOptions synthesis;

  SimulateSettings simulate;
  LipschitzSettings lipschitz;
  TrainingSettings training;

  std::uint64_t seed = 1;
  std::string output;  // empty: $PANN_OUTPUT_ROOT, else "pann_out"

  ParamVector theta() const { return ParamVector(names, theta_true, lower, upper); }

  ParamVector theta_initial() const {
    const Vector v = training.theta_initial ? *training.theta_initial : Vector((lower + upper) / 2.0);
    return ParamVector(names, theta_true, lower, upper).with_values(v);
  }

  ContinuousModel continuous_model() const { return model == ModelKind::dab ? dab_model() : generic->model(); }

  std::filesystem::path output_dir() const {
    if (!output.empty()) return output;
    if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
    return "pann_out";
  }

  void validate() const {
    (void)theta();
    (void)theta_initial();
    modulation.validate();
    if (model == ModelKind::dab) {
      if (names.size() != 3) throw ConfigError("dab model has exactly 3 parameters (L_k, R_L, n)");
      if (!(phase_lo < phase_hi) || !(phase_lo > -0.5) || !(phase_hi <= 0.5)) {
        throw ConfigError("phase_shift_range must satisfy -0.5 < lo < hi <= 0.5");
      }
      if (counts.train < 1) throw ConfigError("dataset.train must be at least 1");
    } else {
      if (!generic) throw ConfigError("generic model selected but no model file loaded");
      if (generic->a_terms.size() != names.size()) throw ConfigError("generic model: one A/B term per parameter");
    }
    if (!(noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma must be non-negative");
    if (synthesis.max_cycles < 1 || simulate.max_cycles < 1) throw ConfigError("max_cycles must be at least 1");
    if (lipschitz.mc_samples_z < 2 || lipschitz.mc_samples_theta < 2) {
      throw ConfigError("lipschitz sample counts must be at least 2");
    }
    if (!(lipschitz.delta > 0.0)) throw ConfigError("lipschitz.delta must be positive");
    if (training.strategies.empty()) throw ConfigError("training.strategies must not be empty");
    AdamConfig probe = training.adam;
    probe.alpha = Vector::Ones(static_cast<Eigen::Index>(names.size()));
    probe.validate(names.size());
    if (!(training.scale_c > 0.0)) throw ConfigError("training.scale_c must be positive");
    if (!(training.limits.min > 0.0 && training.limits.min < training.limits.max)) {
      throw ConfigError("training.rate_limits must satisfy 0 < min < max");
    }
    if (!(training.convergence_band > 0.0)) throw ConfigError("training.convergence_band must be positive");
  }
};

inline ExperimentConfig default_config() {
  ExperimentConfig c;
  const ParamVector p = dab::reference_params();
  c.names = p.names();
  c.theta_true = p.values();
  c.lower = p.lower();
  c.upper = p.upper();
  c.modulation.v_in = 200.0;
  c.modulation.v_out = 200.0;
  c.modulation.f_s = dab::kSwitchingFrequency;
  c.modulation.dt = dab::kTimeStep;
  c.modulation.n_periods = 1;
  return c;
}

inline std::string strategy_list(const std::vector<Strategy>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + strategy_label(s[i]);
  return out;
}

inline std::vector<Strategy> parse_strategy_list(const std::string& text) {
  std::vector<Strategy> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(strategy_from_string(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty strategy list");
  return out;
}

inline ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["schema"] = kConfigSchema;
  j["model"] = ordered_json{{"kind", c.model == ModelKind::dab ? "dab" : "generic"}};
  if (c.model == ModelKind::generic) {
    j["model"]["file"] = c.model_file;
    if (c.generic) j["model"]["spec"] = to_json(*c.generic);
  }
  ordered_json names = ordered_json::array();
  for (const auto& n : c.names) names.push_back(n);
  j["theta"] = ordered_json{{"names", names},
                            {"true", vector_json(c.theta_true)},
                            {"lower", vector_json(c.lower)},
                            {"upper", vector_json(c.upper)}};
  if (c.training.theta_initial) j["theta"]["initial"] = vector_json(*c.training.theta_initial);
  ordered_json mod = to_json(c.modulation);
  mod.erase("phase_shift");
  mod["phase_shift_range"] = {c.phase_lo, c.phase_hi};
  j["modulation"] = mod;
  j["dataset"] = ordered_json{{"train", c.counts.train},
                              {"test", c.counts.test},
                              {"validation", c.counts.validation},
                              {"noise_sigma", c.noise_sigma},
                              {"settle_max_cycles", c.synthesis.max_cycles},
                              {"settle_tol", c.synthesis.settle_tol}};
  j["simulate"] = ordered_json{{"phase_shift", c.simulate.phase_shift},
                               {"zero_input", c.simulate.zero_input},
                               {"max_cycles", c.simulate.max_cycles},
                               {"settle_tol", c.simulate.settle_tol}};
  j["lipschitz"] = ordered_json{{"norm", std::string(to_string(c.lipschitz.norm))},
                                {"theta_samples", c.lipschitz.theta_samples},
                                {"mc_samples_z", c.lipschitz.mc_samples_z},
                                {"mc_samples_theta", c.lipschitz.mc_samples_theta},
                                {"delta", c.lipschitz.delta}};
  const AdamConfig& a = c.training.adam;
  j["training"] = ordered_json{{"strategies", strategy_list(c.training.strategies)},
                               {"max_epochs", a.max_epochs},
                               {"beta1", a.beta1},
                               {"beta2", a.beta2},
                               {"epsilon", a.epsilon},
                               {"lambda", a.lambda},
                               {"scale_c", c.training.scale_c},
                               {"rate_limits", {c.training.limits.min, c.training.limits.max}},
                               {"convergence_band", c.training.convergence_band},
                               {"identification_epochs", c.training.identification_epochs}};
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j;
}

namespace detail {

template <typename T>
void read_field(const ordered_json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

inline void check_keys(const ordered_json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown config field '" + where + "." + k + "'");
  }
}

}  // namespace detail

// Missing fields keep their defaults; unknown fields are rejected so typos
// surface instead of silently running the reference setup. Relative model
// paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const ordered_json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c = default_config();
  detail::check_keys(j, "", {"schema", "model", "theta", "modulation", "dataset", "simulate", "lipschitz", "training",
                             "seed", "output"});
  if (j.contains("schema") && j["schema"] != kConfigSchema) {
    throw ConfigError("unsupported config schema '" + j["schema"].dump() + "'");
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::check_keys(m, "model", {"kind", "file", "spec"});
    const std::string kind = m.value("kind", std::string("dab"));
    if (kind == "dab") {
      c.model = ModelKind::dab;
    } else if (kind == "generic") {
      c.model = ModelKind::generic;
      if (m.contains("spec")) {
        c.generic = generic_model_from_json(m["spec"]);
        c.model_file = m.value("file", std::string{});
      } else {
        if (!m.contains("file")) throw ConfigError("generic model needs model.file");
        c.model_file = m["file"].get<std::string>();
        std::filesystem::path path = c.model_file;
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        c.generic = generic_model_from_json(ordered_json::parse(read_text_file(path)));
      }
    } else {
      throw ConfigError("model.kind must be dab or generic");
    }
  }
  if (j.contains("theta")) {
    const auto& t = j["theta"];
    detail::check_keys(t, "theta", {"names", "true", "lower", "upper", "initial"});
    if (t.contains("names")) c.names = t["names"].get<std::vector<std::string>>();
    if (t.contains("true")) c.theta_true = vector_from_json(t["true"], "theta.true");
    if (t.contains("lower")) c.lower = vector_from_json(t["lower"], "theta.lower");
    if (t.contains("upper")) c.upper = vector_from_json(t["upper"], "theta.upper");
    if (t.contains("initial")) c.training.theta_initial = vector_from_json(t["initial"], "theta.initial");
  }
  if (j.contains("modulation")) {
    const auto& m = j["modulation"];
    detail::check_keys(m, "modulation", {"v_in", "v_out", "f_s", "dt", "n_periods", "phase_shift_range"});
    detail::read_field(m, "v_in", c.modulation.v_in);
    detail::read_field(m, "v_out", c.modulation.v_out);
    detail::read_field(m, "f_s", c.modulation.f_s);
    detail::read_field(m, "dt", c.modulation.dt);
    detail::read_field(m, "n_periods", c.modulation.n_periods);
    if (m.contains("phase_shift_range")) {
      const Vector r = vector_from_json(m["phase_shift_range"], "modulation.phase_shift_range");
      if (r.size() != 2) throw ConfigError("modulation.phase_shift_range needs two entries");
      c.phase_lo = r(0);
      c.phase_hi = r(1);
    }
  }
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    detail::check_keys(d, "dataset", {"train", "test", "validation", "noise_sigma", "settle_max_cycles", "settle_tol"});
    detail::read_field(d, "train", c.counts.train);
    detail::read_field(d, "test", c.counts.test);
    detail::read_field(d, "validation", c.counts.validation);
    detail::read_field(d, "noise_sigma", c.noise_sigma);
    detail::read_field(d, "settle_max_cycles", c.synthesis.max_cycles);
    detail::read_field(d, "settle_tol", c.synthesis.settle_tol);
  }
  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    detail::check_keys(s, "simulate", {"phase_shift", "zero_input", "max_cycles", "settle_tol"});
    detail::read_field(s, "phase_shift", c.simulate.phase_shift);
    detail::read_field(s, "zero_input", c.simulate.zero_input);
    detail::read_field(s, "max_cycles", c.simulate.max_cycles);
    detail::read_field(s, "settle_tol", c.simulate.settle_tol);
  }
  if (j.contains("lipschitz")) {
    const auto& l = j["lipschitz"];
    detail::check_keys(l, "lipschitz", {"norm", "theta_samples", "mc_samples_z", "mc_samples_theta", "delta"});
    if (l.contains("norm")) c.lipschitz.norm = norm_kind_from_string(l["norm"].get<std::string>());
    detail::read_field(l, "theta_samples", c.lipschitz.theta_samples);
    detail::read_field(l, "mc_samples_z", c.lipschitz.mc_samples_z);
    detail::read_field(l, "mc_samples_theta", c.lipschitz.mc_samples_theta);
    detail::read_field(l, "delta", c.lipschitz.delta);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    detail::check_keys(t, "training", {"strategies", "max_epochs", "beta1", "beta2", "epsilon", "lambda", "scale_c",
                                       "rate_limits", "convergence_band", "identification_epochs"});
    if (t.contains("strategies")) {
      const auto& s = t["strategies"];
      if (s.is_string()) {
        c.training.strategies = parse_strategy_list(s.get<std::string>());
      } else {
        c.training.strategies.clear();
        for (const auto& item : s) c.training.strategies.push_back(strategy_from_string(item.get<std::string>()));
      }
    }
    AdamConfig& a = c.training.adam;
    detail::read_field(t, "max_epochs", a.max_epochs);
    detail::read_field(t, "beta1", a.beta1);
    detail::read_field(t, "beta2", a.beta2);
    detail::read_field(t, "epsilon", a.epsilon);
    detail::read_field(t, "lambda", a.lambda);
    detail::read_field(t, "scale_c", c.training.scale_c);
    if (t.contains("rate_limits")) {
      const Vector r = vector_from_json(t["rate_limits"], "training.rate_limits");
      if (r.size() != 2) throw ConfigError("training.rate_limits needs two entries");
      c.training.limits = {r(0), r(1)};
    }
    detail::read_field(t, "convergence_band", c.training.convergence_band);
    detail::read_field(t, "identification_epochs", c.training.identification_epochs);
  }
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "output", c.output);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  try {
    return config_from_json(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config '" + path.string() + "': " + e.what());
  }
}

}  // namespace pann
