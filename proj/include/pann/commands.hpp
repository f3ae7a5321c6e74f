#pragma once

// Experiment commands behind the command-line tool. Each one composes
// library operations and writes its artifacts under an output directory,
// together with the config that produced them.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pann/dataset_io.hpp"
#include "pann/experiment.hpp"
#include "pann/lipschitz.hpp"
#include "pann/recurrent.hpp"
#include "pann/signals.hpp"
#include "pann/trace_io.hpp"
#include "pann/training.hpp"

namespace pann {

namespace fs = std::filesystem;

// Records every file a command writes, relative to the output root.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  const std::vector<std::string>& files() const { return files_; }

  fs::path write(const std::string& rel, const std::string& text) {
    write_text_file(root_ / rel, text);
    add(rel);
    return root_ / rel;
  }
  fs::path write_json(const std::string& rel, const ordered_json& j) { return write(rel, j.dump(2) + "\n"); }

  void add(const std::string& rel) {
    if (std::find(files_.begin(), files_.end(), rel) == files_.end()) files_.push_back(rel);
  }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

inline void write_config_echo(ArtifactWriter& out, const ExperimentConfig& cfg) {
  out.write_json("config.json", to_json(cfg));
}

inline void require_dab(const ExperimentConfig& cfg, const char* command) {
  if (cfg.model != ModelKind::dab) {
    throw ConfigError(std::string(command) + " supports the dab model only (generic models: simulate, lipschitz)");
  }
}

inline DatasetSplits make_splits(const ExperimentConfig& cfg) {
  require_dab(cfg, "dataset synthesis");
  return synthesize_splits(cfg.theta(), cfg.modulation, cfg.counts, cfg.phase_lo, cfg.phase_hi, cfg.noise_sigma,
                           cfg.seed, cfg.synthesis);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthResult {
  DatasetSplits splits;
  fs::path manifest;
};

// <out>/data/{train,test,validation}/segment_NNN.csv + <out>/data/manifest.json
inline SynthResult cmd_synth(const ExperimentConfig& cfg, ArtifactWriter& out) {
  SynthResult r;
  r.splits = make_splits(cfg);
  DatasetManifestInfo info;
  info.seed = cfg.seed;
  info.noise_sigma = cfg.noise_sigma;
  info.extra = to_json(cfg);
  r.manifest = save_datasets(out.root() / "data", {&r.splits.train, &r.splits.test, &r.splits.validation}, info);
  for (const WaveformDataset* d : {&r.splits.train, &r.splits.test, &r.splits.validation}) {
    for (std::size_t i = 0; i < d->segments.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "segment_%03zu.csv", i);
      out.add("data/" + std::string(to_string(d->role)) + "/" + name);
    }
  }
  out.add("data/manifest.json");
  write_config_echo(out, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateResult {
  Vector theta;
  Matrix states;  // D_x x P, states at t_0 .. t_{P-1} of the settled period
  Matrix inputs;  // D_u x P, inputs at the same instants
  bool settled = false;
  std::size_t cycles = 0;
};

// One settled period at `theta` (default: the configured ground truth).
// CSV <out>/simulate/trajectory.csv: time, <states>, <inputs>.
inline SimulateResult cmd_simulate(const ExperimentConfig& cfg, const std::optional<Vector>& theta,
                                   ArtifactWriter& out) {
  const ParamVector box = cfg.theta();
  const ParamVector p = theta ? box.with_values(*theta) : box;
  const ContinuousModel model = cfg.continuous_model();
  ModulationSpec spec = cfg.modulation;
  spec.phase_shift = cfg.simulate.phase_shift;
  spec.validate();
  const DiscreteTransition w = discretize(model, p, spec.dt);
  const std::size_t period = spec.steps_per_period();

  Matrix next_inputs;
  std::vector<std::string> state_names, input_names;
  if (cfg.model == ModelKind::dab) {
    next_inputs = dab_next_inputs(spec, period);
    state_names = {"i_L"};
    input_names = {"v_p", "v_s"};
  } else {
    next_inputs = cfg.generic->input.replicate(1, static_cast<Eigen::Index>(period));
    for (Eigen::Index i = 0; i < w.dim_x(); ++i) state_names.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 0; i < w.dim_u(); ++i) input_names.push_back("u" + std::to_string(i));
  }
  if (cfg.simulate.zero_input) next_inputs.setZero();

  const SettleResult settled = settle_to_steady_state(w, next_inputs, Vector::Zero(w.dim_x()),
                                                      cfg.simulate.max_cycles, cfg.simulate.settle_tol);
  const auto p_cols = static_cast<Eigen::Index>(period);
  SimulateResult r;
  r.theta = p.values();
  r.settled = settled.converged;
  r.cycles = settled.cycles;
  r.states = settled.period.states.leftCols(p_cols);
  // Input at t_k is the one that drove t_{k-1} -> t_k; the period wraps.
  r.inputs.resize(next_inputs.rows(), p_cols);
  for (Eigen::Index k = 0; k < p_cols; ++k) r.inputs.col(k) = next_inputs.col(k == 0 ? p_cols - 1 : k - 1);

  std::string csv = "time";
  for (const auto& n : state_names) csv += "," + n;
  for (const auto& n : input_names) csv += "," + n;
  csv += "\n";
  for (Eigen::Index k = 0; k < p_cols; ++k) {
    csv += format_double(static_cast<double>(k) * spec.dt);
    for (Eigen::Index i = 0; i < r.states.rows(); ++i) csv += "," + format_double(r.states(i, k));
    for (Eigen::Index i = 0; i < r.inputs.rows(); ++i) csv += "," + format_double(r.inputs(i, k));
    csv += "\n";
  }
  out.write("simulate/trajectory.csv", csv);
  out.write_json("simulate/simulate.json", ordered_json{{"schema", "pann.simulate/1"},
                                                        {"theta", vector_json(r.theta)},
                                                        {"phase_shift", spec.phase_shift},
                                                        {"zero_input", cfg.simulate.zero_input},
                                                        {"steps", period},
                                                        {"settled", r.settled},
                                                        {"cycles", r.cycles},
                                                        {"seed", cfg.seed}});
  write_config_echo(out, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// lipschitz
// ---------------------------------------------------------------------------

// Learning-rate constants: G_inf and L2theta of the loss as a function of
// range-normalized parameters theta_i / (upper_i - lower_i), infinity norm.
struct RateSelection {
  double g_inf = 0.0;
  double l2theta = 0.0;
  Vector ranges;
  Vector base_rates;  // scale_c applied, clamped
};

inline LipschitzDomain theta_domain(const ExperimentConfig& cfg, const Vector& z_bound, bool normalized) {
  LipschitzDomain d;
  d.lower = cfg.lower;
  d.upper = cfg.upper;
  d.theta_star = cfg.theta_true;
  d.z_bound = z_bound;
  if (normalized) d.coordinate_scale = cfg.upper - cfg.lower;
  d.theta_samples = cfg.lipschitz.theta_samples;
  d.seed = cfg.seed;
  return d;
}

inline RateSelection select_rates(const ExperimentConfig& cfg, const Vector& z_bound) {
  const ContinuousModel model = cfg.continuous_model();
  const LipschitzDomain d = theta_domain(cfg, z_bound, true);
  RateSelection r;
  r.ranges = cfg.upper - cfg.lower;
  r.g_inf = theoretical_L1theta(d, model, cfg.modulation.dt, NormKind::infinity);
  r.l2theta = theoretical_L2theta(d, model, cfg.modulation.dt, NormKind::infinity);
  r.base_rates = lipschitz_aware_rates(r.g_inf, r.ranges, r.l2theta, cfg.training.scale_c, cfg.training.limits);
  return r;
}

struct LipschitzRun {
  std::vector<LipschitzReport> reports;  // L1z, then L1theta and L2theta (dab)
  double l1z_max_entry = 0.0;
  Vector z_bound;
  std::optional<RateSelection> rates;
};

inline LipschitzRun run_lipschitz(const ExperimentConfig& cfg, const WaveformDataset* train) {
  const ContinuousModel model = cfg.continuous_model();
  const double dt = cfg.modulation.dt;
  const DiscreteTransition w_star = discretize(model, cfg.theta(), dt);
  LipschitzRun run;
  run.z_bound = cfg.model == ModelKind::dab ? train->z_bounds() : cfg.generic->z_bound;
  const LipschitzSettings& ls = cfg.lipschitz;

  // Step map z -> W(theta*) z over the z box.
  const NormKind zn = ls.norm;
  Pairing zpair;
  zpair.delta = ls.delta;
  // One common scale keeps the infinity-norm directions on the cube's vertices.
  zpair.scale = Vector::Constant(run.z_bound.size(), run.z_bound.maxCoeff());
  LipschitzReport l1z = mc_estimate_lipschitz([&](const Vector& z) { return step(w_star, z); },
                                              box_sampler(-run.z_bound, run.z_bound), zpair, ls.mc_samples_z,
                                              cfg.seed, zn, "L1z", theoretical_L1z(w_star, zn));
  run.l1z_max_entry = max_entry_L1z(w_star);
  run.reports.push_back(std::move(l1z));
  if (cfg.model != ModelKind::dab) return run;

  // Loss and gradient over the theta box. Pairs are compared in the 2-norm:
  // the infinity-norm gradient bound does not dominate |dloss| / |dtheta|_inf.
  const LipschitzDomain dom = theta_domain(cfg, run.z_bound, false);
  Pairing tpair;
  tpair.delta = ls.delta;
  tpair.scale = cfg.upper - cfg.lower;
  auto loss_fn = [&](const Vector& th) {
    Vector v(1);
    v(0) = loss(th, *train, model, dt);
    return v;
  };
  auto grad_fn = [&](const Vector& th) { return gradient(th, *train, model, dt); };
  run.reports.push_back(mc_estimate_lipschitz(loss_fn, box_sampler(cfg.lower, cfg.upper), tpair,
                                              ls.mc_samples_theta, cfg.seed, NormKind::two, "L1theta",
                                              theoretical_L1theta(dom, model, dt, NormKind::two)));
  run.reports.push_back(mc_estimate_lipschitz(grad_fn, box_sampler(cfg.lower, cfg.upper), tpair,
                                              ls.mc_samples_theta, cfg.seed, NormKind::two, "L2theta",
                                              theoretical_L2theta(dom, model, dt, NormKind::two)));
  run.rates = select_rates(cfg, run.z_bound);
  return run;
}

inline ordered_json to_json(const RateSelection& r, const ExperimentConfig& cfg) {
  ordered_json per = ordered_json::object();
  for (Strategy s : {Strategy::s1, Strategy::s2, Strategy::s3, Strategy::s4, Strategy::s5, Strategy::s6}) {
    per[strategy_label(s)] =
        vector_json(strategy_rates(s, r.g_inf, r.ranges, r.l2theta, cfg.training.limits, cfg.training.scale_c));
  }
  return ordered_json{{"coordinates", "range-normalized"},
                      {"norm", "infinity"},
                      {"Ginf", r.g_inf},
                      {"L2theta", r.l2theta},
                      {"scale_c", cfg.training.scale_c},
                      {"ranges", vector_json(r.ranges)},
                      {"alpha", vector_json(r.base_rates)},
                      {"strategies", per}};
}

// <out>/lipschitz/reports.json
inline LipschitzRun cmd_lipschitz(const ExperimentConfig& cfg, ArtifactWriter& out,
                                  const DatasetSplits* splits = nullptr) {
  std::optional<DatasetSplits> own;
  if (cfg.model == ModelKind::dab && splits == nullptr) {
    ExperimentConfig train_only = cfg;
    train_only.counts.test = 0;
    train_only.counts.validation = 0;
    own = make_splits(train_only);
    splits = &*own;
  }
  LipschitzRun run = run_lipschitz(cfg, splits ? &splits->train : nullptr);
  ordered_json reports = ordered_json::array();
  for (const auto& r : run.reports) reports.push_back(to_json(r));
  ordered_json j{{"schema", "pann.lipschitz/1"},
                 {"seed", cfg.seed},
                 {"z_bound", vector_json(run.z_bound)},
                 {"reports", reports},
                 {"L1z_max_entry", run.l1z_max_entry},
                 {"L1z_infinity_below_one", run.reports.front().norm == NormKind::infinity
                                                ? ordered_json(run.reports.front().theoretical < 1.0)
                                                : ordered_json(nullptr)},
                 {"all_dominated", std::all_of(run.reports.begin(), run.reports.end(),
                                               [](const LipschitzReport& r) { return r.dominated(); })}};
  if (run.rates) j["learning_rates"] = to_json(*run.rates, cfg);
  out.write_json("lipschitz/reports.json", j);
  write_config_echo(out, cfg);
  return run;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct StrategyOutcome {
  Strategy strategy = Strategy::s3;
  TrainingTrace trace;
  RegretLedger ledger;
  TrainingDiagnostics diagnostics;
  AssumptionMonitor monitor;
  RegretBoundTerms bound;
  bool bound_available = false;
  bool regret_dominated = false;
  std::optional<double> slope;   // log-log regret slope before convergence
  std::size_t slope_window = 0;  // last epoch of that window
  Vector theta_at_budget;        // iterate after identification_epochs updates
  double test_rmse = 0.0;
  double validation_rmse = 0.0;
};

struct TrainResult {
  RateSelection rates;
  std::vector<StrategyOutcome> outcomes;

  const StrategyOutcome* find(Strategy s) const {
    for (const auto& o : outcomes) {
      if (o.strategy == s) return &o;
    }
    return nullptr;
  }
};

inline Vector iterate_after(const TrainingTrace& trace, std::size_t updates) {
  if (updates < trace.epochs.size()) return trace.epochs[updates].theta;
  return trace.final_theta;
}

inline StrategyOutcome run_strategy(const ExperimentConfig& cfg, const DatasetSplits& splits,
                                    const RateSelection& rates, Strategy s) {
  const ContinuousModel model = cfg.continuous_model();
  const double dt = cfg.modulation.dt;
  StrategyOutcome o;
  o.strategy = s;
  AdamConfig adam = cfg.training.adam;
  adam.alpha = strategy_rates(s, rates.g_inf, rates.ranges, rates.l2theta, cfg.training.limits, cfg.training.scale_c);
  o.trace = adam_train(splits.train, model, dt, cfg.theta_initial(), adam, strategy_label(s));
  o.trace.seed = cfg.seed;
  if (o.trace.empty()) return o;

  const ThetaStarPolicy policy = cfg.noise_sigma == 0.0 ? ThetaStarPolicy::ground_truth : ThetaStarPolicy::best_seen;
  o.ledger = regret_ledger(o.trace, splits.train, model, dt, policy, cfg.theta_true);
  o.diagnostics = training_diagnostics(o.trace, cfg.theta_true, cfg.training.convergence_band);
  o.monitor = assumption_monitor(o.trace);
  try {
    o.bound = regret_bound_terms(adam, cfg.names.size(), o.monitor.d_hat, o.monitor.dinf_hat, o.monitor.ginf_hat);
    o.bound_available = true;
    o.regret_dominated = true;
    for (std::size_t t = 0; t < o.ledger.regret.size(); ++t) {
      o.regret_dominated = o.regret_dominated && o.ledger.regret[t] <= o.bound.at(static_cast<double>(t + 1));
    }
  } catch (const DivergentBound&) {
    o.bound_available = false;
  }
  o.slope_window = o.diagnostics.convergence_epoch ? *o.diagnostics.convergence_epoch : o.trace.size();
  o.slope = loglog_slope(o.ledger.regret, 1, o.slope_window);
  o.theta_at_budget = iterate_after(o.trace, cfg.training.identification_epochs);
  const Vector final_theta = o.trace.final_theta;
  if (!splits.test.empty()) o.test_rmse = evaluate_loss(final_theta, splits.test, model, dt).rmse();
  if (!splits.validation.empty()) o.validation_rmse = evaluate_loss(final_theta, splits.validation, model, dt).rmse();
  return o;
}

inline ordered_json to_json(const StrategyOutcome& o) {
  const auto& d = o.diagnostics;
  ordered_json osc = ordered_json::array();
  for (int v : d.oscillations) osc.push_back(v);
  ordered_json j{{"strategy", strategy_label(o.strategy)},
                 {"alpha", vector_json(o.trace.alpha)},
                 {"epochs", o.trace.size()},
                 {"diverged", o.trace.failed},
                 {"failure", o.trace.failure},
                 {"final_theta", vector_json(o.trace.final_theta)},
                 {"final_loss", o.trace.empty() ? 0.0 : o.trace.epochs.back().loss}};
  if (o.trace.empty()) return j;
  j["theta_at_budget"] = vector_json(o.theta_at_budget);
  j["diagnostics"] = ordered_json{
      {"overshoot_pct", vector_json(d.overshoot_pct)},
      {"convergence_epoch", d.convergence_epoch ? ordered_json(*d.convergence_epoch) : ordered_json(nullptr)},
      {"oscillations", osc},
      {"oscillation_count", d.oscillation_count},
      {"final_relative_error", vector_json(d.final_relative_error)}};
  j["regret"] = ordered_json{{"policy", std::string(to_string(o.ledger.policy))},
                             {"theta_star", vector_json(o.ledger.theta_star)},
                             {"regret_T", o.ledger.regret_t()},
                             {"avg_regret_T", o.ledger.avg()},
                             {"loglog_slope", o.slope ? ordered_json(*o.slope) : ordered_json(nullptr)},
                             {"slope_window", {1, o.slope_window}},
                             {"bound_constant", o.bound_available ? ordered_json(o.bound.constant) : ordered_json(nullptr)},
                             {"bound_sqrt_coefficient",
                              o.bound_available ? ordered_json(o.bound.sqrt_coefficient) : ordered_json(nullptr)},
                             {"dominated", o.regret_dominated}};
  j["monitor"] = to_json(o.monitor);
  j["test_rmse"] = o.test_rmse;
  j["validation_rmse"] = o.validation_rmse;
  return j;
}

// <out>/train/<S>/trace.csv per strategy + <out>/train/summary.json
inline TrainResult cmd_train(const ExperimentConfig& cfg, ArtifactWriter& out, const DatasetSplits* splits = nullptr,
                             const RateSelection* rates = nullptr) {
  require_dab(cfg, "train");
  std::optional<DatasetSplits> own;
  if (splits == nullptr) {
    own = make_splits(cfg);
    splits = &*own;
  }
  TrainResult r;
  r.rates = rates ? *rates : select_rates(cfg, splits->train.z_bounds());
  ordered_json rows = ordered_json::array();
  for (Strategy s : cfg.training.strategies) {
    StrategyOutcome o = run_strategy(cfg, *splits, r.rates, s);
    const std::string label = strategy_label(s);
    out.write("train/" + label + "/trace.csv",
              trace_csv(o.trace, o.trace.empty() ? nullptr : &o.ledger, o.bound_available ? &o.bound : nullptr));
    rows.push_back(to_json(o));
    r.outcomes.push_back(std::move(o));
  }
  out.write_json("train/summary.json", ordered_json{{"schema", "pann.train/1"},
                                                    {"seed", cfg.seed},
                                                    {"theta_names", cfg.names},
                                                    {"theta_true", vector_json(cfg.theta_true)},
                                                    {"theta_initial", vector_json(cfg.theta_initial().values())},
                                                    {"learning_rates", to_json(r.rates, cfg)},
                                                    {"strategies", rows},
                                                    {"config", to_json(cfg)}});
  write_config_echo(out, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReproduceResult {
  SynthResult synth;
  LipschitzRun lipschitz;
  TrainResult train;
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

// Identification tolerances: relative error per parameter at the epoch budget
// and the largest admissible overshoot.
struct IdentificationTolerance {
  Vector relative;
  double max_overshoot_pct = 5.0;
};

inline IdentificationTolerance dab_identification_tolerance() {
  IdentificationTolerance t;
  t.relative = Vector(3);
  t.relative << 0.01, 0.05, 0.01;
  return t;
}

inline CheckResult check_identification(const StrategyOutcome& o, const ExperimentConfig& cfg,
                                        const IdentificationTolerance& tol) {
  CheckResult c{"identification", false, ""};
  if (o.trace.empty() || o.trace.failed) {
    c.detail = "run failed";
    return c;
  }
  const Vector err = (o.theta_at_budget - cfg.theta_true).cwiseAbs().cwiseQuotient(cfg.theta_true.cwiseAbs());
  const bool accurate = (err.array() <= tol.relative.array()).all();
  const bool no_overshoot = (o.diagnostics.overshoot_pct.array() <= tol.max_overshoot_pct).all();
  const bool inside = cfg.theta().contains(o.trace.final_theta);
  c.passed = accurate && no_overshoot && inside;
  std::ostringstream os;
  os.precision(4);
  os << "rel_err@" << cfg.training.identification_epochs << "=[" << err.transpose() << "] overshoot%=["
     << o.diagnostics.overshoot_pct.transpose() << "] inside=" << inside;
  c.detail = os.str();
  return c;
}

inline double epochs_or_infinity(const StrategyOutcome& o) {
  return o.diagnostics.convergence_epoch ? static_cast<double>(*o.diagnostics.convergence_epoch)
                                         : std::numeric_limits<double>::infinity();
}

inline CheckResult check_ordering(const TrainResult& r) {
  CheckResult c{"strategy_ordering", false, ""};
  const auto* s1 = r.find(Strategy::s1);
  const auto* s3 = r.find(Strategy::s3);
  const auto* s5 = r.find(Strategy::s5);
  const auto* s6 = r.find(Strategy::s6);
  if (!s1 || !s3 || !s5 || !s6) {
    c.detail = "needs S1, S3, S5 and S6";
    return c;
  }
  const double e1 = epochs_or_infinity(*s1), e3 = epochs_or_infinity(*s3), e6 = epochs_or_infinity(*s6);
  const double o3 = s3->diagnostics.overshoot_pct(0), o5 = s5->diagnostics.overshoot_pct(0);
  const bool faster = e3 < e1;
  const bool overshoot = o5 > 20.0 && o5 > o3;
  const bool ablation = e6 > e3 || (s6->diagnostics.overshoot_pct.array() > 0.0).any();
  c.passed = faster && overshoot && ablation;
  std::ostringstream os;
  os << "conv S1=" << e1 << " S3=" << e3 << " S6=" << e6 << "; overshoot(L) S3=" << o3 << "% S5=" << o5 << "%";
  c.detail = os.str();
  return c;
}

inline CheckResult check_regret(const StrategyOutcome& o) {
  CheckResult c{"regret_law", false, ""};
  const auto& reg = o.ledger.regret;
  if (reg.size() < 4) {
    c.detail = "too few epochs";
    return c;
  }
  bool nondecreasing = true;
  for (std::size_t t = 1; t < reg.size(); ++t) nondecreasing = nondecreasing && reg[t] >= reg[t - 1];
  const std::size_t tmax = reg.size();
  const double avg_ratio = o.ledger.avg_regret[tmax - 1] / o.ledger.avg_regret[tmax / 4 - 1];
  const bool avg_ok = avg_ratio < 0.5;
  const bool slope_ok = o.slope && *o.slope >= 0.3 && *o.slope <= 0.7;
  const bool bound_ok = o.bound_available && o.regret_dominated;
  c.passed = nondecreasing && avg_ok && slope_ok && bound_ok;
  std::ostringstream os;
  os << "nondecreasing=" << nondecreasing << " avg_ratio=" << avg_ratio
     << " slope=" << (o.slope ? *o.slope : std::numeric_limits<double>::quiet_NaN()) << " over [1," << o.slope_window
     << "] bound_dominated=" << bound_ok;
  c.detail = os.str();
  return c;
}

inline std::vector<CheckResult> reproduce_checks(const ExperimentConfig& cfg, const LipschitzRun& lip,
                                                 const TrainResult& train) {
  std::vector<CheckResult> checks;
  CheckResult bounds{"lipschitz_dominance", true, ""};
  for (const auto& r : lip.reports) {
    bounds.passed = bounds.passed && r.dominated();
    bounds.detail += r.constant_name + " " + format_double(r.empirical_max) + "/" + format_double(r.theoretical) + " ";
  }
  checks.push_back(bounds);
  if (const auto* s3 = train.find(Strategy::s3)) {
    if (cfg.names.size() == 3) checks.push_back(check_identification(*s3, cfg, dab_identification_tolerance()));
    checks.push_back(check_regret(*s3));
  }
  checks.push_back(check_ordering(train));
  return checks;
}

// synth -> lipschitz -> train, then <out>/manifest.json listing every artifact.
inline ReproduceResult cmd_reproduce(const ExperimentConfig& cfg, ArtifactWriter& out, bool check) {
  require_dab(cfg, "reproduce");
  ReproduceResult r;
  r.synth = cmd_synth(cfg, out);
  r.lipschitz = cmd_lipschitz(cfg, out, &r.synth.splits);
  r.train = cmd_train(cfg, out, &r.synth.splits, &*r.lipschitz.rates);
  if (check) r.checks = reproduce_checks(cfg, r.lipschitz, r.train);

  std::vector<std::string> files = out.files();
  std::sort(files.begin(), files.end());
  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) checks.push_back(ordered_json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  ordered_json manifest{{"schema", "pann.reproduce/1"}, {"seed", cfg.seed}, {"config", "config.json"},
                        {"artifacts", files}};
  if (check) manifest["checks"] = checks;
  out.write_json("manifest.json", manifest);
  return r;
}

}  // namespace pann
