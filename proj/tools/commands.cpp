#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fmvo/errors.hpp"
#include "fmvo/flowmatch.hpp"
#include "fmvo/kv_config.hpp"
#include "fmvo/sampler.hpp"
#include "fmvo/synthworld.hpp"
#include "fmvo/text_format.hpp"
#include "fmvo/trajeval.hpp"
#include "pipeline.hpp"

#ifndef FMVO_VERSION
#define FMVO_VERSION "dev"
#endif

namespace fmvo::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags are collected as strings and layered over an optional --config file,
// so the same keys work in both places.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "key=value config file; flags override it");
  }

  void add(const std::string& flag, const std::string& help) {
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    options_.emplace_back(key, app_->add_option(flag, raw_[key], help));
  }

  void add_switch(const std::string& flag, const std::string& help) {
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    options_.emplace_back(key, app_->add_flag(flag, help));
    switches_.insert(key);
  }

  CLI::App* app() const { return app_; }

  KeyValueConfig resolve() const {
    KeyValueConfig kv;
    if (!config_path_.empty()) {
      if (!fs::exists(config_path_)) throw UsageError("config file not found: " + config_path_);
      kv = KeyValueConfig::load(config_path_);
    }
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      kv.set(key, switches_.count(key) ? std::string("true") : raw_.at(key));
    }
    return kv;
  }

  const std::string& config_path() const { return config_path_; }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
  std::set<std::string> switches_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

std::uint64_t get_seed(const KeyValueConfig& kv) { return kv.get_uint("seed").value_or(0); }

std::string require(const KeyValueConfig& kv, const std::string& key) {
  auto v = kv.get_string(key);
  if (!v || v->empty()) throw UsageError("missing required --" + key);
  return *v;
}

fs::path require_file(const KeyValueConfig& kv, const std::string& key) {
  const fs::path p = require(kv, key);
  if (!fs::is_regular_file(p)) throw UsageError("--" + key + ": file not found: " + p.string());
  return p;
}

fs::path out_dir(const KeyValueConfig& kv) {
  const fs::path dir = kv.get_string("out").value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

int positive_int(const KeyValueConfig& kv, const std::string& key, int fallback) {
  const auto v = kv.get_int(key).value_or(fallback);
  if (v < 1) throw UsageError("--" + key + " must be >= 1");
  return static_cast<int>(v);
}

SolverConfig solver_config(const KeyValueConfig& kv) {
  SolverConfig cfg;
  const std::string method = kv.get_string("method").value_or("midpoint");
  const auto m = parse_solver_method(method);
  if (!m) throw UsageError("--method must be euler, midpoint or rk4");
  cfg.method = *m;
  cfg.steps = positive_int(kv, "steps", 5);
  return cfg;
}

AlignMode align_mode(const KeyValueConfig& kv) {
  const auto m = parse_align_mode(kv.get_string("align").value_or("sim3"));
  if (!m) throw UsageError("--align must be none, se3 or sim3");
  return *m;
}

ScaleMode scale_mode(const KeyValueConfig& kv) {
  const auto m = parse_scale_mode(kv.get_string("scale").value_or("per_pair"));
  if (!m) throw UsageError("--scale must be per_pair, global or none");
  return *m;
}

FeatureSet load_dataset(const fs::path& path) {
  try {
    return ingest_features(path);
  } catch (const ParseError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void write_manifest(const fs::path& dir, const std::string& command, const KeyValueConfig& kv,
                    std::uint64_t seed, const ordered_json& paths, const ordered_json& timings) {
  ordered_json m;
  m["tool"] = "fmvo";
  m["version"] = FMVO_VERSION;
  m["command"] = command;
  m["seed"] = seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : kv.values()) cfg[k] = v;
  m["config"] = cfg;
  m["paths"] = paths;
  m["timings_ms"] = timings;
  write_file(dir / ("manifest_" + command + ".json"), m.dump(2) + "\n");
}

// ---- gen ------------------------------------------------------------------

int cmd_gen(const KeyValueConfig& kv, std::ostream& out) {
  const auto t0 = Clock::now();
  const std::uint64_t seed = get_seed(kv);
  const std::string kind = kv.get_string("kind").value_or("figure8");
  const int n = positive_int(kv, "n", 200);
  const double ambiguity = kv.get_double("ambiguity").value_or(0.0);
  const double noise = kv.get_double("noise").value_or(0.0);
  const int k = positive_int(kv, "k", 16);
  if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) throw UsageError("--ambiguity must lie in [0, 1]");
  if (!(noise >= 0.0)) throw UsageError("--noise must be >= 0");
  const std::uint64_t lift_seed = kv.get_uint("lift_seed").value_or(derive_seed(seed, SeedStream::kLift));

  const fs::path dir = out_dir(kv);
  ordered_json paths;
  DatasetHeader header{k, lift_seed, ambiguity, noise};
  std::size_t rows = 0;

  if (kind == "bimodal") {
    if (n < 2 || n % 2 != 0) throw UsageError("--n must be even for the bimodal dataset");
    const ConditionEncoder encoder(k, lift_seed);
    Rng rng(derive_seed(seed, SeedStream::kGenerate));
    const auto pairs = make_bimodal_dataset(n, encoder, rng);
    header.ambiguity = 0.0;
    header.noise = 0.0;
    write_features(to_feature_set(header, pairs), dir / "dataset.csv");
    rows = pairs.size();
  } else {
    const auto tk = parse_trajectory_kind(kind);
    if (!tk) throw UsageError("--kind must be line, arc, figure8, random-walk or bimodal");
    if (n < 2) throw UsageError("--n must be >= 2");
    ScenarioSpec spec;
    spec.name = kind;
    spec.kind = *tk;
    spec.n = n;
    spec.ambiguity = ambiguity;
    spec.noise_sigma = noise;
    spec.cond_dim = k;
    spec.seed = seed;
    spec.lift_seed = lift_seed;
    const Scenario sc = make_scenario(spec);
    write_features(to_feature_set(header, sc.pairs), dir / "dataset.csv");
    write_tum(sc.gt_trajectory, dir / "gt.tum");
    paths["gt_trajectory"] = (dir / "gt.tum").string();
    rows = sc.pairs.size();
  }
  paths["dataset"] = (dir / "dataset.csv").string();
  write_manifest(dir, "gen", kv, seed, paths, {{"total", elapsed_ms(t0)}});
  out << "wrote " << rows << " rows to " << (dir / "dataset.csv").string() << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const KeyValueConfig& kv, std::ostream& out) {
  const auto t0 = Clock::now();
  const fs::path dataset_path = require_file(kv, "dataset");
  const FeatureSet data = load_dataset(dataset_path);
  const std::vector<TrainingPair> pairs = data.pairs();
  if (pairs.empty()) throw UsageError("dataset has no ground-truth rows");

  TrainConfig cfg;
  try {
    cfg.apply(kv);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  NetConfig net_cfg = net_config_from(kv);
  if (kv.contains("cond_dim") && net_cfg.cond_dim != data.header.k) {
    throw UsageError("cond_dim disagrees with the dataset's k");
  }
  net_cfg.cond_dim = data.header.k;

  TrainResult result;
  ordered_json paths;
  paths["dataset"] = dataset_path.string();
  if (auto ckpt = kv.get_string("checkpoint")) {
    const fs::path p = require_file(kv, "checkpoint");
    VectorFieldNet start = load_checkpoint(p);
    if (start.config.cond_dim != data.header.k) throw UsageError("checkpoint condition dimension disagrees with dataset");
    paths["resumed_from"] = p.string();
    result = train_from(std::move(start), pairs, cfg);
  } else {
    try {
      net_cfg.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    result = train(pairs, cfg, net_cfg);
  }
  const double train_ms = elapsed_ms(t0);

  const fs::path dir = out_dir(kv);
  save_checkpoint(result.net, dir / "checkpoint.txt");
  std::string csv = "step,lr,loss\n";
  for (const LossRecord& r : result.history) {
    csv += std::to_string(r.step) + "," + text::format_double(r.lr) + "," + text::format_double(r.loss) + "\n";
  }
  write_file(dir / "loss.csv", csv);
  paths["checkpoint"] = (dir / "checkpoint.txt").string();
  paths["loss_history"] = (dir / "loss.csv").string();
  write_manifest(dir, "train", kv, cfg.seed, paths, {{"train", train_ms}, {"total", elapsed_ms(t0)}});

  const LossSummary s = summarize_history(result.history);
  out << "steps=" << result.history.size() << " initial_loss=" << text::format_double(s.initial, 6)
      << " final_loss=" << text::format_double(s.final, 6) << " ratio=" << text::format_double(s.ratio, 6) << "\n";
  return kExitOk;
}

// ---- infer ----------------------------------------------------------------

int cmd_infer(const KeyValueConfig& kv, std::ostream& out) {
  const auto t0 = Clock::now();
  const fs::path ckpt = require_file(kv, "checkpoint");
  const fs::path dataset_path = require_file(kv, "dataset");
  const SolverConfig solver = solver_config(kv);
  const int m = positive_int(kv, "samples", 10);
  const std::uint64_t seed = get_seed(kv);

  const VectorFieldNet net = load_checkpoint(ckpt);
  const FeatureSet data = load_dataset(dataset_path);
  if (data.header.k != net.config.cond_dim) throw UsageError("dataset k disagrees with checkpoint");
  const std::vector<ConditionVector> conds = data.conditions();

  const auto sets = estimate_sequence(net, conds, solver, m, seed);
  const double infer_ms = elapsed_ms(t0);

  const fs::path dir = out_dir(kv);
  write_file(dir / "estimates.csv", estimates_csv(sets));
  const auto rels = estimates_of(sets);
  write_tum(compose_trajectory(RelativePose::identity(), rels), dir / "est.tum");

  ordered_json paths;
  paths["checkpoint"] = ckpt.string();
  paths["dataset"] = dataset_path.string();
  paths["estimates"] = (dir / "estimates.csv").string();
  paths["trajectory"] = (dir / "est.tum").string();
  write_manifest(dir, "infer", kv, seed, paths, {{"infer", infer_ms}, {"total", elapsed_ms(t0)}});

  const auto [std_rot, std_trans] = mean_std(sets);
  out << "pairs=" << sets.size() << " method=" << to_string(solver.method) << " steps=" << solver.steps
      << " samples=" << m << " mean_std_rot=" << text::format_double(std_rot, 6)
      << " mean_std_trans=" << text::format_double(std_trans, 6) << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const KeyValueConfig& kv, std::ostream& out) {
  const auto t0 = Clock::now();
  const fs::path est_path = require_file(kv, "est");
  const fs::path gt_path = require_file(kv, "gt");
  const AlignMode align = align_mode(kv);
  const ScaleMode scale = scale_mode(kv);

  Trajectory est;
  Trajectory gt;
  try {
    est = read_tum(est_path);
    gt = read_tum(gt_path);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  if (kv.get_string("associate").value_or("false") == "true") {
    std::tie(est, gt) = associate_by_stamp(est, gt);
  } else if (est.size() != gt.size()) {
    throw UsageError("trajectory lengths differ (" + std::to_string(est.size()) + " vs " +
                     std::to_string(gt.size()) + "); use --associate to match by timestamp");
  }

  EvalRow row = evaluate_trajectories(est, gt, align, scale);
  row.scenario = kv.get_string("name").value_or(est_path.stem().string());
  ordered_json paths;
  paths["est"] = est_path.string();
  paths["gt"] = gt_path.string();
  if (auto std_path = kv.get_string("std")) {
    const fs::path p = require_file(kv, "std");
    const auto rows = parse_estimates_csv(read_file(p));
    if (!rows.empty()) {
      double rot = 0.0;
      double trans = 0.0;
      for (const EstimateRow& r : rows) {
        rot += r.std.head<3>().mean();
        trans += r.std.tail<3>().mean();
      }
      row.mean_std_rot = rot / static_cast<double>(rows.size());
      row.mean_std_trans = trans / static_cast<double>(rows.size());
    }
    paths["std"] = p.string();
  }

  const fs::path dir = out_dir(kv);
  write_file(dir / "metrics.csv", std::string(kMetricsHeader) + "\n" + metrics_csv_row(row) + "\n");
  paths["metrics"] = (dir / "metrics.csv").string();
  write_manifest(dir, "eval", kv, get_seed(kv), paths, {{"total", elapsed_ms(t0)}});
  out << kMetricsHeader << "\n" << metrics_csv_row(row) << "\n";
  return kExitOk;
}

// ---- ablate-steps ---------------------------------------------------------

std::vector<int> parse_steps_list(const std::string& s) {
  std::vector<int> out;
  for (auto tok : text::split(s, ',')) {
    std::int64_t v = 0;
    try {
      v = text::parse_int(tok);
    } catch (const ParseError&) {
      throw UsageError("--steps-list must be comma-separated positive integers");
    }
    if (v < 1) throw UsageError("--steps-list entries must be >= 1");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

int cmd_ablate(const KeyValueConfig& kv, std::ostream& out) {
  const auto t0 = Clock::now();
  const fs::path ckpt = require_file(kv, "checkpoint");
  const fs::path dataset_path = require_file(kv, "dataset");
  const std::vector<int> steps_list = parse_steps_list(kv.get_string("steps_list").value_or("2,5,10"));
  SolverConfig solver = solver_config(kv);
  const int m = positive_int(kv, "samples", 10);
  const std::uint64_t seed = get_seed(kv);
  const AlignMode align = align_mode(kv);
  const ScaleMode scale = scale_mode(kv);

  const VectorFieldNet net = load_checkpoint(ckpt);
  const FeatureSet data = load_dataset(dataset_path);
  if (data.header.k != net.config.cond_dim) throw UsageError("dataset k disagrees with checkpoint");
  std::vector<RelativePose> gt_rels;
  for (const FeatureRow& r : data.rows) {
    if (!r.pair) throw UsageError("ablation needs ground truth on every dataset row");
    gt_rels.push_back(state_to_pose(r.pair->target));
  }
  const std::vector<ConditionVector> conds = data.conditions();

  std::string csv = "steps,method,ate_rmse,mean_std_rot,mean_std_trans,ate_rot_rmse\n";
  ordered_json timings;
  for (int steps : steps_list) {
    const auto ts = Clock::now();
    solver.steps = steps;
    const auto sets = estimate_sequence(net, conds, solver, m, seed);
    const EvalRow row = evaluate_relatives(estimates_of(sets), gt_rels, align, scale);
    const auto [std_rot, std_trans] = mean_std(sets);
    csv += std::to_string(steps) + "," + std::string(to_string(solver.method)) + "," +
           text::format_double(row.ate_rmse) + "," + text::format_double(std_rot) + "," +
           text::format_double(std_trans) + "," + text::format_double(row.ate_rot_rmse) + "\n";
    timings["steps_" + std::to_string(steps)] = elapsed_ms(ts);
  }
  timings["total"] = elapsed_ms(t0);

  const fs::path dir = out_dir(kv);
  write_file(dir / "ablation.csv", csv);
  ordered_json paths;
  paths["checkpoint"] = ckpt.string();
  paths["dataset"] = dataset_path.string();
  paths["ablation"] = (dir / "ablation.csv").string();
  write_manifest(dir, "ablate-steps", kv, seed, paths, timings);
  out << csv;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-matching visual odometry toolkit", "fmvo"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", FMVO_VERSION);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset and ground-truth trajectory");
  Flags gen_flags(gen);
  gen_flags.add("--kind", "line | arc | figure8 | random-walk | bimodal");
  gen_flags.add("--n", "number of frames (bimodal: number of pairs)");
  gen_flags.add("--ambiguity", "scale ambiguity in [0, 1]");
  gen_flags.add("--noise", "condition noise sigma");
  gen_flags.add("--k", "condition dimension");
  gen_flags.add("--lift-seed", "override the condition encoder seed");
  gen_flags.add("--seed", "master seed");
  gen_flags.add("--out", "output directory");

  auto* train_cmd = app.add_subcommand("train", "Train the vector field on a dataset");
  Flags train_flags(train_cmd);
  train_flags.add("--dataset", "dataset file");
  train_flags.add("--checkpoint", "resume from this checkpoint");
  train_flags.add("--seed", "master seed");
  train_flags.add("--epochs", "number of epochs");
  train_flags.add("--steps-per-epoch", "minibatches per epoch (0 = one pass)");
  train_flags.add("--batch-size", "minibatch size");
  train_flags.add("--lr", "initial learning rate");
  train_flags.add("--out", "output directory");

  auto* infer = app.add_subcommand("infer", "Sample relative poses for every condition in a dataset");
  Flags infer_flags(infer);
  infer_flags.add("--checkpoint", "trained checkpoint");
  infer_flags.add("--dataset", "condition source");
  infer_flags.add("--method", "euler | midpoint | rk4");
  infer_flags.add("--steps", "integration steps");
  infer_flags.add("--samples", "samples per pair (m)");
  infer_flags.add("--seed", "master seed");
  infer_flags.add("--out", "output directory");

  auto* eval = app.add_subcommand("eval", "Absolute trajectory error of an estimate against ground truth");
  Flags eval_flags(eval);
  eval_flags.add("--est", "estimated trajectory (TUM)");
  eval_flags.add("--gt", "ground-truth trajectory (TUM)");
  eval_flags.add("--align", "none | se3 | sim3");
  eval_flags.add("--scale", "per_pair | global | none");
  eval_flags.add("--std", "estimates.csv with per-pair std columns");
  eval_flags.add("--name", "scenario label for the report");
  eval_flags.add("--seed", "recorded in the manifest only");
  eval_flags.add_switch("--associate", "match poses by timestamp (0.02 s window)");
  eval_flags.add("--out", "output directory");

  auto* ablate = app.add_subcommand("ablate-steps", "ATE as a function of the integration step count");
  Flags ablate_flags(ablate);
  ablate_flags.add("--checkpoint", "trained checkpoint");
  ablate_flags.add("--dataset", "dataset with ground truth");
  ablate_flags.add("--steps-list", "comma-separated step counts");
  ablate_flags.add("--method", "euler | midpoint | rk4");
  ablate_flags.add("--samples", "samples per pair (m)");
  ablate_flags.add("--align", "none | se3 | sim3");
  ablate_flags.add("--scale", "per_pair | global | none");
  ablate_flags.add("--seed", "master seed");
  ablate_flags.add("--out", "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_flags.resolve(), out);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out);
    if (infer->parsed()) return cmd_infer(infer_flags.resolve(), out);
    if (eval->parsed()) return cmd_eval(eval_flags.resolve(), out);
    if (ablate->parsed()) return cmd_ablate(ablate_flags.resolve(), out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace fmvo::cli
