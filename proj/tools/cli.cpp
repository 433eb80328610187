#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "scalardyn/config.hpp"
#include "scalardyn/dataset.hpp"
#include "scalardyn/eval.hpp"
#include "scalardyn/io.hpp"
#include "scalardyn/models.hpp"
#include "scalardyn/train.hpp"

namespace scalardyn::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Raised for usage problems found after argument parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Run-config file (key = value)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override one key, e.g. training.epochs=10")
      ->take_all();
}

RunConfig resolve(const Common& c) { return load_config(c.config_path, c.overrides); }

std::string dataset_checksum(const std::string& dataset_text) {
  // The document header carries the payload checksum; parse it lazily.
  return json::parse(dataset_text).at("checksum").get<std::string>();
}

json provenance(const RunConfig& config, const std::string& command) {
  return {{"tool", "scalardyn"},
          {"tool_version", kToolVersion},
          {"command", command},
          {"config_hash", config.hash()},
          {"config", config.to_json()}};
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  }
}

fs::path sidecar(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p += suffix;
  return p;
}

/// Stem of a checkpoint path without ".ckpt.json" / ".json".
fs::path artifact_stem(const fs::path& ckpt) {
  std::string s = ckpt.string();
  for (const char* ext : {".ckpt.json", ".json"}) {
    const std::string e = ext;
    if (s.size() > e.size() && s.compare(s.size() - e.size(), e.size(), e) == 0) {
      return s.substr(0, s.size() - e.size());
    }
  }
  return s;
}

/// Names the first section where the dataset header disagrees with the config.
std::string dataset_mismatch(const Dataset& ds, const RunConfig& config) {
  if (params_to_json(ds.params) != params_to_json(config.system)) return "system";
  if (!(ds.config == config.dataset)) return "dataset";
  if (integrator_to_json(ds.integrator) != integrator_to_json(config.integrator())) {
    return "integrator";
  }
  return {};
}

int cmd_generate(const Common& common, const std::string& out_arg, std::ostream& out) {
  const RunConfig config = resolve(common);
  const fs::path path = out_arg.empty() ? config.output_dir / "dataset.json" : fs::path(out_arg);
  const Dataset ds = generate_dataset(config.system, config.dataset, config.integrator());
  const std::string text = dataset_to_string(ds);
  ensure_parent(path);
  write_file_atomic(path, text);
  json prov = provenance(config, "generate");
  prov["dataset_checksum"] = dataset_checksum(text);
  write_json(sidecar(path, ".provenance.json"), prov);
  out << "wrote " << path.string() << " (" << ds.records.size() << " trajectories, "
      << prov["dataset_checksum"].get<std::string>() << ")\n";
  return kExitOk;
}

int cmd_train(const Common& common, const std::string& dataset_path, const std::string& out_arg,
              bool force, bool quiet, std::ostream& out) {
  const RunConfig config = resolve(common);
  const std::string text = read_file(dataset_path);
  const Dataset ds = dataset_from_string(text);
  const std::string mismatch = dataset_mismatch(ds, config);
  if (!mismatch.empty() && !force) {
    throw ConfigError(mismatch + ": dataset was generated with different " + mismatch +
                      " settings than the run config (use --force to train anyway)");
  }
  const fs::path path =
      out_arg.empty() ? config.output_dir / (std::string(to_string(config.model)) + "_seed" +
                                             std::to_string(config.training.seed) + ".ckpt.json")
                      : fs::path(out_arg);
  ensure_parent(path);

  const DatasetSplit split = split_dataset(ds);
  const DynamicsModel model(config.model, config.model_options);
  const TrainResult result = train(model, split.train, config.system.qo, config.system.g,
                                   config.training, [&](const EpochStats& e) {
                                     if (quiet) return;
                                     out << "epoch " << e.epoch << " train " << e.train_loss
                                         << " holdout " << e.holdout_loss << " ("
                                         << e.seconds << " s)\n";
                                   });

  json prov = provenance(config, "train");
  prov["dataset_checksum"] = dataset_checksum(text);
  prov["training_seed"] = config.training.seed;
  prov["best_epoch"] = result.history.best_epoch;
  prov["best_holdout_loss"] = result.history.best_holdout_loss;
  save_model(result.model, path, prov);

  const fs::path stem = artifact_stem(path);
  write_file_atomic(sidecar(stem, ".history.csv"), result.history.to_csv());
  const double seconds = result.history.epochs.back().seconds;
  write_json(sidecar(stem, ".timing.json"),
             {{"config_hash", config.hash()},
              {"model", std::string(to_string(config.model))},
              {"epochs", config.training.epochs},
              {"seconds_total", seconds},
              {"seconds_per_epoch", seconds / config.training.epochs}});
  out << "wrote " << path.string() << " (best epoch " << result.history.best_epoch
      << ", holdout loss " << result.history.best_holdout_loss << ", " << seconds << " s)\n";
  return kExitOk;
}

int cmd_eval(const Common& common, const std::string& dataset_path,
             const std::vector<std::string>& checkpoints, const std::string& models_filter,
             const std::string& out_arg, bool force, std::ostream& out) {
  const RunConfig config = resolve(common);
  const std::string text = read_file(dataset_path);
  const Dataset ds = dataset_from_string(text);
  const std::string checksum = dataset_checksum(text);

  std::vector<ModelKind> wanted;
  for (const auto& name : CLI::detail::split(models_filter, ',')) {
    if (name.empty()) continue;
    try {
      wanted.push_back(parse_model_kind(CLI::detail::trim_copy(name)));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--models: ") + e.what());
    }
  }

  // Group by kind, keeping command-line order within a kind.
  std::map<ModelKind, std::vector<std::pair<DynamicsModel, std::uint64_t>>> by_kind;
  std::vector<ModelKind> kind_order;
  for (const std::string& p : checkpoints) {
    json prov;
    DynamicsModel m = load_model(p, &prov);
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), m.kind()) == wanted.end()) {
      continue;
    }
    const std::string theirs = prov.value("dataset_checksum", std::string());
    if (theirs != checksum && !force) {
      throw ConfigError("checkpoint '" + p + "' was trained on dataset " +
                        (theirs.empty() ? std::string("<unknown>") : theirs) + ", not " +
                        checksum + " (use --force to evaluate anyway)");
    }
    const std::uint64_t seed = prov.value("training_seed", std::uint64_t{0});
    if (!by_kind.contains(m.kind())) kind_order.push_back(m.kind());
    by_kind[m.kind()].emplace_back(std::move(m), seed);
  }
  if (kind_order.empty()) throw UsageError("no checkpoint matches --models");

  const EvalConfig ec = config.eval_config();
  const GroundTruth truth = compute_ground_truth(config.system, split_dataset(ds).test, ec);
  const fs::path dir = out_arg.empty() ? config.output_dir : fs::path(out_arg);
  fs::create_directories(dir);

  json rows = json::array();
  for (ModelKind kind : kind_order) {
    std::vector<RolloutMetrics> runs;
    for (const auto& [model, seed] : by_kind[kind]) {
      RolloutMetrics m = evaluate(model, config.system, truth, ec);
      m.seed = seed;
      write_file_atomic(dir / ("per_step_" + std::string(to_string(kind)) + "_seed" +
                               std::to_string(seed) + ".csv"),
                        per_step_csv(m, truth.times));
      runs.push_back(std::move(m));
    }
    rows.push_back(summary_row(kind, runs));
    out << to_string(kind) << ": state_rel_err geomean "
        << rows.back()["state_rel_err_geomean"]["mean"].get<double>() << " +- "
        << rows.back()["state_rel_err_geomean"]["std"].get<double>() << " over " << runs.size()
        << " seed(s)\n";
  }
  std::size_t failures = 0;
  for (const auto& f : truth.failures) failures += f.empty() ? 0 : 1;
  const json summary = {{"config_hash", config.hash()},
                        {"dataset_checksum", checksum},
                        {"horizon", ec.horizon},
                        {"n_test_trajectories", truth.trajectory_ids.size()},
                        {"ground_truth_failures", failures},
                        {"rows", rows}};
  write_json(dir / "summary.json", summary);
  out << "wrote " << (dir / "summary.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scalar-feature equivariant dynamics models for the springy double pendulum"};
  app.name(args.empty() ? "scalardyn" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  std::string out_path, dataset, models;
  std::vector<std::string> checkpoints;
  bool force = false, quiet = false;

  CLI::App* gen = app.add_subcommand("generate", "Sample initial states and integrate the dataset");
  add_common(gen, common);
  gen->add_option("-o,--out", out_path, "Dataset file (default <output.dir>/dataset.json)");

  CLI::App* tr = app.add_subcommand("train", "Fit one model to the training split");
  add_common(tr, common);
  tr->add_option("-d,--dataset", dataset, "Dataset file")->required();
  tr->add_option("-o,--out", out_path,
                 "Checkpoint file (default <output.dir>/<model>_seed<seed>.ckpt.json)");
  tr->add_flag("--force", force, "Train even if the dataset header disagrees with the config");
  tr->add_flag("-q,--quiet", quiet, "No per-epoch output");

  CLI::App* ev = app.add_subcommand("eval", "Roll out checkpoints on the test split and score them");
  add_common(ev, common);
  ev->add_option("-d,--dataset", dataset, "Dataset file")->required();
  ev->add_option("-k,--checkpoint", checkpoints, "Checkpoint file; repeat for seeds and models")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--models", models, "Comma-separated model kinds to keep");
  ev->add_option("-o,--out", out_path, "Output directory (default <output.dir>)");
  ev->add_flag("--force", force, "Ignore dataset provenance mismatches");

  CLI::App* cfg = app.add_subcommand("config", "Print a config file with every key at its default");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(common, out_path, out);
    if (*tr) return cmd_train(common, dataset, out_path, force, quiet, out);
    if (*ev) return cmd_eval(common, dataset, checkpoints, models, out_path, force, out);
    if (*cfg) {
      out << default_config_text();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetIntegrityError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace scalardyn::cli
