#pragma once

// Run configuration: every knob of generate/train/eval in one tree, read from
// a key-value file and overridden by `section.key=value` strings.
//
// File syntax: `[section]` headers, `key = value` lines, `#` comments. A key
// may also be written in full (`training.epochs = 10`) outside any section.
// Vectors and lists are comma separated.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scalardyn/dataset.hpp"
#include "scalardyn/eval.hpp"
#include "scalardyn/models.hpp"
#include "scalardyn/train.hpp"

namespace scalardyn {

/// Bad key, bad value, or a failed validation. The message starts with the
/// dotted field path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  SystemParams system;
  DatasetConfig dataset;
  double integrator_step = 1e-3;  // ground-truth RK4 step
  TrainConfig training;
  ModelKind model = ModelKind::ScalarsHnn;
  ModelOptions model_options;
  EvalConfig eval;
  std::filesystem::path output_dir = "runs";

  IntegratorConfig integrator() const;
  /// Evaluation settings with the ground truth and label spacing tied to the
  /// dataset and integrator sections.
  EvalConfig eval_config() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Every key with its current value, in canonical order.
  nlohmann::json to_json() const;
  /// fnv1a64 of to_json().dump() without output.dir, hex.
  std::string hash() const;
};

/// Applies one `key = value` assignment.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// The recognised keys, in canonical order.
const std::vector<std::string>& config_keys();

/// Parses file text on top of `base`. Unknown keys and malformed lines throw
/// ConfigError with the line number.
RunConfig parse_config(const std::string& text, RunConfig base = {});

/// Reads and parses `path`, applies `overrides` ("key=value"), validates.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// A complete file with every key at its default.
std::string default_config_text();

}  // namespace scalardyn
