#include "scalardyn/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "scalardyn/io.hpp"

namespace scalardyn {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

Vec3 parse_vec3(const std::string& key, const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
  return Vec3(parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1]),
              parse_number<double>(key, parts[2]));
}

std::string format(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string format(const Vec3& v) {
  return format(v.x()) + "," + format(v.y()) + "," + format(v.z());
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SD_DOUBLE(name, member)                                                          \
  Field {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(name, v); }, \
        [](const RunConfig& c) { return format(c.member); }                              \
  }
#define SD_INT(name, member, type)                                                      \
  Field {                                                                               \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                     \
  }
#define SD_VEC3(name, member)                                                        \
  Field {                                                                            \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_vec3(name, v); }, \
        [](const RunConfig& c) { return format(c.member); }                          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SD_DOUBLE("system.m1", system.m1),
      SD_DOUBLE("system.m2", system.m2),
      SD_DOUBLE("system.k1", system.k1),
      SD_DOUBLE("system.k2", system.k2),
      SD_DOUBLE("system.l1", system.l1),
      SD_DOUBLE("system.l2", system.l2),
      SD_VEC3("system.qo", system.qo),
      SD_VEC3("system.g", system.g),
      SD_INT("dataset.n_trajectories", dataset.n_trajectories, int),
      SD_INT("dataset.n_labels", dataset.n_labels, int),
      SD_DOUBLE("dataset.label_spacing", dataset.label_spacing),
      SD_INT("dataset.seed", dataset.seed, std::uint64_t),
      SD_DOUBLE("dataset.init_position_spread", dataset.init_position_spread),
      SD_DOUBLE("dataset.init_momentum_spread", dataset.init_momentum_spread),
      Field{"integrator.method",
            [](RunConfig&, const std::string& v) {
              if (trim(v) != "rk4") throw ConfigError("integrator.method: only 'rk4' is supported");
            },
            [](const RunConfig&) { return std::string("rk4"); }},
      SD_DOUBLE("integrator.step", integrator_step),
      Field{"model.kind",
            [](RunConfig& c, const std::string& v) {
              try {
                c.model = parse_model_kind(trim(v));
              } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("model.kind: ") + e.what());
              }
            },
            [](const RunConfig& c) { return std::string(to_string(c.model)); }},
      Field{"model.hidden_dims",
            [](RunConfig& c, const std::string& v) {
              c.model_options.hidden_dims.clear();
              for (const auto& s : split_list(v)) {
                c.model_options.hidden_dims.push_back(parse_number<int>("model.hidden_dims", s));
              }
            },
            [](const RunConfig& c) {
              std::string s;
              for (int h : c.model_options.hidden_dims) s += (s.empty() ? "" : ",") + std::to_string(h);
              return s;
            }},
      Field{"model.activation",
            [](RunConfig& c, const std::string& v) {
              try {
                c.model_options.activation = parse_activation(trim(v));
              } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("model.activation: ") + e.what());
              }
            },
            [](const RunConfig& c) { return std::string(to_string(c.model_options.activation)); }},
      Field{"model.transforms",
            [](RunConfig& c, const std::string& v) {
              c.model_options.transforms.clear();
              try {
                for (const auto& s : split_list(v)) {
                  c.model_options.transforms.push_back(parse_transform(s));
                }
              } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("model.transforms: ") + e.what());
              }
            },
            [](const RunConfig& c) {
              std::string s;
              for (Transform t : c.model_options.transforms) {
                s += (s.empty() ? "" : ",") + std::string(to_string(t));
              }
              return s;
            }},
      SD_INT("model.init_seed", model_options.init_seed, std::uint64_t),
      SD_DOUBLE("model.output_gain", model_options.output_gain),
      SD_DOUBLE("training.learning_rate", training.learning_rate),
      SD_INT("training.epochs", training.epochs, int),
      SD_INT("training.batch_size", training.batch_size, int),
      SD_DOUBLE("training.beta1", training.beta1),
      SD_DOUBLE("training.beta2", training.beta2),
      SD_DOUBLE("training.epsilon", training.epsilon),
      SD_INT("training.seed", training.seed, std::uint64_t),
      SD_INT("training.substeps_per_label", training.substeps_per_label, int),
      SD_DOUBLE("training.holdout_fraction", training.holdout_fraction),
      SD_INT("training.chunk_size", training.chunk_size, int),
      SD_INT("eval.horizon", eval.horizon, int),
      SD_INT("eval.model_substeps", eval.model_substeps, int),
      Field{"output.dir",
            [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); },
            [](const RunConfig& c) { return c.output_dir.string(); }},
  };
  return table;
}

#undef SD_DOUBLE
#undef SD_INT
#undef SD_VEC3

const Field* find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

IntegratorConfig RunConfig::integrator() const {
  return IntegratorConfig::for_spacing(dataset.label_spacing, integrator_step);
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig e = eval;
  e.label_spacing = dataset.label_spacing;
  e.ground_truth = integrator();
  return e;
}

void RunConfig::validate() const {
  try {
    system.validate();
    dataset.validate();
    if (!(integrator_step > 0.0) || !std::isfinite(integrator_step)) {
      throw std::invalid_argument("integrator.step must be positive");
    }
    training.validate();
    if (model_options.hidden_dims.empty()) {
      throw std::invalid_argument("model.hidden_dims must list at least one layer");
    }
    if (is_scalar_model(model) && model_options.transforms.empty()) {
      throw std::invalid_argument("model.transforms must not be empty for scalar models");
    }
    mlp_spec_for(model, model_options).validate();
    eval_config().validate();
    if (output_dir.empty()) throw std::invalid_argument("output.dir must not be empty");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json RunConfig::to_json() const {
  json j = json::object();
  for (const Field& f : fields()) j[f.key] = f.get(*this);
  return j;
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("output.dir");  // where results go does not change them
  return to_hex(fnv1a64(j.dump()));
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key + ": unknown configuration key");
  f->set(config, value);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    try {
      set_config_value(base, key, trim(std::string_view(line).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  RunConfig c = path.empty() ? RunConfig{} : parse_config(read_file(path));
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    set_config_value(c, trim(std::string_view(o).substr(0, eq)),
                     trim(std::string_view(o).substr(eq + 1)));
  }
  c.validate();
  return c;
}

std::string default_config_text() {
  const RunConfig c;
  std::string out, section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "" : "\n") + ("[" + s + "]\n");
      section = s;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace scalardyn
