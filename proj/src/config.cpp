#include "unemo/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace unemo {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("bad flag for " + key + ": " + v);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

#define INT_FIELD(key, expr)                                              \
  {key, [](RunConfig& c, const std::string& v) {                          \
     expr = static_cast<std::remove_reference_t<decltype(expr)>>(         \
         to_int(key, v));                                                 \
   },                                                                     \
   [](const RunConfig& c) { return std::to_string(expr); }}
#define DBL_FIELD(key, expr)                                                  \
  {key, [](RunConfig& c, const std::string& v) { expr = to_double(key, v); }, \
   [](const RunConfig& c) { return fmt_double(expr); }}
#define BOOL_FIELD(key, expr)                                               \
  {key, [](RunConfig& c, const std::string& v) { expr = to_bool(key, v); }, \
   [](const RunConfig& c) { return expr ? "on" : "off"; }}
#define STR_FIELD(key, expr)                                      \
  {key, [](RunConfig& c, const std::string& v) { expr = v; },     \
   [](const RunConfig& c) { return expr; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      INT_FIELD("node_count", c.world.node_count),
      DBL_FIELD("connection_radius", c.world.connection_radius),
      INT_FIELD("feature_dim", c.world.feature_dim),
      INT_FIELD("landmark_count", c.world.landmark_count),
      DBL_FIELD("view_noise_std", c.world.view_noise_std),
      INT_FIELD("world_seed", c.world.seed),
      INT_FIELD("train_worlds", c.train_worlds),
      INT_FIELD("val_worlds", c.val_worlds),
      INT_FIELD("episodes_per_world", c.episodes_per_world),
      INT_FIELD("d_model", c.d_model),
      INT_FIELD("z_dim", c.z_dim),
      INT_FIELD("s_dim", c.s_dim),
      INT_FIELD("mwm_layers", c.mwm_layers),
      INT_FIELD("v_max", c.v_max),
      INT_FIELD("feedback_layers", c.feedback_layers),
      DBL_FIELD("lambda", c.train.lambda),
      DBL_FIELD("beta", c.train.beta),
      DBL_FIELD("aux_weight", c.train.aux_weight),
      DBL_FIELD("lr", c.train.lr),
      INT_FIELD("phases", c.train.phases),
      INT_FIELD("batches_per_phase", c.train.batches_per_phase),
      DBL_FIELD("mwm_active_fraction", c.train.mwm_active_fraction),
      {"supervision",
       [](RunConfig& c, const std::string& v) {
         c.train.supervision = parse_supervision(v);
       },
       [](const RunConfig& c) { return supervision_name(c.train.supervision); }},
      {"variant",
       [](RunConfig& c, const std::string& v) {
         c.train.variant = parse_variant(v);
       },
       [](const RunConfig& c) { return variant_name(c.train.variant); }},
      BOOL_FIELD("feedback", c.train.feedback),
      INT_FIELD("seed", c.train.seed),
      INT_FIELD("step_cap", c.train.step_cap),
      BOOL_FIELD("mwm_reinit", c.train.mwm_reinit),
      INT_FIELD("mwm_retrain_steps", c.train.mwm_retrain_steps),
      DBL_FIELD("success_threshold", c.train.success_threshold),
      INT_FIELD("val_episodes", c.train.val_episodes),
      INT_FIELD("ae_epochs", c.ae_epochs),
      DBL_FIELD("ae_lr", c.ae_lr),
      STR_FIELD("corpus_dir", c.corpus_dir),
      STR_FIELD("ae_checkpoint", c.ae_checkpoint),
  };
  return f;
}

#undef INT_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

}  // namespace

ModelDims config_dims(const RunConfig& cfg) {
  ModelDims d = make_dims(cfg.world);
  d.mwm.d_model = cfg.d_model;
  d.mwm.z_dim = cfg.z_dim;
  d.mwm.s_dim = cfg.s_dim;
  d.mwm.layers = cfg.mwm_layers;
  d.mwm.v_max = cfg.v_max;
  d.feedback_layers = cfg.feedback_layers;
  return d;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const Field& f : fields()) {
      if (key == f.key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key: " + key);
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << serialize_config(cfg);
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace unemo
