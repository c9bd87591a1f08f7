#include "gfm4ga/config.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace gfm4ga {

PretrainConfig ExperimentConfig::pretrain_config() const {
  PretrainConfig c = pretrain;
  c.epsilon = epsilon;
  c.min_group_size = min_group_size;
  c.seed = seed;
  return c;
}

FinetuneConfig ExperimentConfig::finetune_config() const {
  FinetuneConfig c = finetune;
  c.epsilon = epsilon;
  c.context_size = context_size;
  return c;
}

EncoderConfig ExperimentConfig::encoder_config(int input_dim,
                                               std::vector<int> relations) const {
  EncoderConfig c;
  c.dims.push_back(input_dim);
  for (int l = 0; l < layers; ++l) c.dims.push_back(hidden_dim);
  c.relations = std::move(relations);
  c.deviation_hidden = deviation_hidden;
  c.symmetric_normalization = symmetric_normalization;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') {
    throw std::invalid_argument("expected a number, got '" + t + "'");
  }
  return v;
}

long long parse_integer(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0') {
    throw std::invalid_argument("expected an integer, got '" + t + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + t + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (trim(item).empty()) continue;
    out.push_back(static_cast<T>(parse(item)));
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename Format>
std::string format_list(const std::vector<T>& values, Format format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += format(values[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define GFM4GA_DOUBLE(key, member)                                          \
  Field {                                                                   \
    key,                                                                    \
        [](ExperimentConfig& c, const std::string& v) {                     \
          c.member = parse_double(v);                                       \
        },                                                                  \
        [](const ExperimentConfig& c) { return format_double(c.member); } \
  }
#define GFM4GA_INT(key, member)                                            \
  Field {                                                                  \
    key,                                                                   \
        [](ExperimentConfig& c, const std::string& v) {                    \
          c.member = static_cast<decltype(c.member)>(parse_integer(v));    \
        },                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.member); } \
  }
#define GFM4GA_BOOL(key, member)                                    \
  Field {                                                           \
    key,                                                            \
        [](ExperimentConfig& c, const std::string& v) {             \
          c.member = parse_bool(v);                                 \
        },                                                          \
        [](const ExperimentConfig& c) {                             \
          return std::string(c.member ? "true" : "false");          \
        }                                                           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      GFM4GA_INT("synth.num_subgraphs", synth.num_subgraphs),
      GFM4GA_DOUBLE("synth.size_mean", synth.size_mean),
      GFM4GA_DOUBLE("synth.size_std", synth.size_std),
      GFM4GA_INT("synth.feature_dim", synth.feature_dim),
      Field{"synth.pattern",
            [](ExperimentConfig& c, const std::string& v) {
              c.synth.pattern = parse_pattern(trim(v));
            },
            [](const ExperimentConfig& c) { return to_string(c.synth.pattern); }},
      GFM4GA_DOUBLE("synth.group_size_mean", synth.group_size_mean),
      GFM4GA_DOUBLE("synth.group_size_std", synth.group_size_std),
      GFM4GA_DOUBLE("synth.feature_shift", synth.feature_shift),
      GFM4GA_DOUBLE("synth.inner_density", synth.inner_density),
      GFM4GA_DOUBLE("synth.camouflage_rate", synth.camouflage_rate),
      GFM4GA_INT("synth.num_relations", synth.num_relations),
      GFM4GA_INT("synth.backbone_attachment", synth.backbone_attachment),
      GFM4GA_DOUBLE("synth.labeled_fraction", synth.labeled_fraction),
      GFM4GA_DOUBLE("synth.group_rate", synth.group_rate),
      GFM4GA_INT("synth.seed", synth.seed),

      GFM4GA_INT("layers", layers),
      GFM4GA_INT("hidden_dim", hidden_dim),
      GFM4GA_INT("deviation_hidden", deviation_hidden),
      GFM4GA_BOOL("symmetric_normalization", symmetric_normalization),

      GFM4GA_INT("pca_components", pca_components),
      GFM4GA_INT("scorer_hidden", scorer_hidden),
      GFM4GA_INT("calibration.epochs", calibration.epochs),
      GFM4GA_INT("calibration.batch_size", calibration.batch_size),
      GFM4GA_DOUBLE("calibration.learning_rate", calibration.learning_rate),
      GFM4GA_INT("calibration.seed", calibration.seed),

      GFM4GA_DOUBLE("epsilon", epsilon),
      GFM4GA_INT("min_group_size", min_group_size),
      GFM4GA_INT("context_size", context_size),

      GFM4GA_DOUBLE("pretrain.temperature", pretrain.temperature),
      GFM4GA_DOUBLE("pretrain.alpha", pretrain.alpha),
      GFM4GA_INT("pretrain.epochs", pretrain.epochs),
      GFM4GA_INT("pretrain.batch_size", pretrain.batch_size),
      GFM4GA_DOUBLE("pretrain.learning_rate", pretrain.learning_rate),
      GFM4GA_DOUBLE("pretrain.gamma_close", pretrain.gamma_close),
      GFM4GA_DOUBLE("pretrain.gamma_far", pretrain.gamma_far),
      GFM4GA_INT("pretrain.max_positive_pairs", pretrain.max_positive_pairs),
      GFM4GA_INT("pretrain.max_negative_pairs", pretrain.max_negative_pairs),
      GFM4GA_INT("pretrain.max_negative_subgraphs",
                 pretrain.max_negative_subgraphs),
      GFM4GA_INT("pretrain.refresh_period", pretrain.refresh_period),
      GFM4GA_INT("pretrain.calibration_epochs", pretrain.calibration_epochs),
      GFM4GA_DOUBLE("pretrain.learning_rate_estimator",
                    pretrain.learning_rate_estimator),
      GFM4GA_DOUBLE("pretrain.clip_norm", pretrain.clip_norm),
      Field{"pretrain.optimizer",
            [](ExperimentConfig& c, const std::string& v) {
              c.pretrain.optimizer = parse_optimizer(trim(v));
            },
            [](const ExperimentConfig& c) {
              return to_string(c.pretrain.optimizer);
            }},

      GFM4GA_INT("finetune.epochs", finetune.epochs),
      GFM4GA_DOUBLE("finetune.learning_rate", finetune.learning_rate),
      GFM4GA_DOUBLE("finetune.fc_weight", finetune.fc_weight),
      GFM4GA_BOOL("finetune.node_weights", finetune.node_weights),
      GFM4GA_BOOL("finetune.group_context", finetune.group_context),
      GFM4GA_DOUBLE("finetune.clamp", finetune.clamp),
      GFM4GA_DOUBLE("finetune.clip_norm", finetune.clip_norm),
      Field{"finetune.optimizer",
            [](ExperimentConfig& c, const std::string& v) {
              c.finetune.optimizer = parse_optimizer(trim(v));
            },
            [](const ExperimentConfig& c) {
              return to_string(c.finetune.optimizer);
            }},

      GFM4GA_INT("shots", shots),
      Field{"shot_grid",
            [](ExperimentConfig& c, const std::string& v) {
              c.shot_grid = parse_list<int>(v, parse_integer);
            },
            [](const ExperimentConfig& c) {
              return format_list(c.shot_grid,
                                 [](int x) { return std::to_string(x); });
            }},
      Field{"seeds",
            [](ExperimentConfig& c, const std::string& v) {
              c.seeds = parse_list<std::uint64_t>(v, parse_integer);
            },
            [](const ExperimentConfig& c) {
              return format_list(c.seeds,
                                 [](std::uint64_t x) { return std::to_string(x); });
            }},
      Field{"alpha_grid",
            [](ExperimentConfig& c, const std::string& v) {
              c.alpha_grid = parse_list<double>(v, parse_double);
            },
            [](const ExperimentConfig& c) {
              return format_list(c.alpha_grid, format_double);
            }},
      Field{"context_grid",
            [](ExperimentConfig& c, const std::string& v) {
              c.context_grid = parse_list<int>(v, parse_integer);
            },
            [](const ExperimentConfig& c) {
              return format_list(c.context_grid,
                                 [](int x) { return std::to_string(x); });
            }},
      GFM4GA_BOOL("macro_average", macro_average),
      GFM4GA_INT("seed", seed),
  };
  return table;
}

#undef GFM4GA_DOUBLE
#undef GFM4GA_INT
#undef GFM4GA_BOOL

}  // namespace

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(no) +
                                  ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& ex) {
      throw std::invalid_argument("config line " + std::to_string(no) + ": " +
                                  ex.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return parse_config(in, std::move(base));
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace gfm4ga
