#ifndef GFM4GA_CONFIG_H_
#define GFM4GA_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "gfm4ga/estimator.h"
#include "gfm4ga/finetune.h"
#include "gfm4ga/pretrain.h"
#include "gfm4ga/synth.h"

namespace gfm4ga {

// Every tunable of a run. Thresholds shared by pretraining and finetuning
// (epsilon, context size) live in one place and are copied into the stage
// configs by the accessors below.
struct ExperimentConfig {
  SynthConfig synth;

  // Encoder: `layers` graph layers of width `hidden_dim` on top of the
  // dataset's feature dimension.
  int layers = 2;
  int hidden_dim = 32;
  int deviation_hidden = 16;
  bool symmetric_normalization = false;

  int pca_components = 0;  // 0 picks by explained variance
  int scorer_hidden = 16;
  CalibrationOptions calibration;

  double epsilon = 0.4;
  int min_group_size = 3;
  int context_size = 10;

  PretrainConfig pretrain;
  FinetuneConfig finetune;

  int shots = 10;
  std::vector<int> shot_grid = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9};
  std::vector<int> context_grid = {1, 3, 5, 10, 15, 20};
  bool macro_average = false;
  std::uint64_t seed = 1;  // pretraining and initialization

  PretrainConfig pretrain_config() const;
  FinetuneConfig finetune_config() const;
  EncoderConfig encoder_config(int input_dim,
                               std::vector<int> relations) const;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Flat "key = value" text; '#' starts a comment, lists are comma separated.
// Unknown keys and malformed values throw std::invalid_argument naming the
// line.
ExperimentConfig parse_config(std::istream& in,
                              ExperimentConfig base = ExperimentConfig{});
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = ExperimentConfig{});
// Sets a single key; throws std::invalid_argument on unknown keys.
void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);
// Writes every key; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

}  // namespace gfm4ga

#endif  // GFM4GA_CONFIG_H_
