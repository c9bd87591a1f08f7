#ifndef GFM4GA_EXPERIMENT_H_
#define GFM4GA_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfm4ga/config.h"
#include "gfm4ga/finetune.h"
#include "gfm4ga/graph.h"
#include "gfm4ga/pretrain.h"
#include "gfm4ga/synth.h"
#include "json.hpp"

namespace gfm4ga {

struct Metrics {
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::size_t nodes = 0;
};

// Scores every node of `graphs` with `model`. Micro: one pooled ranking over
// all nodes. Macro: per-subgraph metrics averaged over subgraphs where they
// are defined. Throws std::invalid_argument on an empty or unlabeled set.
Metrics evaluate(const Model& model, std::span<const PreparedGraph* const> graphs,
                 const PredictOptions& options, bool macro = false);

// Pretraining corpus: the unlabeled subgraphs, or every subgraph when none
// is unlabeled.
std::vector<PreparedGraph> pretraining_corpus(const Dataset& dataset);

struct PretrainOutcome {
  Model model;
  std::vector<EpochLoss> curve;
  std::vector<double> calibration_curve;
};

// Fits PCA, calibrates the scorer, initializes the encoder and (unless
// `skip_pretraining`) runs contrastive pretraining. The context head is zero.
PretrainOutcome pretrain_model(std::span<const PreparedGraph> corpus,
                               const std::vector<int>& relation_registry,
                               const ExperimentConfig& config,
                               bool skip_pretraining = false);

// Labeled subgraphs prepared once and looked up by id.
class LabeledPool {
 public:
  explicit LabeledPool(const Dataset& dataset);
  std::vector<const PreparedGraph*> lookup(
      const std::vector<std::string>& ids) const;

 private:
  std::map<std::string, PreparedGraph> graphs_;
};

// Finetunes on a split's shots and evaluates on its eval ids.
Metrics run_cell(const Model& pretrained, const LabeledPool& pool,
                 const KShotSplit& split, const FinetuneConfig& config,
                 bool macro);

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> auroc;
  std::optional<double> auprc;

  friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  int count = 0;     // defined per-seed values behind the mean

  friend bool operator==(const Summary&, const Summary&) = default;
};

Summary summarize(const std::vector<std::optional<double>>& values);

struct ReportEntry {
  std::string name;
  int shots = 0;
  std::vector<SeedResult> per_seed;
  Summary auroc;
  Summary auprc;
  std::optional<double> delta_auroc;  // versus the reference entry
  std::optional<double> delta_auprc;

  friend bool operator==(const ReportEntry&, const ReportEntry&) = default;
};

ReportEntry make_entry(std::string name, int shots,
                       std::vector<SeedResult> per_seed);

struct EvalReport {
  std::string kind;
  std::vector<ReportEntry> entries;
  double runtime_seconds = 0.0;
  std::string config;  // format_config snapshot

  const ReportEntry* find(const std::string& name, int shots = -1) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Sets every entry's deltas relative to the entry named `reference` with the
// same shot count.
void compute_deltas(EvalReport& report, const std::string& reference);

nlohmann::json report_to_json(const EvalReport& report,
                              bool include_runtime = true);
EvalReport report_from_json(const nlohmann::json& doc);
// "name,shots,seed,auroc,auprc" rows, then one "mean"/"std" row pair per
// entry under seed columns "mean" and "std".
std::string report_to_csv(const EvalReport& report);
// "shots,auroc_mean,auroc_std,auprc_mean,auprc_std" for entries named
// `name`.
std::string curve_to_csv(const EvalReport& report, const std::string& name);
void save_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::string& stem);
EvalReport load_report(const std::filesystem::path& path);

// Pretrains once with config.seed, then finetunes per (shot, split seed).
EvalReport run_kshot_sweep(const Dataset& dataset, const ExperimentConfig& config,
                           const std::vector<int>& shots,
                           const std::vector<std::uint64_t>& seeds);

// Full model plus the four ablations (sub-pt: alpha=0, node-pt: alpha=1,
// node-wt: uniform part weights, ano-ctx: no refinement) and the
// no-pretraining baseline, at config.shots over config.seeds.
EvalReport run_ablations(const Dataset& dataset, const ExperimentConfig& config);

EvalReport run_alpha_sweep(const Dataset& dataset, const ExperimentConfig& config);
EvalReport run_context_sweep(const Dataset& dataset,
                             const ExperimentConfig& config);

}  // namespace gfm4ga

#endif  // GFM4GA_EXPERIMENT_H_
