#include "gfm4ga/experiment.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gfm4ga/metrics.h"
#include "gfm4ga/parallel.h"

namespace gfm4ga {

using nlohmann::json;

Metrics evaluate(const Model& model, std::span<const PreparedGraph* const> graphs,
                 const PredictOptions& options, bool macro) {
  if (graphs.empty()) throw std::invalid_argument("evaluate: empty eval set");
  std::vector<Prediction> predictions(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t i) {
    if (!graphs[i]->labels) {
      throw std::invalid_argument("evaluate: subgraph '" + graphs[i]->id +
                                  "' has no labels");
    }
    predictions[i] = predict(*graphs[i], model, options);
  });

  Metrics m;
  if (!macro) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const Vector& s = predictions[i].final;
      scores.insert(scores.end(), s.data(), s.data() + s.size());
      labels.insert(labels.end(), graphs[i]->labels->begin(),
                    graphs[i]->labels->end());
    }
    m.nodes = scores.size();
    m.auroc = auroc(scores, labels);
    m.auprc = auprc(scores, labels);
    return m;
  }
  double roc_sum = 0.0, prc_sum = 0.0;
  int roc_count = 0, prc_count = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Vector& s = predictions[i].final;
    m.nodes += static_cast<std::size_t>(s.size());
    if (auto v = auroc(as_span(s), *graphs[i]->labels)) {
      roc_sum += *v;
      ++roc_count;
    }
    if (auto v = auprc(as_span(s), *graphs[i]->labels)) {
      prc_sum += *v;
      ++prc_count;
    }
  }
  if (roc_count > 0) m.auroc = roc_sum / roc_count;
  if (prc_count > 0) m.auprc = prc_sum / prc_count;
  return m;
}

std::vector<PreparedGraph> pretraining_corpus(const Dataset& dataset) {
  std::vector<const Subgraph*> chosen = dataset.unlabeled();
  if (chosen.empty()) {
    log_info("no unlabeled subgraphs; pretraining on every subgraph");
    for (const Subgraph& sg : dataset.subgraphs) chosen.push_back(&sg);
  }
  return prepare_all(chosen);
}

PretrainOutcome pretrain_model(std::span<const PreparedGraph> corpus,
                               const std::vector<int>& relation_registry,
                               const ExperimentConfig& config,
                               bool skip_pretraining) {
  if (corpus.empty()) throw std::invalid_argument("pretrain: empty corpus");
  const Matrix rows = stack_features(corpus);
  int components = config.pca_components;
  if (components <= 0) {
    components = default_components(fit_pca(rows, 1).eigenvalues);
  }
  const PcaFit pca = fit_pca(rows, components);
  Rng rng = make_rng(config.seed, 0x5c0e);
  PretrainOutcome out;
  CalibrationOptions calibration = config.calibration;
  calibration.seed = config.seed;
  EstimatorParams estimator = calibrate_estimator(
      make_estimator(pca, config.scorer_hidden, rng), corpus, calibration,
      &out.calibration_curve);

  const EncoderConfig encoder_config =
      config.encoder_config(static_cast<int>(rows.cols()), relation_registry);
  EncoderParams encoder = EncoderParams::initialize(encoder_config, config.seed);
  if (!skip_pretraining) {
    PretrainResult result =
        pretrain(corpus, std::move(estimator), std::move(encoder),
                 config.pretrain_config());
    estimator = std::move(result.estimator);
    encoder = std::move(result.encoder);
    out.curve = std::move(result.curve);
  }
  out.model.estimator = std::move(estimator);
  out.model.encoder = std::move(encoder);
  out.model.head = ContextHead::zeros(encoder_config.output_dim());
  return out;
}

LabeledPool::LabeledPool(const Dataset& dataset) {
  for (const Subgraph* sg : dataset.labeled()) {
    graphs_.emplace(sg->id, prepare(*sg));
  }
}

std::vector<const PreparedGraph*> LabeledPool::lookup(
    const std::vector<std::string>& ids) const {
  std::vector<const PreparedGraph*> out;
  for (const std::string& id : ids) {
    auto it = graphs_.find(id);
    if (it == graphs_.end()) {
      throw std::invalid_argument("no labeled subgraph with id '" + id + "'");
    }
    out.push_back(&it->second);
  }
  return out;
}

Metrics run_cell(const Model& pretrained, const LabeledPool& pool,
                 const KShotSplit& split, const FinetuneConfig& config,
                 bool macro) {
  const auto shots = pool.lookup(split.finetune_ids);
  const auto eval = pool.lookup(split.eval_ids);
  const Model tuned = finetune(pretrained, shots, config);
  return evaluate(tuned, eval, config.predict_options(), macro);
}

Summary summarize(const std::vector<std::optional<double>>& values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++s.count;
  }
  if (s.count == 0) return s;
  s.mean = sum / s.count;
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) sq += (*v - s.mean) * (*v - s.mean);
  }
  s.std = std::sqrt(sq / s.count);
  return s;
}

ReportEntry make_entry(std::string name, int shots,
                       std::vector<SeedResult> per_seed) {
  ReportEntry e;
  e.name = std::move(name);
  e.shots = shots;
  std::vector<std::optional<double>> roc, prc;
  for (const SeedResult& r : per_seed) {
    roc.push_back(r.auroc);
    prc.push_back(r.auprc);
  }
  e.auroc = summarize(roc);
  e.auprc = summarize(prc);
  e.per_seed = std::move(per_seed);
  return e;
}

const ReportEntry* EvalReport::find(const std::string& name, int shots) const {
  for (const ReportEntry& e : entries) {
    if (e.name == name && (shots < 0 || e.shots == shots)) return &e;
  }
  return nullptr;
}

void compute_deltas(EvalReport& report, const std::string& reference) {
  for (ReportEntry& e : report.entries) {
    const ReportEntry* ref = report.find(reference, e.shots);
    e.delta_auroc.reset();
    e.delta_auprc.reset();
    if (ref == nullptr) continue;
    if (e.auroc.count > 0 && ref->auroc.count > 0) {
      e.delta_auroc = e.auroc.mean - ref->auroc.mean;
    }
    if (e.auprc.count > 0 && ref->auprc.count > 0) {
      e.delta_auprc = e.auprc.mean - ref->auprc.mean;
    }
  }
}

namespace {

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_from_json(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json summary_to_json(const Summary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

Summary summary_from_json(const json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>(),
          j.at("count").get<int>()};
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

json report_to_json(const EvalReport& report, bool include_runtime) {
  json entries = json::array();
  for (const ReportEntry& e : report.entries) {
    json seeds = json::array();
    for (const SeedResult& r : e.per_seed) {
      seeds.push_back({{"seed", r.seed},
                       {"auroc", optional_to_json(r.auroc)},
                       {"auprc", optional_to_json(r.auprc)}});
    }
    entries.push_back({{"name", e.name},
                       {"shots", e.shots},
                       {"per_seed", std::move(seeds)},
                       {"auroc", summary_to_json(e.auroc)},
                       {"auprc", summary_to_json(e.auprc)},
                       {"delta_auroc", optional_to_json(e.delta_auroc)},
                       {"delta_auprc", optional_to_json(e.delta_auprc)}});
  }
  json doc;
  doc["kind"] = report.kind;
  doc["entries"] = std::move(entries);
  if (include_runtime) doc["runtime_seconds"] = report.runtime_seconds;
  doc["config"] = report.config;
  return doc;
}

EvalReport report_from_json(const json& doc) {
  EvalReport report;
  report.kind = doc.at("kind").get<std::string>();
  report.runtime_seconds = doc.value("runtime_seconds", 0.0);
  report.config = doc.at("config").get<std::string>();
  for (const json& j : doc.at("entries")) {
    ReportEntry e;
    e.name = j.at("name").get<std::string>();
    e.shots = j.at("shots").get<int>();
    for (const json& s : j.at("per_seed")) {
      e.per_seed.push_back({s.at("seed").get<std::uint64_t>(),
                            optional_from_json(s.at("auroc")),
                            optional_from_json(s.at("auprc"))});
    }
    e.auroc = summary_from_json(j.at("auroc"));
    e.auprc = summary_from_json(j.at("auprc"));
    e.delta_auroc = optional_from_json(j.at("delta_auroc"));
    e.delta_auprc = optional_from_json(j.at("delta_auprc"));
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "name,shots,seed,auroc,auprc\n";
  for (const ReportEntry& e : report.entries) {
    for (const SeedResult& r : e.per_seed) {
      out << e.name << ',' << e.shots << ',' << r.seed << ','
          << csv_number(r.auroc) << ',' << csv_number(r.auprc) << '\n';
    }
    out << e.name << ',' << e.shots << ",mean," << csv_number(e.auroc.mean)
        << ',' << csv_number(e.auprc.mean) << '\n';
    out << e.name << ',' << e.shots << ",std," << csv_number(e.auroc.std)
        << ',' << csv_number(e.auprc.std) << '\n';
  }
  return out.str();
}

std::string curve_to_csv(const EvalReport& report, const std::string& name) {
  std::ostringstream out;
  out << "shots,auroc_mean,auroc_std,auprc_mean,auprc_std\n";
  for (const ReportEntry& e : report.entries) {
    if (e.name != name) continue;
    out << e.shots << ',' << csv_number(e.auroc.mean) << ','
        << csv_number(e.auroc.std) << ',' << csv_number(e.auprc.mean) << ','
        << csv_number(e.auprc.std) << '\n';
  }
  return out.str();
}

void save_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto write = [](const std::filesystem::path& path,
                        const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  };
  write(dir / (stem + ".json"), report_to_json(report).dump(2) + "\n");
  write(dir / (stem + ".csv"), report_to_csv(report));
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return report_from_json(json::parse(in));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Finetunes `pretrained` on every split and collects per-seed metrics.
std::vector<SeedResult> run_splits(const Model& pretrained,
                                   const LabeledPool& pool,
                                   const std::vector<KShotSplit>& splits,
                                   const FinetuneConfig& config, bool macro) {
  std::vector<SeedResult> out;
  for (const KShotSplit& split : splits) {
    const Metrics m = run_cell(pretrained, pool, split, config, macro);
    out.push_back({split.seed, m.auroc, m.auprc});
  }
  return out;
}

std::string describe(const ReportEntry& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s k=%-3d AUROC %.4f +- %.4f  AUPRC %.4f +- %.4f",
                e.name.c_str(), e.shots, e.auroc.mean, e.auroc.std,
                e.auprc.mean, e.auprc.std);
  return buf;
}

}  // namespace

EvalReport run_kshot_sweep(const Dataset& dataset, const ExperimentConfig& config,
                           const std::vector<int>& shots,
                           const std::vector<std::uint64_t>& seeds) {
  const auto start = Clock::now();
  const auto corpus = pretraining_corpus(dataset);
  const Model pretrained =
      pretrain_model(corpus, dataset.relation_registry, config).model;
  const LabeledPool pool(dataset);
  EvalReport report;
  report.kind = "kshot";
  report.config = format_config(config);
  for (int k : shots) {
    const auto splits = make_kshot_splits(dataset, k, seeds);
    report.entries.push_back(make_entry(
        "full", k,
        run_splits(pretrained, pool, splits, config.finetune_config(),
                   config.macro_average)));
    log_info(describe(report.entries.back()));
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

EvalReport run_ablations(const Dataset& dataset, const ExperimentConfig& config) {
  const auto start = Clock::now();
  const auto corpus = pretraining_corpus(dataset);
  const LabeledPool pool(dataset);
  const auto splits = make_kshot_splits(dataset, config.shots, config.seeds);
  const FinetuneConfig base_ft = config.finetune_config();
  const bool macro = config.macro_average;

  EvalReport report;
  report.kind = "ablation";
  report.config = format_config(config);
  const auto add = [&](const std::string& name, const Model& model,
                       const FinetuneConfig& ft) {
    report.entries.push_back(make_entry(
        name, config.shots, run_splits(model, pool, splits, ft, macro)));
    log_info(describe(report.entries.back()));
  };

  const Model full =
      pretrain_model(corpus, dataset.relation_registry, config).model;
  add("full", full, base_ft);

  ExperimentConfig no_sub = config;
  no_sub.pretrain.alpha = 0.0;
  add("no-sub-pt",
      pretrain_model(corpus, dataset.relation_registry, no_sub).model, base_ft);

  ExperimentConfig no_node = config;
  no_node.pretrain.alpha = 1.0;
  add("no-node-pt",
      pretrain_model(corpus, dataset.relation_registry, no_node).model,
      base_ft);

  FinetuneConfig uniform = base_ft;
  uniform.node_weights = false;
  add("no-node-wt", full, uniform);

  FinetuneConfig no_context = base_ft;
  no_context.group_context = false;
  add("no-ano-ctx", full, no_context);

  add("no-pretrain",
      pretrain_model(corpus, dataset.relation_registry, config, true).model,
      base_ft);

  compute_deltas(report, "full");
  report.runtime_seconds = seconds_since(start);
  return report;
}

EvalReport run_alpha_sweep(const Dataset& dataset,
                           const ExperimentConfig& config) {
  const auto start = Clock::now();
  const auto corpus = pretraining_corpus(dataset);
  const LabeledPool pool(dataset);
  const auto splits = make_kshot_splits(dataset, config.shots, config.seeds);
  EvalReport report;
  report.kind = "alpha";
  report.config = format_config(config);
  for (double alpha : config.alpha_grid) {
    ExperimentConfig c = config;
    c.pretrain.alpha = alpha;
    const Model model =
        pretrain_model(corpus, dataset.relation_registry, c).model;
    char name[32];
    std::snprintf(name, sizeof name, "alpha=%g", alpha);
    report.entries.push_back(make_entry(
        name, config.shots,
        run_splits(model, pool, splits, c.finetune_config(),
                   config.macro_average)));
    log_info(describe(report.entries.back()));
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

EvalReport run_context_sweep(const Dataset& dataset,
                             const ExperimentConfig& config) {
  const auto start = Clock::now();
  const auto corpus = pretraining_corpus(dataset);
  const LabeledPool pool(dataset);
  const auto splits = make_kshot_splits(dataset, config.shots, config.seeds);
  const Model pretrained =
      pretrain_model(corpus, dataset.relation_registry, config).model;
  EvalReport report;
  report.kind = "context";
  report.config = format_config(config);
  for (int k : config.context_grid) {
    ExperimentConfig c = config;
    c.context_size = k;
    report.entries.push_back(make_entry(
        "K=" + std::to_string(k), config.shots,
        run_splits(pretrained, pool, splits, c.finetune_config(),
                   config.macro_average)));
    log_info(describe(report.entries.back()));
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

}  // namespace gfm4ga
