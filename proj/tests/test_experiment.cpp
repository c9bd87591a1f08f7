#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gfm4ga/config.h"
#include "gfm4ga/experiment.h"
#include "gfm4ga/parallel.h"
#include "gfm4ga/synth.h"
#include "helpers.h"

using namespace gfm4ga;

namespace {

// Small and fast settings for pipeline tests.
ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.synth.num_subgraphs = 80;
  c.synth.feature_dim = 32;
  c.synth.feature_shift = 6.0;
  c.synth.labeled_fraction = 0.5;
  c.hidden_dim = 8;
  c.pretrain.epochs = 3;
  c.finetune.epochs = 5;
  c.shots = 4;
  c.seeds = {1, 2};
  return c;
}

}  // namespace

TEST_CASE("config text round trips") {
  ExperimentConfig c;
  std::istringstream defaults(format_config(c));
  CHECK(parse_config(defaults) == c);
  c.synth.feature_shift = 0.1 + 0.2;
  c.synth.pattern = AnomalyPattern::kChain;
  c.pretrain.temperature = 1.0 / 3.0;
  c.pretrain.optimizer = OptimizerKind::kGradientDescent;
  c.finetune.optimizer = OptimizerKind::kAdam;
  c.alpha_grid = {0.25, 0.5};
  c.seeds = {7, 9, 11};
  c.symmetric_normalization = true;
  c.macro_average = true;
  std::istringstream in(format_config(c));
  CHECK(parse_config(in) == c);
}

TEST_CASE("config parsing reports the offending line") {
  std::istringstream in("# comment\n\nepsilon = 0.3\nbogus = 1\n");
  try {
    parse_config(in);
    FAIL("expected an error");
  } catch (const std::invalid_argument& ex) {
    CHECK(std::string(ex.what()).find("line 4") != std::string::npos);
  }
  std::istringstream ok("epsilon = 0.3  # trailing\nseeds = 3, 4\n");
  const ExperimentConfig c = parse_config(ok);
  CHECK(c.epsilon == 0.3);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.pretrain_config().epsilon == 0.3);
  CHECK(c.finetune_config().epsilon == 0.3);

  ExperimentConfig s;
  set_config_value(s, "pretrain.alpha", "0.25");
  CHECK(s.pretrain.alpha == 0.25);
  CHECK_THROWS_AS(set_config_value(s, "nope", "1"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(s, "layers", "two"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(s, "pretrain.optimizer", "sgdx"),
                  std::invalid_argument);
}

TEST_CASE("summaries use the population deviation over defined values") {
  const Summary s = summarize({1.0, 2.0, std::nullopt, 3.0});
  CHECK(s.count == 3);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(summarize({}).count == 0);
}

TEST_CASE("reports round trip through json and csv") {
  EvalReport r;
  r.kind = "ablation";
  r.config = "seed = 1\n";
  r.runtime_seconds = 1.5;
  r.entries.push_back(make_entry("full", 10, {{1, 0.7, 0.3}, {2, 0.8, std::nullopt}}));
  r.entries.push_back(make_entry("no-pretrain", 10, {{1, 0.6, 0.2}, {2, 0.65, 0.25}}));
  compute_deltas(r, "full");
  CHECK(*r.entries[1].delta_auroc == doctest::Approx(0.625 - 0.75));
  CHECK(report_from_json(report_to_json(r)) == r);
  CHECK_FALSE(report_to_json(r, false).contains("runtime_seconds"));
  const std::string csv = report_to_csv(r);
  CHECK(csv.rfind("name,shots,seed,auroc,auprc\n", 0) == 0);
  CHECK(csv.find("full,10,1,") != std::string::npos);
  CHECK(r.find("no-pretrain", 10) == &r.entries[1]);
  CHECK(r.find("missing") == nullptr);
}

TEST_CASE("pooled evaluation is invariant to duplicating the whole set") {
  set_quiet(true);
  Rng rng = make_rng(61);
  std::vector<PreparedGraph> graphs;
  for (int i = 0; i < 5; ++i)
    graphs.push_back(testing::random_graph(rng, 8, 4, 2, 0.4, true));
  Model m;
  m.estimator = make_estimator(fit_pca(stack_features(graphs), 2), 4, rng);
  m.encoder = EncoderParams::initialize({.dims = {4, 5, 3}, .relations = {0, 1}}, 1);
  m.head = ContextHead::zeros(3);
  std::vector<const PreparedGraph*> once, twice;
  for (const auto& g : graphs) once.push_back(&g);
  twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  for (bool macro : {false, true}) {
    const Metrics a = evaluate(m, once, {}, macro);
    const Metrics b = evaluate(m, twice, {}, macro);
    CHECK(std::abs(*a.auroc - *b.auroc) < 1e-12);
    CHECK(std::abs(*a.auprc - *b.auprc) < 1e-12);
  }
  CHECK(evaluate(m, twice, {}).nodes == 80);
  CHECK_THROWS_AS(evaluate(m, std::span<const PreparedGraph* const>(), {}),
                  std::invalid_argument);
  set_quiet(false);
}

TEST_CASE("pretraining corpus is the unlabeled part") {
  SynthConfig c;
  c.num_subgraphs = 20;
  c.labeled_fraction = 0.25;
  const Dataset d = generate_synthetic(c);
  CHECK(pretraining_corpus(d).size() == 15);
  c.labeled_fraction = 1.0;
  CHECK(pretraining_corpus(generate_synthetic(c)).size() == 20);
}

TEST_CASE("ablation runs are reproducible byte for byte") {
  set_quiet(true);
  const ExperimentConfig c = quick_config();
  const Dataset d = generate_synthetic(c.synth);
  const EvalReport a = run_ablations(d, c);
  const EvalReport b = run_ablations(d, c);
  set_quiet(false);
  CHECK(report_to_json(a, false).dump() == report_to_json(b, false).dump());
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(a.entries.size() == 6);
  for (const ReportEntry& e : a.entries) CHECK(e.per_seed.size() == 2);
}
