#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fin/bench.hpp"
#include "fin/engine.hpp"
#include "fin/errors.hpp"
#include "fin/kernels.hpp"
#include "fin/rng.hpp"

using namespace fin;
using namespace fin::bench;

namespace {

// Two well-separated Gaussian blobs in a 4-d input.
LabeledDataset blobs(std::size_t n, double gap, std::uint64_t seed, std::size_t subjects = 0) {
  Rng r(seed);
  LabeledDataset d;
  d.tf_dim = 4;
  d.inputs = Matrix(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    d.labels.push_back(y);
    d.item_ids.push_back(static_cast<std::int64_t>(i));
    d.subject_ids.push_back(subjects ? std::optional<std::int64_t>(static_cast<std::int64_t>(i % subjects))
                                     : std::nullopt);
    for (std::size_t c = 0; c < 4; ++c) d.inputs(i, c) = r.normal() + (y ? gap : -gap);
  }
  return d;
}

std::filesystem::path tmpdir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A tiny FIN over the 4-d blob inputs.
std::filesystem::path blob_fin(const std::string& name, std::uint64_t seed) {
  FinArtifact a;
  a.feature = FeatureId::Kurtosis;
  a.net = nn::init_random(nn::Topology{{4, 6, 1}, {nn::Activation::Tanh, nn::Activation::Linear}}, seed);
  for (auto& L : a.net.layers)
    for (double& w : L.weights) w = static_cast<float>(w);
  a.norm_lo = {0};
  a.norm_hi = {1};
  a.gen_spec_digest = GenSpec{}.digest();
  const auto path = std::filesystem::temp_directory_path() / (name + ".fin");
  save_fin(a, path);
  return path;
}

BenchConfig quick(int repeats) {
  BenchConfig c;
  c.plan.repeats = repeats;
  c.plan.seed = 4;
  c.train.max_epochs = 6;
  c.train.patience = 3;
  c.search.n_candidates = 3;
  c.search.search_splits = 2;
  c.search.max_layers = 3;
  c.search.widths = {4, 8};
  c.margin.epochs = 5;
  c.seed = 11;
  return c;
}

void strip_timing(EvalReport& r) {
  for (auto& run : r.runs) {
    run.train_seconds = 0;
    for (auto& e : run.history.epochs) e.wall_seconds = 0;
  }
  for (auto* list : {&r.aggregates, &r.fraction_aggregates})
    for (auto& a : *list) a.seconds_mean = a.seconds_std = 0;
}

bool same_histories(const EvalReport& a, const EvalReport& b) {
  if (a.runs.size() != b.runs.size()) return false;
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    const auto &x = a.runs[i].history, &y = b.runs[i].history;
    if (x.best_epoch != y.best_epoch || x.epochs.size() != y.epochs.size()) return false;
    for (std::size_t e = 0; e < x.epochs.size(); ++e)
      if (x.epochs[e].train_loss != y.epochs[e].train_loss || x.epochs[e].val_loss != y.epochs[e].val_loss) return false;
  }
  return true;
}

}  // namespace

TEST(ModelSpec, ParseAndTags) {
  EXPECT_EQ(ModelSpec::parse("knn").kind, ModelKind::Knn);
  const auto e = ModelSpec::parse("fin-ensemble:/a/entropy.fin+/b/kurtosis.fin");
  EXPECT_EQ(e.kind, ModelKind::FinEnsemble);
  EXPECT_EQ(e.paths.size(), 2u);
  EXPECT_EQ(e.tag(), "fin-ensemble:entropy+kurtosis");
  EXPECT_EQ(ModelSpec::parse("fin-reinit:x/entropy.fin").tag(), "fin-reinit:entropy");
  EXPECT_THROW(ModelSpec::parse("fin"), std::invalid_argument);
  EXPECT_THROW(ModelSpec::parse("forest"), std::invalid_argument);
  EXPECT_THROW(parse_models("knn,knn"), std::invalid_argument);
  EXPECT_EQ(parse_models("knn,linear-margin,baseline-search").size(), 3u);
  auto missing = ModelSpec::parse("fin:/nonexistent/entropy.fin");
  EXPECT_THROW(missing.load_artifacts(), IoError);
}

TEST(Accuracy, Basic) {
  const std::vector<int> p{1, 0, 1, 1}, t{1, 1, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(p, t), 0.5);
}

TEST(SampleTopologies, WithinBoundsAndDeterministic) {
  SearchConfig cfg;
  const auto a = sample_topologies(1024, 3, cfg, 1);
  ASSERT_EQ(a.size(), 20u);
  for (const auto& t : a) {
    EXPECT_NO_THROW(t.validate());
    EXPECT_GE(t.n_layers(), 2u);
    EXPECT_LE(t.n_layers(), 10u);
    EXPECT_EQ(t.input_dim(), 1024u);
    EXPECT_EQ(t.output_dim(), 3u);
    EXPECT_EQ(t.activations.back(), nn::Activation::Softmax);
    for (std::size_t l = 1; l + 1 < t.layer_sizes.size(); ++l)
      EXPECT_NE(std::find(cfg.widths.begin(), cfg.widths.end(), t.layer_sizes[l]), cfg.widths.end());
  }
  EXPECT_EQ(sample_topologies(1024, 3, cfg, 1), a);
}

TEST(Aggregates, MeansAndSampleStd) {
  std::vector<RunRecord> runs;
  for (int k = 0; k < 3; ++k) runs.push_back({"a", k, 1.0, 10, 0.5 + 0.1 * k, 1.0 + k, {}});
  runs.push_back({"b", 0, 1.0, 10, 0.9, 2.0, {}});
  runs.push_back({"b", 0, 0.5, 5, 0.7, 1.0, {}});
  const auto m = aggregate_by_model(runs);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].model_tag, "a");
  EXPECT_EQ(m[0].n_runs, 3u);
  EXPECT_NEAR(m[0].accuracy_mean, 0.6, 1e-12);
  EXPECT_NEAR(m[0].accuracy_std, 0.1, 1e-12);
  EXPECT_NEAR(m[0].seconds_mean, 2.0, 1e-12);
  const auto f = aggregate_by_fraction(runs);
  EXPECT_EQ(f.size(), 3u);
  const auto acc = accuracies(runs, "a", 1.0);
  ASSERT_EQ(acc.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(acc[static_cast<std::size_t>(k)], 0.5 + 0.1 * k);
}

TEST(CompareRuns, WelchLeveneAndBonferroni) {
  std::vector<RunRecord> runs;
  Rng r(1);
  for (int k = 0; k < 20; ++k) {
    runs.push_back({"good", k, 1.0, 10, 0.9 + 0.01 * r.normal(), 0, {}});
    runs.push_back({"bad", k, 1.0, 10, 0.6 + 0.04 * r.normal(), 0, {}});
    runs.push_back({"same", k, 1.0, 10, 0.6 + 0.04 * r.normal(), 0, {}});
  }
  const auto stats = compare_runs(runs, {{"good", "bad"}, {"same", "bad"}});
  int welch = 0;
  for (const auto& s : stats) {
    if (s.test != "welch_greater") continue;
    ++welch;
    EXPECT_NEAR(s.corrected_p, std::min(1.0, 2 * s.p_value), 1e-15);
    if (s.group_a == "good") EXPECT_EQ(s.verdict, "significant");
    else EXPECT_EQ(s.verdict, "not_significant");
  }
  EXPECT_EQ(welch, 2);
  bool levene_seen = false;
  for (const auto& s : stats)
    if (s.test == "levene" && s.group_a == "good") {
      levene_seen = true;
      EXPECT_LT(s.p_value, 0.05);
    }
  EXPECT_TRUE(levene_seen);

  std::vector<RunRecord> flat;
  for (int k = 0; k < 5; ++k) {
    flat.push_back({"x", k, 1.0, 10, 1.0, 0, {}});
    flat.push_back({"y", k, 1.0, 10, 1.0, 0, {}});
  }
  for (const auto& s : compare_runs(flat, {{"x", "y"}})) EXPECT_EQ(s.verdict, "degenerate");
}

TEST(Splits, LeaveSubjectsOutPairs) {
  const auto d = blobs(60, 2, 1, 5);
  SplitPlan plan;
  plan.mode = SplitMode::LeaveSubjectsOut;
  plan.repeats = 6;
  EXPECT_EQ(split_count(d, plan), 6);
  for (int k = 0; k < 6; ++k) {
    const auto s = make_split(d, plan, k);
    const auto ts = *d.subject_ids[s.test.front()], vs = *d.subject_ids[s.val.front()];
    EXPECT_NE(ts, vs);
    for (auto i : s.test) EXPECT_EQ(*d.subject_ids[i], ts);
  }
}

TEST(FractionSweep, FullFractionUsesWholeTrainingPart) {
  const auto d = blobs(100, 2, 2);
  SplitPlan plan;
  plan.repeats = 3;
  plan.mode = SplitMode::FractionSweep;
  plan.fractions = {0.5, 1.0};
  std::vector<std::size_t> sizes(6);
  const auto runs = fraction_sweep(d, plan, [&](const Split& s, int k, double f) {
    const auto full = make_split(d, plan, k);
    EXPECT_EQ(s.val, full.val);
    EXPECT_EQ(s.test, full.test);
    if (f == 1.0) EXPECT_EQ(s.train, full.train);
    else EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::lround(0.5 * full.train.size())));
    RunRecord r;
    r.model_tag = "m";
    r.split = k;
    r.fraction = f;
    r.n_train = s.train.size();
    return r;
  });
  EXPECT_EQ(runs.size(), 6u);
}

TEST(BaselineSearch, TieGoesToFewerParametersThenLowerIndex) {
  const auto d = blobs(120, 6, 3);
  SplitPlan plan;
  plan.repeats = 2;
  std::vector<Split> splits{make_split(d, plan, 0), make_split(d, plan, 1)};
  const nn::Topology big{{4, 16, 2}, {nn::Activation::Relu, nn::Activation::Softmax}};
  const nn::Topology small{{4, 2, 2}, {nn::Activation::Tanh, nn::Activation::Softmax}};
  nn::TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.patience = 10;
  const auto res = baseline_search(d, splits, {big, small, small}, cfg, 1);
  for (double a : res.mean_val_accuracy) ASSERT_EQ(a, 1.0);
  EXPECT_EQ(res.winner, 1u);
  EXPECT_EQ(res.records.size(), 6u);
  EXPECT_EQ(baseline_search(d, splits, {big, small, small}, cfg, 1, true).winner, 1u);
}

TEST(RunBenchmark, EndToEndDeterministicAndNaNTestRowsDoNotLeak) {
  auto d = blobs(160, 1.0, 5);
  const auto fin_path = blob_fin("bench_blob_kurtosis", 1);
  auto models = parse_models("fin:" + fin_path.string() + ",fin-reinit:" + fin_path.string() +
                             ",baseline-search,knn,linear-margin");
  for (auto& m : models) m.load_artifacts();
  const auto cfg = quick(4);
  auto a = run_benchmark(d, models, cfg);
  auto b = run_benchmark(d, models, cfg);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_EQ(a.runs.size(), 20u);
  ASSERT_TRUE(a.search);
  EXPECT_TRUE(same_histories(a, b));
  strip_timing(a);
  strip_timing(b);
  EXPECT_EQ(report_json(a), report_json(b));
  for (const auto& run : a.runs) {
    EXPECT_GE(run.accuracy, 0.0);
    EXPECT_LE(run.accuracy, 1.0);
    if (run.model_tag == "knn" || run.model_tag == "linear-margin") EXPECT_TRUE(run.history.epochs.empty());
    else EXPECT_FALSE(run.history.epochs.empty());
  }

  // With a single split, poison its test rows: training, early stopping and
  // the search must not notice.
  auto one = quick(1);
  one.search.search_splits = 1;
  auto poisoned = d;
  for (auto i : make_split(d, one.plan, 0).test)
    for (auto& v : poisoned.inputs.row(i)) v = std::nan("");
  std::vector<ModelSpec> neural;
  for (const auto& m : models)
    if (m.kind != ModelKind::Knn && m.kind != ModelKind::LinearMargin) neural.push_back(m);
  auto clean = run_benchmark(d, neural, one);
  auto dirty = run_benchmark(poisoned, neural, one);
  EXPECT_TRUE(dirty.failures.empty());
  EXPECT_TRUE(same_histories(clean, dirty));
  ASSERT_TRUE(dirty.search);
  EXPECT_EQ(clean.search->mean_val_accuracy, dirty.search->mean_val_accuracy);
  EXPECT_EQ(clean.search->winner, dirty.search->winner);
}

TEST(RunBenchmark, ThreadCountDoesNotChangeResults) {
  const auto d = blobs(120, 1.0, 6);
  const auto fin_path = blob_fin("bench_blob_threads", 2);
  auto models = parse_models("fin:" + fin_path.string() + ",knn");
  for (auto& m : models) m.load_artifacts();
  auto cfg = quick(3);
  kernels::set_threads(1);
  auto one = run_benchmark(d, models, cfg);
  kernels::set_threads(3);
  auto three = run_benchmark(d, models, cfg);
  kernels::set_threads(1);
  cfg.serial_timing = true;
  auto serial = run_benchmark(d, models, cfg);
  for (auto* r : {&one, &three, &serial}) strip_timing(*r);
  EXPECT_EQ(report_json(one), report_json(three));
  EXPECT_EQ(report_json(one), report_json(serial));
}

TEST(EmitReport, FilesAndByteIdenticalRewrites) {
  const auto d = blobs(100, 1.0, 7);
  auto cfg = quick(3);
  auto rep = run_benchmark(d, parse_models("knn,baseline-search"), cfg);
  const auto x = tmpdir("fin_emit_a"), y = tmpdir("fin_emit_b");
  emit_report(rep, x);
  emit_report(rep, y);
  for (const char* f : {"report.json", "runs.csv", "aggregates.csv", "loss_curves.csv", "fraction_accuracy.csv",
                        "stats.csv", "search.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(x / f)) << f;
    EXPECT_EQ(slurp(x / f), slurp(y / f)) << f;
  }
  const auto curves = slurp(x / "loss_curves.csv");
  EXPECT_EQ(curves.substr(0, curves.find('\n')), "epoch,model_tag,split,train_loss,val_loss,fraction");
  const auto j = slurp(x / "report.json");
  EXPECT_EQ(j.back(), '\n');
  std::filesystem::remove_all(x);
  std::filesystem::remove_all(y);
}
