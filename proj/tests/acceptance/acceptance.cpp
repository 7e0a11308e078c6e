// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: fin_acceptance [A1 A4 ...] (default: all).
// Pretrained artifacts are cached under FIN_ACCEPTANCE_CACHE.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../reference.hpp"
#include "fin/bench.hpp"
#include "fin/dataset.hpp"
#include "fin/engine.hpp"
#include "fin/features.hpp"
#include "fin/gradcheck.hpp"
#include "fin/kernels.hpp"
#include "fin/rng.hpp"
#include "fin/signal_gen.hpp"
#include "fin/stats.hpp"

namespace fs = std::filesystem;
using namespace fin;
using namespace fin::bench;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr std::size_t kPretrainSignals = 20000;
constexpr std::size_t kUnseenSignals = 3000;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

fs::path cache_dir() {
  if (const char* env = std::getenv("FIN_ACCEPTANCE_CACHE")) return env;
  return fs::temp_directory_path() / "fin_acceptance_cache";
}

nn::TrainConfig pretrain_cfg() {
  nn::TrainConfig c;
  c.learning_rate = 0.01;
  c.momentum = 0.9;
  c.batch_size = 32;
  c.max_epochs = 30;
  c.patience = 10;
  c.seed = kSeed;
  return c;
}

GenSpec corpus_spec() {
  GenSpec g;
  g.seed = kSeed;
  return g;
}

struct Pretrained {
  fs::path path;
  FinArtifact artifact;
  double seconds = 0.0;  // 0 when loaded from the cache
};

// Full-size FIN for one feature, pretrained once and cached by configuration.
const Pretrained& fin_for(FeatureId f) {
  static std::map<FeatureId, Pretrained> memo;
  if (auto it = memo.find(f); it != memo.end()) return it->second;
  const auto cfg = pretrain_cfg();
  const std::string key = corpus_spec().digest() + "-n" + std::to_string(kPretrainSignals) + "-e" +
                          std::to_string(cfg.max_epochs) + "-p" + std::to_string(cfg.patience);
  const fs::path dir = cache_dir() / key;
  fs::create_directories(dir);
  Pretrained p;
  p.path = dir / (std::string(feature_name(f)) + ".fin");
  try {
    if (fs::exists(p.path)) p.artifact = load_fin(p.path);
  } catch (const Error&) {
    p.artifact = {};
  }
  if (p.artifact.net.layers.empty()) {
    const auto start = Clock::now();
    PretrainOptions opt;
    opt.n_signals = kPretrainSignals;
    auto res = pretrain_fin(f, corpus_spec(), default_fin_topology(WaveletConfig{}.input_dim(), feature_width(f)),
                            cfg, opt);
    p.seconds = since(start);
    p.artifact = std::move(res.artifact);
    save_fin(p.artifact, p.path);
    std::cerr << "  pretrained " << feature_name(f) << " in " << fmt(p.seconds, 1) << " s, val_mae "
              << fmt(res.val_mae) << "\n";
  }
  return memo.emplace(f, std::move(p)).first->second;
}

ModelSpec fin_model(const std::string& kind, std::initializer_list<FeatureId> features) {
  std::string text = kind + ":";
  bool first = true;
  for (FeatureId f : features) {
    if (!first) text += '+';
    first = false;
    text += fin_for(f).path.string();
  }
  auto m = ModelSpec::parse(text);
  m.load_artifacts();
  return m;
}

// Report files of the protocol runs, for inspection after a failure.
void keep(const EvalReport& r, const std::string& name) { emit_report(r, cache_dir() / "reports" / name); }

BenchConfig bench_cfg(std::uint64_t seed) {
  BenchConfig c;
  c.plan.seed = derive_seed(seed, "splits");
  c.seed = seed;
  c.train = {0.01, 0.9, 32, 30, 5, 0};
  return c;
}

std::vector<RunRecord> runs_of(const EvalReport& r, const std::string& tag, double fraction) {
  std::vector<RunRecord> out;
  for (const auto& run : r.runs)
    if (run.model_tag == tag && run.fraction == fraction) out.push_back(run);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.split < b.split; });
  return out;
}

// --------------------------------------------------------------------------

Outcome a1() {
  std::ostringstream d;
  bool pass = true;
  for (FeatureId f : {FeatureId::Entropy, FeatureId::Regularity}) {
    const auto& p = fin_for(f);
    std::vector<Signal> unseen;
    unseen.reserve(kUnseenSignals);
    for (std::uint64_t i = 0; i < kUnseenSignals; ++i) unseen.push_back(generate(corpus_spec(), kPretrainSignals + i));
    const auto rep = reconstruction_report(p.artifact, unseen);
    const bool in_range = std::all_of(rep.errors.begin(), rep.errors.end(), [](double e) { return e >= 0 && e <= 1; });
    const bool time_ok = p.seconds <= 15 * 60;
    const bool ok = rep.errors.size() == kUnseenSignals && rep.mean <= 0.05 && in_range && time_ok;
    pass = pass && ok;
    d << feature_name(f) << " mae=" << fmt(rep.mean) << " p95=" << fmt(rep.p95) << " max=" << fmt(rep.max)
      << " n=" << rep.errors.size() << " pretrain_s=" << (p.seconds > 0 ? fmt(p.seconds, 1) : "cached") << "; ";
  }
  return {pass, d.str()};
}

Outcome a2() {
  nn::GradcheckConfig cfg;
  cfg.n_cases = 20;
  cfg.step = 1e-5;
  cfg.tolerance = 1e-4;
  cfg.seed = kSeed;
  const auto start = Clock::now();
  const auto ok = nn::run_gradcheck(cfg);
  cfg.inject_fault = true;
  const auto bad = nn::run_gradcheck(cfg);
  const double secs = since(start);
  return {ok.passed && ok.max_rel_error <= 1e-4 && !bad.passed && secs <= 60,
          "max_rel_error=" + fmt(ok.max_rel_error, 10) + " checked=" + std::to_string(ok.n_checked) +
              " fault_error=" + std::to_string(bad.max_rel_error) + " seconds=" + fmt(secs, 2)};
}

Outcome a3() {
  const auto start = Clock::now();
  GenSpec g = corpus_spec();
  g.seed = derive_seed(kSeed, "oracle-equivalence");
  double e_ent = 0, e_kurt = 0, e_skew = 0, e_reg = 0, e_f0 = 0, e_mfcc = 0;
  int f0_presence_mismatch = 0, f0_found = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto s = generate(g, i);
    const std::vector<double> x(s.samples().begin(), s.samples().end());
    e_ent = std::max(e_ent, std::abs(shannon_entropy(s) - ref::entropy(x, 16)));
    e_kurt = std::max(e_kurt, std::abs(kurtosis(s) - ref::kurtosis(x)));
    e_skew = std::max(e_skew, std::abs(skewness(s) - ref::skewness(x)));
    e_reg = std::max(e_reg, std::abs(regularity(s) - ref::regularity(x)));
    const auto f = fundamental_frequency(s);
    const auto b = ref::f0_peak(x, s.sample_rate(), 0.3, 1.0);
    if (f.has_value() != b.has_value()) {
      ++f0_presence_mismatch;
    } else if (f) {
      ++f0_found;
      e_f0 = std::max(e_f0, std::abs(*f - *b));
    }
    const auto m = mfcc(s);
    const auto rm = ref::mfcc(x, s.sample_rate());
    for (std::size_t c = 0; c < m.size(); ++c) e_mfcc = std::max(e_mfcc, std::abs(m[c] - rm[c]));
  }
  const double secs = since(start);
  const bool pass = e_ent <= 1e-9 && e_kurt <= 1e-9 && e_skew <= 1e-9 && e_reg <= 1e-9 && f0_presence_mismatch == 0 &&
                    e_f0 <= 0.5 && e_mfcc <= 1e-6 && secs <= 60;
  std::ostringstream d;
  d << "entropy=" << e_ent << " kurtosis=" << e_kurt << " skewness=" << e_skew << " regularity=" << e_reg
    << " f0_hz=" << e_f0 << " (periodic " << f0_found << "/100, mismatch " << f0_presence_mismatch << ")"
    << " mfcc=" << e_mfcc << " seconds=" << fmt(secs, 2);
  return {pass, d.str()};
}

// Criteria 4, 5 and 10 share one fraction sweep of FIN vs same-topology random init.
const EvalReport& scarcity_report() {
  static std::optional<EvalReport> rep;
  if (rep) return *rep;
  TaskSpec t;
  t.kind = TaskKind::FeatureThreshold;
  t.features = {FeatureId::Entropy};
  t.n_items = 2000;
  t.label_noise = 0.05;
  t.seed = derive_seed(kSeed, "scarcity-task");
  const auto data = make_task(t);
  auto cfg = bench_cfg(derive_seed(kSeed, "scarcity"));
  cfg.plan.mode = SplitMode::FractionSweep;
  cfg.plan.repeats = 10;
  cfg.plan.fractions = {0.2, 0.4};
  const std::vector<ModelSpec> models{fin_model("fin", {FeatureId::Entropy}),
                                      fin_model("fin-reinit", {FeatureId::Entropy})};
  rep = run_benchmark(data, models, cfg);
  keep(*rep, "scarcity");
  return *rep;
}

Outcome a4() {
  const auto& rep = scarcity_report();
  std::ostringstream d;
  bool pass = rep.failures.empty();
  for (double f : {0.2, 0.4}) {
    const auto fin = runs_of(rep, "fin:entropy", f), base = runs_of(rep, "fin-reinit:entropy", f);
    if (fin.size() != 10 || base.size() != 10) return {false, "missing runs at fraction " + fmt(f, 1)};
    int wins = 0, losses = 0;
    double mf = 0, mb = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      wins += fin[k].accuracy > base[k].accuracy;
      losses += fin[k].accuracy < base[k].accuracy;
      mf += fin[k].accuracy / 10;
      mb += base[k].accuracy / 10;
    }
    const double p = stats::sign_test(wins, losses).p_value;
    pass = pass && mf > mb && p < 0.05;
    d << "f=" << fmt(f, 1) << " fin=" << fmt(mf) << " reinit=" << fmt(mb) << " wins=" << wins << "/" << losses
      << " sign_p=" << fmt(p) << "; ";
  }
  return {pass, d.str()};
}

Outcome a5() {
  const auto& rep = scarcity_report();
  std::ostringstream d;
  bool pass = rep.failures.empty();
  for (double f : {0.2, 0.4}) {
    const auto fin = runs_of(rep, "fin:entropy", f), base = runs_of(rep, "fin-reinit:entropy", f);
    int lower = 0;
    for (std::size_t k = 0; k < std::min(fin.size(), base.size()); ++k)
      lower += fin[k].history.epochs.at(0).val_loss < base[k].history.epochs.at(0).val_loss;
    pass = pass && fin.size() == 10 && lower >= 8;
    d << "f=" << fmt(f, 1) << " first-epoch val loss lower in " << lower << "/10; ";
  }
  return {pass, d.str()};
}

Outcome a6() {
  // Sanity check of the Levene implementation on a 4x variance ratio.
  Rng rng(derive_seed(kSeed, "levene-sanity"));
  std::vector<std::vector<double>> groups(2);
  for (int i = 0; i < 30; ++i) {
    groups[0].push_back(0.8 + 0.01 * rng.normal());
    groups[1].push_back(0.8 + 0.02 * rng.normal());
  }
  const auto lev = stats::levene(groups);
  const auto lev_ref = ref::levene(groups);
  const bool levene_ok =
      lev.p_value < 0.05 && std::abs(lev.statistic - lev_ref.stat) <= 1e-9 && std::abs(lev.p_value - lev_ref.p) <= 1e-9;

  TaskSpec t;
  t.kind = TaskKind::FeatureThreshold;
  t.features = {FeatureId::Entropy};
  t.n_items = 1000;
  t.label_noise = 0.05;
  t.seed = derive_seed(kSeed, "variance-task");
  const auto data = make_task(t);
  auto cfg = bench_cfg(derive_seed(kSeed, "variance"));
  cfg.plan.mode = SplitMode::RepeatedRandom;
  cfg.plan.repeats = 30;
  cfg.search.n_candidates = 10;
  const std::vector<ModelSpec> models{fin_model("fin", {FeatureId::Entropy}), ModelSpec::parse("baseline-search")};
  const auto rep = run_benchmark(data, models, cfg);
  keep(rep, "variance");
  const auto fin = accuracies(rep.runs, "fin:entropy", 1.0), base = accuracies(rep.runs, "baseline-search", 1.0);
  const double sf = stats::stddev(fin), sb = stats::stddev(base);
  std::ostringstream d;
  d << "fin mean=" << fmt(stats::mean(fin)) << " sd=" << fmt(sf) << " baseline mean=" << fmt(stats::mean(base))
    << " sd=" << fmt(sb) << " runs=" << fin.size() << "/" << base.size();
  if (rep.search) d << " winner=" << rep.search->candidates[rep.search->winner].to_string();
  d << "; levene sanity W=" << fmt(lev.statistic) << " p=" << fmt(lev.p_value, 6)
    << " ref_dW=" << std::abs(lev.statistic - lev_ref.stat);
  return {levene_ok && rep.failures.empty() && fin.size() == 30 && base.size() == 30 && sf <= sb, d.str()};
}

Outcome a7() {
  TaskSpec t;
  t.kind = TaskKind::MultiFeature;
  t.features = {FeatureId::Entropy, FeatureId::Kurtosis, FeatureId::Regularity};
  t.n_channels = 4;
  t.n_items = 1000;
  t.label_noise = 0.05;
  t.seed = derive_seed(kSeed, "ensemble-task");
  const auto data = make_task(t);
  auto cfg = bench_cfg(derive_seed(kSeed, "ensemble"));
  cfg.plan.mode = SplitMode::RepeatedRandom;
  cfg.plan.repeats = 20;
  const std::vector<ModelSpec> models{
      fin_model("fin-ensemble", {FeatureId::Entropy, FeatureId::Kurtosis, FeatureId::Regularity}),
      fin_model("fin", {FeatureId::Entropy}), fin_model("fin", {FeatureId::Kurtosis}),
      fin_model("fin", {FeatureId::Regularity}), fin_model("fin", {FeatureId::FundamentalFrequency})};
  const std::string ens = models[0].tag();
  const std::vector<Comparison> cmp{{ens, "fin:entropy"}, {ens, "fin:kurtosis"}, {ens, "fin:regularity"}};
  const auto rep = run_benchmark(data, models, cfg, cmp);
  keep(rep, "ensemble");
  const double me = stats::mean(accuracies(rep.runs, ens, 1.0));
  std::ostringstream d;
  d << "ensemble=" << fmt(me) << " sd=" << fmt(stats::stddev(accuracies(rep.runs, ens, 1.0)));
  bool pass = rep.failures.empty() && accuracies(rep.runs, ens, 1.0).size() == 20;
  for (const auto& s : rep.stats) {
    if (s.test != "welch_greater") continue;
    const double ms = stats::mean(accuracies(rep.runs, s.group_b, 1.0));
    pass = pass && me >= ms && s.corrected_p < 0.05;
    d << " " << s.group_b << "=" << fmt(ms) << " sd=" << fmt(stats::stddev(accuracies(rep.runs, s.group_b, 1.0)))
      << " (p_corr=" << fmt(s.corrected_p, 6) << ")";
  }
  const double mf0 = stats::mean(accuracies(rep.runs, "fin:f0", 1.0));
  pass = pass && mf0 < me;
  d << " fin:f0=" << fmt(mf0);
  return {pass, d.str()};
}

Outcome a8() {
  Rng rng(derive_seed(kSeed, "mechanics"));
  const FeatureId pool[] = {FeatureId::Entropy, FeatureId::Kurtosis, FeatureId::Mfcc, FeatureId::Regularity};
  int failures = 0;
  std::ostringstream d;
  const fs::path dir = fs::temp_directory_path() / "fin_acceptance_a8";
  fs::create_directories(dir);
  for (int c = 0; c < 10; ++c) {
    const std::size_t in = 4 + rng.below(60);
    const std::size_t n_branches = 1 + rng.below(3), n_channels = 1 + rng.below(4), n_classes = 2 + rng.below(4);
    std::vector<FinArtifact> arts;
    std::size_t width_sum = 0;
    for (std::size_t b = 0; b < n_branches; ++b) {
      FinArtifact a;
      a.feature = pool[rng.below(4)];
      const std::size_t w = feature_width(a.feature);
      nn::Topology topo{{in}, {}};
      for (std::size_t h = 0, n = 1 + rng.below(3); h < n; ++h) {
        topo.layer_sizes.push_back(2 + rng.below(30));
        topo.activations.push_back(rng.bernoulli(0.5) ? nn::Activation::Relu : nn::Activation::Tanh);
      }
      topo.layer_sizes.push_back(w);
      topo.activations.push_back(nn::Activation::Linear);
      a.net = nn::init_random(topo, rng.next());
      for (auto& L : a.net.layers) {
        for (double& v : L.weights) v = static_cast<float>(v);
        for (double& v : L.biases) v = static_cast<float>(rng.uniform(-1, 1));
      }
      for (std::size_t k = 0; k < w; ++k) {
        a.norm_lo.push_back(rng.uniform(-3, 0));
        a.norm_hi.push_back(a.norm_lo.back() + rng.uniform(0.5, 4));
      }
      a.gen_spec_digest = GenSpec{}.digest();
      a.history_summary = {rng.uniform(), 1 + static_cast<int>(rng.below(30))};
      width_sum += w;
      arts.push_back(std::move(a));
    }
    // attach_head keeps every layer but the last.
    const auto head = attach_head(arts[0], n_classes, rng.next());
    for (std::size_t l = 0; l + 1 < arts[0].net.layers.size(); ++l) failures += !(head.layers[l] == arts[0].net.layers[l]);
    // build_ensemble keeps every branch layer.
    const auto ens = build_ensemble(arts, n_channels, n_classes, rng.next());
    for (std::size_t b = 0; b < n_branches; ++b) failures += !(ens.branches[b] == arts[b].net);
    failures += ens.head_input_dim() != n_channels * width_sum;
    failures += ens.head.layers.back().in != n_channels * width_sum;
    // save -> load -> save is byte-identical.
    const auto p1 = dir / ("a" + std::to_string(c) + ".fin"), p2 = dir / ("b" + std::to_string(c) + ".fin");
    save_fin(arts[0], p1);
    const auto loaded = load_fin(p1);
    save_fin(loaded, p2);
    failures += !(loaded == arts[0]);
    failures += serialize_fin(loaded) != serialize_fin(arts[0]);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {}), b2((std::istreambuf_iterator<char>(f2)), {});
    failures += b1.empty() || b1 != b2;
  }
  fs::remove_all(dir);
  // The full-size pretrained artifact too.
  const auto& ent = fin_for(FeatureId::Entropy).artifact;
  failures += !(parse_fin(serialize_fin(ent)) == ent);
  d << "10 random configurations, " << failures << " mismatches";
  return {failures == 0, d.str()};
}

void strip_timing(EvalReport& r) {
  for (auto& run : r.runs) {
    run.train_seconds = 0;
    for (auto& e : run.history.epochs) e.wall_seconds = 0;
  }
  for (auto* list : {&r.aggregates, &r.fraction_aggregates})
    for (auto& a : *list) a.seconds_mean = a.seconds_std = 0;
}

bool histories_finite(const EvalReport& r) {
  for (const auto& run : r.runs)
    for (const auto& e : run.history.epochs)
      if (!std::isfinite(e.train_loss) || !std::isfinite(e.val_loss)) return false;
  return true;
}

Outcome a9() {
  TaskSpec t;
  t.kind = TaskKind::FeatureThreshold;
  t.features = {FeatureId::Entropy};
  t.n_items = 300;
  t.seed = derive_seed(kSeed, "hygiene-task");
  const auto data = make_task(t);
  auto cfg = bench_cfg(derive_seed(kSeed, "hygiene"));
  cfg.train.max_epochs = 8;
  cfg.train.patience = 3;
  cfg.search.n_candidates = 3;
  cfg.search.search_splits = 1;
  cfg.search.max_layers = 3;
  cfg.search.widths = {16, 32};
  std::vector<ModelSpec> models{fin_model("fin", {FeatureId::Entropy}), fin_model("fin-reinit", {FeatureId::Entropy}),
                                ModelSpec::parse("baseline-search")};

  // Poisoning: one split, its test rows replaced by NaN.
  auto one = cfg;
  one.plan.repeats = 1;
  auto poisoned = data;
  for (auto i : make_split(data, one.plan, 0).test)
    for (auto& v : poisoned.inputs.row(i)) v = std::nan("");
  auto clean = run_benchmark(data, models, one);
  auto dirty = run_benchmark(poisoned, models, one);
  bool poison_ok = dirty.failures.empty() && histories_finite(dirty) && dirty.search && clean.search &&
                   dirty.search->mean_val_accuracy == clean.search->mean_val_accuracy &&
                   dirty.search->winner == clean.search->winner && dirty.runs.size() == clean.runs.size();
  for (std::size_t i = 0; poison_ok && i < clean.runs.size(); ++i) {
    const auto &a = clean.runs[i].history, &b = dirty.runs[i].history;
    poison_ok = a.best_epoch == b.best_epoch && a.epochs.size() == b.epochs.size();
    for (std::size_t e = 0; poison_ok && e < a.epochs.size(); ++e)
      poison_ok = a.epochs[e].train_loss == b.epochs[e].train_loss && a.epochs[e].val_loss == b.epochs[e].val_loss;
  }

  // Reproducibility across worker counts and scheduling.
  cfg.plan.repeats = 3;
  std::vector<std::string> reports;
  for (int threads : {1, 2, 4}) {
    kernels::set_threads(threads);
    auto r = run_benchmark(data, models, cfg);
    strip_timing(r);
    reports.push_back(report_json(r));
  }
  cfg.serial_timing = true;
  auto serial = run_benchmark(data, models, cfg);
  strip_timing(serial);
  reports.push_back(report_json(serial));
  kernels::set_threads(1);
  const bool repro = std::all_of(reports.begin(), reports.end(), [&](const auto& r) { return r == reports[0]; });
  return {poison_ok && repro, std::string("nan-poisoned split leaves training and selection unchanged: ") +
                                  (poison_ok ? "yes" : "no") + "; identical reports for 1/2/4 threads and serial: " +
                                  (repro ? "yes" : "no")};
}

Outcome a10() {
  const auto& rep = scarcity_report();  // establishes warm caches; timing comes from a serial rerun below
  (void)rep;
  TaskSpec t;
  t.kind = TaskKind::FeatureThreshold;
  t.features = {FeatureId::Entropy};
  t.n_items = 1000;
  t.seed = derive_seed(kSeed, "timing-task");
  const auto data = make_task(t);
  auto cfg = bench_cfg(derive_seed(kSeed, "timing"));
  cfg.plan.repeats = 3;
  cfg.train.max_epochs = 5;
  cfg.train.patience = 5;
  cfg.serial_timing = true;
  const std::vector<ModelSpec> models{fin_model("fin", {FeatureId::Entropy}),
                                      fin_model("fin-reinit", {FeatureId::Entropy})};
  const auto r = run_benchmark(data, models, cfg);
  auto per_epoch = [&](const std::string& tag) {
    double s = 0;
    int n = 0;
    for (const auto& run : r.runs)
      if (run.model_tag == tag)
        for (const auto& e : run.history.epochs) s += e.wall_seconds, ++n;
    return n ? s / n : 0.0;
  };
  const double f = per_epoch("fin:entropy"), b = per_epoch("fin-reinit:entropy");
  const double ratio = b > 0 ? f / b : INFINITY;
  return {r.failures.empty() && ratio <= 2.0 && ratio >= 0.5,
          "fin " + fmt(f, 3) + " s/epoch, reinit " + fmt(b, 3) + " s/epoch, ratio " + fmt(ratio, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  std::set<std::string> wanted(argv + 1, argv + argc);
  kernels::set_threads(1);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << name << " " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(since(start), 1) << " s) " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
