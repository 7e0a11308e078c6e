#include "fin/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <stdexcept>
#include <variant>

#include "fin/csv.hpp"
#include "fin/errors.hpp"
#include "fin/rng.hpp"

namespace fin::bench {

namespace {

using nlohmann::json;
using Model = std::variant<nn::DenseNet, EnsembleNet>;
using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point start) {
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::uint64_t fraction_bits(double f) { return std::bit_cast<std::uint64_t>(f); }

// Replaces every layer except the classification head with a fresh draw.
void reinitialize_body(nn::DenseNet& net, std::uint64_t seed, std::size_t keep_last) {
  for (std::size_t l = 0; l + keep_last < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    layer = nn::init_layer(layer.in, layer.out, layer.activation, derive_seed(seed, "layer", l));
  }
}

Model initial_model(const ModelSpec& spec, const LabeledDataset& data, int k, std::uint64_t seed,
                    const nn::Topology* baseline) {
  const auto head_seed = derive_seed(seed, "head", static_cast<std::uint64_t>(k));
  const auto reinit_seed = derive_seed(seed, "reinit", static_cast<std::uint64_t>(k));
  switch (spec.kind) {
    case ModelKind::Fin:
    case ModelKind::FinReinit:
    case ModelKind::FinEnsemble: {
      const bool single = spec.kind != ModelKind::FinEnsemble && data.n_channels == 1;
      if (single) {
        nn::DenseNet net = attach_head(spec.artifacts.at(0), data.n_classes, head_seed);
        if (spec.kind == ModelKind::FinReinit) reinitialize_body(net, reinit_seed, 1);
        return net;
      }
      EnsembleNet e = build_ensemble(spec.artifacts, data.n_channels, data.n_classes, head_seed);
      if (spec.kind == ModelKind::FinReinit)
        for (std::size_t b = 0; b < e.branches.size(); ++b)
          reinitialize_body(e.branches[b], derive_seed(reinit_seed, "branch", b), 0);
      return e;
    }
    case ModelKind::BaselineSearch:
      if (!baseline) throw std::logic_error("baseline model requested before the search ran");
      return nn::init_random(*baseline, derive_seed(seed, "baseline", static_cast<std::uint64_t>(k)));
    case ModelKind::Knn:
    case ModelKind::LinearMargin:
      break;
  }
  throw std::logic_error("not a neural model");
}

struct Task {
  std::size_t model = 0;
  int split = 0;
  double fraction = 1.0;
};

using TaskFn = std::function<RunRecord(const Task&, const Split&)>;

// Runs every (split, fraction, model) task, concurrently unless serial.
std::vector<RunRecord> execute(const LabeledDataset& data, const SplitPlan& plan, const std::vector<Split>& splits,
                               std::size_t n_models, const std::vector<std::string>& tags, const TaskFn& fn,
                               bool serial, std::vector<RunFailure>* failures) {
  std::vector<Task> tasks;
  for (int k = 0; k < static_cast<int>(splits.size()); ++k)
    for (double f : plan.fractions)
      for (std::size_t m = 0; m < n_models; ++m) tasks.push_back({m, k, f});

  // Subsamples depend only on (split, fraction); resolve them up front so a
  // SplitError surfaces before any training.
  std::map<std::pair<int, std::uint64_t>, Split> views;
  for (int k = 0; k < static_cast<int>(splits.size()); ++k)
    for (double f : plan.fractions) {
      Split s = splits[static_cast<std::size_t>(k)];
      s.train = subsample_stratified(data, s.train, f, plan.seed, k);
      views.emplace(std::make_pair(k, fraction_bits(f)), std::move(s));
    }

  std::vector<std::optional<RunRecord>> results(tasks.size());
  std::vector<std::optional<RunFailure>> failed(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) if (!serial)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    RunFailure fail{tags[t.model], t.split, t.fraction, false, {}};
    try {
      results[static_cast<std::size_t>(i)] = fn(t, views.at({t.split, fraction_bits(t.fraction)}));
    } catch (const DivergedError& e) {
      fail.diverged = true;
      fail.message = e.what();
      failed[static_cast<std::size_t>(i)] = fail;
    } catch (const std::exception& e) {
      fail.message = e.what();
      failed[static_cast<std::size_t>(i)] = fail;
    }
  }
  std::vector<RunRecord> runs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (results[i]) runs.push_back(std::move(*results[i]));
    if (failed[i] && failures) failures->push_back(*failed[i]);
  }
  return runs;
}

std::string topology_cell(const nn::Topology& t) {
  std::string s = t.to_string();
  std::replace(s.begin(), s.end(), ',', '-');
  return s;
}

json history_json(const nn::TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"wall_seconds", e.wall_seconds}});
  return {{"epochs", epochs}, {"stopped_epoch", h.stopped_epoch}, {"best_epoch", h.best_epoch}};
}

json aggregate_json(const Aggregate& a, bool with_fraction) {
  json j = {{"model_tag", a.model_tag},         {"n_runs", a.n_runs},
            {"accuracy_mean", a.accuracy_mean}, {"accuracy_std", a.accuracy_std},
            {"seconds_mean", a.seconds_mean},   {"seconds_std", a.seconds_std}};
  if (with_fraction) j["fraction"] = a.fraction;
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

Aggregate summarize(const std::string& tag, double fraction, const std::vector<const RunRecord*>& rows) {
  std::vector<double> acc, sec;
  for (const auto* r : rows) {
    acc.push_back(r->accuracy);
    sec.push_back(r->train_seconds);
  }
  return {tag, fraction, rows.size(), stats::mean(acc), stats::stddev(acc), stats::mean(sec), stats::stddev(sec)};
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text) {
  ModelSpec m;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  auto need_arg = [&](bool wanted) {
    if (wanted && arg.empty()) throw std::invalid_argument("model '" + text + "' needs a .fin path");
    if (!wanted && colon != std::string::npos) throw std::invalid_argument("model '" + kind + "' takes no argument");
  };
  if (kind == "fin" || kind == "fin-reinit") {
    need_arg(true);
    m.kind = kind == "fin" ? ModelKind::Fin : ModelKind::FinReinit;
    m.paths = {arg};
  } else if (kind == "fin-ensemble") {
    need_arg(true);
    m.kind = ModelKind::FinEnsemble;
    std::size_t start = 0;
    while (start <= arg.size()) {
      const auto end = std::min(arg.find('+', start), arg.size());
      if (end == start) throw std::invalid_argument("empty path in '" + text + "'");
      m.paths.emplace_back(arg.substr(start, end - start));
      start = end + 1;
    }
  } else if (kind == "baseline-search") {
    need_arg(false);
    m.kind = ModelKind::BaselineSearch;
  } else if (kind == "knn") {
    need_arg(false);
    m.kind = ModelKind::Knn;
  } else if (kind == "linear-margin") {
    need_arg(false);
    m.kind = ModelKind::LinearMargin;
  } else {
    throw std::invalid_argument("unknown model '" + text + "'");
  }
  return m;
}

std::string ModelSpec::tag() const {
  std::string base;
  switch (kind) {
    case ModelKind::Fin: base = "fin"; break;
    case ModelKind::FinReinit: base = "fin-reinit"; break;
    case ModelKind::FinEnsemble: base = "fin-ensemble"; break;
    case ModelKind::BaselineSearch: return "baseline-search";
    case ModelKind::Knn: return "knn";
    case ModelKind::LinearMargin: return "linear-margin";
  }
  base += ':';
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (i) base += '+';
    base += paths[i].stem().string();
  }
  return base;
}

void ModelSpec::load_artifacts() {
  artifacts.clear();
  for (const auto& p : paths) artifacts.push_back(load_fin(p));
}

std::vector<ModelSpec> parse_models(const std::string& list) {
  std::vector<ModelSpec> models;
  std::set<std::string> tags;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    const std::string item = list.substr(start, end - start);
    if (item.empty()) throw std::invalid_argument("empty entry in model list");
    models.push_back(ModelSpec::parse(item));
    if (!tags.insert(models.back().tag()).second) throw std::invalid_argument("duplicate model '" + item + "'");
    start = end + 1;
  }
  return models;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw ShapeError("prediction and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<nn::Topology> sample_topologies(std::size_t input_dim, std::size_t n_classes, const SearchConfig& cfg,
                                            std::uint64_t seed) {
  if (cfg.min_layers < 1 || cfg.max_layers < cfg.min_layers || cfg.widths.empty())
    throw std::invalid_argument("invalid topology search space");
  Rng rng(derive_seed(seed, "topologies"));
  std::vector<nn::Topology> out;
  for (std::size_t c = 0; c < cfg.n_candidates; ++c) {
    const auto span = static_cast<std::uint64_t>(cfg.max_layers - cfg.min_layers + 1);
    const auto n_layers = static_cast<std::size_t>(cfg.min_layers) + rng.below(span);
    nn::Topology t;
    t.layer_sizes.push_back(input_dim);
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      t.layer_sizes.push_back(cfg.widths[rng.below(cfg.widths.size())]);
      t.activations.push_back(rng.bernoulli(0.5) ? nn::Activation::Relu : nn::Activation::Tanh);
    }
    t.layer_sizes.push_back(n_classes);
    t.activations.push_back(nn::Activation::Softmax);
    out.push_back(std::move(t));
  }
  return out;
}

SearchResult baseline_search(const LabeledDataset& data, const std::vector<Split>& splits,
                             const std::vector<nn::Topology>& candidates, const nn::TrainConfig& cfg,
                             std::uint64_t seed, bool serial) {
  if (candidates.empty()) throw std::invalid_argument("baseline search needs at least one candidate");
  if (splits.empty()) throw std::invalid_argument("baseline search needs at least one split");
  for (const auto& t : candidates) {
    t.validate();
    if (t.input_dim() != data.input_dim() || t.output_dim() != data.n_classes)
      throw ShapeError("candidate " + t.to_string() + " does not fit the task");
  }
  SearchResult result;
  result.candidates = candidates;
  const std::size_t n_splits = splits.size();
  result.records.resize(candidates.size() * n_splits);
  const auto n = static_cast<std::ptrdiff_t>(result.records.size());
#pragma omp parallel for schedule(dynamic, 1) if (!serial)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) / n_splits, k = static_cast<std::size_t>(i) % n_splits;
    const Split& s = splits[k];
    SearchRecord& rec = result.records[static_cast<std::size_t>(i)];
    rec.candidate = c;
    rec.topology = candidates[c].to_string();
    rec.n_params = nn::count_params(candidates[c]);
    rec.split = static_cast<int>(k);
    try {
      nn::Dataset tr{data.inputs.gather(s.train), data.one_hot(s.train)};
      nn::Dataset va{data.inputs.gather(s.val), data.one_hot(s.val)};
      nn::TrainConfig run_cfg = cfg;
      run_cfg.seed = derive_seed(seed, "search-train", k);
      auto trained = fine_tune(nn::init_random(candidates[c], derive_seed(seed, "search-init", c, k)), tr, va, run_cfg);
      rec.val_accuracy = accuracy(nn::predict_classes(trained.model, va.inputs), data.labels_at(s.val));
    } catch (const DivergedError&) {
      rec.diverged = true;
      rec.val_accuracy = 0.0;
    }
  }
  result.mean_val_accuracy.assign(candidates.size(), 0.0);
  for (const auto& r : result.records) result.mean_val_accuracy[r.candidate] += r.val_accuracy / static_cast<double>(n_splits);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double a = result.mean_val_accuracy[c], b = result.mean_val_accuracy[result.winner];
    if (a > b || (a == b && nn::count_params(candidates[c]) < nn::count_params(candidates[result.winner])))
      result.winner = c;
  }
  return result;
}

int split_count(const LabeledDataset& data, const SplitPlan& plan) {
  if (plan.mode == SplitMode::LeaveSubjectsOut) {
    const auto s = static_cast<int>(subjects_of(data).size());
    if (s < 3) throw SplitError("leave-subjects-out needs at least 3 subjects");
    return std::min(plan.repeats, s * (s - 1));
  }
  return plan.repeats;
}

Split make_split(const LabeledDataset& data, const SplitPlan& plan, int k) {
  if (plan.mode != SplitMode::LeaveSubjectsOut) return split_repeated(data, plan, k);
  // Pair order: offset d = 1, 2, ...; within an offset every subject is the
  // test subject once, with the subject d places later for validation.
  const auto ids = subjects_of(data);
  const int s = static_cast<int>(ids.size());
  if (k < 0 || k >= split_count(data, plan)) throw std::invalid_argument("split index out of range");
  const int d = 1 + k / s, t = k % s;
  return split_leave_subjects_out(data, ids[static_cast<std::size_t>((t + d) % s)], ids[static_cast<std::size_t>(t)]);
}

std::vector<RunRecord> fraction_sweep(const LabeledDataset& data, const SplitPlan& plan, const Runner& runner,
                                      bool serial, std::vector<RunFailure>* failures) {
  plan.validate();
  std::vector<Split> splits;
  for (int k = 0; k < split_count(data, plan); ++k) splits.push_back(make_split(data, plan, k));
  return execute(
      data, plan, splits, 1, {"runner"}, [&](const Task& t, const Split& s) { return runner(s, t.split, t.fraction); },
      serial, failures);
}

EvalReport run_benchmark(const LabeledDataset& data, const std::vector<ModelSpec>& models, const BenchConfig& cfg,
                         const std::vector<Comparison>& comparisons) {
  data.validate();
  cfg.plan.validate();
  cfg.train.validate();
  if (models.empty()) throw std::invalid_argument("no models to benchmark");
  std::vector<std::string> tags;
  for (const auto& m : models) {
    tags.push_back(m.tag());
    if (m.artifacts.size() != m.paths.size()) throw std::invalid_argument("artifacts of " + tags.back() + " not loaded");
    for (const auto& a : m.artifacts)
      if (a.net.input_dim() != data.tf_dim)
        throw ShapeError(tags.back() + " expects " + std::to_string(a.net.input_dim()) + " inputs per channel, task has " +
                         std::to_string(data.tf_dim));
  }
  for (const auto& c : comparisons)
    for (const auto& g : {c.group_a, c.group_b})
      if (std::find(tags.begin(), tags.end(), g) == tags.end())
        throw std::invalid_argument("comparison names unknown model '" + g + "'");

  EvalReport report;
  std::vector<Split> splits;
  for (int k = 0; k < split_count(data, cfg.plan); ++k) splits.push_back(make_split(data, cfg.plan, k));

  std::optional<nn::Topology> baseline;
  if (std::any_of(models.begin(), models.end(), [](const ModelSpec& m) { return m.kind == ModelKind::BaselineSearch; })) {
    const auto n_search = static_cast<std::size_t>(std::clamp(cfg.search.search_splits, 1, static_cast<int>(splits.size())));
    const std::vector<Split> search_splits(splits.begin(), splits.begin() + static_cast<std::ptrdiff_t>(n_search));
    report.search = baseline_search(data, search_splits,
                                    sample_topologies(data.input_dim(), data.n_classes, cfg.search, cfg.seed), cfg.train,
                                    derive_seed(cfg.seed, "search"), cfg.serial_timing);
    baseline = report.search->candidates[report.search->winner];
  }

  auto run = [&](const Task& t, const Split& s) {
    const ModelSpec& spec = models[t.model];
    RunRecord rec;
    rec.model_tag = tags[t.model];
    rec.split = t.split;
    rec.fraction = t.fraction;
    rec.n_train = s.train.size();
    const auto k = static_cast<std::uint64_t>(t.split);
    const Matrix train_x = data.inputs.gather(s.train);
    const auto train_y = data.labels_at(s.train);
    std::vector<int> predicted;
    if (spec.kind == ModelKind::Knn || spec.kind == ModelKind::LinearMargin) {
      const auto start = clock::now();
      if (spec.kind == ModelKind::Knn) {
        const Matrix test_x = data.inputs.gather(s.test);
        rec.train_seconds = 0.0;
        predicted = knn_classify(train_x, train_y, test_x, std::min(cfg.knn_k, train_x.rows));
      } else {
        LinearMarginConfig mc = cfg.margin;
        mc.seed = derive_seed(cfg.seed, "margin", k);
        const auto model = fit_linear_margin(train_x, train_y, data.n_classes, mc);
        rec.train_seconds = seconds_since(start);
        predicted = model.predict(data.inputs.gather(s.test));
      }
    } else {
      Model model = initial_model(spec, data, t.split, cfg.seed, baseline ? &*baseline : nullptr);
      nn::Dataset tr{train_x, data.one_hot(s.train)};
      nn::Dataset va{data.inputs.gather(s.val), data.one_hot(s.val)};
      nn::TrainConfig run_cfg = cfg.train;
      run_cfg.seed = derive_seed(cfg.seed, "train", k);
      const auto start = clock::now();
      std::visit(
          [&](auto& m) {
            auto trained = fine_tune(std::move(m), tr, va, run_cfg);
            rec.train_seconds = seconds_since(start);
            rec.history = std::move(trained.history);
            predicted = predict_classes(trained.model, data.inputs.gather(s.test));
          },
          model);
    }
    rec.accuracy = accuracy(predicted, data.labels_at(s.test));
    return rec;
  };
  report.runs = execute(data, cfg.plan, splits, models.size(), tags, run, cfg.serial_timing, &report.failures);

  report.aggregates = aggregate_by_model(report.runs);
  report.fraction_aggregates = aggregate_by_fraction(report.runs);
  std::vector<Comparison> pairs = comparisons;
  if (pairs.empty())
    for (std::size_t a = 0; a < tags.size(); ++a)
      for (std::size_t b = a + 1; b < tags.size(); ++b) pairs.push_back({tags[a], tags[b]});
  report.stats = compare_runs(report.runs, pairs);
  return report;
}

std::vector<Aggregate> aggregate_by_model(const std::vector<RunRecord>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : runs) {
    if (!groups.count(r.model_tag)) order.push_back(r.model_tag);
    groups[r.model_tag].push_back(&r);
  }
  std::vector<Aggregate> out;
  for (const auto& tag : order) out.push_back(summarize(tag, 0.0, groups[tag]));
  return out;
}

std::vector<Aggregate> aggregate_by_fraction(const std::vector<RunRecord>& runs) {
  std::vector<std::string> order;
  std::set<double> fractions;
  std::map<std::pair<double, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : runs) {
    if (std::find(order.begin(), order.end(), r.model_tag) == order.end()) order.push_back(r.model_tag);
    fractions.insert(r.fraction);
    groups[{r.fraction, r.model_tag}].push_back(&r);
  }
  std::vector<Aggregate> out;
  for (double f : fractions)
    for (const auto& tag : order) {
      const auto it = groups.find({f, tag});
      if (it != groups.end()) out.push_back(summarize(tag, f, it->second));
    }
  return out;
}

std::vector<double> accuracies(const std::vector<RunRecord>& runs, const std::string& tag, double fraction) {
  std::vector<const RunRecord*> rows;
  for (const auto& r : runs)
    if (r.model_tag == tag && r.fraction == fraction) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const RunRecord* a, const RunRecord* b) { return a->split < b->split; });
  std::vector<double> out;
  for (const auto* r : rows) out.push_back(r->accuracy);
  return out;
}

std::vector<StatRecord> compare_runs(const std::vector<RunRecord>& runs, const std::vector<Comparison>& comparisons,
                                     double alpha) {
  std::set<double> fractions;
  for (const auto& r : runs) fractions.insert(r.fraction);
  std::vector<StatRecord> welch, levene;
  for (double f : fractions)
    for (const auto& c : comparisons) {
      const auto a = accuracies(runs, c.group_a, f), b = accuracies(runs, c.group_b, f);
      if (a.size() < 2 || b.size() < 2) continue;
      StatRecord w{"welch_greater", c.group_a, c.group_b, f, 0.0, 1.0, 1.0, {}};
      try {
        const auto r = stats::welch_t_one_tailed(a, b, stats::Alternative::Greater);
        w.statistic = r.statistic;
        w.p_value = r.p_value;
      } catch (const DegenerateGroups&) {
        w.verdict = "degenerate";
      }
      welch.push_back(w);
      StatRecord l{"levene", c.group_a, c.group_b, f, 0.0, 1.0, 1.0, {}};
      try {
        const std::vector<std::vector<double>> groups{a, b};
        const auto r = stats::levene(groups);
        l.statistic = r.statistic;
        l.p_value = r.p_value;
      } catch (const DegenerateGroups&) {
        l.verdict = "degenerate";
      }
      levene.push_back(l);
    }
  std::vector<StatRecord> out;
  for (auto* family : {&welch, &levene}) {
    std::vector<double> p;
    for (const auto& r : *family) p.push_back(r.p_value);
    const auto corrected = stats::bonferroni(p);
    for (std::size_t i = 0; i < family->size(); ++i) {
      auto& r = (*family)[i];
      r.corrected_p = corrected[i];
      if (r.verdict.empty()) r.verdict = r.corrected_p < alpha ? "significant" : "not_significant";
      out.push_back(r);
    }
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  json j;
  j["task"] = report.task;
  json runs = json::array();
  for (const auto& r : report.runs)
    runs.push_back({{"model_tag", r.model_tag},
                    {"split", r.split},
                    {"fraction", r.fraction},
                    {"n_train", r.n_train},
                    {"accuracy", r.accuracy},
                    {"train_seconds", r.train_seconds},
                    {"history", history_json(r.history)}});
  j["runs"] = runs;
  json aggs = json::array(), fracs = json::array();
  for (const auto& a : report.aggregates) aggs.push_back(aggregate_json(a, false));
  for (const auto& a : report.fraction_aggregates) fracs.push_back(aggregate_json(a, true));
  j["aggregates"] = aggs;
  j["fraction_aggregates"] = fracs;
  json st = json::array();
  for (const auto& s : report.stats)
    st.push_back({{"test", s.test},
                  {"group_a", s.group_a},
                  {"group_b", s.group_b},
                  {"fraction", s.fraction},
                  {"statistic", s.statistic},
                  {"p_value", s.p_value},
                  {"corrected_p", s.corrected_p},
                  {"verdict", s.verdict}});
  j["stats"] = st;
  if (report.search) {
    const auto& s = *report.search;
    json cands = json::array();
    for (std::size_t c = 0; c < s.candidates.size(); ++c)
      cands.push_back({{"topology", s.candidates[c].to_string()},
                       {"n_params", nn::count_params(s.candidates[c])},
                       {"mean_val_accuracy", s.mean_val_accuracy[c]}});
    j["search"] = {{"candidates", cands}, {"winner", s.winner}};
  } else {
    j["search"] = nullptr;
  }
  json fails = json::array();
  for (const auto& f : report.failures)
    fails.push_back({{"model_tag", f.model_tag},
                     {"split", f.split},
                     {"fraction", f.fraction},
                     {"diverged", f.diverged},
                     {"message", f.message}});
  j["failures"] = fails;
  return j.dump() + "\n";
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  using csv::format_double;

  {
    const auto path = dir / "report.json";
    auto out = open_out(path);
    out << report_json(report);
    close_out(out, path);
  }
  {
    const auto path = dir / "runs.csv";
    auto out = open_out(path);
    out << "model_tag,split,fraction,n_train,accuracy,train_seconds,epochs,best_epoch\n";
    for (const auto& r : report.runs)
      out << r.model_tag << ',' << r.split << ',' << format_double(r.fraction) << ',' << r.n_train << ','
          << format_double(r.accuracy) << ',' << format_double(r.train_seconds) << ',' << r.history.stopped_epoch << ','
          << r.history.best_epoch << '\n';
    close_out(out, path);
  }
  {
    const auto path = dir / "aggregates.csv";
    auto out = open_out(path);
    out << "model_tag,n_runs,accuracy_mean,accuracy_std,seconds_mean,seconds_std\n";
    for (const auto& a : report.aggregates)
      out << a.model_tag << ',' << a.n_runs << ',' << format_double(a.accuracy_mean) << ','
          << format_double(a.accuracy_std) << ',' << format_double(a.seconds_mean) << ','
          << format_double(a.seconds_std) << '\n';
    close_out(out, path);
  }
  {
    const auto path = dir / "loss_curves.csv";
    auto out = open_out(path);
    out << "epoch,model_tag,split,train_loss,val_loss,fraction\n";
    for (const auto& r : report.runs)
      for (std::size_t e = 0; e < r.history.epochs.size(); ++e)
        out << e + 1 << ',' << r.model_tag << ',' << r.split << ',' << format_double(r.history.epochs[e].train_loss)
            << ',' << format_double(r.history.epochs[e].val_loss) << ',' << format_double(r.fraction) << '\n';
    close_out(out, path);
  }
  {
    const auto path = dir / "fraction_accuracy.csv";
    auto out = open_out(path);
    out << "fraction,model_tag,n_runs,accuracy_mean,accuracy_std,seconds_mean,seconds_std\n";
    for (const auto& a : report.fraction_aggregates)
      out << format_double(a.fraction) << ',' << a.model_tag << ',' << a.n_runs << ','
          << format_double(a.accuracy_mean) << ',' << format_double(a.accuracy_std) << ','
          << format_double(a.seconds_mean) << ',' << format_double(a.seconds_std) << '\n';
    close_out(out, path);
  }
  {
    const auto path = dir / "stats.csv";
    auto out = open_out(path);
    out << "test,group_a,group_b,fraction,statistic,p_value,corrected_p,verdict\n";
    for (const auto& s : report.stats)
      out << s.test << ',' << s.group_a << ',' << s.group_b << ',' << format_double(s.fraction) << ','
          << format_double(s.statistic) << ',' << format_double(s.p_value) << ',' << format_double(s.corrected_p)
          << ',' << s.verdict << '\n';
    close_out(out, path);
  }
  if (report.search) {
    const auto path = dir / "search.csv";
    auto out = open_out(path);
    out << "candidate,topology,n_params,split,val_accuracy,diverged,winner\n";
    for (const auto& r : report.search->records)
      out << r.candidate << ',' << topology_cell(report.search->candidates[r.candidate]) << ',' << r.n_params << ','
          << r.split << ',' << format_double(r.val_accuracy) << ',' << (r.diverged ? 1 : 0) << ','
          << (r.candidate == report.search->winner ? 1 : 0) << '\n';
    close_out(out, path);
  }
}

}  // namespace fin::bench
