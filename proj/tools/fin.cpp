// fin: pretrain feature-imitating networks, inspect artifacts, run
// benchmark protocols, check gradients and evaluate the feature oracles.
//
// Exit codes: 0 ok, 1 check failed, 2 config error, 3 divergence,
// 4 IO or corrupt artifact.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fin/bench.hpp"
#include "fin/csv.hpp"
#include "fin/engine.hpp"
#include "fin/errors.hpp"
#include "fin/gradcheck.hpp"
#include "fin/kernels.hpp"
#include "fin/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kDiverged = 3, kIo = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(sep, start), s.size());
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : split_list(s)) out.push_back(fin::csv::parse_double(f));
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? std::string(1, sep) : "") + parts[i];
  return s;
}

// Turns a JSON config object into flags placed ahead of the command line,
// so explicit flags (parsed later, last one wins) take precedence.
std::vector<std::string> config_flags(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fin::IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "effective_seed") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(flag);
    } else if (value.is_string()) {
      flags.push_back(flag);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back(flag);
      flags.push_back(value.dump());
    } else if (value.is_array()) {
      std::vector<std::string> parts;
      for (const auto& v : value) parts.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      flags.push_back(flag);
      flags.push_back(join(parts));
    } else if (!value.is_null()) {
      throw ConfigError("config key '" + key + "' has an unsupported value");
    }
  }
  return flags;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fin::IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw fin::IoError("write failed: " + path.string());
}

void make_dirs(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw fin::IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FIN_OUT_DIR"); env && *env) return env;
  throw ConfigError("--out is required (or set FIN_OUT_DIR)");
}

// ---------------------------------------------------------------- pretrain

struct PretrainArgs {
  std::string feature;
  std::size_t signals = 20000;
  std::size_t test_signals = 3000;
  std::uint64_t seed = 0;
  std::string out;
  int epochs = 30;
  int patience = 10;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::size_t length = 512;
  double rate = 128.0;
  double val_fraction = 0.15;
  std::string hidden = "512,256,64";
  std::string activations = "relu,relu,relu";
  int threads = 0;

  json to_json() const {
    return {{"command", "pretrain"}, {"feature", feature},   {"signals", signals},         {"test-signals", test_signals},
            {"seed", seed},          {"out", out},           {"epochs", epochs},           {"patience", patience},
            {"lr", lr},              {"momentum", momentum}, {"batch", batch},             {"length", length},
            {"rate", rate},          {"val-fraction", val_fraction}, {"hidden", hidden},   {"activations", activations},
            {"threads", threads}};
  }
};

int cmd_pretrain(PretrainArgs a) {
  a.patience = std::min(a.patience, a.epochs);
  const fin::FeatureId feature = [&] {
    try {
      return fin::parse_feature(a.feature);
    } catch (const std::exception&) {
      throw ConfigError("unknown feature '" + a.feature + "'");
    }
  }();
  fin::GenSpec gen;
  gen.length = a.length;
  gen.sample_rate = a.rate;
  gen.seed = a.seed;
  gen.validate();
  fin::PretrainOptions opt;
  opt.n_signals = a.signals;
  opt.val_fraction = a.val_fraction;
  if (!(a.val_fraction > 0.0 && a.val_fraction < 1.0)) throw ConfigError("--val-fraction must lie in (0, 1)");

  fin::nn::Topology topo;
  topo.layer_sizes.push_back(opt.wavelet.input_dim());
  for (const auto& h : split_list(a.hidden)) topo.layer_sizes.push_back(static_cast<std::size_t>(fin::csv::parse_int(h)));
  for (const auto& act : split_list(a.activations)) topo.activations.push_back(fin::nn::parse_activation(act));
  topo.layer_sizes.push_back(fin::feature_width(feature, opt.features));
  topo.activations.push_back(fin::nn::Activation::Linear);
  topo.validate();

  fin::nn::TrainConfig cfg{a.lr, a.momentum, a.batch, a.epochs, a.patience, a.seed};
  cfg.validate();

  fs::path out = resolve_out(a.out);
  fs::path artifact_path = out.extension() == ".fin" ? out : out / (a.feature + ".fin");
  const fs::path dir = artifact_path.parent_path();

  opt.observer = [](int epoch, const fin::nn::EpochRecord& r) {
    std::fprintf(stderr, "epoch %d train_loss %.6g val_loss %.6g (%.2fs)\n", epoch, r.train_loss, r.val_loss,
                 r.wall_seconds);
  };
  const auto result = fin::pretrain_fin(feature, gen, topo, cfg, opt);

  std::vector<std::uint64_t> unseen(a.test_signals);
  for (std::size_t i = 0; i < unseen.size(); ++i) unseen[i] = a.signals + i;
  fin::ReconstructionReport recon;
  if (!unseen.empty()) {
    const auto corpus = fin::build_feature_corpus(gen, unseen, feature, opt.wavelet, opt.features);
    recon = fin::reconstruction_report(result.artifact, corpus.inputs, corpus.targets);
  }

  make_dirs(dir);
  fin::save_fin(result.artifact, artifact_path);
  std::ostringstream hist;
  hist << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < recon.histogram.size(); ++b)
    hist << fin::csv::format_double(static_cast<double>(b) / fin::kReconBins) << ','
         << fin::csv::format_double(static_cast<double>(b + 1) / fin::kReconBins) << ',' << recon.histogram[b] << '\n';
  write_text(dir / "recon_hist.csv", hist.str());
  std::ostringstream curve;
  curve << "epoch,train_loss,val_loss,wall_seconds\n";
  for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
    const auto& r = result.history.epochs[e];
    curve << e + 1 << ',' << fin::csv::format_double(r.train_loss) << ',' << fin::csv::format_double(r.val_loss) << ','
          << fin::csv::format_double(r.wall_seconds) << '\n';
  }
  write_text(dir / "pretrain_history.csv", curve.str());
  json resolved = a.to_json();
  resolved["out"] = artifact_path.string();
  resolved["effective_seed"] = a.seed;
  write_text(dir / "config.json", resolved.dump() + "\n");

  std::printf("artifact: %s\n", artifact_path.string().c_str());
  std::printf("epochs: %d\n", result.history.stopped_epoch);
  std::printf("best_epoch: %d\n", result.history.best_epoch);
  std::printf("val_mae: %.6f\n", result.val_mae);
  std::printf("test_signals: %zu\n", unseen.size());
  std::printf("test_mae: %.6f\n", recon.mean);
  std::printf("test_p95: %.6f\n", recon.p95);
  std::printf("test_max: %.6f\n", recon.max);
  return kOk;
}

// ----------------------------------------------------------------- inspect

int cmd_inspect(const std::string& path) {
  const auto a = fin::load_fin(path);
  const auto topo = a.net.topology();
  std::printf("feature: %s\n", std::string(fin::feature_name(a.feature)).c_str());
  std::printf("format_version: %d\n", a.format_version);
  std::printf("topology: %s\n", topo.to_string().c_str());
  std::printf("parameters: %zu\n", fin::nn::count_params(topo));
  std::printf("best_val_loss: %.17g\n", a.history_summary.best_val_loss);
  std::printf("epochs: %d\n", a.history_summary.epochs);
  for (std::size_t k = 0; k < a.norm_lo.size(); ++k)
    std::printf("norm_range[%zu]: %.17g %.17g\n", k, a.norm_lo[k], a.norm_hi[k]);
  std::printf("gen_spec_digest: %s\n", a.gen_spec_digest.c_str());
  return kOk;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string task;
  std::string models;
  std::string protocol = "repeated-random";
  int repeats = 50;
  std::string fractions = "1";
  std::uint64_t seed = 0;
  std::string out;
  std::size_t items = 2000;
  std::size_t channels = 1;
  std::size_t subjects = 0;
  double noise = 0.05;
  std::size_t length = 512;
  double rate = 128.0;
  double test_frac = 0.15;
  double val_frac = 0.15;
  int epochs = 30;
  int patience = 5;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::size_t knn_k = 5;
  std::size_t candidates = 20;
  int search_splits = 3;
  int margin_epochs = 30;
  double margin_lr = 0.01;
  double margin_reg = 1e-4;
  bool serial_timing = false;
  int threads = 0;

  json to_json() const {
    return {{"command", "bench"},
            {"task", task},
            {"models", models},
            {"protocol", protocol},
            {"repeats", repeats},
            {"fractions", fractions},
            {"seed", seed},
            {"out", out},
            {"items", items},
            {"channels", channels},
            {"subjects", subjects},
            {"noise", noise},
            {"length", length},
            {"rate", rate},
            {"test-frac", test_frac},
            {"val-frac", val_frac},
            {"epochs", epochs},
            {"patience", patience},
            {"lr", lr},
            {"momentum", momentum},
            {"batch", batch},
            {"knn-k", knn_k},
            {"candidates", candidates},
            {"search-splits", search_splits},
            {"margin-epochs", margin_epochs},
            {"margin-lr", margin_lr},
            {"margin-reg", margin_reg},
            {"serial-timing", serial_timing},
            {"threads", threads}};
  }
};

int cmd_bench(BenchArgs a) {
  a.patience = std::min(a.patience, a.epochs);
  fin::TaskSpec task;
  std::vector<fin::bench::ModelSpec> models;
  fin::bench::BenchConfig cfg;
  try {
    task = fin::TaskSpec::parse(a.task);
    models = fin::bench::parse_models(a.models);
    cfg.plan.fractions = parse_doubles(a.fractions);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  task.n_items = a.items;
  task.n_channels = a.channels;
  task.n_subjects = a.subjects;
  task.label_noise = a.noise;
  task.signal_length = a.length;
  task.sample_rate = a.rate;
  task.seed = fin::derive_seed(a.seed, "task");

  if (a.protocol == "repeated-random") cfg.plan.mode = fin::SplitMode::RepeatedRandom;
  else if (a.protocol == "leave-subjects-out") cfg.plan.mode = fin::SplitMode::LeaveSubjectsOut;
  else throw ConfigError("unknown protocol '" + a.protocol + "'");
  cfg.plan.test_frac = a.test_frac;
  cfg.plan.val_frac = a.val_frac;
  cfg.plan.repeats = a.repeats;
  cfg.plan.seed = fin::derive_seed(a.seed, "splits");
  cfg.plan.validate();
  cfg.train = {a.lr, a.momentum, a.batch, a.epochs, a.patience, 0};
  cfg.train.validate();
  cfg.knn_k = a.knn_k;
  if (a.knn_k == 0) throw ConfigError("--knn-k must be positive");
  cfg.margin = {a.margin_epochs, a.margin_lr, a.margin_reg, 0};
  cfg.search.n_candidates = a.candidates;
  cfg.search.search_splits = a.search_splits;
  if (a.candidates == 0 || a.search_splits <= 0) throw ConfigError("search needs candidates and splits");
  cfg.serial_timing = a.serial_timing;
  cfg.seed = a.seed;
  const fs::path dir = resolve_out(a.out);

  for (auto& m : models) m.load_artifacts();
  const auto data = fin::make_task(task);
  auto report = fin::bench::run_benchmark(data, models, cfg);
  report.task = task.to_string();

  make_dirs(dir);
  fin::bench::emit_report(report, dir);
  json resolved = a.to_json();
  resolved["out"] = dir.string();
  resolved["effective_seed"] = a.seed;
  write_text(dir / "config.json", resolved.dump() + "\n");

  for (const auto& agg : report.aggregates)
    std::printf("%s accuracy_mean %.6f accuracy_std %.6f seconds_mean %.4f runs %zu\n", agg.model_tag.c_str(),
                agg.accuracy_mean, agg.accuracy_std, agg.seconds_mean, agg.n_runs);
  if (!report.failures.empty()) {
    std::ostringstream marker;
    bool diverged = false;
    for (const auto& f : report.failures) {
      marker << f.model_tag << " split=" << f.split << " fraction=" << fin::csv::format_double(f.fraction) << ": "
             << f.message << '\n';
      diverged = diverged || f.diverged;
    }
    write_text(dir / "FAILED", marker.str());
    std::cerr << report.failures.size() << " run(s) failed; see " << (dir / "FAILED").string() << '\n';
    return diverged ? kDiverged : kConfig;
  }
  return kOk;
}

// --------------------------------------------------------------- gradcheck

int cmd_gradcheck(int cases, std::uint64_t seed, bool inject_fault) {
  fin::nn::GradcheckConfig cfg;
  cfg.n_cases = cases;
  cfg.seed = seed;
  cfg.inject_fault = inject_fault;
  if (cases <= 0) throw ConfigError("--cases must be positive");
  const auto r = fin::nn::run_gradcheck(cfg);
  std::printf("cases: %d\n", cases);
  std::printf("checked: %zu\n", r.n_checked);
  std::printf("max_rel_error: %.6e\n", r.max_rel_error);
  std::printf("worst: %s\n", r.worst_location().c_str());
  if (!r.passed) {
    std::fprintf(stderr, "gradient check failed at %s: relative error %.3e > %.1e\n", r.worst_location().c_str(),
                 r.max_rel_error, cfg.tolerance);
    return kCheckFailed;
  }
  return kOk;
}

// ------------------------------------------------------------------ oracle

struct OracleArgs {
  std::string feature;
  std::string input;
  std::string demo;
  double demo_freq = 10.0;
  std::size_t length = 512;
  double rate = 128.0;
  std::uint64_t seed = 0;
  bool normalized = false;
  std::string range;
  std::string artifact;
  std::string out;
};

int cmd_oracle(const OracleArgs& a) {
  fin::FeatureId feature;
  try {
    feature = fin::parse_feature(a.feature);
  } catch (const std::exception&) {
    throw ConfigError("unknown feature '" + a.feature + "'");
  }
  if (a.input.empty() == a.demo.empty()) throw ConfigError("give exactly one of --input and --demo");

  std::vector<std::pair<std::uint64_t, fin::Signal>> signals;
  if (!a.input.empty()) {
    try {
      signals = fin::read_signal_csv(a.input, a.rate);
    } catch (const fin::IngestError& e) {
      throw ConfigError(e.what());
    }
  } else {
    if (a.length < 2 || !(a.rate > 0.0)) throw ConfigError("demo needs --length >= 2 and --rate > 0");
    std::vector<double> x(a.length);
    const double w = 2.0 * std::numbers::pi * a.demo_freq / a.rate;
    fin::Rng rng(fin::derive_seed(a.seed, "demo"));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i);
      if (a.demo == "constant") x[i] = 1.0;
      else if (a.demo == "sine") x[i] = std::sin(w * t);
      else if (a.demo == "harmonics") x[i] = std::sin(w * t) + std::sin(2 * w * t) + std::sin(3 * w * t);
      else if (a.demo == "noise") x[i] = rng.normal();
      else if (a.demo == "burst") x[i] = i < x.size() / 8 ? rng.normal() : 0.0;
      else throw ConfigError("unknown demo '" + a.demo + "' (constant, sine, harmonics, noise, burst)");
    }
    signals.emplace_back(0, fin::Signal(std::move(x), a.rate));
  }

  std::optional<std::pair<std::vector<double>, std::vector<double>>> range;
  if (a.normalized) {
    if (!a.artifact.empty()) {
      const auto art = fin::load_fin(a.artifact);
      if (art.feature != feature) throw ConfigError("artifact imitates a different feature");
      range.emplace(art.norm_lo, art.norm_hi);
    } else if (!a.range.empty()) {
      const auto parts = split_list(a.range, ':');
      if (parts.size() != 2) throw ConfigError("--range must be lo:hi");
      range.emplace(parse_doubles(parts[0]), parse_doubles(parts[1]));
    } else {
      throw ConfigError("--normalized needs --range or --artifact");
    }
  }

  std::ostringstream text;
  const fin::FeatureConfig fc;
  const std::size_t width = fin::feature_width(feature, fc);
  text << "index";
  for (std::size_t k = 0; k < width; ++k) text << ',' << a.feature << (width > 1 ? std::to_string(k) : "");
  text << '\n';
  for (const auto& [index, s] : signals) {
    fin::FeatureValue v;
    try {
      v = fin::compute_feature(s, feature, fc);
      if (range) v = fin::normalize_feature(v, range->first, range->second);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    text << index;
    for (double x : v.values) text << ',' << fin::csv::format_double(x);
    text << '\n';
  }
  if (a.out.empty()) {
    std::cout << text.str();
  } else {
    make_dirs(fs::path(a.out).parent_path());
    write_text(a.out, text.str());
  }
  return kOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const fin::DivergedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const fin::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fin::CorruptArtifact& e) {
    std::cerr << "error: corrupt artifact: " << e.what() << '\n';
    return kIo;
  } catch (const fin::UnsupportedVersion& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);

  // Pull --config out of the arguments and splice its flags in front.
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path) {
    if (args.empty()) {
      std::cerr << "error: --config needs a subcommand\n";
      return kConfig;
    }
    std::vector<std::string> extra;
    const int rc = guarded([&] {
      extra = config_flags(*config_path);
      return kOk;
    });
    if (rc != kOk) return rc;
    args.insert(args.begin() + 1, extra.begin(), extra.end());
  }

  CLI::App app{"Feature-imitating networks: pretraining, transfer benchmarks and verification"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "Pretrain a FIN against a feature oracle");
  pre->add_option("--feature", pa.feature, "entropy, kurtosis, skewness, f0, mfcc or regularity")->required();
  pre->add_option("--signals", pa.signals, "Synthetic corpus size");
  pre->add_option("--test-signals", pa.test_signals, "Unseen signals for the reconstruction report");
  pre->add_option("--seed", pa.seed);
  pre->add_option("--out", pa.out, ".fin path or output directory (default $FIN_OUT_DIR)");
  pre->add_option("--epochs", pa.epochs);
  pre->add_option("--patience", pa.patience, "Early-stopping patience, capped at --epochs");
  pre->add_option("--lr", pa.lr);
  pre->add_option("--momentum", pa.momentum);
  pre->add_option("--batch", pa.batch);
  pre->add_option("--length", pa.length, "Signal length in samples");
  pre->add_option("--rate", pa.rate, "Sample rate in Hz");
  pre->add_option("--val-fraction", pa.val_fraction);
  pre->add_option("--hidden", pa.hidden, "Hidden layer widths, comma separated");
  pre->add_option("--activations", pa.activations, "Hidden activations, comma separated");
  pre->add_option("--threads", pa.threads, "OpenMP threads (0 keeps the default)");

  std::string inspect_path;
  auto* ins = app.add_subcommand("inspect", "Summarize a .fin artifact");
  ins->add_option("path", inspect_path)->required();

  BenchArgs ba;
  auto* ben = app.add_subcommand("bench", "Run a benchmark protocol and write report files");
  ben->add_option("--task", ba.task, "feature-threshold:<f>, multi-feature:<f>+<f>..., csv:<path>")->required();
  ben->add_option("--models", ba.models,
                  "Comma list of fin:<path>, fin-reinit:<path>, fin-ensemble:<p>+<p>..., baseline-search, knn, "
                  "linear-margin")
      ->required();
  ben->add_option("--protocol", ba.protocol, "repeated-random or leave-subjects-out");
  ben->add_option("--repeats", ba.repeats);
  ben->add_option("--fractions", ba.fractions, "Training fractions, comma separated");
  ben->add_option("--seed", ba.seed);
  ben->add_option("--out", ba.out, "Report directory (default $FIN_OUT_DIR)");
  ben->add_option("--items", ba.items);
  ben->add_option("--channels", ba.channels);
  ben->add_option("--subjects", ba.subjects, "Assign synthetic items to this many subjects");
  ben->add_option("--noise", ba.noise, "Label noise probability");
  ben->add_option("--length", ba.length);
  ben->add_option("--rate", ba.rate);
  ben->add_option("--test-frac", ba.test_frac);
  ben->add_option("--val-frac", ba.val_frac);
  ben->add_option("--epochs", ba.epochs);
  ben->add_option("--patience", ba.patience, "Early-stopping patience, capped at --epochs");
  ben->add_option("--lr", ba.lr);
  ben->add_option("--momentum", ba.momentum);
  ben->add_option("--batch", ba.batch);
  ben->add_option("--knn-k", ba.knn_k);
  ben->add_option("--candidates", ba.candidates, "Baseline topologies to search");
  ben->add_option("--search-splits", ba.search_splits, "Leading splits used for baseline selection");
  ben->add_option("--margin-epochs", ba.margin_epochs);
  ben->add_option("--margin-lr", ba.margin_lr);
  ben->add_option("--margin-reg", ba.margin_reg);
  ben->add_flag("--serial-timing", ba.serial_timing, "Run one training at a time");
  ben->add_option("--threads", ba.threads, "OpenMP threads (0 keeps the default)");

  int gc_cases = 20;
  std::uint64_t gc_seed = 0;
  bool gc_fault = false;
  auto* grad = app.add_subcommand("gradcheck", "Compare backprop with central finite differences");
  grad->add_option("--cases", gc_cases);
  grad->add_option("--seed", gc_seed);
  grad->add_flag("--inject-fault", gc_fault, "Corrupt one analytic gradient entry (negative control)");

  OracleArgs oa;
  auto* ora = app.add_subcommand("oracle", "Evaluate a closed-form feature on signals");
  ora->add_option("--feature", oa.feature)->required();
  ora->add_option("--input", oa.input, "CSV of signals: index,s0,s1,...");
  ora->add_option("--demo", oa.demo, "constant, sine, harmonics, noise or burst");
  ora->add_option("--demo-freq", oa.demo_freq);
  ora->add_option("--length", oa.length);
  ora->add_option("--rate", oa.rate);
  ora->add_option("--seed", oa.seed);
  ora->add_flag("--normalized", oa.normalized);
  ora->add_option("--range", oa.range, "lo:hi, comma separated per entry");
  ora->add_option("--artifact", oa.artifact, "Take the normalization range from a .fin file");
  ora->add_option("--out", oa.out, "Write CSV here instead of standard output");

  std::vector<const char*> cargv{argv[0]};
  for (const auto& s : args) cargv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), const_cast<char**>(cargv.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  fin::kernels::set_threads(*pre ? pa.threads : *ben ? ba.threads : 0);

  if (*pre) return guarded([&] { return cmd_pretrain(pa); });
  if (*ins) return guarded([&] { return cmd_inspect(inspect_path); });
  if (*ben) return guarded([&] { return cmd_bench(ba); });
  if (*grad) return guarded([&] { return cmd_gradcheck(gc_cases, gc_seed, gc_fault); });
  if (*ora) return guarded([&] { return cmd_oracle(oa); });
  return kConfig;
}
