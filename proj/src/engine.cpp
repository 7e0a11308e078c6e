#include "fin/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fin/base64.hpp"
#include "fin/errors.hpp"
#include "fin/rng.hpp"

namespace fin {

namespace {

using nlohmann::json;

void append_f32(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

double read_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= std::uint32_t{p[k]} << (8 * k);
  return static_cast<double>(std::bit_cast<float>(bits));
}

// Copies a (B*C) x tf view of a B x (C*tf) matrix.
Matrix channels_as_rows(const Matrix& x, std::size_t n_channels) {
  if (x.cols % n_channels != 0) throw ShapeError("input width is not a multiple of the channel count");
  Matrix r;
  r.rows = x.rows * n_channels;
  r.cols = x.cols / n_channels;
  r.data = x.data;
  return r;
}

struct EnsembleForward {
  Matrix channel_rows;
  std::vector<nn::ForwardCache> branch_caches;
  Matrix head_input;
  nn::ForwardCache head_cache;
};

std::unique_ptr<EnsembleForward> ensemble_forward(const EnsembleNet& net, const Matrix& x) {
  if (x.cols != net.input_dim())
    throw ShapeError("ensemble input width " + std::to_string(x.cols) + " != " + std::to_string(net.input_dim()));
  auto f = std::make_unique<EnsembleForward>();
  f->channel_rows = channels_as_rows(x, net.n_channels);
  const std::size_t batch = x.rows, channels = net.n_channels;
  f->head_input = Matrix(batch, net.head_input_dim());
  std::size_t offset = 0;
  for (const auto& branch : net.branches) {
    f->branch_caches.push_back(nn::forward_cached(branch, f->channel_rows));
    const Matrix& out = f->branch_caches.back().output();
    const std::size_t width = out.cols;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = 0; t < width; ++t) f->head_input(b, offset + c * width + t) = out(b * channels + c, t);
    offset += channels * width;
  }
  f->head_cache = nn::forward_cached(net.head, f->head_input);
  return f;
}

template <typename Fn>
void for_chunks(std::size_t rows, Fn&& fn) {
  constexpr std::size_t chunk = 256;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < rows; first += chunk) {
    const std::size_t count = std::min(chunk, rows - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    fn(first, std::span<const std::size_t>(idx));
  }
}

ReconstructionReport summarize_errors(std::vector<double> errors) {
  ReconstructionReport r;
  r.histogram.assign(kReconBins, 0);
  if (errors.empty()) return r;
  double sum = 0.0;
  for (double e : errors) {
    sum += e;
    const auto bin = std::min(kReconBins - 1, static_cast<std::size_t>(e * static_cast<double>(kReconBins)));
    ++r.histogram[bin];
  }
  const double n = static_cast<double>(errors.size());
  r.mean = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - r.mean) * (e - r.mean);
  r.stddev = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.p05 = percentile(errors, 5);
  r.p25 = percentile(errors, 25);
  r.p50 = percentile(errors, 50);
  r.p75 = percentile(errors, 75);
  r.p95 = percentile(errors, 95);
  r.max = *std::max_element(errors.begin(), errors.end());
  r.errors = std::move(errors);
  return r;
}

}  // namespace

void FinArtifact::validate() const {
  if (format_version != kFinFormatVersion) throw UnsupportedVersion("unsupported .fin version " + std::to_string(format_version));
  try {
    net.validate();
  } catch (const ShapeError& e) {
    throw CorruptArtifact(std::string("network: ") + e.what());
  }
  const std::size_t width = net.output_dim();
  if (feature != FeatureId::Mfcc && width != 1) throw CorruptArtifact("scalar feature with output width != 1");
  if (norm_lo.size() != width || norm_hi.size() != width)
    throw CorruptArtifact("normalization range does not match the output width");
  for (std::size_t i = 0; i < width; ++i)
    if (!std::isfinite(norm_lo[i]) || !std::isfinite(norm_hi[i]) || !(norm_hi[i] > norm_lo[i]))
      throw CorruptArtifact("normalization range requires finite hi > lo");
  if (gen_spec_digest.size() != 16 ||
      !std::all_of(gen_spec_digest.begin(), gen_spec_digest.end(), [](char c) { return std::isxdigit(c) != 0; }))
    throw CorruptArtifact("gen_spec_digest must be 16 hex digits");
}

nn::Topology default_fin_topology(std::size_t input_dim, std::size_t output_dim) {
  using nn::Activation;
  return {{input_dim, 512, 256, 64, output_dim},
          {Activation::Relu, Activation::Relu, Activation::Relu, Activation::Linear}};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

FeatureCorpus build_feature_corpus(const GenSpec& gen, std::span<const std::uint64_t> indices, FeatureId feature,
                                   const WaveletConfig& wavelet, const FeatureConfig& features) {
  gen.validate();
  const std::size_t width = feature_width(feature, features);
  FeatureCorpus corpus{Matrix(indices.size(), wavelet.input_dim()), Matrix(indices.size(), width)};
  const auto n = static_cast<std::ptrdiff_t>(indices.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto row = static_cast<std::size_t>(i);
      const Signal s = generate(gen, indices[row]);
      const auto tf = wavelet_transform(s, wavelet);
      std::copy(tf.magnitudes.begin(), tf.magnitudes.end(), corpus.inputs.row(row).begin());
      const auto v = compute_feature(s, feature, features);
      std::copy(v.values.begin(), v.values.end(), corpus.targets.row(row).begin());
    } catch (...) {
#pragma omp critical(fin_corpus_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return corpus;
}

PretrainResult pretrain_fin(FeatureId feature, const GenSpec& gen, const nn::Topology& topology,
                            const nn::TrainConfig& cfg, const PretrainOptions& options) {
  topology.validate();
  cfg.validate();
  const std::size_t width = feature_width(feature, options.features);
  if (topology.input_dim() != options.wavelet.input_dim())
    throw std::invalid_argument("topology input must equal the flattened TF map size");
  if (topology.output_dim() != width) throw std::invalid_argument("topology output must equal the feature width");
  if (topology.activations.back() == nn::Activation::Softmax)
    throw std::invalid_argument("a FIN regression output cannot be softmax");
  if (options.n_signals < 4) throw std::invalid_argument("pretraining corpus is too small");

  std::vector<std::uint64_t> all(options.n_signals);
  std::iota(all.begin(), all.end(), std::uint64_t{0});
  FeatureCorpus corpus = build_feature_corpus(gen, all, feature, options.wavelet, options.features);

  std::vector<std::size_t> order(options.n_signals);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(cfg.seed, "pretrain-split"));
  shuffle(order, split_rng);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(options.val_fraction * static_cast<double>(options.n_signals))));
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  PretrainResult result;
  FinArtifact& art = result.artifact;
  art.feature = feature;
  art.gen_spec_digest = gen.digest();
  art.norm_lo.resize(width);
  art.norm_hi.resize(width);
  for (std::size_t k = 0; k < width; ++k) {
    std::vector<double> column;
    column.reserve(train_rows.size());
    for (std::size_t r : train_rows) column.push_back(corpus.targets(r, k));
    art.norm_lo[k] = percentile(column, 0.1);
    art.norm_hi[k] = percentile(column, 99.9);
    if (!(art.norm_hi[k] - art.norm_lo[k] >= 1e-6))
      throw CorpusDegenerateError(std::string(feature_name(feature)) + " target range collapsed on the corpus");
  }

  Matrix normalized(corpus.targets.rows, width);
  for (std::size_t r = 0; r < corpus.targets.rows; ++r)
    for (std::size_t k = 0; k < width; ++k)
      normalized(r, k) =
          std::clamp((corpus.targets(r, k) - art.norm_lo[k]) / (art.norm_hi[k] - art.norm_lo[k]), 0.0, 1.0);

  nn::Dataset train_set{corpus.inputs.gather(train_rows), normalized.gather(train_rows)};
  nn::Dataset val_set{corpus.inputs.gather(val_rows), normalized.gather(val_rows)};
  corpus = {};

  auto trained = nn::train(nn::init_random(topology, derive_seed(cfg.seed, "init")), train_set, val_set, cfg,
                           nn::Loss::Mse, options.observer);
  art.net = std::move(trained.model);
  // The artifact holds exactly what the f32 payload stores.
  for (auto& layer : art.net.layers) {
    for (double& w : layer.weights) w = static_cast<float>(w);
    for (double& b : layer.biases) b = static_cast<float>(b);
  }
  art.history_summary = {trained.history.best_val_loss(), trained.history.stopped_epoch};
  result.history = std::move(trained.history);

  const Matrix pred = nn::forward_batch(art.net, val_set.inputs);
  double mae = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    mae += std::abs(std::clamp(pred.data[i], 0.0, 1.0) - val_set.targets.data[i]);
  result.val_mae = mae / static_cast<double>(pred.data.size());

  for (std::size_t r : train_rows) result.train_indices.push_back(all[r]);
  for (std::size_t r : val_rows) result.val_indices.push_back(all[r]);
  return result;
}

std::string serialize_fin(const FinArtifact& artifact) {
  artifact.validate();
  json j;
  j["format_version"] = artifact.format_version;
  j["feature"] = std::string(feature_name(artifact.feature));
  const auto topo = artifact.net.topology();
  json acts = json::array();
  for (auto a : topo.activations) acts.push_back(std::string(nn::activation_name(a)));
  j["topology"] = {{"layer_sizes", topo.layer_sizes}, {"activations", acts}};
  j["norm_lo"] = artifact.norm_lo;
  j["norm_hi"] = artifact.norm_hi;
  j["gen_spec_digest"] = artifact.gen_spec_digest;
  j["history_summary"] = {{"best_val_loss", artifact.history_summary.best_val_loss},
                          {"epochs", artifact.history_summary.epochs}};
  std::vector<std::uint8_t> payload;
  payload.reserve(4 * count_params(topo));
  for (const auto& layer : artifact.net.layers) {
    for (double w : layer.weights) append_f32(payload, w);
    for (double b : layer.biases) append_f32(payload, b);
  }
  j["weights"] = base64::encode(payload);
  return j.dump() + "\n";
}

FinArtifact parse_fin(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptArtifact(std::string("not a valid .fin document: ") + e.what());
  }
  if (!j.is_object()) throw CorruptArtifact("top level is not an object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw CorruptArtifact("missing format_version");
  const int version = j["format_version"].get<int>();
  if (version != kFinFormatVersion) throw UnsupportedVersion("unsupported .fin version " + std::to_string(version));

  FinArtifact a;
  try {
    a.feature = parse_feature(j.at("feature").get<std::string>());
    nn::Topology topo;
    topo.layer_sizes = j.at("topology").at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& name : j.at("topology").at("activations"))
      topo.activations.push_back(nn::parse_activation(name.get<std::string>()));
    topo.validate();
    a.norm_lo = j.at("norm_lo").get<std::vector<double>>();
    a.norm_hi = j.at("norm_hi").get<std::vector<double>>();
    a.gen_spec_digest = j.at("gen_spec_digest").get<std::string>();
    a.history_summary.best_val_loss = j.at("history_summary").at("best_val_loss").get<double>();
    a.history_summary.epochs = j.at("history_summary").at("epochs").get<int>();
    const auto payload = base64::decode(j.at("weights").get<std::string>());
    if (payload.size() != 4 * count_params(topo)) throw CorruptArtifact("weight payload does not match the topology");

    const std::uint8_t* p = payload.data();
    for (std::size_t l = 0; l < topo.n_layers(); ++l) {
      nn::Layer layer;
      layer.in = topo.layer_sizes[l];
      layer.out = topo.layer_sizes[l + 1];
      layer.activation = topo.activations[l];
      layer.weights.resize(layer.in * layer.out);
      layer.biases.resize(layer.out);
      for (double& w : layer.weights) {
        w = read_f32(p);
        p += 4;
      }
      for (double& b : layer.biases) {
        b = read_f32(p);
        p += 4;
      }
      a.net.layers.push_back(std::move(layer));
    }
  } catch (const CorruptArtifact&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptArtifact(std::string("malformed .fin document: ") + e.what());
  }
  a.validate();
  return a;
}

void save_fin(const FinArtifact& artifact, const std::filesystem::path& path) {
  const std::string text = serialize_fin(artifact);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

FinArtifact load_fin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fin(ss.str());
}

nn::DenseNet attach_head(const FinArtifact& artifact, std::size_t n_classes, std::uint64_t seed) {
  if (artifact.net.layers.size() < 2) throw std::invalid_argument("attach_head needs a network with at least 2 layers");
  if (n_classes < 2) throw std::invalid_argument("attach_head needs at least 2 classes");
  nn::DenseNet net;
  net.layers.assign(artifact.net.layers.begin(), artifact.net.layers.end() - 1);
  net.layers.push_back(
      nn::init_layer(net.output_dim(), n_classes, nn::Activation::Softmax, derive_seed(seed, "head")));
  return net;
}

nn::DenseNet extend_with_head(const FinArtifact& artifact, std::size_t n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("extend_with_head needs at least 2 classes");
  nn::DenseNet net = artifact.net;
  net.layers.push_back(
      nn::init_layer(net.output_dim(), n_classes, nn::Activation::Softmax, derive_seed(seed, "head")));
  return net;
}

std::size_t EnsembleNet::head_input_dim() const {
  std::size_t widths = 0;
  for (const auto& b : branches) widths += b.output_dim();
  return n_channels * widths;
}

EnsembleNet build_ensemble(std::span<const FinArtifact> artifacts, std::size_t n_channels, std::size_t n_classes,
                           std::uint64_t seed) {
  if (artifacts.empty()) throw ShapeError("an ensemble needs at least one FIN");
  if (n_channels == 0) throw std::invalid_argument("an ensemble needs at least one channel");
  if (n_classes < 2) throw std::invalid_argument("an ensemble needs at least 2 classes");
  EnsembleNet e;
  e.n_channels = n_channels;
  for (const auto& a : artifacts) {
    if (a.net.input_dim() != artifacts.front().net.input_dim())
      throw ShapeError("ensemble branches have different input widths");
    e.branches.push_back(a.net);
  }
  e.head.layers.push_back(
      nn::init_layer(e.head_input_dim(), n_classes, nn::Activation::Softmax, derive_seed(seed, "head")));
  return e;
}

Matrix forward_batch(const EnsembleNet& net, const Matrix& inputs) {
  Matrix out(inputs.rows, net.class_count());
  for_chunks(inputs.rows, [&](std::size_t first, std::span<const std::size_t> idx) {
    const auto f = ensemble_forward(net, inputs.gather(idx));
    const Matrix& y = f->head_cache.output();
    std::copy(y.data.begin(), y.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(first * out.cols));
  });
  return out;
}

double backprop(const EnsembleNet& net, const Matrix& inputs, const Matrix& targets, nn::Loss loss,
                nn::Gradients& grads) {
  const auto f = ensemble_forward(net, inputs);
  const auto dout = nn::output_gradient(f->head_cache, targets, loss);

  nn::Gradients head_grads;
  Matrix d_head_input;
  nn::backward(net.head, f->head_cache, dout, head_grads, &d_head_input);

  const std::size_t batch = inputs.rows, channels = net.n_channels;
  grads.clear();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const std::size_t width = net.branches[k].output_dim();
    nn::OutputGradient d_branch;
    d_branch.grad = Matrix(batch * channels, width);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = 0; t < width; ++t)
          d_branch.grad(b * channels + c, t) = d_head_input(b, offset + c * width + t);
    offset += channels * width;
    nn::Gradients branch_grads;
    nn::backward(net.branches[k], f->branch_caches[k], d_branch, branch_grads);
    for (auto& g : branch_grads) grads.push_back(std::move(g));
  }
  for (auto& g : head_grads) grads.push_back(std::move(g));
  return dout.loss;
}

double evaluate_loss(const EnsembleNet& net, const Matrix& inputs, const Matrix& targets, nn::Loss loss) {
  if (inputs.rows != targets.rows) throw ShapeError("inputs and targets differ in row count");
  if (inputs.rows == 0) throw std::invalid_argument("cannot evaluate loss on an empty set");
  double total = 0.0;
  for_chunks(inputs.rows, [&](std::size_t, std::span<const std::size_t> idx) {
    const auto f = ensemble_forward(net, inputs.gather(idx));
    total += nn::loss_value(f->head_cache, targets.gather(idx), loss) * static_cast<double>(idx.size());
  });
  return total / static_cast<double>(inputs.rows);
}

std::vector<int> predict_classes(const EnsembleNet& net, const Matrix& inputs) {
  const Matrix y = forward_batch(net, inputs);
  std::vector<int> out(y.rows);
  for (std::size_t r = 0; r < y.rows; ++r) {
    const auto row = y.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<nn::Layer*> parameter_layers(EnsembleNet& net) {
  std::vector<nn::Layer*> p;
  for (auto& b : net.branches)
    for (auto& l : b.layers) p.push_back(&l);
  for (auto& l : net.head.layers) p.push_back(&l);
  return p;
}

ReconstructionReport reconstruction_report(const FinArtifact& artifact, const Matrix& inputs,
                                           const Matrix& raw_targets) {
  artifact.validate();
  const std::size_t width = artifact.net.output_dim();
  if (raw_targets.cols != width || raw_targets.rows != inputs.rows)
    throw ShapeError("reconstruction targets do not match the artifact output");
  const Matrix pred = nn::forward_batch(artifact.net, inputs);
  std::vector<double> errors(inputs.rows);
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    double e = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      const double target = std::clamp(
          (raw_targets(r, k) - artifact.norm_lo[k]) / (artifact.norm_hi[k] - artifact.norm_lo[k]), 0.0, 1.0);
      e += std::abs(std::clamp(pred(r, k), 0.0, 1.0) - target);
    }
    errors[r] = e / static_cast<double>(width);
  }
  return summarize_errors(std::move(errors));
}

ReconstructionReport reconstruction_report(const FinArtifact& artifact, std::span<const Signal> signals,
                                           const WaveletConfig& wavelet, const FeatureConfig& features) {
  const std::size_t width = artifact.net.output_dim();
  Matrix inputs(signals.size(), wavelet.input_dim());
  Matrix targets(signals.size(), width);
  for (std::size_t i = 0; i < signals.size(); ++i) {
    FeatureValue v;
    try {
      v = compute_feature(signals[i], artifact.feature, features);
    } catch (const std::exception& e) {
      throw FeatureError(artifact.feature, "signal " + std::to_string(i) + ": " + e.what());
    }
    if (v.values.size() != width) throw ShapeError("feature width does not match the artifact output");
    std::copy(v.values.begin(), v.values.end(), targets.row(i).begin());
    const auto tf = wavelet_transform(signals[i], wavelet);
    if (tf.magnitudes.size() != inputs.cols) throw ShapeError("TF map size does not match the artifact input");
    std::copy(tf.magnitudes.begin(), tf.magnitudes.end(), inputs.row(i).begin());
  }
  return reconstruction_report(artifact, inputs, targets);
}

}  // namespace fin
