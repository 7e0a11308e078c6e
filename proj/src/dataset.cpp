#include "fin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "fin/csv.hpp"
#include "fin/errors.hpp"
#include "fin/rng.hpp"

namespace fin {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Average rank of each value, scaled to [0, 1].
std::vector<double> scaled_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  const double scale = v.size() > 1 ? 1.0 / static_cast<double>(v.size() - 1) : 0.0;
  for (double& x : r) x *= scale;
  return r;
}

}  // namespace

void LabeledDataset::validate() const {
  if (n_channels == 0 || tf_dim == 0) throw std::invalid_argument("dataset needs positive channel and TF sizes");
  if (n_classes < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  const std::size_t n = labels.size();
  if (inputs.rows != n || inputs.cols != input_dim() || subject_ids.size() != n || item_ids.size() != n)
    throw std::invalid_argument("dataset arrays disagree in shape");
  std::vector<std::size_t> counts(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw std::invalid_argument("label outside [0, n_classes)");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] < 2) throw std::invalid_argument("class " + std::to_string(c) + " has fewer than 2 items");
}

Matrix LabeledDataset::one_hot(std::span<const std::size_t> rows) const {
  Matrix t(rows.size(), n_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) t(i, static_cast<std::size_t>(labels.at(rows[i]))) = 1.0;
  return t;
}

std::vector<int> LabeledDataset::labels_at(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels.at(r));
  return out;
}

TaskSpec TaskSpec::parse(const std::string& text) {
  TaskSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("task must look like kind:argument, got '" + text + "'");
  const std::string kind = text.substr(0, colon), arg = text.substr(colon + 1);
  if (arg.empty()) throw std::invalid_argument("task '" + text + "' has no argument");
  if (kind == "feature-threshold") {
    spec.kind = TaskKind::FeatureThreshold;
    spec.features = {parse_feature(arg)};
  } else if (kind == "multi-feature") {
    spec.kind = TaskKind::MultiFeature;
    spec.features.clear();
    std::size_t start = 0;
    while (start <= arg.size()) {
      const auto end = std::min(arg.find('+', start), arg.size());
      spec.features.push_back(parse_feature(arg.substr(start, end - start)));
      start = end + 1;
    }
  } else if (kind == "csv") {
    spec.kind = TaskKind::Csv;
    spec.features.clear();
    spec.csv_path = arg;
  } else {
    throw std::invalid_argument("unknown task kind '" + kind + "'");
  }
  return spec;
}

std::string TaskSpec::to_string() const {
  switch (kind) {
    case TaskKind::FeatureThreshold:
      return "feature-threshold:" + std::string(feature_name(features.at(0)));
    case TaskKind::MultiFeature: {
      std::string s = "multi-feature:";
      for (std::size_t i = 0; i < features.size(); ++i) {
        if (i) s += '+';
        s += feature_name(features[i]);
      }
      return s;
    }
    case TaskKind::Csv:
      return "csv:" + csv_path.string();
  }
  return {};
}

LabeledDataset make_task(const TaskSpec& spec, TaskTruth* truth) {
  if (spec.kind == TaskKind::Csv) return read_dataset_csv(spec.csv_path);
  if (spec.features.empty()) throw std::invalid_argument("synthetic task needs at least one feature");
  if (spec.kind == TaskKind::FeatureThreshold && spec.features.size() != 1)
    throw std::invalid_argument("feature_threshold takes exactly one feature");
  if (spec.n_channels == 0 || spec.n_items < 4) throw std::invalid_argument("synthetic task is too small");
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 0.5)) throw std::invalid_argument("label_noise must lie in [0, 0.5)");
  for (FeatureId f : spec.features)
    if (f == FeatureId::Mfcc) throw std::invalid_argument("synthetic tasks use scalar features only");

  GenSpec gen;
  gen.length = spec.signal_length;
  gen.sample_rate = spec.sample_rate;
  gen.seed = derive_seed(spec.seed, "task-signals");
  gen.validate();

  const std::size_t n = spec.n_items, channels = spec.n_channels, nf = spec.features.size();
  LabeledDataset data;
  data.n_channels = channels;
  data.tf_dim = spec.wavelet.input_dim();
  data.n_classes = 2;
  data.inputs = Matrix(n, data.input_dim());
  std::vector<std::vector<double>> per_signal(nf, std::vector<double>(n * channels));

  std::exception_ptr failure;
  const auto total = static_cast<std::ptrdiff_t>(n * channels);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    try {
      const auto idx = static_cast<std::size_t>(k);
      const Signal s = generate(gen, idx);
      const auto tf = wavelet_transform(s, spec.wavelet);
      std::copy(tf.magnitudes.begin(), tf.magnitudes.end(),
                data.inputs.data.begin() + static_cast<std::ptrdiff_t>(idx * data.tf_dim));
      for (std::size_t j = 0; j < nf; ++j)
        per_signal[j][idx] = compute_feature(s, spec.features[j], spec.feature_config).values[0];
    } catch (...) {
#pragma omp critical(fin_task_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // channel-mean of each feature, feature-major
  std::vector<std::vector<double>> means(nf, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < nf; ++j)
    for (std::size_t k = 0; k < n * channels; ++k) means[j][k / channels] += per_signal[j][k];
  for (auto& m : means)
    for (double& v : m) v /= static_cast<double>(channels);

  TaskTruth t;
  if (spec.kind == TaskKind::FeatureThreshold) {
    t.scores = means[0];
  } else {
    Rng rule(derive_seed(spec.seed, "rule"));
    t.scores.assign(n, 0.0);
    for (std::size_t j = 0; j < nf; ++j) {
      const double w = rule.uniform(0.5, 1.0) * (rule.bernoulli(0.5) ? 1.0 : -1.0);
      t.weights.push_back(w);
      const auto ranks = scaled_ranks(means[j]);
      for (std::size_t i = 0; i < n; ++i) t.scores[i] += w * ranks[i];
    }
  }
  t.threshold = median(t.scores);

  data.labels.resize(n);
  t.flipped.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    int y = t.scores[i] > t.threshold ? 1 : 0;
    Rng noise(derive_seed(spec.seed, "noise", i));
    if (noise.uniform() < spec.label_noise) {
      y = 1 - y;
      t.flipped[i] = true;
    }
    data.labels[i] = y;
  }
  data.subject_ids.assign(n, std::nullopt);
  if (spec.n_subjects > 0)
    for (std::size_t i = 0; i < n; ++i) data.subject_ids[i] = static_cast<std::int64_t>(i % spec.n_subjects);
  data.item_ids.resize(n);
  std::iota(data.item_ids.begin(), data.item_ids.end(), std::int64_t{0});
  data.validate();
  if (truth) *truth = std::move(t);
  return data;
}

void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "item_id,subject_id,label,channel";
  for (std::size_t v = 0; v < data.tf_dim; ++v) out << ",v" << v;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.inputs.row(i);
    for (std::size_t c = 0; c < data.n_channels; ++c) {
      out << data.item_ids[i] << ',';
      if (data.subject_ids[i]) out << *data.subject_ids[i];
      out << ',' << data.labels[i] << ',' << c;
      for (std::size_t v = 0; v < data.tf_dim; ++v) out << ',' << csv::format_double(row[c * data.tf_dim + v]);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IngestError(1, "missing header");
  const auto header = csv::split(line);
  if (header.size() < 5 || header[0] != "item_id" || header[1] != "subject_id" || header[2] != "label" ||
      header[3] != "channel")
    throw IngestError(1, "header must start with item_id,subject_id,label,channel,v0");
  const std::size_t tf_dim = header.size() - 4;
  for (std::size_t v = 0; v < tf_dim; ++v)
    if (header[4 + v] != "v" + std::to_string(v)) throw IngestError(1, "expected column v" + std::to_string(v));

  LabeledDataset data;
  data.tf_dim = tf_dim;
  std::vector<double> values;
  std::size_t line_no = 1, channels = 0, current_channels = 0;
  int max_label = -1;
  auto finish_item = [&](std::size_t at) {
    if (data.labels.empty()) return;
    if (channels == 0) channels = current_channels;
    else if (current_channels != channels) throw IngestError(at, "item has a different channel count");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) throw IngestError(line_no, "expected " + std::to_string(header.size()) + " fields");
    try {
      const auto item = csv::parse_int(f[0]);
      std::optional<std::int64_t> subject;
      if (!f[1].empty()) subject = csv::parse_int(f[1]);
      const auto label = csv::parse_int(f[2]);
      const auto channel = csv::parse_int(f[3]);
      if (label < 0 || label > 1'000'000) throw std::invalid_argument("label must be a non-negative class index");
      const bool new_item = data.labels.empty() || item != data.item_ids.back();
      if (new_item) {
        finish_item(line_no);
        if (channel != 0) throw std::invalid_argument("an item must start at channel 0");
        if (std::find(data.item_ids.begin(), data.item_ids.end(), item) != data.item_ids.end())
          throw std::invalid_argument("channels of item " + std::to_string(item) + " are not adjacent");
        data.item_ids.push_back(item);
        data.subject_ids.push_back(subject);
        data.labels.push_back(static_cast<int>(label));
        current_channels = 0;
      } else if (subject != data.subject_ids.back() || label != data.labels.back()) {
        throw std::invalid_argument("channels of one item disagree on subject or label");
      }
      if (channel != static_cast<long long>(current_channels)) throw std::invalid_argument("channels out of order");
      ++current_channels;
      for (std::size_t v = 0; v < tf_dim; ++v) {
        const double x = csv::parse_double(f[4 + v]);
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
        values.push_back(x);
      }
      max_label = std::max(max_label, static_cast<int>(label));
    } catch (const IngestError&) {
      throw;
    } catch (const std::exception& e) {
      throw IngestError(line_no, e.what());
    }
  }
  finish_item(line_no);
  if (data.labels.empty()) throw IngestError(line_no, "no data rows");
  data.n_channels = channels;
  data.n_classes = static_cast<std::size_t>(std::max(2, max_label + 1));
  data.inputs.rows = data.labels.size();
  data.inputs.cols = data.input_dim();
  data.inputs.data = std::move(values);
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw IngestError(line_no, e.what());
  }
  return data;
}

}  // namespace fin
