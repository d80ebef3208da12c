#include "glearn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "glearn/error.hpp"
#include "glearn/rng.hpp"

namespace glearn::data {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw FormatError("csv line " + std::to_string(line_no) + ": cannot parse '" +
                      std::string(field) + "' as a number");
  }
  return value;
}

int parse_label(std::string_view field, std::size_t row) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw DataError("csv row " + std::to_string(row) + ": label '" + std::string(field) +
                    "' is not an integer");
  }
  if (value < 0 || value > std::numeric_limits<int>::max()) {
    throw DataError("csv row " + std::to_string(row) + ": label " + std::to_string(value) +
                    " out of range");
  }
  return static_cast<int>(value);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::size_t resolve_classes(const std::vector<int>& labels, const LoadOptions& options,
                            const char* unit) {
  if (options.num_classes) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= *options.num_classes) {
        throw DataError(std::string(unit) + " " + std::to_string(i + 1) + ": label " +
                        std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(*options.num_classes) + ")");
      }
    }
    return *options.num_classes;
  }
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  return static_cast<std::size_t>(max_label + 1);
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const std::string& file) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(file + ": truncated header at byte offset " + std::to_string(offset));
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  }
  return v;
}

void check_fraction(double f, const char* name) {
  if (!(f >= 0.0 && f < 1.0)) {
    throw ParameterError(std::string(name) + " must lie in [0, 1), got " + std::to_string(f));
  }
}

}  // namespace

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::clean_train:
      return "clean_train";
    case SplitTag::noisy_train:
      return "noisy_train";
    case SplitTag::test:
      return "test";
  }
  return "unknown";
}

SplitTag split_tag_from_string(const std::string& name) {
  if (name == "clean_train" || name == "clean") return SplitTag::clean_train;
  if (name == "noisy_train" || name == "noisy") return SplitTag::noisy_train;
  if (name == "test") return SplitTag::test;
  throw ParameterError("unknown split '" + name + "' (expected clean_train, noisy_train or test)");
}

std::vector<std::size_t> Dataset::indices(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) out.push_back(i);
  }
  return out;
}

int Dataset::reference_label(std::size_t i) const {
  return true_labels ? (*true_labels)[i] : labels[i];
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ShapeError("dataset: " + std::to_string(features.rows()) + " feature rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (tags.size() != labels.size()) throw ShapeError("dataset: one split tag per sample required");
  if (true_labels && true_labels->size() != labels.size()) {
    throw ShapeError("dataset: true_labels length differs from labels");
  }
  auto check = [&](const std::vector<int>& ls, const char* what) {
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (ls[i] < 0 || static_cast<std::size_t>(ls[i]) >= num_classes) {
        throw DataError(std::string("dataset: ") + what + " " + std::to_string(ls[i]) +
                        " at row " + std::to_string(i) + " outside [0, " +
                        std::to_string(num_classes) + ")");
      }
    }
  };
  check(labels, "label");
  if (true_labels) check(*true_labels, "true label");
}

DataFormat data_format_from_string(const std::string& name) {
  if (name == "csv") return DataFormat::csv;
  if (name == "idx") return DataFormat::idx;
  throw ParameterError("unknown data format '" + name + "' (expected csv or idx)");
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LoadOptions& options) {
  if (format == DataFormat::csv) return load_csv(path, options);
  std::filesystem::path labels = options.labels_path;
  if (labels.empty()) {
    std::string name = path.filename().string();
    const std::string from = "-images-idx3-ubyte";
    const auto pos = name.find(from);
    if (pos == std::string::npos) {
      throw ParameterError("idx: cannot infer label file for " + path.string() +
                           "; pass it explicitly");
    }
    name.replace(pos, from.size(), "-labels-idx1-ubyte");
    labels = path.parent_path() / name;
  }
  return load_idx(path, labels, options);
}

Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    for (auto f : split_fields(line)) header.emplace_back(f);
  }
  // Skip a UTF-8 byte-order mark.
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw FormatError("csv: header has no 'label' column");
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
  std::optional<std::size_t> true_col;
  if (auto it = std::find(header.begin(), header.end(), "true_label"); it != header.end()) {
    true_col = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col && (!true_col || c != *true_col)) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw FormatError("csv: no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<int> true_labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    for (std::size_t c : feature_cols) values.push_back(parse_double(fields[c], line_no));
    labels.push_back(parse_label(fields[label_col], row));
    if (true_col) true_labels.push_back(parse_label(fields[*true_col], row));
  }
  if (labels.empty()) throw DataError("csv: no data rows in " + path.string());

  Dataset ds;
  ds.features = Matrix(labels.size(), feature_cols.size(), std::move(values));
  ds.num_classes = resolve_classes(labels, options, "csv row");
  if (true_col) {
    const std::size_t c = resolve_classes(true_labels, options, "csv row");
    ds.num_classes = std::max(ds.num_classes, c);
    ds.true_labels = std::move(true_labels);
  }
  ds.labels = std::move(labels);
  ds.tags.assign(ds.labels.size(), SplitTag::noisy_train);
  ds.provenance = "csv:" + path.filename().string();
  ds.validate();
  return ds;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 const LoadOptions& options) {
  const std::string img = read_file(images);
  const std::string lab = read_file(labels);
  const std::string img_name = images.filename().string();
  const std::string lab_name = labels.filename().string();

  const std::uint32_t img_magic = read_be32(img, 0, img_name);
  if (img_magic != 0x00000803) {
    throw FormatError(img_name + ": bad magic at byte offset 0 (expected 0x00000803)");
  }
  const std::uint32_t count = read_be32(img, 4, img_name);
  const std::uint32_t rows = read_be32(img, 8, img_name);
  const std::uint32_t cols = read_be32(img, 12, img_name);
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  const std::size_t expected = 16 + static_cast<std::size_t>(count) * dim;
  if (img.size() != expected) {
    throw FormatError(img_name + ": payload ends at byte offset " + std::to_string(img.size()) +
                      ", header implies " + std::to_string(expected));
  }

  const std::uint32_t lab_magic = read_be32(lab, 0, lab_name);
  if (lab_magic != 0x00000801) {
    throw FormatError(lab_name + ": bad magic at byte offset 0 (expected 0x00000801)");
  }
  const std::uint32_t lab_count = read_be32(lab, 4, lab_name);
  if (lab_count != count) {
    throw FormatError(lab_name + ": item count at byte offset 4 is " + std::to_string(lab_count) +
                      ", image file has " + std::to_string(count));
  }
  if (lab.size() != 8 + static_cast<std::size_t>(count)) {
    throw FormatError(lab_name + ": payload ends at byte offset " + std::to_string(lab.size()) +
                      ", header implies " + std::to_string(8 + count));
  }

  Dataset ds;
  ds.features = Matrix(count, dim);
  auto values = ds.features.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(static_cast<unsigned char>(img[16 + i])) / 255.0;
  }
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = static_cast<unsigned char>(lab[8 + i]);
  }
  ds.num_classes = resolve_classes(ds.labels, options, "idx item");
  ds.tags.assign(count, SplitTag::noisy_train);
  ds.provenance = "idx:" + img_name;
  ds.validate();
  return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  std::string out;
  for (std::size_t c = 0; c < dataset.dim(); ++c) out += "f" + std::to_string(c) + ",";
  if (dataset.true_labels) out += "true_label,";
  out += "label\n";
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (double v : dataset.features.row(r)) {
      out += format_double(v);
      out += ',';
    }
    if (dataset.true_labels) out += std::to_string((*dataset.true_labels)[r]) + ",";
    out += std::to_string(dataset.labels[r]);
    out += '\n';
  }
  write_file(path, out);
}

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 2) throw ParameterError("make_blobs: need at least 2 classes");
  if (spec.dim < 2) throw ParameterError("make_blobs: need at least 2 dimensions");
  if (spec.per_class < 1) throw ParameterError("make_blobs: per_class must be positive");
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
    throw ParameterError("make_blobs: sigma must be positive");
  }
  const std::size_t C = spec.num_classes;
  const std::size_t d = spec.dim;

  Rng center_rng(derive_seed(spec.seed, "blob-centers"));
  Matrix centers(C, d);
  for (double& v : centers.values()) v = center_rng.normal();
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < C; ++a) {
    for (std::size_t b = a + 1; b < C; ++b) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = centers(a, k) - centers(b, k);
        sq += diff * diff;
      }
      min_dist = std::min(min_dist, std::sqrt(sq));
    }
  }
  for (double& v : centers.values()) v /= min_dist;

  Rng sample_rng(derive_seed(spec.seed, "blob-samples"));
  Dataset ds;
  ds.num_classes = C;
  ds.features = Matrix(C * spec.per_class, d);
  ds.labels.reserve(C * spec.per_class);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t s = 0; s < spec.per_class; ++s) {
      auto row = ds.features.row(ds.labels.size());
      for (std::size_t k = 0; k < d; ++k) row[k] = centers(c, k) + spec.sigma * sample_rng.normal();
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.true_labels = ds.labels;
  ds.tags.assign(ds.labels.size(), SplitTag::noisy_train);
  std::ostringstream prov;
  prov << "blobs(C=" << C << ",per_class=" << spec.per_class << ",d=" << d
       << ",sigma=" << format_double(spec.sigma) << ",seed=" << spec.seed << ")";
  ds.provenance = prov.str();
  return ds;
}

std::string to_string(NoiseModel model) {
  return model == NoiseModel::symmetric ? "symmetric" : "pair_flip";
}

NoiseModel noise_model_from_string(const std::string& name) {
  if (name == "symmetric") return NoiseModel::symmetric;
  if (name == "pair_flip") return NoiseModel::pair_flip;
  throw ParameterError("unknown noise model '" + name + "' (expected symmetric or pair_flip)");
}

std::size_t FlipMask::count() const {
  return static_cast<std::size_t>(std::count(corrupted.begin(), corrupted.end(), true));
}

std::vector<std::size_t> FlipMask::flipped_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corrupted.size(); ++i) {
    if (corrupted[i]) out.push_back(i);
  }
  return out;
}

NoisyDataset inject_noise(const Dataset& dataset, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
    throw ParameterError("inject_noise: rate must lie in [0, 1), got " + std::to_string(spec.rate));
  }
  dataset.validate();
  const std::size_t C = dataset.num_classes;
  if (C < 2) throw ParameterError("inject_noise: need at least 2 classes");

  std::vector<int> pair_map;
  if (spec.model == NoiseModel::pair_flip) {
    if (spec.pair_map) {
      pair_map = *spec.pair_map;
    } else {
      for (std::size_t c = 0; c < C; ++c) pair_map.push_back(static_cast<int>((c + 1) % C));
    }
    if (pair_map.size() != C) throw ParameterError("inject_noise: pair map needs one entry per class");
    for (std::size_t c = 0; c < C; ++c) {
      if (pair_map[c] < 0 || static_cast<std::size_t>(pair_map[c]) >= C ||
          static_cast<std::size_t>(pair_map[c]) == c) {
        throw ParameterError("inject_noise: pair map must send class " + std::to_string(c) +
                             " to a different valid class");
      }
    }
  }

  NoisyDataset out{dataset, {}};
  Dataset& ds = out.dataset;
  if (!ds.true_labels) ds.true_labels = ds.labels;
  const auto& truth = *ds.true_labels;

  Rng rng(derive_seed(spec.seed, "noise"));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.tags[i] != SplitTag::noisy_train) continue;
    if (!(rng.uniform() < spec.rate)) continue;
    const int y = truth[i];
    if (spec.model == NoiseModel::symmetric) {
      const int r = static_cast<int>(rng.below(C - 1));
      ds.labels[i] = r < y ? r : r + 1;
    } else {
      ds.labels[i] = pair_map[static_cast<std::size_t>(y)];
    }
  }
  out.mask.corrupted.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.mask.corrupted[i] = ds.labels[i] != truth[i];
  return out;
}

Dataset split(const Dataset& dataset, double clean_fraction, double test_fraction,
              std::uint64_t seed) {
  check_fraction(clean_fraction, "clean_fraction");
  check_fraction(test_fraction, "test_fraction");
  if (!(clean_fraction + test_fraction < 1.0)) {
    throw ParameterError("clean_fraction + test_fraction must be < 1");
  }
  dataset.validate();

  Dataset out = dataset;
  std::vector<std::vector<std::size_t>> members(out.num_classes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    members[static_cast<std::size_t>(out.reference_label(i))].push_back(i);
  }
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& idx = members[c];
    if (idx.empty()) continue;
    rng.shuffle(std::span<std::size_t>(idx));
    const double n = static_cast<double>(idx.size());
    const auto n_clean = static_cast<std::size_t>(std::llround(clean_fraction * n));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
    if ((clean_fraction > 0.0 && n_clean == 0) || (test_fraction > 0.0 && n_test == 0) ||
        n_clean + n_test >= idx.size()) {
      throw DataError("split: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " samples, too few for the requested fractions");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      if (k < n_test) {
        out.tags[i] = SplitTag::test;
        if (out.true_labels) out.labels[i] = (*out.true_labels)[i];
      } else if (k < n_test + n_clean) {
        out.tags[i] = SplitTag::clean_train;
      } else {
        out.tags[i] = SplitTag::noisy_train;
      }
    }
  }
  return out;
}

MixedBatchIterator::MixedBatchIterator(const Dataset& dataset, std::size_t batch_size,
                                       std::uint64_t seed, std::uint64_t epoch)
    : batch_size_(batch_size), seed_(seed), epoch_(epoch) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  noisy_order_ = dataset.indices(SplitTag::noisy_train);
  clean_pool_ = dataset.indices(SplitTag::clean_train);
  if (noisy_order_.empty()) {
    throw ConfigError("mixed batches need a nonempty noisy subset; use a single-set iterator");
  }
  if (clean_pool_.empty()) {
    throw ConfigError("mixed batches need a nonempty clean subset; use a single-set iterator");
  }
  Rng rng(derive_seed(seed, "noisy-order", epoch));
  rng.shuffle(std::span<std::size_t>(noisy_order_));
  reshuffle_clean();
}

void MixedBatchIterator::reshuffle_clean() {
  clean_order_ = clean_pool_;
  Rng rng(derive_seed(derive_seed(seed_, "clean-order", epoch_), "wrap", clean_wraps_));
  rng.shuffle(std::span<std::size_t>(clean_order_));
  clean_cursor_ = 0;
  ++clean_wraps_;
}

std::size_t MixedBatchIterator::steps() const noexcept {
  return (noisy_order_.size() + batch_size_ - 1) / batch_size_;
}

BatchPair MixedBatchIterator::next() {
  if (done()) throw InputError("mixed batch iterator exhausted");
  BatchPair pair;
  const std::size_t end = std::min(cursor_ + batch_size_, noisy_order_.size());
  pair.noisy.assign(noisy_order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                    noisy_order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  pair.clean.reserve(batch_size_);
  while (pair.clean.size() < batch_size_) {
    if (clean_cursor_ == clean_order_.size()) reshuffle_clean();
    pair.clean.push_back(clean_order_[clean_cursor_++]);
  }
  return pair;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::vector<std::size_t> indices,
                                                       std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  Rng rng(derive_seed(seed, "train-order", epoch));
  rng.shuffle(std::span<std::size_t>(indices));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, indices.size());
    batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(start),
                         indices.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::string manifest_to_string(const SplitManifest& manifest) {
  json doc;
  doc["seed"] = manifest.seed;
  json spec;
  spec["model"] = to_string(manifest.noise.model);
  spec["rate"] = manifest.noise.rate;
  spec["seed"] = manifest.noise.seed;
  if (manifest.noise.pair_map) spec["pair_map"] = *manifest.noise.pair_map;
  spec["clean_fraction"] = manifest.clean_fraction;
  spec["test_fraction"] = manifest.test_fraction;
  doc["spec"] = std::move(spec);
  std::vector<std::string> tags;
  tags.reserve(manifest.tags.size());
  for (auto t : manifest.tags) tags.push_back(to_string(t));
  doc["tags"] = std::move(tags);
  doc["flip_indices"] = manifest.flip_indices;
  return doc.dump(1) + "\n";
}

SplitManifest manifest_from_string(const std::string& text) {
  try {
    const json doc = json::parse(text);
    SplitManifest m;
    m.seed = doc.at("seed").get<std::uint64_t>();
    const auto& spec = doc.at("spec");
    m.noise.model = noise_model_from_string(spec.at("model").get<std::string>());
    m.noise.rate = spec.at("rate").get<double>();
    m.noise.seed = spec.at("seed").get<std::uint64_t>();
    if (spec.contains("pair_map")) m.noise.pair_map = spec.at("pair_map").get<std::vector<int>>();
    m.clean_fraction = spec.value("clean_fraction", 0.0);
    m.test_fraction = spec.value("test_fraction", 0.0);
    for (const auto& t : doc.at("tags")) m.tags.push_back(split_tag_from_string(t.get<std::string>()));
    m.flip_indices = doc.at("flip_indices").get<std::vector<std::size_t>>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
}

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
  write_file(path, manifest_to_string(manifest));
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_string(read_file(path));
}

Dataset apply_manifest(const Dataset& dataset, const SplitManifest& manifest) {
  if (manifest.tags.size() != dataset.size()) {
    throw ConsistencyError("manifest has " + std::to_string(manifest.tags.size()) +
                           " tags for a dataset of " + std::to_string(dataset.size()));
  }
  Dataset out = dataset;
  out.tags = manifest.tags;
  if (out.true_labels) {
    std::vector<std::size_t> flips;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.labels[i] != (*out.true_labels)[i]) flips.push_back(i);
    }
    if (flips != manifest.flip_indices) {
      throw ConsistencyError("manifest flip_indices do not match the dataset's label mismatches");
    }
  }
  return out;
}

Matrix one_hot_labels(const Dataset& dataset, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), dataset.num_classes);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out(r, static_cast<std::size_t>(dataset.labels[indices[r]])) = 1.0;
  }
  return out;
}

}  // namespace glearn::data
