#include "glearn/guidance.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "glearn/checkpoint.hpp"
#include "glearn/error.hpp"

namespace glearn::guidance {
namespace {

constexpr char kCacheMagic[4] = {'G', 'L', 'G', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

void check_hyper(const StudentHyper& hyper) {
  if (!(hyper.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  if (!(hyper.beta >= 0.0)) throw ParameterError("beta must be >= 0");
  if (!(hyper.temperature > 0.0)) throw ParameterError("temperature must be > 0");
}

template <typename T>
void put_le(std::string& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    if (offset_ + sizeof(T) > bytes_.size()) {
      throw FormatError("guidance cache: truncated at byte offset " + std::to_string(offset_));
    }
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_ + i])) << (8 * i);
    }
    offset_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string get_bytes(std::size_t n) {
    if (offset_ + n > bytes_.size()) {
      throw FormatError("guidance cache: truncated at byte offset " + std::to_string(offset_));
    }
    std::string out = bytes_.substr(offset_, n);
    offset_ += n;
    return out;
  }

  std::size_t offset() const { return offset_; }
  bool at_end() const { return offset_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

GuidanceCache::GuidanceCache(std::vector<std::size_t> sample_indices, Matrix soft_targets,
                             double temperature, std::string teacher_fingerprint)
    : indices_(std::move(sample_indices)),
      targets_(std::move(soft_targets)),
      temperature_(temperature),
      fingerprint_(std::move(teacher_fingerprint)) {
  if (indices_.size() != targets_.rows()) {
    throw ShapeError("guidance cache: " + std::to_string(indices_.size()) + " indices for " +
                     std::to_string(targets_.rows()) + " target rows");
  }
  if (!(temperature_ > 0.0)) throw ParameterError("guidance cache: temperature must be > 0");
  for (std::size_t r = 0; r < indices_.size(); ++r) {
    // Validates the row as a probability vector.
    auto row = targets_.row(r);
    nn::ProbVector(std::vector<double>(row.begin(), row.end()));
    if (!lookup_.emplace(indices_[r], r).second) {
      throw ConsistencyError("guidance cache: duplicate entry for sample " +
                             std::to_string(indices_[r]));
    }
  }
}

std::span<const double> GuidanceCache::at(std::size_t sample) const {
  const auto it = lookup_.find(sample);
  if (it == lookup_.end()) {
    throw ConsistencyError("guidance cache has no entry for sample " + std::to_string(sample));
  }
  return targets_.row(it->second);
}

GuidanceCache compute_teacher_soft_targets(const nn::ModelParams& teacher,
                                           const data::Dataset& dataset, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
  if (teacher.num_classes() != dataset.num_classes) {
    throw ShapeError("teacher emits " + std::to_string(teacher.num_classes()) +
                     " classes, dataset has " + std::to_string(dataset.num_classes));
  }
  auto noisy = dataset.indices(data::SplitTag::noisy_train);
  if (noisy.empty()) throw InputError("compute_teacher_soft_targets: empty noisy subset");
  const Matrix logits = nn::forward(teacher, dataset.features.gather_rows(noisy));
  return GuidanceCache(std::move(noisy), nn::softmax_t(logits, temperature), temperature,
                       nn::fingerprint(teacher));
}

nn::ProbVector fuse_guidance(const nn::ProbVector& p, const nn::ProbVector& y, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("beta must be finite and >= 0, got " + std::to_string(beta));
  }
  if (p.size() != y.size()) throw ShapeError("fuse_guidance: p and y lengths differ");
  if (!y.is_one_hot()) throw InputError("fuse_guidance: label vector is not one-hot");
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (p[i] + beta * y[i]) / (1.0 + beta);
  return nn::ProbVector(std::move(g));
}

GuidanceTarget guidance_target(const GuidanceCache& cache, const data::Dataset& dataset,
                               std::size_t sample, double beta) {
  const auto row = cache.at(sample);
  const nn::ProbVector p(std::vector<double>(row.begin(), row.end()));
  const auto y = nn::ProbVector::one_hot(dataset.num_classes,
                                         static_cast<std::size_t>(dataset.labels.at(sample)));
  return {fuse_guidance(p, y, beta), sample};
}

double total_loss(double guidance_loss, double clean_loss, double alpha, double temperature) {
  if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
  if (!std::isfinite(guidance_loss) || !std::isfinite(clean_loss) || guidance_loss < 0.0 ||
      clean_loss < 0.0) {
    throw InputError("total_loss: component losses must be finite and >= 0");
  }
  return alpha * temperature * temperature * guidance_loss + clean_loss;
}

StudentBatch make_student_batch(const data::Dataset& dataset, const GuidanceCache& cache,
                                std::span<const std::size_t> noisy_batch,
                                std::span<const std::size_t> clean_batch,
                                const StudentHyper& hyper) {
  check_hyper(hyper);
  if (cache.temperature() != hyper.temperature) {
    throw ConsistencyError("guidance cache was built at T=" + std::to_string(cache.temperature()) +
                           " but the run uses T=" + std::to_string(hyper.temperature));
  }
  const std::size_t C = dataset.num_classes;
  if (cache.num_classes() != C) throw ShapeError("guidance cache class count differs from dataset");
  StudentBatch batch;
  batch.noisy_features = dataset.features.gather_rows(noisy_batch);
  batch.spec.guidance_targets = Matrix(noisy_batch.size(), C);
  for (std::size_t r = 0; r < noisy_batch.size(); ++r) {
    const auto p = cache.at(noisy_batch[r]);
    const auto label = static_cast<std::size_t>(dataset.labels[noisy_batch[r]]);
    auto g = batch.spec.guidance_targets.row(r);
    for (std::size_t c = 0; c < C; ++c) {
      g[c] = (p[c] + hyper.beta * (c == label ? 1.0 : 0.0)) / (1.0 + hyper.beta);
    }
  }
  batch.spec.clean_features = dataset.features.gather_rows(clean_batch);
  batch.spec.clean_targets = data::one_hot_labels(dataset, clean_batch);
  batch.spec.alpha = hyper.alpha;
  batch.spec.temperature = hyper.temperature;
  return batch;
}

StudentLoss student_batch_loss(const nn::ModelParams& student, const data::Dataset& dataset,
                               const GuidanceCache& cache,
                               std::span<const std::size_t> noisy_batch,
                               std::span<const std::size_t> clean_batch,
                               const StudentHyper& hyper) {
  const StudentBatch batch = make_student_batch(dataset, cache, noisy_batch, clean_batch, hyper);
  const auto loss = nn::evaluate_loss(student, batch.noisy_features, batch.spec);
  return {total_loss(loss.guidance, loss.clean, hyper.alpha, hyper.temperature), loss.guidance,
          loss.clean};
}

void save_cache(const GuidanceCache& cache, const std::filesystem::path& path) {
  std::string out(kCacheMagic, sizeof kCacheMagic);
  put_le<std::uint32_t>(out, kCacheVersion);
  put_le<double>(out, cache.temperature());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cache.teacher_fingerprint().size()));
  out += cache.teacher_fingerprint();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cache.num_classes()));
  put_le<std::uint64_t>(out, cache.size());
  for (std::size_t r = 0; r < cache.size(); ++r) {
    put_le<std::uint64_t>(out, cache.sample_indices()[r]);
    for (double p : cache.soft_targets().row(r)) put_le<double>(out, p);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file << out;
  if (!file) throw Error("failed writing " + path.string());
}

GuidanceCache load_cache(const std::filesystem::path& path, double expected_temperature,
                         const std::string& expected_fingerprint) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open guidance cache " + path.string());
  std::ostringstream buf;
  buf << file.rdbuf();
  Reader in(buf.str());

  if (in.get_bytes(4) != std::string(kCacheMagic, sizeof kCacheMagic)) {
    throw FormatError("guidance cache: bad magic at byte offset 0");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCacheVersion) {
    throw FormatError("guidance cache: unsupported version " + std::to_string(version));
  }
  const double temperature = in.get<double>();
  const auto fp_len = in.get<std::uint32_t>();
  const std::string fp = in.get_bytes(fp_len);
  if (fp != expected_fingerprint) {
    throw ConsistencyError("guidance cache was built from teacher " + fp +
                           ", expected teacher " + expected_fingerprint);
  }
  if (temperature != expected_temperature) {
    throw ConsistencyError("guidance cache was built at T=" + std::to_string(temperature) +
                           ", run config has T=" + std::to_string(expected_temperature));
  }
  const auto classes = in.get<std::uint32_t>();
  const auto count = in.get<std::uint64_t>();
  std::vector<std::size_t> indices;
  indices.reserve(count);
  Matrix targets(count, classes);
  for (std::uint64_t r = 0; r < count; ++r) {
    indices.push_back(in.get<std::uint64_t>());
    for (double& p : targets.row(r)) p = in.get<double>();
  }
  if (!in.at_end()) {
    throw FormatError("guidance cache: trailing bytes at offset " + std::to_string(in.offset()));
  }
  return GuidanceCache(std::move(indices), std::move(targets), temperature, fp);
}

}  // namespace glearn::guidance
