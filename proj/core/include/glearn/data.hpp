#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glearn/matrix.hpp"

namespace glearn::data {

enum class SplitTag : std::uint8_t { clean_train, noisy_train, test };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& name);

struct Dataset {
  Matrix features;                             // [N x d]
  std::vector<int> labels;                     // observed, possibly noisy
  std::vector<SplitTag> tags;                  // one per sample
  std::optional<std::vector<int>> true_labels; // known for synthetic data
  std::size_t num_classes = 0;
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // Ascending sample indices carrying the tag.
  std::vector<std::size_t> indices(SplitTag tag) const;
  // The label a sample should be scored against: true label when known.
  int reference_label(std::size_t i) const;

  // Throws DataError/ShapeError when an invariant is broken.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

enum class DataFormat { csv, idx };
DataFormat data_format_from_string(const std::string& name);

struct LoadOptions {
  // For idx: the label file. Defaults to the MNIST naming convention
  // ("*-images-idx3-ubyte" -> "*-labels-idx1-ubyte").
  std::filesystem::path labels_path;
  // When set, labels must lie in [0, num_classes); otherwise C = max label + 1.
  std::optional<std::size_t> num_classes;
};

// All samples are tagged noisy_train until split() assigns tags.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LoadOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options = {});
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 const LoadOptions& options = {});

// Header f0..f{d-1}[,true_label],label; doubles written with 17 significant
// digits so a reload reproduces every value exactly.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct BlobSpec {
  std::size_t num_classes = 10;
  std::size_t per_class = 500;
  std::size_t dim = 20;
  double sigma = 0.25;
  std::uint64_t seed = 0;
};

// Isotropic Gaussian clusters around seeded centers rescaled so the closest
// pair of centers is exactly one unit apart. Samples are class-major.
Dataset make_blobs(const BlobSpec& spec);

enum class NoiseModel { symmetric, pair_flip };
std::string to_string(NoiseModel model);
NoiseModel noise_model_from_string(const std::string& name);

struct NoiseSpec {
  NoiseModel model = NoiseModel::symmetric;
  double rate = 0.0;
  std::uint64_t seed = 0;
  // pair_flip target per class; defaults to c -> (c + 1) mod C.
  std::optional<std::vector<int>> pair_map;
};

struct FlipMask {
  std::vector<bool> corrupted;

  std::size_t count() const;
  std::vector<std::size_t> flipped_indices() const;
};

struct NoisyDataset {
  Dataset dataset;
  FlipMask mask;
};

// Corrupts labels of noisy_train samples only, starting from true labels.
NoisyDataset inject_noise(const Dataset& dataset, const NoiseSpec& spec);

// Stratified assignment of clean_train / test / noisy_train tags. Within each
// class's shuffled order the test samples come first and the clean ones next,
// so for a fixed seed the test set does not depend on clean_fraction and
// smaller clean subsets are contained in larger ones. Test labels are reset to
// true labels.
Dataset split(const Dataset& dataset, double clean_fraction, double test_fraction,
              std::uint64_t seed);

struct BatchPair {
  std::vector<std::size_t> noisy;
  std::vector<std::size_t> clean;
};

// One epoch of paired batches: the noisy subset is visited once in seeded
// shuffled order (the final short batch is kept) while the clean subset is
// cycled, reshuffling at every wrap, so each step gets a full clean batch.
class MixedBatchIterator {
 public:
  MixedBatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                     std::uint64_t epoch);

  std::size_t steps() const noexcept;
  bool done() const noexcept { return cursor_ >= noisy_order_.size(); }
  BatchPair next();

 private:
  void reshuffle_clean();

  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_;
  std::vector<std::size_t> noisy_order_;
  std::vector<std::size_t> clean_pool_;
  std::vector<std::size_t> clean_order_;
  std::size_t cursor_ = 0;
  std::size_t clean_cursor_ = 0;
  std::uint64_t clean_wraps_ = 0;
};

// Seeded shuffled minibatches over an explicit index set; final short batch kept.
std::vector<std::vector<std::size_t>> shuffled_batches(std::vector<std::size_t> indices,
                                                       std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch);

// Replay manifest {seed, spec, tags, flip_indices}.
struct SplitManifest {
  std::uint64_t seed = 0;
  NoiseSpec noise;
  double clean_fraction = 0.0;
  double test_fraction = 0.0;
  std::vector<SplitTag> tags;
  std::vector<std::size_t> flip_indices;
};

std::string manifest_to_string(const SplitManifest& manifest);
SplitManifest manifest_from_string(const std::string& text);
void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);
// Applies the manifest's tags; sample counts must agree.
Dataset apply_manifest(const Dataset& dataset, const SplitManifest& manifest);

// One-hot rows for the given samples' observed labels.
Matrix one_hot_labels(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace glearn::data
