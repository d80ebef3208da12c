#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "glearn/data.hpp"
#include "glearn/matrix.hpp"
#include "glearn/nn.hpp"

namespace glearn::guidance {

// Frozen-teacher soft targets for the noisy subset, one row per noisy sample.
// Built once, read-only afterwards.
class GuidanceCache {
 public:
  GuidanceCache(std::vector<std::size_t> sample_indices, Matrix soft_targets, double temperature,
                std::string teacher_fingerprint);

  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t num_classes() const noexcept { return targets_.cols(); }
  double temperature() const noexcept { return temperature_; }
  const std::string& teacher_fingerprint() const noexcept { return fingerprint_; }
  std::span<const std::size_t> sample_indices() const noexcept { return indices_; }
  const Matrix& soft_targets() const noexcept { return targets_; }

  bool contains(std::size_t sample) const { return lookup_.contains(sample); }
  // Throws ConsistencyError naming the sample on a miss.
  std::span<const double> at(std::size_t sample) const;

  bool operator==(const GuidanceCache& other) const {
    return indices_ == other.indices_ && targets_ == other.targets_ &&
           temperature_ == other.temperature_ && fingerprint_ == other.fingerprint_;
  }

 private:
  std::vector<std::size_t> indices_;
  Matrix targets_;
  double temperature_;
  std::string fingerprint_;
  std::unordered_map<std::size_t, std::size_t> lookup_;
};

struct GuidanceTarget {
  nn::ProbVector g;
  std::size_t source_index;
};

// p_i = softmax(teacher(x_i) / T) for every noisy_train sample.
GuidanceCache compute_teacher_soft_targets(const nn::ModelParams& teacher,
                                           const data::Dataset& dataset, double temperature);

// g = (p + beta * y) / (1 + beta)
nn::ProbVector fuse_guidance(const nn::ProbVector& p, const nn::ProbVector& y, double beta);

GuidanceTarget guidance_target(const GuidanceCache& cache, const data::Dataset& dataset,
                               std::size_t sample, double beta);

// alpha * T^2 * guidance_loss + clean_loss
double total_loss(double guidance_loss, double clean_loss, double alpha, double temperature);

struct StudentHyper {
  double alpha = 0.1;
  double beta = 0.3;
  double temperature = 5.0;
};

struct StudentLoss {
  double total = 0.0;
  double guidance = 0.0;
  double clean = 0.0;
};

// Noisy-batch features plus the multi-task spec for nn::backward().
struct StudentBatch {
  Matrix noisy_features;
  nn::TotalLoss spec;
};

// Fused guidance rows for the noisy batch and one-hot rows for the clean batch.
StudentBatch make_student_batch(const data::Dataset& dataset, const GuidanceCache& cache,
                                std::span<const std::size_t> noisy_batch,
                                std::span<const std::size_t> clean_batch,
                                const StudentHyper& hyper);

// Forward-only evaluation of the student objective on one paired batch.
StudentLoss student_batch_loss(const nn::ModelParams& student, const data::Dataset& dataset,
                               const GuidanceCache& cache,
                               std::span<const std::size_t> noisy_batch,
                               std::span<const std::size_t> clean_batch,
                               const StudentHyper& hyper);

// Binary sidecar: magic "GLGC", version, T, fingerprint, C, then (index, p)
// records in little-endian byte order.
void save_cache(const GuidanceCache& cache, const std::filesystem::path& path);
// Verifies T and the teacher fingerprint, throwing ConsistencyError on mismatch.
GuidanceCache load_cache(const std::filesystem::path& path, double expected_temperature,
                         const std::string& expected_fingerprint);

}  // namespace glearn::guidance
