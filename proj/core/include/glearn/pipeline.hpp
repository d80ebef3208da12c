#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glearn/data.hpp"
#include "glearn/guidance.hpp"
#include "glearn/nn.hpp"

namespace glearn::pipeline {

struct LrStep {
  std::size_t epoch = 0;
  double lr = 0.0;
  bool operator==(const LrStep&) const = default;
};

// Piecewise-constant: the last entry whose epoch is <= the given epoch.
double lr_at(const std::vector<LrStep>& schedule, std::size_t epoch);

struct TrainConfig {
  double alpha = 0.1;
  double beta = 0.3;
  double temperature = 5.0;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::size_t batch_size = 64;

  // Step epochs follow the original recipe; the rates are scaled up for
  // from-scratch MLPs on small synthetic data, where 1e-3 / 1e-4 underfit.
  std::size_t teacher_epochs = 25;
  std::vector<LrStep> teacher_lr_schedule{{0, 0.05}, {10, 5e-3}, {15, 5e-4}, {20, 5e-5}};
  std::size_t student_epochs = 11;
  std::vector<LrStep> student_lr_schedule{{0, 5e-3}, {5, 5e-4}, {8, 5e-5}};
  std::size_t finetune_epochs = 5;
  // Defaults to the first student learning rate divided by 10.
  std::optional<double> finetune_lr;

  std::vector<std::size_t> hidden_dims{64};
  std::uint64_t seed = 0;

  // Throws ParameterError on a broken invariant.
  void validate() const;
  double finetune_learning_rate() const;
  guidance::StudentHyper student_hyper() const { return {alpha, beta, temperature}; }

  bool operator==(const TrainConfig&) const = default;
};

enum class DataSource { blobs, csv, idx };
std::string to_string(DataSource source);
DataSource data_source_from_string(const std::string& name);

// How to obtain a tagged (and possibly noise-injected) dataset from a seed.
struct DataRecipe {
  DataSource source = DataSource::blobs;
  std::string path;           // csv / idx input
  std::string labels_path;    // idx label file
  std::string manifest_path;  // replay tags instead of split + noise

  std::size_t num_classes = 10;
  std::size_t per_class = 500;
  std::size_t dim = 20;
  double sigma = 0.24;

  data::NoiseModel noise_model = data::NoiseModel::symmetric;
  double noise_rate = 0.0;
  std::optional<std::vector<int>> pair_map;

  double clean_fraction = 0.05;
  double test_fraction = 0.2;

  void validate() const;
  bool operator==(const DataRecipe&) const = default;
};

struct ExperimentConfig {
  TrainConfig train;
  DataRecipe data;
  bool operator==(const ExperimentConfig&) const = default;
};

struct BuiltDataset {
  data::Dataset dataset;
  data::SplitManifest manifest;
};

// generate/load -> split -> inject noise into noisy_train; or load + manifest.
BuiltDataset build_dataset(const DataRecipe& recipe, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  double loss_total = 0.0;
  double loss_guidance = 0.0;
  double loss_clean = 0.0;
  std::optional<double> test_accuracy;
  bool operator==(const EpochRecord&) const = default;
};

struct StageReport {
  std::string stage;
  std::vector<EpochRecord> epochs;
  std::optional<double> final_test_accuracy;
  std::string model_fingerprint;
  double wall_time_seconds = 0.0;
};

struct RunReport {
  std::string variant;
  std::vector<StageReport> stages;
  std::optional<double> final_test_accuracy;
  TrainConfig config;
  std::optional<DataRecipe> data;
  std::map<std::string, std::string> fingerprints;
  double wall_time_seconds = 0.0;

  const StageReport& stage(std::string_view name) const;
};

// Called after every optimizer step with the updated parameters.
using StepObserver =
    std::function<void(std::size_t epoch, std::size_t step, const nn::ModelParams& params)>;

struct TrainResult {
  nn::ModelParams model;
  RunReport report;
};

struct StudentResult {
  nn::ModelParams model;
  RunReport report;
  guidance::GuidanceCache cache;
};

// Per-stage shuffle seed, e.g. stage_seed(config, "student") drives the mixed
// batch iterator of the student stage.
std::uint64_t stage_seed(const TrainConfig& config, std::string_view stage);

// Cross-entropy training on clean_train + noisy_train with given labels.
TrainResult train_teacher(const data::Dataset& dataset, const TrainConfig& config,
                          const StepObserver& observer = {});

// Multi-task guidance training from a copy of the teacher.
StudentResult train_student(const nn::ModelParams& teacher, const data::Dataset& dataset,
                            const TrainConfig& config, const StepObserver& observer = {});

// Same, reusing a previously saved cache. The cache must carry the teacher's
// fingerprint and the config temperature and cover every noisy sample.
StudentResult train_student(const nn::ModelParams& teacher, const data::Dataset& dataset,
                            const TrainConfig& config, guidance::GuidanceCache cache,
                            const StepObserver& observer = {});

// Cross-entropy on clean_train only at the fine-tuning learning rate.
TrainResult finetune_clean(const nn::ModelParams& model, const data::Dataset& dataset,
                           const TrainConfig& config, const StepObserver& observer = {});

// Fresh-init cross-entropy training on one split (the noisy-only and
// clean-only baselines). Uses the teacher schedule and shuffle stream.
TrainResult train_on_split(const data::Dataset& dataset, data::SplitTag tag,
                           const TrainConfig& config, std::string stage_name,
                           const StepObserver& observer = {});

enum class Variant { noisy_only, clean_only, mixed, guidance, guidance_finetuned };
std::string to_string(Variant v);
// Throws ParameterError listing the valid names.
Variant variant_from_string(const std::string& name);
std::vector<std::string> variant_names();

struct BaselineResult {
  RunReport report;
  // Checkpoint name ("teacher", "student", ...) -> model.
  std::vector<std::pair<std::string, nn::ModelParams>> models;
};

BaselineResult run_baseline(Variant variant, const data::Dataset& dataset,
                            const TrainConfig& config);

}  // namespace glearn::pipeline
