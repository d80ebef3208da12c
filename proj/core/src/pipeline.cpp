#include "glearn/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "glearn/checkpoint.hpp"
#include "glearn/error.hpp"
#include "glearn/metrics.hpp"
#include "glearn/rng.hpp"

namespace glearn::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_schedule(const std::vector<LrStep>& schedule, const char* name) {
  if (schedule.empty()) throw ParameterError(std::string(name) + " is empty");
  if (schedule.front().epoch != 0) {
    throw ParameterError(std::string(name) + " must start at epoch 0");
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].lr >= 0.0) || !std::isfinite(schedule[i].lr)) {
      throw ParameterError(std::string(name) + ": learning rates must be finite and >= 0");
    }
    if (i > 0 && schedule[i].epoch <= schedule[i - 1].epoch) {
      throw ParameterError(std::string(name) + ": epochs must be strictly increasing");
    }
  }
}

std::optional<double> test_accuracy(const nn::ModelParams& model, const data::Dataset& dataset) {
  for (auto tag : dataset.tags) {
    if (tag == data::SplitTag::test) return eval::accuracy(model, dataset, data::SplitTag::test);
  }
  return std::nullopt;
}

std::vector<std::size_t> model_dims(const data::Dataset& dataset, const TrainConfig& config) {
  std::vector<std::size_t> dims{dataset.dim()};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(dataset.num_classes);
  return dims;
}

// Plain cross-entropy epochs over a fixed index set.
StageReport train_cross_entropy(nn::ModelParams& model, const data::Dataset& dataset,
                                const std::vector<std::size_t>& indices,
                                const TrainConfig& config, std::string stage_name,
                                std::string_view shuffle_stream, std::size_t epochs,
                                const std::function<double(std::size_t)>& lr_for_epoch,
                                const StepObserver& observer) {
  const auto start = Clock::now();
  StageReport stage;
  stage.stage = std::move(stage_name);
  nn::OptState state = nn::OptState::for_params(model);
  const std::uint64_t seed = stage_seed(config, shuffle_stream);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_for_epoch(epoch);
    double loss_sum = 0.0;
    for (const auto& batch : data::shuffled_batches(indices, config.batch_size, seed, epoch)) {
      const Matrix x = dataset.features.gather_rows(batch);
      const nn::LossSpec spec = nn::CrossEntropyLoss{data::one_hot_labels(dataset, batch)};
      const auto result = nn::backward(model, x, spec);
      nn::sgd_step(model, result.grads, state, rec.lr, config.momentum, config.weight_decay);
      loss_sum += result.loss.total;
      ++rec.steps;
      if (observer) observer(epoch, rec.steps - 1, model);
    }
    if (rec.steps > 0) rec.loss_total = rec.loss_clean = loss_sum / static_cast<double>(rec.steps);
    rec.test_accuracy = test_accuracy(model, dataset);
    stage.epochs.push_back(rec);
  }
  stage.final_test_accuracy = test_accuracy(model, dataset);
  stage.model_fingerprint = nn::fingerprint(model);
  stage.wall_time_seconds = seconds_since(start);
  return stage;
}

RunReport single_stage_report(std::string variant, StageReport stage, const TrainConfig& config) {
  RunReport report;
  report.variant = std::move(variant);
  report.final_test_accuracy = stage.final_test_accuracy;
  report.wall_time_seconds = stage.wall_time_seconds;
  report.fingerprints[stage.stage] = stage.model_fingerprint;
  report.stages.push_back(std::move(stage));
  report.config = config;
  return report;
}

std::vector<std::size_t> training_indices(const data::Dataset& dataset) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.tags[i] != data::SplitTag::test) idx.push_back(i);
  }
  return idx;
}

void append_stage(RunReport& into, const RunReport& from) {
  for (const auto& s : from.stages) {
    into.stages.push_back(s);
    into.fingerprints[s.stage] = s.model_fingerprint;
  }
  into.final_test_accuracy = from.final_test_accuracy;
  into.wall_time_seconds += from.wall_time_seconds;
}

}  // namespace

double lr_at(const std::vector<LrStep>& schedule, std::size_t epoch) {
  if (schedule.empty()) throw ParameterError("empty learning-rate schedule");
  double lr = schedule.front().lr;
  for (const auto& step : schedule) {
    if (step.epoch <= epoch) lr = step.lr;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be >= 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("temperature must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  check_schedule(teacher_lr_schedule, "teacher_lr_schedule");
  check_schedule(student_lr_schedule, "student_lr_schedule");
  if (finetune_lr && !(*finetune_lr >= 0.0)) throw ParameterError("finetune_lr must be >= 0");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ParameterError("hidden_dims entries must be positive");
  }
}

double TrainConfig::finetune_learning_rate() const {
  if (finetune_lr) return *finetune_lr;
  if (student_lr_schedule.empty()) throw ParameterError("student_lr_schedule is empty");
  return student_lr_schedule.front().lr / 10.0;
}

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::blobs:
      return "blobs";
    case DataSource::csv:
      return "csv";
    case DataSource::idx:
      return "idx";
  }
  return "unknown";
}

DataSource data_source_from_string(const std::string& name) {
  if (name == "blobs") return DataSource::blobs;
  if (name == "csv") return DataSource::csv;
  if (name == "idx") return DataSource::idx;
  throw ParameterError("unknown data_source '" + name + "' (expected blobs, csv or idx)");
}

void DataRecipe::validate() const {
  if (source != DataSource::blobs && path.empty()) {
    throw ParameterError("data_path is required for data_source " + to_string(source));
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw ParameterError("noise_rate must lie in [0, 1)");
  if (!(clean_fraction >= 0.0 && clean_fraction < 1.0)) {
    throw ParameterError("clean_fraction must lie in [0, 1)");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test_fraction must lie in [0, 1)");
  }
  if (!(clean_fraction + test_fraction < 1.0)) {
    throw ParameterError("clean_fraction + test_fraction must be < 1");
  }
  if (source == DataSource::blobs) {
    if (num_classes < 2 || dim < 2 || per_class < 1) {
      throw ParameterError("blobs need num_classes >= 2, dim >= 2, per_class >= 1");
    }
    if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  }
}

BuiltDataset build_dataset(const DataRecipe& recipe, std::uint64_t seed) {
  recipe.validate();
  data::Dataset base;
  if (recipe.source == DataSource::blobs) {
    base = data::make_blobs({recipe.num_classes, recipe.per_class, recipe.dim, recipe.sigma, seed});
  } else {
    data::LoadOptions opts;
    opts.labels_path = recipe.labels_path;
    base = data::load_dataset(recipe.path,
                              recipe.source == DataSource::csv ? data::DataFormat::csv
                                                               : data::DataFormat::idx,
                              opts);
  }

  BuiltDataset out;
  out.manifest.seed = seed;
  out.manifest.noise = {recipe.noise_model, recipe.noise_rate, seed, recipe.pair_map};
  out.manifest.clean_fraction = recipe.clean_fraction;
  out.manifest.test_fraction = recipe.test_fraction;

  if (!recipe.manifest_path.empty()) {
    auto manifest = data::load_manifest(recipe.manifest_path);
    out.dataset = data::apply_manifest(base, manifest);
    out.manifest = std::move(manifest);
    return out;
  }
  const data::Dataset tagged =
      data::split(base, recipe.clean_fraction, recipe.test_fraction, seed);
  auto noisy = data::inject_noise(tagged, out.manifest.noise);
  out.dataset = std::move(noisy.dataset);
  out.manifest.tags = out.dataset.tags;
  out.manifest.flip_indices = noisy.mask.flipped_indices();
  return out;
}

const StageReport& RunReport::stage(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.stage == name) return s;
  }
  throw InputError("report has no stage '" + std::string(name) + "'");
}

std::uint64_t stage_seed(const TrainConfig& config, std::string_view stage) {
  return derive_seed(config.seed, stage);
}

TrainResult train_teacher(const data::Dataset& dataset, const TrainConfig& config,
                          const StepObserver& observer) {
  config.validate();
  dataset.validate();
  const auto indices = training_indices(dataset);
  if (indices.empty()) throw ConfigError("train_teacher: no clean or noisy training samples");
  nn::ModelParams model = nn::init_params(model_dims(dataset, config), config.seed);
  auto stage = train_cross_entropy(
      model, dataset, indices, config, "teacher", "teacher", config.teacher_epochs,
      [&](std::size_t e) { return lr_at(config.teacher_lr_schedule, e); }, observer);
  return {std::move(model), single_stage_report("mixed", std::move(stage), config)};
}

TrainResult train_on_split(const data::Dataset& dataset, data::SplitTag tag,
                           const TrainConfig& config, std::string stage_name,
                           const StepObserver& observer) {
  config.validate();
  dataset.validate();
  const auto indices = dataset.indices(tag);
  if (indices.empty()) {
    throw ConfigError("split '" + data::to_string(tag) + "' is empty; nothing to train on");
  }
  nn::ModelParams model = nn::init_params(model_dims(dataset, config), config.seed);
  auto stage = train_cross_entropy(
      model, dataset, indices, config, stage_name, "teacher", config.teacher_epochs,
      [&](std::size_t e) { return lr_at(config.teacher_lr_schedule, e); }, observer);
  return {std::move(model), single_stage_report(stage_name, std::move(stage), config)};
}

StudentResult train_student(const nn::ModelParams& teacher, const data::Dataset& dataset,
                            const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  return train_student(teacher, dataset, config,
                       guidance::compute_teacher_soft_targets(teacher, dataset, config.temperature),
                       observer);
}

StudentResult train_student(const nn::ModelParams& teacher, const data::Dataset& dataset,
                            const TrainConfig& config, guidance::GuidanceCache cache,
                            const StepObserver& observer) {
  config.validate();
  dataset.validate();
  teacher.validate();
  if (teacher.input_dim() != dataset.dim() || teacher.num_classes() != dataset.num_classes) {
    throw ShapeError("teacher dims " + std::to_string(teacher.input_dim()) + "->" +
                     std::to_string(teacher.num_classes()) + " do not fit dataset " +
                     std::to_string(dataset.dim()) + "->" + std::to_string(dataset.num_classes));
  }
  if (dataset.indices(data::SplitTag::clean_train).empty()) {
    throw ConfigError(
        "train_student needs a nonempty clean subset; use run_baseline noisy_only/mixed instead");
  }
  const auto start = Clock::now();
  const auto hyper = config.student_hyper();
  if (cache.teacher_fingerprint() != nn::fingerprint(teacher)) {
    throw ConsistencyError("guidance cache was built from a different teacher (" +
                           cache.teacher_fingerprint() + ")");
  }
  if (cache.temperature() != config.temperature) {
    throw ConsistencyError("guidance cache temperature differs from the run config");
  }
  const auto noisy = dataset.indices(data::SplitTag::noisy_train);
  if (cache.size() != noisy.size()) {
    throw ConsistencyError("guidance cache has " + std::to_string(cache.size()) +
                           " entries for " + std::to_string(noisy.size()) + " noisy samples");
  }
  for (std::size_t i : noisy) {
    if (!cache.contains(i)) {
      throw ConsistencyError("guidance cache has no entry for noisy sample " + std::to_string(i));
    }
  }

  nn::ModelParams student = teacher;
  nn::OptState state = nn::OptState::for_params(student);
  const std::uint64_t seed = stage_seed(config, "student");

  StageReport stage;
  stage.stage = "student";
  for (std::size_t epoch = 0; epoch < config.student_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at(config.student_lr_schedule, epoch);
    double total = 0.0;
    double guide = 0.0;
    double clean = 0.0;
    data::MixedBatchIterator it(dataset, config.batch_size, seed, epoch);
    while (!it.done()) {
      const auto pair = it.next();
      const auto batch = guidance::make_student_batch(dataset, cache, pair.noisy, pair.clean, hyper);
      const auto result = nn::backward(student, batch.noisy_features, batch.spec);
      nn::sgd_step(student, result.grads, state, rec.lr, config.momentum, config.weight_decay);
      total += result.loss.total;
      guide += result.loss.guidance;
      clean += result.loss.clean;
      ++rec.steps;
      if (observer) observer(epoch, rec.steps - 1, student);
    }
    const double n = static_cast<double>(rec.steps);
    rec.loss_total = total / n;
    rec.loss_guidance = guide / n;
    rec.loss_clean = clean / n;
    rec.test_accuracy = test_accuracy(student, dataset);
    stage.epochs.push_back(rec);
  }
  stage.final_test_accuracy = test_accuracy(student, dataset);
  stage.model_fingerprint = nn::fingerprint(student);
  stage.wall_time_seconds = seconds_since(start);

  RunReport report = single_stage_report("guidance", std::move(stage), config);
  report.fingerprints["teacher"] = cache.teacher_fingerprint();
  return {std::move(student), std::move(report), std::move(cache)};
}

TrainResult finetune_clean(const nn::ModelParams& model, const data::Dataset& dataset,
                           const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  dataset.validate();
  const auto clean = dataset.indices(data::SplitTag::clean_train);
  if (clean.empty()) throw ConfigError("finetune_clean: clean subset is empty");
  nn::ModelParams tuned = model;
  const double lr = config.finetune_learning_rate();
  auto stage = train_cross_entropy(
      tuned, dataset, clean, config, "finetune", "finetune", config.finetune_epochs,
      [lr](std::size_t) { return lr; }, observer);
  return {std::move(tuned), single_stage_report("finetune", std::move(stage), config)};
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::noisy_only:
      return "noisy_only";
    case Variant::clean_only:
      return "clean_only";
    case Variant::mixed:
      return "mixed";
    case Variant::guidance:
      return "guidance";
    case Variant::guidance_finetuned:
      return "guidance_finetuned";
  }
  return "unknown";
}

std::vector<std::string> variant_names() {
  return {"noisy_only", "clean_only", "mixed", "guidance", "guidance_finetuned"};
}

Variant variant_from_string(const std::string& name) {
  if (name == "noisy_only") return Variant::noisy_only;
  if (name == "clean_only") return Variant::clean_only;
  if (name == "mixed") return Variant::mixed;
  if (name == "guidance") return Variant::guidance;
  if (name == "guidance_finetuned") return Variant::guidance_finetuned;
  std::string valid;
  for (const auto& n : variant_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ParameterError("unknown variant '" + name + "' (valid: " + valid + ")");
}

BaselineResult run_baseline(Variant variant, const data::Dataset& dataset,
                            const TrainConfig& config) {
  BaselineResult out;
  switch (variant) {
    case Variant::noisy_only: {
      auto r = train_on_split(dataset, data::SplitTag::noisy_train, config, "noisy_only");
      out.report = std::move(r.report);
      out.models.emplace_back("noisy_only", std::move(r.model));
      break;
    }
    case Variant::clean_only: {
      auto r = train_on_split(dataset, data::SplitTag::clean_train, config, "clean_only");
      out.report = std::move(r.report);
      out.models.emplace_back("clean_only", std::move(r.model));
      break;
    }
    case Variant::mixed: {
      auto r = train_teacher(dataset, config);
      out.report = std::move(r.report);
      out.models.emplace_back("teacher", std::move(r.model));
      break;
    }
    case Variant::guidance:
    case Variant::guidance_finetuned: {
      auto teacher = train_teacher(dataset, config);
      auto student = train_student(teacher.model, dataset, config);
      out.report = std::move(teacher.report);
      append_stage(out.report, student.report);
      out.models.emplace_back("teacher", std::move(teacher.model));
      if (variant == Variant::guidance_finetuned) {
        auto tuned = finetune_clean(student.model, dataset, config);
        append_stage(out.report, tuned.report);
        out.models.emplace_back("student", std::move(student.model));
        out.models.emplace_back("finetuned", std::move(tuned.model));
      } else {
        out.models.emplace_back("student", std::move(student.model));
      }
      break;
    }
  }
  out.report.variant = to_string(variant);
  out.report.config = config;
  return out;
}

}  // namespace glearn::pipeline
