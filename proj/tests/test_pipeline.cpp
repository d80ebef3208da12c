#include <gtest/gtest.h>

#include "glearn/checkpoint.hpp"
#include "glearn/config_json.hpp"
#include "glearn/error.hpp"
#include "glearn/pipeline.hpp"
#include "support.hpp"

namespace {

using namespace glearn::pipeline;
namespace data = glearn::data;
namespace nn = glearn::nn;
namespace gt = glearn::testing;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.data.num_classes = 3;
  cfg.data.per_class = 40;
  cfg.data.dim = 4;
  cfg.data.sigma = 0.3;
  cfg.data.noise_rate = 0.3;
  cfg.data.clean_fraction = 0.1;
  cfg.data.test_fraction = 0.25;
  cfg.train.hidden_dims = {6};
  cfg.train.batch_size = 8;
  cfg.train.teacher_epochs = 3;
  cfg.train.student_epochs = 2;
  cfg.train.finetune_epochs = 1;
  cfg.train.seed = 4;
  return cfg;
}

TEST(Schedule, PiecewiseConstant) {
  const std::vector<LrStep> s{{0, 1.0}, {5, 0.1}, {8, 0.01}};
  EXPECT_EQ(lr_at(s, 0), 1.0);
  EXPECT_EQ(lr_at(s, 4), 1.0);
  EXPECT_EQ(lr_at(s, 5), 0.1);
  EXPECT_EQ(lr_at(s, 100), 0.01);
}

TEST(Config, ValidationRejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = -1.0;
  EXPECT_THROW(c.validate(), glearn::ParameterError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), glearn::ParameterError);
  c = {};
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), glearn::ParameterError);
  EXPECT_DOUBLE_EQ(TrainConfig{}.finetune_learning_rate(),
                   TrainConfig{}.student_lr_schedule.front().lr / 10.0);
}

TEST(Config, JsonRoundTripAndErrors) {
  const auto cfg = small_config();
  EXPECT_EQ(config_from_string(config_to_string(cfg)).train.hidden_dims, cfg.train.hidden_dims);
  const auto back = config_from_string(config_to_string(cfg));
  EXPECT_EQ(config_to_string(back), config_to_string(cfg));

  const auto partial = config_from_string(R"({"alpha": 0.5})");
  EXPECT_EQ(partial.train.alpha, 0.5);
  EXPECT_EQ(partial.train.beta, TrainConfig{}.beta);

  EXPECT_THROW(config_from_string(R"({"alpah": 0.5})"), glearn::ParameterError);
  try {
    config_from_string("{\n  \"alpha\": ,\n}");
    FAIL() << "expected FormatError";
  } catch (const glearn::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(BuildDataset, SplitsInjectsAndReplaysManifest) {
  const auto cfg = small_config();
  const auto built = build_dataset(cfg.data, 7);
  const auto& ds = built.dataset;
  EXPECT_EQ(ds.size(), 120u);
  EXPECT_EQ(ds.indices(data::SplitTag::test).size(), 30u);
  EXPECT_EQ(ds.indices(data::SplitTag::clean_train).size(), 12u);
  for (std::size_t i : built.manifest.flip_indices) {
    EXPECT_EQ(ds.tags[i], data::SplitTag::noisy_train);
  }
  EXPECT_EQ(build_dataset(cfg.data, 7).dataset, ds);

  const auto dir = gt::temp_dir("manifest");
  data::save_manifest(built.manifest, dir / "m.json");
  data::write_csv(ds, dir / "d.csv");
  auto recipe = cfg.data;
  recipe.source = DataSource::csv;
  recipe.path = (dir / "d.csv").string();
  recipe.manifest_path = (dir / "m.json").string();
  const auto replay = build_dataset(recipe, 99);
  EXPECT_EQ(replay.dataset.tags, ds.tags);
  EXPECT_EQ(replay.dataset.labels, ds.labels);
  EXPECT_EQ(replay.dataset.features, ds.features);
}

TEST(Teacher, DeterministicAndReported) {
  const auto cfg = small_config();
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto a = train_teacher(ds, cfg.train);
  const auto b = train_teacher(ds, cfg.train);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(report_to_string(a.report), report_to_string(b.report));
  EXPECT_EQ(a.report.stages.size(), 1u);
  EXPECT_EQ(a.report.stages[0].epochs.size(), 3u);
  EXPECT_EQ(a.report.stages[0].epochs[0].lr, cfg.train.teacher_lr_schedule[0].lr);
  EXPECT_EQ(a.report.stage("teacher").model_fingerprint, nn::fingerprint(a.model));
  EXPECT_THROW(a.report.stage("student"), glearn::InputError);
  EXPECT_EQ(report_to_string(a.report).find("wall_time"), std::string::npos);
}

TEST(Student, AlphaZeroMatchesCleanOnlyStepForStep) {
  auto cfg = small_config();
  cfg.train.alpha = 0.0;
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto teacher = train_teacher(ds, cfg.train).model;

  std::vector<nn::ModelParams> observed;
  train_student(teacher, ds, cfg.train,
                [&](std::size_t, std::size_t, const nn::ModelParams& p) { observed.push_back(p); });

  // Reference: clean-only cross-entropy from the teacher with the same batches.
  std::vector<nn::ModelParams> reference;
  nn::ModelParams model = teacher;
  auto state = nn::OptState::for_params(model);
  const auto seed = stage_seed(cfg.train, "student");
  for (std::size_t epoch = 0; epoch < cfg.train.student_epochs; ++epoch) {
    data::MixedBatchIterator it(ds, cfg.train.batch_size, seed, epoch);
    while (!it.done()) {
      const auto pair = it.next();
      const auto r = nn::backward(model, ds.features.gather_rows(pair.clean),
                                  nn::CrossEntropyLoss{data::one_hot_labels(ds, pair.clean)});
      nn::sgd_step(model, r.grads, state, lr_at(cfg.train.student_lr_schedule, epoch),
                   cfg.train.momentum, cfg.train.weight_decay);
      reference.push_back(model);
    }
  }
  ASSERT_EQ(observed.size(), reference.size());
  ASSERT_FALSE(observed.empty());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ASSERT_EQ(nn::checkpoint_to_string(observed[i]), nn::checkpoint_to_string(reference[i]))
        << "diverged at step " << i;
  }
}

TEST(Student, ZeroEpochsReturnsTeacherCopy) {
  auto cfg = small_config();
  cfg.train.student_epochs = 0;
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto teacher = train_teacher(ds, cfg.train).model;
  const auto s = train_student(teacher, ds, cfg.train);
  EXPECT_EQ(s.model, teacher);
}

TEST(Student, TeacherUntouchedAndCacheChecked) {
  const auto cfg = small_config();
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto teacher = train_teacher(ds, cfg.train).model;
  const auto snapshot = nn::checkpoint_to_string(teacher);
  const auto s = train_student(teacher, ds, cfg.train);
  EXPECT_EQ(nn::checkpoint_to_string(teacher), snapshot);
  EXPECT_EQ(s.cache.teacher_fingerprint(), nn::fingerprint(teacher));
  EXPECT_EQ(s.report.fingerprints.at("teacher"), nn::fingerprint(teacher));

  // Reusing the cache gives the same student; a foreign cache is rejected.
  const auto again = train_student(teacher, ds, cfg.train, s.cache);
  EXPECT_EQ(again.model, s.model);
  EXPECT_THROW(train_student(s.model, ds, cfg.train, s.cache), glearn::ConsistencyError);
  auto hot = cfg.train;
  hot.temperature = 2.0;
  EXPECT_THROW(train_student(teacher, ds, hot, s.cache), glearn::ConsistencyError);
}

TEST(Finetune, UsesCleanSubsetAtReducedRate) {
  const auto cfg = small_config();
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto teacher = train_teacher(ds, cfg.train).model;
  const auto ft = finetune_clean(teacher, ds, cfg.train);
  ASSERT_EQ(ft.report.stages.size(), 1u);
  EXPECT_EQ(ft.report.stages[0].epochs[0].lr, cfg.train.finetune_learning_rate());
  EXPECT_EQ(ft.report.stages[0].epochs[0].steps, 2u);  // 12 clean samples, batch 8
  EXPECT_NE(ft.model, teacher);
}

TEST(Baseline, VariantsProduceExpectedStages) {
  const auto cfg = small_config();
  const auto ds = build_dataset(cfg.data, cfg.train.seed).dataset;
  const auto full = run_baseline(Variant::guidance_finetuned, ds, cfg.train);
  std::vector<std::string> names;
  for (const auto& [n, m] : full.models) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"teacher", "student", "finetuned"}));
  EXPECT_EQ(full.report.stages.size(), 3u);
  EXPECT_EQ(full.report.final_test_accuracy, full.report.stages.back().final_test_accuracy);

  const auto noisy = run_baseline(Variant::noisy_only, ds, cfg.train);
  EXPECT_EQ(noisy.models.size(), 1u);
  EXPECT_EQ(noisy.report.variant, "noisy_only");
}

TEST(Baseline, VariantNames) {
  for (const auto& n : variant_names()) EXPECT_EQ(to_string(variant_from_string(n)), n);
  try {
    variant_from_string("bogus");
    FAIL() << "expected ParameterError";
  } catch (const glearn::ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("guidance_finetuned"), std::string::npos);
  }
}

}  // namespace
