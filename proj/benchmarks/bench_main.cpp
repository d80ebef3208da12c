#include <vector>

#include <benchmark/benchmark.h>

#include "glearn/guidance.hpp"
#include "glearn/nn.hpp"
#include "glearn/pipeline.hpp"
#include "glearn/rng.hpp"

namespace {

using glearn::Matrix;
namespace nn = glearn::nn;
namespace pipeline = glearn::pipeline;

Matrix uniform_matrix(glearn::Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = 2.0 * rng.uniform() - 1.0;
  return m;
}

Matrix soft_rows(const Matrix& logits) { return nn::softmax_t(logits, 5.0); }

void BM_Forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> dims{20, 64, 10};
  const auto params = nn::init_params(dims, 1);
  glearn::Rng rng(2);
  const Matrix x = uniform_matrix(rng, batch, 20);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(params, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_BackwardTotalLoss(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> dims{20, 64, 10};
  const auto params = nn::init_params(dims, 1);
  glearn::Rng rng(3);
  const Matrix x = uniform_matrix(rng, batch, 20);
  const Matrix xc = uniform_matrix(rng, batch, 20);
  nn::TotalLoss loss;
  loss.guidance_targets = soft_rows(uniform_matrix(rng, batch, 10));
  loss.clean_features = xc;
  loss.clean_targets = soft_rows(uniform_matrix(rng, batch, 10));
  const nn::LossSpec spec = loss;
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward(params, x, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * batch));
}
BENCHMARK(BM_BackwardTotalLoss)->Arg(32)->Arg(128);

void BM_SgdStep(benchmark::State& state) {
  const std::vector<std::size_t> dims{20, 64, 10};
  auto params = nn::init_params(dims, 1);
  glearn::Rng rng(4);
  const Matrix x = uniform_matrix(rng, 32, 20);
  const nn::LossSpec spec = nn::CrossEntropyLoss{soft_rows(uniform_matrix(rng, 32, 10))};
  const auto grads = nn::backward(params, x, spec).grads;
  auto opt = nn::OptState::for_params(params);
  for (auto _ : state) nn::sgd_step(params, grads, opt, 1e-6, 0.9, 5e-4);
}
BENCHMARK(BM_SgdStep);

pipeline::ExperimentConfig bench_config() {
  pipeline::ExperimentConfig cfg;
  cfg.train.teacher_epochs = 1;
  cfg.train.student_epochs = 1;
  return cfg;
}

void BM_TeacherEpoch(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto ds = pipeline::build_dataset(cfg.data, 1).dataset;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::train_teacher(ds, cfg.train));
}
BENCHMARK(BM_TeacherEpoch)->Unit(benchmark::kMillisecond);

void BM_StudentEpoch(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto ds = pipeline::build_dataset(cfg.data, 1).dataset;
  const auto teacher = pipeline::train_teacher(ds, cfg.train).model;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::train_student(teacher, ds, cfg.train));
}
BENCHMARK(BM_StudentEpoch)->Unit(benchmark::kMillisecond);

void BM_TeacherSoftTargets(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto ds = pipeline::build_dataset(cfg.data, 1).dataset;
  const auto teacher = pipeline::train_teacher(ds, cfg.train).model;
  for (auto _ : state) {
    benchmark::DoNotOptimize(glearn::guidance::compute_teacher_soft_targets(teacher, ds, 5.0));
  }
}
BENCHMARK(BM_TeacherSoftTargets)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
