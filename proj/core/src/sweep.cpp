#include "glearn/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "glearn/error.hpp"
#include "glearn/metrics.hpp"

namespace glearn::eval {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct StudentAccuracies {
  double student = 0.0;
  double finetuned = 0.0;
};

StudentAccuracies run_student_stages(const nn::ModelParams& teacher, const data::Dataset& dataset,
                                     const pipeline::TrainConfig& config) {
  const auto student = pipeline::train_student(teacher, dataset, config);
  const auto tuned = pipeline::finetune_clean(student.model, dataset, config);
  return {accuracy(student.model, dataset, data::SplitTag::test),
          accuracy(tuned.model, dataset, data::SplitTag::test)};
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::alpha:
      return "alpha";
    case SweepAxis::beta:
      return "beta";
    case SweepAxis::temperature:
      return "T";
    case SweepAxis::clean_fraction:
      return "clean_fraction";
    case SweepAxis::noise_rate:
      return "noise_rate";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "alpha") return SweepAxis::alpha;
  if (name == "beta") return SweepAxis::beta;
  if (name == "T" || name == "temperature") return SweepAxis::temperature;
  if (name == "clean_fraction") return SweepAxis::clean_fraction;
  if (name == "noise_rate") return SweepAxis::noise_rate;
  throw ParameterError("unknown sweep axis '" + name +
                       "' (valid: alpha, beta, T, clean_fraction, noise_rate)");
}

bool affects_teacher(SweepAxis axis) {
  return axis == SweepAxis::clean_fraction || axis == SweepAxis::noise_rate;
}

pipeline::ExperimentConfig SweepGrid::config_for(double value, std::uint64_t seed) const {
  pipeline::ExperimentConfig cfg = base;
  cfg.train.seed = seed;
  switch (axis) {
    case SweepAxis::alpha:
      cfg.train.alpha = value;
      break;
    case SweepAxis::beta:
      cfg.train.beta = value;
      break;
    case SweepAxis::temperature:
      cfg.train.temperature = value;
      break;
    case SweepAxis::clean_fraction:
      cfg.data.clean_fraction = value;
      break;
    case SweepAxis::noise_rate:
      cfg.data.noise_rate = value;
      break;
  }
  return cfg;
}

void SweepGrid::validate() const {
  if (values.empty()) throw ParameterError("sweep: no axis values");
  if (seeds.empty()) throw ParameterError("sweep: at least one seed is required");
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("sweep: non-finite axis value");
    const auto cfg = config_for(v, seeds.front());
    try {
      cfg.train.validate();
      cfg.data.validate();
    } catch (const ParameterError& e) {
      throw ParameterError("sweep: invalid " + to_string(axis) + " value " + format_double(v) +
                           ": " + e.what());
    }
  }
}

std::vector<SweepAggregate> SweepResult::aggregate() const {
  std::vector<SweepAggregate> out;
  std::vector<double> order;
  for (const auto& c : cells) {
    if (std::find(order.begin(), order.end(), c.value) == order.end()) order.push_back(c.value);
  }
  for (double v : order) {
    std::vector<double> accs;
    for (const auto& c : cells) {
      if (c.value == v) accs.push_back(c.acc_student);
    }
    SweepAggregate a;
    a.value = v;
    double sum = 0.0;
    for (double x : accs) sum += x;
    a.mean = sum / static_cast<double>(accs.size());
    std::sort(accs.begin(), accs.end());
    a.min = accs.front();
    a.max = accs.back();
    const std::size_t n = accs.size();
    a.median = n % 2 == 1 ? accs[n / 2] : 0.5 * (accs[n / 2 - 1] + accs[n / 2]);
    out.push_back(a);
  }
  return out;
}

SweepResult sweep(const SweepGrid& grid, std::size_t threads) {
  grid.validate();
  const std::size_t n_values = grid.values.size();
  const std::size_t n_seeds = grid.seeds.size();

  SweepResult result;
  result.axis = grid.axis;
  result.cells.resize(n_values * n_seeds);

  // A task is one (value, seed) cell for stage-1 axes, or one seed (teacher
  // shared by every value) for stage-2 axes.
  const bool per_cell = affects_teacher(grid.axis);
  const std::size_t n_tasks = per_cell ? n_values * n_seeds : n_seeds;

  auto run_task = [&](std::size_t task) {
    if (per_cell) {
      const std::size_t vi = task / n_seeds;
      const std::size_t si = task % n_seeds;
      const auto cfg = grid.config_for(grid.values[vi], grid.seeds[si]);
      const auto built = pipeline::build_dataset(cfg.data, cfg.train.seed);
      const auto teacher = pipeline::train_teacher(built.dataset, cfg.train);
      const auto accs = run_student_stages(teacher.model, built.dataset, cfg.train);
      result.cells[task] = {grid.values[vi], grid.seeds[si],
                            accuracy(teacher.model, built.dataset, data::SplitTag::test),
                            accs.student, accs.finetuned};
      return;
    }
    const std::size_t si = task;
    const auto base_cfg = grid.config_for(grid.values.front(), grid.seeds[si]);
    const auto built = pipeline::build_dataset(base_cfg.data, base_cfg.train.seed);
    const auto teacher = pipeline::train_teacher(built.dataset, base_cfg.train);
    const double acc_teacher = accuracy(teacher.model, built.dataset, data::SplitTag::test);
    for (std::size_t vi = 0; vi < n_values; ++vi) {
      const auto cfg = grid.config_for(grid.values[vi], grid.seeds[si]);
      const auto accs = run_student_stages(teacher.model, built.dataset, cfg.train);
      result.cells[vi * n_seeds + si] = {grid.values[vi], grid.seeds[si], acc_teacher,
                                         accs.student, accs.finetuned};
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, n_tasks);
  if (workers == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < n_tasks; t = next++) {
        try {
          run_task(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out = "axis,value,seed,acc_teacher,acc_student,acc_finetuned\n";
  for (const auto& c : result.cells) {
    out += to_string(result.axis) + "," + format_double(c.value) + "," + std::to_string(c.seed) +
           "," + format_double(c.acc_teacher) + "," + format_double(c.acc_student) + "," +
           format_double(c.acc_finetuned) + "\n";
  }
  return out;
}

std::string sweep_to_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["axis"] = to_string(result.axis);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"value", c.value},
                     {"seed", c.seed},
                     {"acc_teacher", c.acc_teacher},
                     {"acc_student", c.acc_student},
                     {"acc_finetuned", c.acc_finetuned}});
  }
  j["cells"] = std::move(cells);
  auto agg = nlohmann::ordered_json::array();
  for (const auto& a : result.aggregate()) {
    agg.push_back({{"value", a.value},
                   {"mean", a.mean},
                   {"min", a.min},
                   {"max", a.max},
                   {"median", a.median}});
  }
  j["student_accuracy"] = std::move(agg);
  return j.dump(2) + "\n";
}

std::string sweep_plot_data(const SweepResult& result) {
  std::string out = "# " + to_string(result.axis) + " mean min max (student test accuracy)\n";
  for (const auto& a : result.aggregate()) {
    out += format_double(a.value) + " " + format_double(a.mean) + " " + format_double(a.min) +
           " " + format_double(a.max) + "\n";
  }
  return out;
}

}  // namespace glearn::eval
