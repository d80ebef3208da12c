#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "glearn/pipeline.hpp"

namespace glearn::eval {

enum class SweepAxis { alpha, beta, temperature, clean_fraction, noise_rate };
std::string to_string(SweepAxis axis);
// Accepts "alpha", "beta", "T"/"temperature", "clean_fraction", "noise_rate".
SweepAxis sweep_axis_from_string(const std::string& name);

// Stage-1 axes change the teacher; the others only touch the student stage.
bool affects_teacher(SweepAxis axis);

struct SweepGrid {
  SweepAxis axis = SweepAxis::beta;
  std::vector<double> values;
  pipeline::ExperimentConfig base;
  std::vector<std::uint64_t> seeds;

  // Throws ParameterError for empty/non-finite values, no seeds, or any value
  // outside its parameter domain.
  void validate() const;
  pipeline::ExperimentConfig config_for(double value, std::uint64_t seed) const;
};

struct SweepCell {
  double value = 0.0;
  std::uint64_t seed = 0;
  double acc_teacher = 0.0;
  double acc_student = 0.0;
  double acc_finetuned = 0.0;
  bool operator==(const SweepCell&) const = default;
};

struct SweepAggregate {
  double value = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::beta;
  // Ordered by (value position in the grid, seed position).
  std::vector<SweepCell> cells;

  // Student test accuracy per axis value, in grid order.
  std::vector<SweepAggregate> aggregate() const;
};

// Runs the two-stage pipeline (teacher, guidance student, clean fine-tune) for
// every (value, seed). Teachers are shared across values of stage-2 axes.
// Cells run on up to `threads` workers; results do not depend on the count.
SweepResult sweep(const SweepGrid& grid, std::size_t threads = 1);

// axis,value,seed,acc_teacher,acc_student,acc_finetuned
std::string sweep_to_csv(const SweepResult& result);
std::string sweep_to_json(const SweepResult& result);
// Whitespace-separated "x mean min max" rows of student accuracy.
std::string sweep_plot_data(const SweepResult& result);

}  // namespace glearn::eval
