#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glearn/matrix.hpp"

namespace glearn::nn {

// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbFloor = 1e-12;
// Tolerance on the unit-sum invariant of a ProbVector.
inline constexpr double kProbSumTol = 1e-9;

enum class Activation { relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix weight;              // [out x in]
  std::vector<double> bias;   // [out]

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

// Fully connected network: ReLU after every layer except the last, whose
// output is the logit vector.
struct ModelParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::relu;
  std::uint64_t rng_seed = 0;

  std::size_t input_dim() const;
  std::size_t num_classes() const;
  // {input, hidden..., classes}
  std::vector<std::size_t> layer_dims() const;

  // Throws ShapeError on broken chaining, InputError on non-finite entries.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

// Same shape as the parameters; used for gradients and momentum buffers.
struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const ModelParams& params);
  bool operator==(const Gradients&) const = default;
};

// Scaled-uniform init: weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ModelParams init_params(std::span<const std::size_t> layer_dims, std::uint64_t seed);

// Nonnegative vector summing to one.
class ProbVector {
 public:
  // Validates nonnegativity, finiteness and unit sum (kProbSumTol).
  explicit ProbVector(std::vector<double> probs);

  static ProbVector one_hot(std::size_t num_classes, std::size_t label);
  static ProbVector uniform(std::size_t num_classes);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  std::size_t argmax() const;
  bool is_one_hot() const;

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> probs_;
};

// Logits for a batch, one row per sample. Throws ShapeError naming the first
// layer whose input dimension does not match.
Matrix forward(const ModelParams& params, const Matrix& batch);

// Temperature-softened softmax with max subtraction.
ProbVector softmax_t(std::span<const double> logits, double temperature);
// Row-wise variant; rows of the result are valid probability vectors.
Matrix softmax_t(const Matrix& logits, double temperature);

// -sum target_i log(max(pred_i, floor))
double cross_entropy(const ProbVector& pred, const ProbVector& target);
// Mean over rows.
double cross_entropy(const Matrix& pred, const Matrix& target);

// sum g_i log(g_i / max(q_i, floor)); entries with g_i = 0 contribute 0.
double kl_div(const ProbVector& target, const ProbVector& pred);
// Mean over rows.
double kl_div(const Matrix& target, const Matrix& pred);

double entropy(const ProbVector& p);

// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

// Mean cross-entropy of softmax(logits) against target rows.
struct CrossEntropyLoss {
  Matrix targets;
};

// Mean KL(target || softmax(logits / T)).
struct KlLoss {
  Matrix targets;
  double temperature = 1.0;
};

// alpha * T^2 * KL(noisy batch) + CE(clean batch). The batch passed to
// backward() is the noisy batch.
struct TotalLoss {
  Matrix guidance_targets;
  Matrix clean_features;
  Matrix clean_targets;
  double alpha = 0.1;
  double temperature = 5.0;
};

using LossSpec = std::variant<CrossEntropyLoss, KlLoss, TotalLoss>;

struct LossBreakdown {
  double total = 0.0;
  double guidance = 0.0;  // KL term before alpha * T^2 scaling
  double clean = 0.0;     // cross-entropy term
};

struct BackwardResult {
  Gradients grads;
  LossBreakdown loss;
};

// Loss value only.
LossBreakdown evaluate_loss(const ModelParams& params, const Matrix& batch, const LossSpec& spec);

// Exact gradients of the mean batch loss with respect to all weights and biases.
BackwardResult backward(const ModelParams& params, const Matrix& batch, const LossSpec& spec);

struct OptState {
  Gradients velocity;
  std::uint64_t step = 0;
  double lr = 0.0;

  static OptState for_params(const ModelParams& params);
};

// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v.
void sgd_step(ModelParams& params, const Gradients& grads, OptState& state, double lr,
              double momentum, double weight_decay);

}  // namespace glearn::nn
