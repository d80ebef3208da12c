#include "glearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glearn/error.hpp"
#include "glearn/rng.hpp"

namespace glearn::nn {
namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("temperature must be positive and finite, got " +
                         std::to_string(temperature));
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

void softmax_row(std::span<const double> logits, double temperature, std::span<double> out) {
  double max_logit = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw InputError("softmax_t: non-finite logit");
    max_logit = std::max(max_logit, z);
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - max_logit) / temperature);
    denom += out[i];
  }
  for (double& p : out) p /= denom;
}

double cross_entropy_row(std::span<const double> pred, std::span<const double> target) {
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target[i] != 0.0) loss -= target[i] * std::log(std::max(pred[i], kProbFloor));
  }
  return loss;
}

double kl_row(std::span<const double> target, std::span<const double> pred) {
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0) {
      loss += target[i] * (std::log(target[i]) - std::log(std::max(pred[i], kProbFloor)));
    }
  }
  return loss;
}

// Activations retained for the backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to layer k
  std::vector<Matrix> pre;     // pre-activation output of layer k
};

void check_batch(const ModelParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw ShapeError("forward: model has no layers");
  std::size_t expected = batch.cols();
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    if (layer.in_dim() != expected) {
      throw ShapeError("forward: layer " + std::to_string(k) + " expects input dim " +
                       std::to_string(layer.in_dim()) + ", got " + std::to_string(expected));
    }
    if (layer.bias.size() != layer.out_dim()) {
      throw ShapeError("forward: layer " + std::to_string(k) + " bias length " +
                       std::to_string(layer.bias.size()) + " != output dim " +
                       std::to_string(layer.out_dim()));
    }
    expected = layer.out_dim();
  }
}

Matrix affine(const DenseLayer& layer, const Matrix& input) {
  Matrix out(input.rows(), layer.out_dim());
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    auto z = out.row(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      auto w = layer.weight.row(o);
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
      z[o] = acc + layer.bias[o];
    }
  }
  return out;
}

Matrix run_forward(const ModelParams& params, const Matrix& batch, ForwardCache* cache) {
  check_batch(params, batch);
  Matrix current = batch;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    Matrix z = affine(params.layers[k], current);
    if (cache) {
      cache->inputs.push_back(std::move(current));
      cache->pre.push_back(z);
    }
    if (k + 1 < params.layers.size()) {
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
    }
    current = std::move(z);
  }
  return current;
}

// Accumulates d(loss)/d(params) into grads given d(loss)/d(logits).
void backpropagate(const ModelParams& params, const ForwardCache& cache, Matrix delta,
                   Gradients& grads) {
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& layer = params.layers[k];
    const Matrix& input = cache.inputs[k];
    auto& g = grads.layers[k];
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      auto gw = g.weight.row(o);
      double gb = 0.0;
      for (std::size_t r = 0; r < delta.rows(); ++r) {
        const double d = delta(r, o);
        gb += d;
        auto x = input.row(r);
        for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += d * x[i];
      }
      g.bias[o] += gb;
    }
    if (k == 0) break;
    Matrix prev(delta.rows(), layer.in_dim());
    const Matrix& prev_pre = cache.pre[k - 1];
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      auto p = prev.row(r);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        auto w = layer.weight.row(o);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += d[o] * w[i];
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(prev_pre(r, i) > 0.0)) p[i] = 0.0;
      }
    }
    delta = std::move(prev);
  }
}

// d/dz of mean_r CE(softmax(z_r), t_r) = (p * sum(t) - t) / B
Matrix ce_delta(const Matrix& probs, const Matrix& targets) {
  Matrix delta(probs.rows(), probs.cols());
  const double batch = static_cast<double>(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto t = targets.row(r);
    const double mass = std::accumulate(t.begin(), t.end(), 0.0);
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      delta(r, c) = (probs(r, c) * mass - t[c]) / batch;
    }
  }
  return delta;
}

// d/dz of scale * mean_r KL(g_r || softmax(z_r / T)) = scale * (q * sum(g) - g) / (T * B)
Matrix kl_delta(const Matrix& probs, const Matrix& targets, double temperature, double scale) {
  Matrix delta(probs.rows(), probs.cols());
  const double denom = temperature * static_cast<double>(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto g = targets.row(r);
    const double mass = std::accumulate(g.begin(), g.end(), 0.0);
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      delta(r, c) = scale * ((probs(r, c) * mass - g[c]) / denom);
    }
  }
  return delta;
}

void add_into(Gradients& acc, const Gradients& other) {
  for (std::size_t k = 0; k < acc.layers.size(); ++k) {
    auto dst = acc.layers[k].weight.values();
    auto src = other.layers[k].weight.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < acc.layers[k].bias.size(); ++i) {
      acc.layers[k].bias[i] += other.layers[k].bias[i];
    }
  }
}

void check_targets(const Matrix& logits, const Matrix& targets, const char* what) {
  check_same_shape(logits, targets, what);
}

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  throw ParameterError("unknown activation '" + name + "'");
}

std::size_t ModelParams::input_dim() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  return layers.front().in_dim();
}

std::size_t ModelParams::num_classes() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  return layers.back().out_dim();
}

std::vector<std::size_t> ModelParams::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers.empty()) return dims;
  dims.push_back(layers.front().in_dim());
  for (const auto& layer : layers) dims.push_back(layer.out_dim());
  return dims;
}

void ModelParams::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.bias.size() != layer.out_dim()) {
      throw ShapeError("layer " + std::to_string(k) + ": bias length mismatch");
    }
    if (k > 0 && layer.in_dim() != layers[k - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(k) + ": input dim " +
                       std::to_string(layer.in_dim()) + " does not chain with previous output " +
                       std::to_string(layers[k - 1].out_dim()));
    }
    for (double w : layer.weight.values()) {
      if (!std::isfinite(w)) throw InputError("layer " + std::to_string(k) + ": non-finite weight");
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw InputError("layer " + std::to_string(k) + ": non-finite bias");
    }
  }
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Matrix(layer.out_dim(), layer.in_dim()),
                        std::vector<double>(layer.out_dim(), 0.0)});
  }
  return g;
}

ModelParams init_params(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw ShapeError("init_params: need at least input and output dims");
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ShapeError("init_params: zero-width layer");
  }
  ModelParams params;
  params.rng_seed = seed;
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    const std::size_t fan_in = layer_dims[k];
    const std::size_t fan_out = layer_dims[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weight.values()) w = (2.0 * rng.uniform() - 1.0) * limit;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InputError("ProbVector: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw InputError("ProbVector: entries must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTol) {
    throw InputError("ProbVector: entries sum to " + std::to_string(sum));
  }
}

ProbVector ProbVector::one_hot(std::size_t num_classes, std::size_t label) {
  if (label >= num_classes) throw InputError("one_hot: label out of range");
  std::vector<double> v(num_classes, 0.0);
  v[label] = 1.0;
  return ProbVector(std::move(v));
}

ProbVector ProbVector::uniform(std::size_t num_classes) {
  return ProbVector(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

std::size_t ProbVector::argmax() const { return nn::argmax(probs_); }

bool ProbVector::is_one_hot() const {
  std::size_t ones = 0;
  for (double p : probs_) {
    if (p == 1.0) {
      ++ones;
    } else if (p != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Matrix forward(const ModelParams& params, const Matrix& batch) {
  return run_forward(params, batch, nullptr);
}

ProbVector softmax_t(std::span<const double> logits, double temperature) {
  check_temperature(temperature);
  if (logits.empty()) throw InputError("softmax_t: empty logits");
  std::vector<double> out(logits.size());
  softmax_row(logits, temperature, out);
  return ProbVector(std::move(out));
}

Matrix softmax_t(const Matrix& logits, double temperature) {
  check_temperature(temperature);
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) softmax_row(logits.row(r), temperature, out.row(r));
  return out;
}

double cross_entropy(const ProbVector& pred, const ProbVector& target) {
  if (pred.size() != target.size()) {
    throw ShapeError("cross_entropy: length " + std::to_string(pred.size()) + " vs " +
                     std::to_string(target.size()));
  }
  return cross_entropy_row(pred.values(), target.values());
}

double cross_entropy(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "cross_entropy");
  if (pred.rows() == 0) throw InputError("cross_entropy: empty batch");
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) sum += cross_entropy_row(pred.row(r), target.row(r));
  return sum / static_cast<double>(pred.rows());
}

double kl_div(const ProbVector& target, const ProbVector& pred) {
  if (pred.size() != target.size()) {
    throw ShapeError("kl_div: length " + std::to_string(target.size()) + " vs " +
                     std::to_string(pred.size()));
  }
  return kl_row(target.values(), pred.values());
}

double kl_div(const Matrix& target, const Matrix& pred) {
  check_same_shape(target, pred, "kl_div");
  if (pred.rows() == 0) throw InputError("kl_div: empty batch");
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) sum += kl_row(target.row(r), pred.row(r));
  return sum / static_cast<double>(pred.rows());
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

LossBreakdown evaluate_loss(const ModelParams& params, const Matrix& batch, const LossSpec& spec) {
  return std::visit(
      Overloaded{
          [&](const CrossEntropyLoss& s) {
            const Matrix logits = forward(params, batch);
            check_targets(logits, s.targets, "cross-entropy targets");
            const double ce = cross_entropy(softmax_t(logits, 1.0), s.targets);
            return LossBreakdown{ce, 0.0, ce};
          },
          [&](const KlLoss& s) {
            const Matrix logits = forward(params, batch);
            check_targets(logits, s.targets, "KL targets");
            const double kl = kl_div(s.targets, softmax_t(logits, s.temperature));
            return LossBreakdown{kl, kl, 0.0};
          },
          [&](const TotalLoss& s) {
            if (s.alpha < 0.0) throw ParameterError("total loss: alpha must be >= 0");
            check_temperature(s.temperature);
            const Matrix noisy_logits = forward(params, batch);
            const Matrix clean_logits = forward(params, s.clean_features);
            check_targets(noisy_logits, s.guidance_targets, "guidance targets");
            check_targets(clean_logits, s.clean_targets, "clean targets");
            const double kl = kl_div(s.guidance_targets, softmax_t(noisy_logits, s.temperature));
            const double ce = cross_entropy(softmax_t(clean_logits, 1.0), s.clean_targets);
            return LossBreakdown{s.alpha * s.temperature * s.temperature * kl + ce, kl, ce};
          },
      },
      spec);
}

BackwardResult backward(const ModelParams& params, const Matrix& batch, const LossSpec& spec) {
  if (spec.valueless_by_exception()) throw ParameterError("backward: unknown loss specification");
  return std::visit(
      Overloaded{
          [&](const CrossEntropyLoss& s) {
            ForwardCache cache;
            const Matrix logits = run_forward(params, batch, &cache);
            check_targets(logits, s.targets, "cross-entropy targets");
            const Matrix probs = softmax_t(logits, 1.0);
            BackwardResult out{Gradients::zeros_like(params), {}};
            const double ce = cross_entropy(probs, s.targets);
            out.loss = {ce, 0.0, ce};
            backpropagate(params, cache, ce_delta(probs, s.targets), out.grads);
            return out;
          },
          [&](const KlLoss& s) {
            check_temperature(s.temperature);
            ForwardCache cache;
            const Matrix logits = run_forward(params, batch, &cache);
            check_targets(logits, s.targets, "KL targets");
            const Matrix probs = softmax_t(logits, s.temperature);
            BackwardResult out{Gradients::zeros_like(params), {}};
            const double kl = kl_div(s.targets, probs);
            out.loss = {kl, kl, 0.0};
            backpropagate(params, cache, kl_delta(probs, s.targets, s.temperature, 1.0), out.grads);
            return out;
          },
          [&](const TotalLoss& s) {
            if (s.alpha < 0.0) throw ParameterError("total loss: alpha must be >= 0");
            check_temperature(s.temperature);
            ForwardCache clean_cache;
            const Matrix clean_logits = run_forward(params, s.clean_features, &clean_cache);
            check_targets(clean_logits, s.clean_targets, "clean targets");
            ForwardCache noisy_cache;
            const Matrix noisy_logits = run_forward(params, batch, &noisy_cache);
            check_targets(noisy_logits, s.guidance_targets, "guidance targets");

            const Matrix clean_probs = softmax_t(clean_logits, 1.0);
            const Matrix noisy_probs = softmax_t(noisy_logits, s.temperature);
            const double ce = cross_entropy(clean_probs, s.clean_targets);
            const double kl = kl_div(s.guidance_targets, noisy_probs);
            const double scale = s.alpha * s.temperature * s.temperature;

            BackwardResult out{Gradients::zeros_like(params), {scale * kl + ce, kl, ce}};
            backpropagate(params, clean_cache, ce_delta(clean_probs, s.clean_targets), out.grads);
            Gradients noisy = Gradients::zeros_like(params);
            backpropagate(params, noisy_cache,
                          kl_delta(noisy_probs, s.guidance_targets, s.temperature, scale), noisy);
            add_into(out.grads, noisy);
            return out;
          },
      },
      spec);
}

OptState OptState::for_params(const ModelParams& params) {
  return OptState{Gradients::zeros_like(params), 0, 0.0};
}

void sgd_step(ModelParams& params, const Gradients& grads, OptState& state, double lr,
              double momentum, double weight_decay) {
  if (grads.layers.size() != params.layers.size() ||
      state.velocity.layers.size() != params.layers.size()) {
    throw ShapeError("sgd_step: layer count mismatch");
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& p = params.layers[k];
    const auto& g = grads.layers[k];
    auto& v = state.velocity.layers[k];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
        v.weight.rows() != p.weight.rows() || v.weight.cols() != p.weight.cols() ||
        g.bias.size() != p.bias.size() || v.bias.size() != p.bias.size()) {
      throw ShapeError("sgd_step: shape mismatch at layer " + std::to_string(k));
    }
    auto update = [&](double& param, double grad, double& vel) {
      vel = momentum * vel + (grad + weight_decay * param);
      param -= lr * vel;
    };
    auto pw = p.weight.values();
    auto gw = g.weight.values();
    auto vw = v.weight.values();
    for (std::size_t i = 0; i < pw.size(); ++i) update(pw[i], gw[i], vw[i]);
    for (std::size_t i = 0; i < p.bias.size(); ++i) update(p.bias[i], g.bias[i], v.bias[i]);
  }
  ++state.step;
  state.lr = lr;
}

}  // namespace glearn::nn
