#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <unistd.h>

#include "glearn/matrix.hpp"
#include "glearn/nn.hpp"
#include "glearn/rng.hpp"

namespace glearn::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

// Strictly positive rows summing to one.
inline Matrix random_prob_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& v : m.row(r)) sum += (v = std::exp(4.0 * rng.uniform() - 2.0));
    for (double& v : m.row(r)) v /= sum;
  }
  return m;
}

inline Matrix random_one_hot_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) m(r, rng.below(cols)) = 1.0;
  return m;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

// Random weights and biases (not the library init, so biases are nonzero).
inline nn::ModelParams random_model(Rng& rng, const std::vector<std::size_t>& dims) {
  nn::ModelParams p;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    nn::DenseLayer layer;
    layer.weight = random_matrix(rng, dims[k + 1], dims[k], -1.0, 1.0);
    layer.bias = random_vector(rng, dims[k + 1], -0.5, 0.5);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Smallest |pre-activation| over all hidden units and samples; central
// differences are only meaningful away from the ReLU kink.
inline double min_hidden_margin(const nn::ModelParams& params, const Matrix& batch) {
  double margin = INFINITY;
  for (std::size_t k = 1; k < params.layers.size(); ++k) {
    nn::ModelParams head;
    head.layers.assign(params.layers.begin(), params.layers.begin() + static_cast<long>(k));
    const Matrix pre = nn::forward(head, batch);
    for (double z : pre.values()) margin = std::min(margin, std::abs(z));
  }
  return margin;
}

inline double spec_margin(const nn::ModelParams& params, const Matrix& batch,
                          const nn::LossSpec& spec) {
  double m = min_hidden_margin(params, batch);
  if (const auto* t = std::get_if<nn::TotalLoss>(&spec)) {
    m = std::min(m, min_hidden_margin(params, t->clean_features));
  }
  return m;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// parameter. The floor keeps near-zero gradients from turning rounding noise
// into huge relative errors.
inline GradCheck check_gradients(const nn::ModelParams& params, const Matrix& batch,
                                 const nn::LossSpec& spec, double h = 1e-5,
                                 double floor = 1e-6) {
  const auto analytic = nn::backward(params, batch, spec).grads;
  nn::ModelParams probe = params;
  GradCheck out;
  auto visit = [&](double& slot, double a) {
    const double saved = slot;
    slot = saved + h;
    const double up = nn::evaluate_loss(probe, batch, spec).total;
    slot = saved - h;
    const double down = nn::evaluate_loss(probe, batch, spec).total;
    slot = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
    ++out.checked;
  };
  for (std::size_t k = 0; k < probe.layers.size(); ++k) {
    auto w = probe.layers[k].weight.values();
    const auto gw = analytic.layers[k].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) visit(w[i], gw[i]);
    auto& b = probe.layers[k].bias;
    const auto& gb = analytic.layers[k].bias;
    for (std::size_t i = 0; i < b.size(); ++i) visit(b[i], gb[i]);
  }
  return out;
}

inline double grad_norm(const nn::Gradients& g) {
  double s = 0.0;
  for (const auto& layer : g.layers) {
    for (double v : layer.weight.values()) s += v * v;
    for (double v : layer.bias) s += v * v;
  }
  return std::sqrt(s);
}

// Fresh directory under the system temp dir, removed by the caller if wanted.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("glearn-test-" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace glearn::testing
