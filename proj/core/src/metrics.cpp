#include "glearn/metrics.hpp"

#include <string>

#include "glearn/error.hpp"

namespace glearn::eval {

std::vector<std::size_t> predict(const nn::ModelParams& model, const Matrix& features,
                                 double temperature) {
  const Matrix logits = forward(model, features);
  std::vector<std::size_t> out(logits.rows());
  if (temperature == 1.0) {
    for (std::size_t r = 0; r < logits.rows(); ++r) out[r] = nn::argmax(logits.row(r));
    return out;
  }
  const Matrix probs = nn::softmax_t(logits, temperature);
  for (std::size_t r = 0; r < probs.rows(); ++r) out[r] = nn::argmax(probs.row(r));
  return out;
}

double accuracy(const nn::ModelParams& model, const data::Dataset& dataset, data::SplitTag split) {
  const auto cm = confusion_matrix(model, dataset, split);
  std::size_t total = 0;
  for (const auto& row : cm) {
    for (std::size_t v : row) total += v;
  }
  return static_cast<double>(trace(cm)) / static_cast<double>(total);
}

ConfusionMatrix confusion_matrix(const nn::ModelParams& model, const data::Dataset& dataset,
                                 data::SplitTag split) {
  const auto idx = dataset.indices(split);
  if (idx.empty()) throw InputError("split '" + data::to_string(split) + "' is empty");
  if (model.num_classes() != dataset.num_classes) {
    throw ShapeError("model emits " + std::to_string(model.num_classes()) +
                     " classes, dataset has " + std::to_string(dataset.num_classes));
  }
  const auto predicted = predict(model, dataset.features.gather_rows(idx));
  ConfusionMatrix cm(dataset.num_classes, std::vector<std::size_t>(dataset.num_classes, 0));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    ++cm[static_cast<std::size_t>(dataset.reference_label(idx[r]))][predicted[r]];
  }
  return cm;
}

std::size_t trace(const ConfusionMatrix& m) {
  std::size_t t = 0;
  for (std::size_t i = 0; i < m.size(); ++i) t += m[i][i];
  return t;
}

}  // namespace glearn::eval
