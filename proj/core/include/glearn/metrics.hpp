#pragma once

#include <cstddef>
#include <vector>

#include "glearn/data.hpp"
#include "glearn/nn.hpp"

namespace glearn::eval {

// Argmax of each row of the logits (lowest index on ties). A positive
// temperature never changes the result; it is accepted so callers can check
// that.
std::vector<std::size_t> predict(const nn::ModelParams& model, const Matrix& features,
                                 double temperature = 1.0);

// Fraction of the split whose prediction equals the reference (true) label.
// Throws InputError on an empty split.
double accuracy(const nn::ModelParams& model, const data::Dataset& dataset, data::SplitTag split);

// [true][predicted] counts over the split.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
ConfusionMatrix confusion_matrix(const nn::ModelParams& model, const data::Dataset& dataset,
                                 data::SplitTag split);

std::size_t trace(const ConfusionMatrix& m);

}  // namespace glearn::eval
