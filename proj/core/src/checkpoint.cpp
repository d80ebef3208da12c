#include "glearn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "glearn/error.hpp"
#include "glearn/rng.hpp"

namespace glearn::nn {

using nlohmann::json;

std::string checkpoint_to_string(const ModelParams& params) {
  params.validate();
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["layer_dims"] = params.layer_dims();
  doc["activation"] = to_string(params.activation);
  doc["rng_seed"] = params.rng_seed;
  json weights = json::array();
  json biases = json::array();
  for (const auto& layer : params.layers) {
    json rows = json::array();
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      auto r = layer.weight.row(o);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    weights.push_back(std::move(rows));
    biases.push_back(layer.bias);
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc.dump(1) + "\n";
}

ModelParams checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint: " + std::string(e.what()));
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));
    }
    const auto dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (dims.size() < 2 || weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1) {
      throw FormatError("checkpoint: layer_dims does not match weights/biases");
    }
    ModelParams params;
    params.activation = activation_from_string(doc.at("activation").get<std::string>());
    params.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
      DenseLayer layer{Matrix(dims[k + 1], dims[k]), biases[k].get<std::vector<double>>()};
      if (weights[k].size() != dims[k + 1] || layer.bias.size() != dims[k + 1]) {
        throw FormatError("checkpoint: layer " + std::to_string(k) + " has wrong output dim");
      }
      for (std::size_t o = 0; o < dims[k + 1]; ++o) {
        const auto row = weights[k][o].get<std::vector<double>>();
        if (row.size() != dims[k]) {
          throw FormatError("checkpoint: layer " + std::to_string(k) + " row " +
                            std::to_string(o) + " has wrong input dim");
        }
        std::copy(row.begin(), row.end(), layer.weight.row(o).begin());
      }
      params.layers.push_back(std::move(layer));
    }
    params.validate();
    return params;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint: " + std::string(e.what()));
  }
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const std::string text = checkpoint_to_string(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

std::string fingerprint(const ModelParams& params) {
  return fingerprint_bytes(checkpoint_to_string(params));
}

}  // namespace glearn::nn
