#include "glearn/config_json.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glearn/error.hpp"

namespace glearn::pipeline {
namespace {

using nlohmann::ordered_json;

ordered_json schedule_json(const std::vector<LrStep>& schedule) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : schedule) arr.push_back(ordered_json::array({s.epoch, s.lr}));
  return arr;
}

std::vector<LrStep> schedule_from(const ordered_json& j, const std::string& key) {
  if (!j.is_array()) throw ParameterError(key + " must be an array of [epoch, lr] pairs");
  std::vector<LrStep> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) {
      throw ParameterError(key + " must be an array of [epoch, lr] pairs");
    }
    out.push_back({e[0].get<std::size_t>(), e[1].get<double>()});
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

ordered_json train_json(const TrainConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["temperature"] = c.temperature;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["teacher_epochs"] = c.teacher_epochs;
  j["teacher_lr_schedule"] = schedule_json(c.teacher_lr_schedule);
  j["student_epochs"] = c.student_epochs;
  j["student_lr_schedule"] = schedule_json(c.student_lr_schedule);
  j["finetune_epochs"] = c.finetune_epochs;
  j["finetune_lr"] = c.finetune_learning_rate();
  j["hidden_dims"] = c.hidden_dims;
  j["seed"] = c.seed;
  return j;
}

ordered_json data_json(const DataRecipe& d) {
  ordered_json j;
  j["data_source"] = to_string(d.source);
  j["data_path"] = d.path;
  j["labels_path"] = d.labels_path;
  j["manifest_path"] = d.manifest_path;
  j["num_classes"] = d.num_classes;
  j["per_class"] = d.per_class;
  j["dim"] = d.dim;
  j["sigma"] = d.sigma;
  j["noise_model"] = data::to_string(d.noise_model);
  j["noise_rate"] = d.noise_rate;
  if (d.pair_map) j["pair_map"] = *d.pair_map;
  j["clean_fraction"] = d.clean_fraction;
  j["test_fraction"] = d.test_fraction;
  return j;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ExperimentConfig config_from_string(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw FormatError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError("config must be a JSON object");

  ExperimentConfig cfg;
  TrainConfig& t = cfg.train;
  DataRecipe& d = cfg.data;
  const std::set<std::string> known = {
      "alpha", "beta", "temperature", "momentum", "weight_decay", "batch_size",
      "teacher_epochs", "teacher_lr_schedule", "student_epochs", "student_lr_schedule",
      "finetune_epochs", "finetune_lr", "hidden_dims", "seed", "data_source", "data_path",
      "labels_path", "manifest_path", "num_classes", "per_class", "dim", "sigma", "noise_model",
      "noise_rate", "pair_map", "clean_fraction", "test_fraction"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw ParameterError("config: unknown key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc[key].get<std::decay_t<decltype(field)>>();
    };
    get("alpha", t.alpha);
    get("beta", t.beta);
    get("temperature", t.temperature);
    get("momentum", t.momentum);
    get("weight_decay", t.weight_decay);
    get("batch_size", t.batch_size);
    get("teacher_epochs", t.teacher_epochs);
    if (doc.contains("teacher_lr_schedule")) {
      t.teacher_lr_schedule = schedule_from(doc["teacher_lr_schedule"], "teacher_lr_schedule");
    }
    get("student_epochs", t.student_epochs);
    if (doc.contains("student_lr_schedule")) {
      t.student_lr_schedule = schedule_from(doc["student_lr_schedule"], "student_lr_schedule");
    }
    get("finetune_epochs", t.finetune_epochs);
    if (doc.contains("finetune_lr") && !doc["finetune_lr"].is_null()) {
      t.finetune_lr = doc["finetune_lr"].get<double>();
    }
    get("hidden_dims", t.hidden_dims);
    get("seed", t.seed);

    if (doc.contains("data_source")) {
      d.source = data_source_from_string(doc["data_source"].get<std::string>());
    }
    get("data_path", d.path);
    get("labels_path", d.labels_path);
    get("manifest_path", d.manifest_path);
    get("num_classes", d.num_classes);
    get("per_class", d.per_class);
    get("dim", d.dim);
    get("sigma", d.sigma);
    if (doc.contains("noise_model")) {
      d.noise_model = data::noise_model_from_string(doc["noise_model"].get<std::string>());
    }
    get("noise_rate", d.noise_rate);
    if (doc.contains("pair_map") && !doc["pair_map"].is_null()) {
      d.pair_map = doc["pair_map"].get<std::vector<int>>();
    }
    get("clean_fraction", d.clean_fraction);
    get("test_fraction", d.test_fraction);
  } catch (const ordered_json::exception& e) {
    throw ParameterError("config: " + std::string(e.what()));
  }
  t.validate();
  d.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_string(buf.str());
}

std::string config_to_string(const ExperimentConfig& config) {
  ordered_json j = train_json(config.train);
  const ordered_json data = data_json(config.data);
  for (const auto& [key, value] : data.items()) j[key] = value;
  return j.dump(2) + "\n";
}

std::string report_to_string(const RunReport& report, bool include_timing) {
  ordered_json j;
  j["variant"] = report.variant;
  j["final_test_accuracy"] = optional_number(report.final_test_accuracy);
  ordered_json cfg = train_json(report.config);
  if (report.data) {
    const ordered_json data = data_json(*report.data);
    for (const auto& [key, value] : data.items()) cfg[key] = value;
  }
  j["config"] = std::move(cfg);
  ordered_json fps = ordered_json::object();
  for (const auto& [k, v] : report.fingerprints) fps[k] = v;
  j["fingerprints"] = std::move(fps);
  ordered_json stages = ordered_json::array();
  for (const auto& s : report.stages) {
    ordered_json sj;
    sj["stage"] = s.stage;
    sj["final_test_accuracy"] = optional_number(s.final_test_accuracy);
    sj["model_fingerprint"] = s.model_fingerprint;
    if (include_timing) sj["wall_time_seconds"] = s.wall_time_seconds;
    ordered_json epochs = ordered_json::array();
    for (const auto& e : s.epochs) {
      ordered_json ej;
      ej["epoch"] = e.epoch;
      ej["lr"] = e.lr;
      ej["steps"] = e.steps;
      ej["loss_total"] = e.loss_total;
      ej["loss_guidance"] = e.loss_guidance;
      ej["loss_clean"] = e.loss_clean;
      ej["test_accuracy"] = optional_number(e.test_accuracy);
      epochs.push_back(std::move(ej));
    }
    sj["epochs"] = std::move(epochs);
    stages.push_back(std::move(sj));
  }
  j["stages"] = std::move(stages);
  if (include_timing) j["wall_time_seconds"] = report.wall_time_seconds;
  return j.dump(2) + "\n";
}

std::string timing_to_string(const RunReport& report) {
  ordered_json j;
  j["variant"] = report.variant;
  j["wall_time_seconds"] = report.wall_time_seconds;
  ordered_json stages = ordered_json::object();
  for (const auto& s : report.stages) stages[s.stage] = s.wall_time_seconds;
  j["stages"] = std::move(stages);
  return j.dump(2) + "\n";
}

}  // namespace glearn::pipeline
