#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "glearn/checkpoint.hpp"
#include "glearn/config_json.hpp"
#include "glearn/data.hpp"
#include "glearn/error.hpp"
#include "glearn/guidance.hpp"
#include "glearn/metrics.hpp"
#include "glearn/pipeline.hpp"
#include "glearn/rng.hpp"
#include "glearn/sweep.hpp"

namespace glearn::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kReportFile = "report.json";
constexpr const char* kIncompleteMarker = ".incomplete";

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw Error("failed writing " + path.string());
}

// Config file, then --set overrides, then --seed / --manifest.
pipeline::ExperimentConfig load_experiment(const CliConfig& cli) {
  if (!fs::exists(cli.config_path)) throw ConfigError("config file not found: " + cli.config_path);
  const std::string text = read_text(cli.config_path);
  pipeline::ExperimentConfig cfg = pipeline::config_from_string(text);
  if (!cli.overrides.empty()) {
    auto j = nlohmann::json::parse(text);
    for (const auto& [key, value] : cli.overrides) {
      auto parsed = nlohmann::json::parse(value, nullptr, false);
      j[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
    }
    cfg = pipeline::config_from_string(j.dump());
  }
  if (cli.seed) cfg.train.seed = *cli.seed;
  if (!cli.manifest_path.empty()) cfg.data.manifest_path = cli.manifest_path;
  return cfg;
}

ordered_json config_json(const pipeline::ExperimentConfig& cfg) {
  return ordered_json::parse(pipeline::config_to_string(cfg));
}

std::size_t tag_count(const data::Dataset& ds, data::SplitTag tag) {
  return ds.indices(tag).size();
}

struct Outcome {
  std::string report;
  std::string summary;
  std::optional<std::string> timing;
};

void log_epochs(const pipeline::RunReport& report, int verbosity, std::ostream& err) {
  if (verbosity <= 0) return;
  for (const auto& stage : report.stages) {
    for (const auto& e : stage.epochs) {
      err << stage.stage << " epoch " << e.epoch << " lr " << shortest(e.lr) << " loss "
          << shortest(e.loss_total);
      if (e.test_accuracy) err << " test_acc " << shortest(*e.test_accuracy);
      err << '\n';
    }
  }
}

Outcome training_outcome(pipeline::RunReport report, const pipeline::ExperimentConfig& cfg,
                         const std::string& label, int verbosity, std::ostream& err) {
  report.data = cfg.data;
  log_epochs(report, verbosity, err);
  Outcome o;
  o.report = pipeline::report_to_string(report);
  o.timing = pipeline::timing_to_string(report);
  o.summary = label + ": test accuracy " +
              (report.final_test_accuracy ? shortest(*report.final_test_accuracy) : "n/a");
  return o;
}

pipeline::BuiltDataset build(const pipeline::ExperimentConfig& cfg, const fs::path& dir) {
  auto built = pipeline::build_dataset(cfg.data, cfg.train.seed);
  data::save_manifest(built.manifest, dir / "manifest.json");
  return built;
}

Outcome cmd_make_data(const CliConfig&, const pipeline::ExperimentConfig& cfg,
                      const fs::path& dir) {
  const auto& r = cfg.data;
  data::Dataset ds;
  if (r.source == pipeline::DataSource::blobs) {
    ds = data::make_blobs({r.num_classes, r.per_class, r.dim, r.sigma, cfg.train.seed});
  } else {
    data::LoadOptions opts;
    opts.labels_path = r.labels_path;
    ds = data::load_dataset(r.path,
                            r.source == pipeline::DataSource::csv ? data::DataFormat::csv
                                                                  : data::DataFormat::idx,
                            opts);
  }
  data::write_csv(ds, dir / "dataset.csv");

  ordered_json j;
  j["command"] = "make-data";
  j["samples"] = ds.size();
  j["classes"] = ds.num_classes;
  j["dim"] = ds.dim();
  j["dataset"] = "dataset.csv";
  j["dataset_fingerprint"] = fingerprint_bytes(read_text(dir / "dataset.csv"));
  j["config"] = config_json(cfg);
  return {j.dump(2) + "\n",
          "make-data: " + std::to_string(ds.size()) + " samples, " +
              std::to_string(ds.num_classes) + " classes, dim " + std::to_string(ds.dim()),
          std::nullopt};
}

Outcome cmd_inject_noise(const CliConfig&, const pipeline::ExperimentConfig& cfg,
                         const fs::path& dir) {
  const auto built = build(cfg, dir);
  const auto& ds = built.dataset;
  data::write_csv(ds, dir / "dataset.csv");
  const std::size_t noisy = tag_count(ds, data::SplitTag::noisy_train);
  const std::size_t flipped = built.manifest.flip_indices.size();
  const double rate = noisy == 0 ? 0.0 : static_cast<double>(flipped) / static_cast<double>(noisy);

  ordered_json j;
  j["command"] = "inject-noise";
  j["samples"] = ds.size();
  j["clean_train"] = tag_count(ds, data::SplitTag::clean_train);
  j["noisy_train"] = noisy;
  j["test"] = tag_count(ds, data::SplitTag::test);
  j["flipped"] = flipped;
  j["empirical_noise_rate"] = rate;
  j["dataset"] = "dataset.csv";
  j["manifest"] = "manifest.json";
  j["config"] = config_json(cfg);
  return {j.dump(2) + "\n",
          "inject-noise: " + std::to_string(flipped) + "/" + std::to_string(noisy) +
              " noisy-subset labels flipped (rate " + shortest(rate) + ")",
          std::nullopt};
}

Outcome cmd_train_teacher(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                          const fs::path& dir, std::ostream& err) {
  const auto built = build(cfg, dir);
  auto result = pipeline::train_teacher(built.dataset, cfg.train);
  nn::save_checkpoint(result.model, dir / "teacher.ckpt");
  const auto cache =
      guidance::compute_teacher_soft_targets(result.model, built.dataset, cfg.train.temperature);
  guidance::save_cache(cache, dir / "guidance_cache.bin");
  return training_outcome(std::move(result.report), cfg, "train-teacher", cli.verbosity, err);
}

Outcome cmd_train_student(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                          const fs::path& dir, std::ostream& err) {
  const auto built = build(cfg, dir);
  const auto teacher = nn::load_checkpoint(cli.teacher_path);
  auto result =
      cli.cache_path.empty()
          ? pipeline::train_student(teacher, built.dataset, cfg.train)
          : pipeline::train_student(teacher, built.dataset, cfg.train,
                                    guidance::load_cache(cli.cache_path, cfg.train.temperature,
                                                         nn::fingerprint(teacher)));
  nn::save_checkpoint(teacher, dir / "teacher.ckpt");
  nn::save_checkpoint(result.model, dir / "student.ckpt");
  guidance::save_cache(result.cache, dir / "guidance_cache.bin");
  return training_outcome(std::move(result.report), cfg, "train-student", cli.verbosity, err);
}

Outcome cmd_finetune(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                     const fs::path& dir, std::ostream& err) {
  const auto built = build(cfg, dir);
  const auto model = nn::load_checkpoint(cli.model_path);
  auto result = pipeline::finetune_clean(model, built.dataset, cfg.train);
  nn::save_checkpoint(result.model, dir / "finetuned.ckpt");
  return training_outcome(std::move(result.report), cfg, "finetune", cli.verbosity, err);
}

Outcome cmd_baseline(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                     const fs::path& dir, std::ostream& err) {
  const auto variant = pipeline::variant_from_string(cli.variant);
  const auto built = build(cfg, dir);
  auto result = pipeline::run_baseline(variant, built.dataset, cfg.train);
  for (const auto& [name, model] : result.models) {
    nn::save_checkpoint(model, dir / (name + ".ckpt"));
    if (name == "teacher" && (variant == pipeline::Variant::guidance ||
                              variant == pipeline::Variant::guidance_finetuned)) {
      guidance::save_cache(
          guidance::compute_teacher_soft_targets(model, built.dataset, cfg.train.temperature),
          dir / "guidance_cache.bin");
    }
  }
  return training_outcome(std::move(result.report), cfg, "baseline " + cli.variant,
                          cli.verbosity, err);
}

std::size_t thread_cap() {
  const char* env = std::getenv("GUIDANCE_LEARN_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t n = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto res = std::from_chars(env, end, n);
  if (res.ec != std::errc() || res.ptr != end || n == 0) {
    throw ParameterError(std::string("GUIDANCE_LEARN_THREADS must be a positive integer, got '") +
                         env + "'");
  }
  return n;
}

Outcome cmd_sweep(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                  const fs::path& dir) {
  eval::SweepGrid grid;
  grid.axis = eval::sweep_axis_from_string(cli.axis);
  grid.values = cli.values;
  grid.base = cfg;
  grid.seeds = cli.seeds.empty() ? std::vector<std::uint64_t>{cfg.train.seed} : cli.seeds;
  const auto result = eval::sweep(grid, thread_cap());

  const std::string results_json = eval::sweep_to_json(result);
  write_text(dir / "results.csv", eval::sweep_to_csv(result));
  write_text(dir / "results.json", results_json);
  write_text(dir / "plotdata.txt", eval::sweep_plot_data(result));

  ordered_json j;
  j["command"] = "sweep";
  j["axis"] = eval::to_string(grid.axis);
  j["values"] = grid.values;
  j["seeds"] = grid.seeds;
  j["config"] = config_json(cfg);
  j["results"] = ordered_json::parse(results_json);

  const auto agg = result.aggregate();
  std::string summary = "sweep " + eval::to_string(grid.axis) + ": " +
                        std::to_string(result.cells.size()) + " cells";
  if (!agg.empty()) {
    const auto* best = &agg.front();
    for (const auto& a : agg) {
      if (a.mean > best->mean) best = &a;
    }
    summary += ", best mean student accuracy " + shortest(best->mean) + " at " +
               eval::to_string(grid.axis) + "=" + shortest(best->value);
  }
  return {j.dump(2) + "\n", summary, std::nullopt};
}

Outcome cmd_eval(const CliConfig& cli, const pipeline::ExperimentConfig& cfg,
                 const fs::path& dir) {
  const auto tag = data::split_tag_from_string(cli.split);
  const auto built = build(cfg, dir);
  const auto model = nn::load_checkpoint(cli.model_path);
  const double acc = eval::accuracy(model, built.dataset, tag);
  const auto confusion = eval::confusion_matrix(model, built.dataset, tag);
  const std::size_t n = tag_count(built.dataset, tag);

  ordered_json j;
  j["command"] = "eval";
  j["split"] = data::to_string(tag);
  j["samples"] = n;
  j["accuracy"] = acc;
  j["model_fingerprint"] = nn::fingerprint(model);
  j["confusion"] = confusion;
  j["config"] = config_json(cfg);
  return {j.dump(2) + "\n",
          "eval: accuracy " + shortest(acc) + " on " + data::to_string(tag) + " (" +
              std::to_string(n) + " samples)",
          std::nullopt};
}

void add_common(CLI::App* sub, CliConfig& c, std::vector<std::string>& sets) {
  sub->add_option("-c,--config", c.config_path, "experiment config (flat JSON)")->required();
  sub->add_option("-o,--out", c.out_dir, "run directory (created if absent)")->required();
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--manifest", c.manifest_path, "replay split/noise from a manifest");
  sub->add_option("--set", sets, "override a config key, key=value (repeatable)");
  sub->add_flag("-f,--force", c.force, "overwrite an existing report.json");
  sub->add_flag_function(
      "-v,--verbose", [&c](std::int64_t n) { c.verbosity = static_cast<int>(n); },
      "per-epoch log on stderr (repeatable)");
}

}  // namespace

ParseOutcome parse_args(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err) {
  CLI::App app{"Two-stage guidance training for learning with noisy labels", "glearn"};
  app.require_subcommand(1);
  app.fallthrough(false);

  CliConfig c;
  std::vector<std::string> sets;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"make-data", "generate (or load) a dataset and write dataset.csv"},
      {"inject-noise", "split and corrupt labels; write dataset.csv and manifest.json"},
      {"train-teacher", "stage 1: cross-entropy on clean + noisy data"},
      {"train-student", "stage 2: guidance training from a frozen teacher"},
      {"finetune", "cross-entropy on the clean subset only"},
      {"baseline", "run one comparison variant end to end"},
      {"sweep", "one-axis hyperparameter sweep over seeds"},
      {"eval", "accuracy of a checkpoint on one split"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, c, sets);
    const std::string name = s.name;
    if (name == "train-student") {
      sub->add_option("--teacher", c.teacher_path, "teacher checkpoint")->required();
      sub->add_option("--cache", c.cache_path, "reuse a guidance cache");
    } else if (name == "finetune") {
      sub->add_option("--model", c.model_path, "checkpoint to fine-tune")->required();
    } else if (name == "baseline") {
      sub->add_option("--variant", c.variant, "noisy_only|clean_only|mixed|guidance|guidance_finetuned")
          ->required();
    } else if (name == "sweep") {
      sub->add_option("--axis", c.axis, "alpha|beta|T|clean_fraction|noise_rate")->required();
      sub->add_option("--values", c.values, "comma-separated grid")->required()->delimiter(',');
      sub->add_option("--seeds", c.seeds, "comma-separated seeds (default: config seed)")
          ->delimiter(',');
    } else if (name == "eval") {
      sub->add_option("--model", c.model_path, "checkpoint to evaluate")->required();
      sub->add_option("--split", c.split, "test|clean_train|noisy_train");
    }
  }

  std::vector<const char*> argv{"glearn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return {std::nullopt, kExitOk};
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return {std::nullopt, kExitOk};
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun 'glearn --help' for usage\n";
    return {std::nullopt, kExitUsage};
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  try {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ParameterError("--set expects key=value, got '" + s + "'");
      }
      c.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.subcommand == "baseline") pipeline::variant_from_string(c.variant);
    if (c.subcommand == "sweep") eval::sweep_axis_from_string(c.axis);
    if (c.subcommand == "eval") data::split_tag_from_string(c.split);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return {std::nullopt, kExitUsage};
  }
  return {std::move(c), kExitOk};
}

int run(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  const fs::path dir = cli.out_dir;
  const fs::path report_path = dir / kReportFile;
  const fs::path marker = dir / kIncompleteMarker;
  try {
    fs::create_directories(dir);
    if (fs::exists(report_path)) {
      if (!cli.force) {
        err << "error: " << report_path.string()
            << " already exists; pass --force to overwrite\n";
        return kExitFailure;
      }
      fs::remove(report_path);
    }
    write_text(marker, "");

    const auto cfg = load_experiment(cli);
    write_text(dir / "config.json", pipeline::config_to_string(cfg));

    Outcome o;
    const auto& s = cli.subcommand;
    if (s == "make-data") {
      o = cmd_make_data(cli, cfg, dir);
    } else if (s == "inject-noise") {
      o = cmd_inject_noise(cli, cfg, dir);
    } else if (s == "train-teacher") {
      o = cmd_train_teacher(cli, cfg, dir, err);
    } else if (s == "train-student") {
      o = cmd_train_student(cli, cfg, dir, err);
    } else if (s == "finetune") {
      o = cmd_finetune(cli, cfg, dir, err);
    } else if (s == "baseline") {
      o = cmd_baseline(cli, cfg, dir, err);
    } else if (s == "sweep") {
      o = cmd_sweep(cli, cfg, dir);
    } else if (s == "eval") {
      o = cmd_eval(cli, cfg, dir);
    } else {
      throw ParameterError("unknown subcommand '" + s + "'");
    }

    if (o.timing) write_text(dir / "timing.json", *o.timing);
    write_text(report_path, o.report);
    fs::remove(marker);
    out << o.summary << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto parsed = parse_args(args, std::cout, std::cerr);
  if (!parsed.config) return parsed.exit_code;
  return run(*parsed.config, std::cout, std::cerr);
}

}  // namespace glearn::cli
