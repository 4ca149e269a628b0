#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "motionnet/cli/config.hpp"
#include "motionnet/log.hpp"
#include "motionnet/nn/binary_io.hpp"
#include "motionnet/pipeline/ablation.hpp"
#include "motionnet/pipeline/dataset.hpp"
#include "motionnet/pipeline/evaluate.hpp"
#include "motionnet/pipeline/inference.hpp"
#include "motionnet/pipeline/train.hpp"
#include "motionnet/sim/clip_io.hpp"
#include "motionnet/stpn/network.hpp"

namespace fs = std::filesystem;
using namespace motionnet;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;  // key=value
  bool quiet = false;
};

void add_common(CLI::App* app, Common& common, bool config_option = true) {
  if (config_option) app->add_option("--config", common.config, "Config file (key = value lines)");
  app->add_option("--set", common.overrides, "Override a config key, key=value (repeatable)");
  app->add_flag("--quiet", common.quiet, "Only report errors");
}

cli::Config resolve_config(const Common& common, const fs::path& fallback = {}) {
  cli::Config config;
  if (!common.config.empty())
    config = cli::load_config(common.config);
  else if (!fallback.empty() && fs::exists(fallback))
    config = cli::load_config(fallback);
  for (const auto& item : common.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    cli::set_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
  config.resolve();
  return config;
}

fs::path config_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".cfg"); }

// Returns `dir/name` when it exists, else `dir` itself.
fs::path split_dir(const fs::path& dir, const char* name) {
  const fs::path sub = dir / name;
  return fs::is_directory(sub) ? sub : dir;
}

void write_report(const std::string& target, const std::string& text) {
  if (target == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(target, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file " + target);
  out << text;
  if (!out) throw std::runtime_error("failed to write report file " + target);
}

int cmd_gen_data(const Common& common, const std::string& out, std::optional<std::uint64_t> seed) {
  cli::Config config = resolve_config(common);
  if (seed) config.seed = *seed;
  const fs::path root(out);
  const struct {
    const char* name;
    std::size_t count;
    std::uint64_t stream;
  } splits[] = {{"train", config.data.train_clips, 0}, {"val", config.data.val_clips, 1},
                {"test", config.data.test_clips, 2}};
  for (const auto& s : splits) {
    if (s.count == 0) continue;
    const auto pairs = pipeline::generate_clip_pairs(config.source, s.count,
                                                     pipeline::derive_seed(config.seed, 100, s.stream));
    pipeline::write_clip_pairs(root / s.name, pairs);
    log::info("wrote " + std::to_string(pairs.size()) + " clip pairs to " + (root / s.name).string());
  }
  cli::save_config(root / "data.cfg", config);
  return 0;
}

int cmd_train(const Common& common, const std::string& data, const std::string& out, std::string log_path) {
  const fs::path root(data);
  cli::Config config = resolve_config(common, root / "data.cfg");
  const auto options = config.sample_options();
  const auto train_set = pipeline::load_samples(split_dir(root, "train"), options);
  if (train_set.empty()) throw std::runtime_error("no clips found in " + split_dir(root, "train").string());
  std::vector<pipeline::Sample> val;
  if (fs::is_directory(root / "val")) val = pipeline::load_samples(root / "val", options);

  stpn::Stpn model(config.model_config(), pipeline::derive_seed(config.seed, 200, 0));
  if (log_path.empty()) log_path = out + ".log.csv";
  std::ofstream log_csv(log_path);
  if (!log_csv) throw std::runtime_error("cannot open log file " + log_path);
  log_csv << pipeline::training_log_header() << '\n';
  const auto result = pipeline::train(model, train_set, val, config.train, config.loss, config.inference,
                                      pipeline::derive_seed(config.seed, 300, 0), &log_csv);
  model.save(out);
  cli::save_config(config_path(out), config);
  std::ostringstream msg;
  msg << "trained " << result.steps << " steps";
  if (result.skipped_steps) msg << " (" << result.skipped_steps << " skipped)";
  if (result.best_score) msg << ", best epoch " << result.best_epoch << " score " << *result.best_score;
  log::info(msg.str());
  return 0;
}

stpn::Stpn load_model(const std::string& checkpoint, const cli::Config& config) {
  stpn::Stpn model(config.model_config(), 0);
  model.load(checkpoint);
  return model;
}

int cmd_infer(const Common& common, const std::string& checkpoint, const std::string& clip_path,
              const std::string& out) {
  const cli::Config config = resolve_config(common, config_path(checkpoint));
  stpn::Stpn model = load_model(checkpoint, config);
  const sim::Clip clip = sim::load_clip(clip_path);
  const bev::BEVSequence input = bev::build_input(clip, config.grid, config.sync);
  const auto output = pipeline::infer(model, input, config.inference);
  pipeline::save_output(out, output);
  write_report(out + ".csv", pipeline::output_summary_csv(output));
  return 0;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& data,
             const std::string& report, std::string name) {
  const cli::Config config = resolve_config(common, config_path(checkpoint));
  stpn::Stpn model = load_model(checkpoint, config);
  const auto samples = pipeline::load_samples(split_dir(data, "test"), config.sample_options());
  if (samples.empty()) throw std::runtime_error("no clips found in " + split_dir(data, "test").string());
  if (name.empty()) name = fs::path(checkpoint).filename().string();
  const auto result = pipeline::evaluate_model(model, samples, config.inference, config.eval, name);
  write_report(report, pipeline::eval_csv(std::span(&result, 1)));
  return 0;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

int cmd_ablate(const Common& common, const std::string& matrix, const std::string& report) {
  const cli::Config base = resolve_config(common);
  const auto axes = pipeline::parse_matrix(read_text(matrix));
  std::ostringstream text;
  text << pipeline::eval_csv_header() << '\n';
  const bool to_stdout = report == "-";
  if (to_stdout) std::cout << pipeline::eval_csv_header() << '\n' << std::flush;
  pipeline::ablation_run(base, axes, [&](const pipeline::EvalReport& row) {
    text << pipeline::eval_csv_row(row) << '\n';
    if (to_stdout) std::cout << pipeline::eval_csv_row(row) << '\n' << std::flush;
    log::info("finished " + row.name);
  });
  if (!to_stdout) write_report(report, text.str());
  return 0;
}

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-cell motion prediction from synthetic LiDAR sweeps"};
  app.require_subcommand(1);

  Common common;
  std::string out, data, checkpoint, clip, report, matrix, log_path, name;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-data", "Simulate clip pairs into <out>/{train,val,test}");
  add_common(gen, common);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Base seed (overrides the config)");

  auto* tr = app.add_subcommand("train", "Train a model; writes the checkpoint, <out>.cfg and a CSV log");
  add_common(tr, common);
  tr->add_option("--data", data, "Directory written by gen-data")->required();
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_option("--log", log_path, "Training log CSV (default <out>.log.csv)");

  auto* inf = app.add_subcommand("infer", "Predict one clip; writes a binary dump and <out>.csv");
  add_common(inf, common);
  inf->add_option("--ckpt", checkpoint, "Checkpoint (its .cfg is used unless --config is given)")->required();
  inf->add_option("--clip", clip, "Clip file")->required();
  inf->add_option("--out", out, "Output dump path")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a clip directory; CSV report");
  add_common(ev, common);
  ev->add_option("--ckpt", checkpoint, "Checkpoint")->required();
  ev->add_option("--data", data, "Clip directory (its test/ subdirectory when present)")->required();
  ev->add_option("--report", report, "Report path, or - for stdout")->default_val("-");
  ev->add_option("--name", name, "Row name (default: checkpoint file name)");

  auto* ab = app.add_subcommand("ablate", "Train and evaluate every combination of a config matrix");
  add_common(ab, common);
  ab->add_option("--matrix", matrix, "Matrix file (key = v1, v2 lines)")->required();
  ab->add_option("--report", report, "Report path, or - for stdout")->default_val("-");

  auto* show = app.add_subcommand("config", "Print the resolved config with documentation");
  add_common(show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "motionnet: error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  if (common.quiet) log::set_level(log::Level::error);
  try {
    if (*gen) return cmd_gen_data(common, out, seed);
    if (*tr) return cmd_train(common, data, out, log_path);
    if (*inf) return cmd_infer(common, checkpoint, clip, out);
    if (*ev) return cmd_eval(common, checkpoint, data, report, name);
    if (*ab) return cmd_ablate(common, matrix, report);
    if (*show) {
      std::cout << cli::serialize_config(resolve_config(common));
      return 0;
    }
  } catch (const io::FormatError& e) {
    std::cerr << "motionnet: error: format: " << one_line(e.what()) << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "motionnet: error: invalid: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "motionnet: error: runtime: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
