// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include "lsat/bench.hpp"
#include "lsat/checkpoint.hpp"
#include "lsat/config_io.hpp"
#include "lsat/error.hpp"
#include "lsat/gradcheck.hpp"
#include "lsat/training.hpp"

namespace lsat::cli {
namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string config;
  std::string preset;
  std::string data;
  std::string out = "run";
  std::string csv;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> micro_batch;
  std::optional<std::size_t> subset;
};

RunConfig resolve_run(const TrainArgs& a) {
  RunConfig run;
  if (!a.config.empty()) run = load_run_config(a.config);
  if (!a.preset.empty()) run.model = preset(a.preset);
  else if (a.config.empty()) run.model = preset("cifar-tiny");
  if (a.seed) run.train.seed = *a.seed;
  if (a.epochs) run.train.epochs = *a.epochs;
  if (a.batch_size) run.train.batch_size = *a.batch_size;
  if (a.micro_batch) run.train.micro_batch = *a.micro_batch;
  if (a.subset) run.train.subset = *a.subset;
  run.train.validate();
  run.model.validate();
  return run;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig run = resolve_run(a);
  if (run.model.channels != 3 || run.model.height != kCifarSide || run.model.width != kCifarSide) {
    throw ConfigError("training expects a 3x32x32 model input");
  }
  CifarKind kind = cifar_kind_from_string(run.dataset);
  Dataset train = load_cifar(a.data, Split::kTrain, kind);
  Dataset test = load_cifar(a.data, Split::kTest, kind, train.stats);
  if (run.model.classes != train.classes) {
    throw ConfigError("model has " + std::to_string(run.model.classes) + " classes, dataset has " +
                      std::to_string(train.classes));
  }
  train = train.head(run.train.subset);

  fs::create_directories(a.out);
  {
    std::ofstream cfg(fs::path(a.out) / "config.json");
    cfg << run_config_to_json(run) << '\n';
  }

  std::optional<Checkpoint<float>> resumed;
  if (!a.resume.empty()) resumed.emplace(load_checkpoint<float>(a.resume));
  Model<float> model = resumed ? std::move(resumed->model) : Model<float>(run.model, run.train.seed);
  if (resumed && !(model.config() == run.model)) throw ConfigError("checkpoint model differs from the run config");
  Trainer trainer(model, run.train, train.size());
  if (resumed) {
    if (!resumed->optimizer) throw FormatError("checkpoint has no optimizer state to resume from");
    trainer.resume(resumed->meta.epoch, resumed->meta.schedule_step, std::move(*resumed->optimizer));
  }

  fs::path csv_path = a.csv.empty() ? fs::path(a.out) / "metrics.csv" : fs::path(a.csv);
  bool fresh = !resumed || !fs::exists(csv_path);
  std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
  if (!csv) throw ConfigError("cannot write " + csv_path.string());
  if (fresh) csv << "epoch,lr,train_loss,test_acc,wall_seconds\n";
  csv << std::setprecision(9);

  out << "training " << run.model.name << " (" << count_params(model) << " parameters) on " << train.size()
      << " images for " << run.train.epochs << " epochs\n";
  while (trainer.epoch() < run.train.epochs) {
    EpochMetrics m = trainer.run_epoch(train, &test);
    csv << m.epoch << ',' << m.lr << ',' << m.train_loss << ',' << m.test_accuracy << ',' << m.wall_seconds << '\n';
    csv.flush();
    CheckpointMeta meta{trainer.epoch(), trainer.global_step(), train.stats, run.train};
    save_checkpoint(fs::path(a.out) / "last.ckpt", model, &trainer.optimizer().state(), meta);
    out << "epoch " << m.epoch << " lr " << m.lr << " loss " << m.train_loss << " test_acc " << m.test_accuracy
        << " (" << m.wall_seconds << " s)\n";
  }
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data, const std::string& dataset, std::ostream& out) {
  Checkpoint<float> ckpt = load_checkpoint<float>(ckpt_path);
  Dataset test = load_cifar(data, Split::kTest, cifar_kind_from_string(dataset), ckpt.meta.stats);
  double acc = evaluate(ckpt.model, test);
  out << std::setprecision(9) << "test_acc " << acc << " (" << test.size() << " images)\n";
  return 0;
}

int cmd_gradcheck(const std::string& name, std::size_t max_entries, std::uint64_t seed, std::ostream& out) {
  GradcheckOptions options;
  options.max_entries_per_tensor = max_entries;
  options.seed = seed;
  GradcheckReport report = gradcheck_model(preset(name), options);
  for (const auto& t : report.tensors) {
    out << std::left << std::setw(36) << t.name << " checked " << std::setw(6) << t.checked << " max rel err "
        << t.max_rel_error << '\n';
  }
  out << (report.passed ? "PASS" : "FAIL") << ", max rel err " << report.max_rel_error
      << (report.passed ? " < " : " >= ") << options.tolerance << " over " << report.checked << " entries (worst "
      << report.worst << ", " << report.seconds << " s)\n";
  return report.passed ? 0 : 1;
}

int cmd_params(const ModelConfig& config, std::ostream& out) {
  Model<float> model(config, 0);
  std::size_t total = count_params(model);
  out << config.name << '\n';
  for (const auto& row : model.parameter_report()) {
    out << "  " << std::left << std::setw(16) << row.module << std::right << std::setw(12) << row.count << '\n';
  }
  out << "  " << std::left << std::setw(16) << "total" << std::right << std::setw(12) << total << "  ("
      << std::fixed << std::setprecision(2) << static_cast<double>(total) / 1e6 << "M)\n";
  return 0;
}

int cmd_inspect(const std::string& ckpt_path, std::ostream& out) {
  Checkpoint<float> ckpt = load_checkpoint<float>(ckpt_path);
  out << "model " << ckpt.model.config().name << ", " << count_params(ckpt.model) << " parameters\n"
      << "epoch " << ckpt.meta.epoch << ", schedule step " << ckpt.meta.schedule_step << '\n'
      << "optimizer state " << (ckpt.optimizer ? "present" : "absent") << '\n';
  return 0;
}

int cmd_bench(const std::vector<std::size_t>& bs, const std::vector<std::size_t>& ts, std::size_t width,
              std::size_t heads, const std::string& csv, std::ostream& out) {
  BenchResult result = bench_scaling(bs, ts, width, heads);
  if (csv.empty()) {
    write_bench_csv(out, result);
  } else {
    std::ofstream file(csv, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot write " + csv);
    write_bench_csv(file, result);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shift-variant local attention transformer"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train on CIFAR and write checkpoints and metrics");
  train->add_option("--config", train_args.config, "Run config (JSON)")->check(CLI::ExistingFile);
  train->add_option("--preset", train_args.preset, "Model preset (overrides the config's model)");
  train->add_option("--data", train_args.data, "CIFAR binary directory")->required();
  train->add_option("--out", train_args.out, "Output directory")->capture_default_str();
  train->add_option("--csv", train_args.csv, "Metrics CSV path (default OUT/metrics.csv)");
  train->add_option("--resume", train_args.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--seed", train_args.seed);
  train->add_option("--epochs", train_args.epochs);
  train->add_option("--batch-size", train_args.batch_size);
  train->add_option("--micro-batch", train_args.micro_batch, "Images per forward/backward pass");
  train->add_option("--subset", train_args.subset, "Train on the first N samples");

  std::string ckpt, data, dataset = "cifar10";
  auto* eval = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint on the test split");
  eval->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data)->required();
  eval->add_option("--dataset", dataset, "cifar10 or cifar100")->capture_default_str();

  std::string gc_preset = "toy";
  std::size_t gc_entries = 0;
  std::uint64_t gc_seed = 0;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient (64-bit)");
  gc->add_option("--preset", gc_preset)->capture_default_str();
  gc->add_option("--max-entries", gc_entries, "Entries per tensor (0 = all)")->capture_default_str();
  gc->add_option("--seed", gc_seed)->capture_default_str();

  std::string params_preset, params_config;
  auto* params = app.add_subcommand("params", "Parameter count per module");
  params->add_option("--preset", params_preset);
  params->add_option("--config", params_config)->check(CLI::ExistingFile);

  std::string inspect_ckpt;
  auto* inspect = app.add_subcommand("inspect", "Summarize a checkpoint");
  inspect->add_option("--ckpt", inspect_ckpt)->required()->check(CLI::ExistingFile);

  std::vector<std::size_t> bench_b{64, 256, 1024}, bench_t{2, 4, 9, 18};
  std::size_t bench_d = 192, bench_heads = 3;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "Attention mul-add sweep over B and T");
  bench->add_option("--B", bench_b, "Patch counts")->delimiter(',')->capture_default_str();
  bench->add_option("--T", bench_t, "Variant counts")->delimiter(',')->capture_default_str();
  bench->add_option("--D", bench_d)->capture_default_str();
  bench->add_option("--heads", bench_heads)->capture_default_str();
  bench->add_option("--csv", bench_csv, "Output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) return cmd_train(train_args, out);
    if (*eval) return cmd_eval(ckpt, data, dataset, out);
    if (*gc) return cmd_gradcheck(gc_preset, gc_entries, gc_seed, out);
    if (*params) {
      ModelConfig config = !params_config.empty() ? load_run_config(params_config).model
                                                  : preset(params_preset.empty() ? "cifar-tiny" : params_preset);
      return cmd_params(config, out);
    }
    if (*inspect) return cmd_inspect(inspect_ckpt, out);
    if (*bench) return cmd_bench(bench_b, bench_t, bench_d, bench_heads, bench_csv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace lsat::cli
