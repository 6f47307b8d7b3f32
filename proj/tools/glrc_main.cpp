#include <iostream>

#include "CLI11.hpp"
#include "glrc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Graph-less collaborative filtering: GCN teacher distilled into an MLP student"};
  app.require_subcommand(1);

  std::string config_path;

  auto* teacher = app.add_subcommand("train-teacher", "Train the GCN teacher with BPR");
  teacher->add_option("config", config_path, "Run configuration file")->required();

  glrc::cli::DistillOptions distill;
  std::string teacher_ckpt;
  auto* dist = app.add_subcommand("distill", "Distill a trained teacher into the MLP student");
  dist->add_option("config", config_path, "Run configuration file")->required();
  dist->add_option("--teacher", teacher_ckpt, "Teacher checkpoint");
  dist->add_flag("--disable-l1", distill.disable.disable_l1, "Drop prediction-level KD");
  dist->add_flag("--disable-l2", distill.disable.disable_l2, "Drop embedding-level KD");
  dist->add_flag("--disable-l3", distill.disable.disable_l3, "Drop adaptive contrastive regularization");

  glrc::cli::EvaluateOptions eval;
  std::string model, data, against;
  auto* ev = app.add_subcommand("evaluate", "All-rank Recall@N / NDCG@N on a split directory");
  ev->add_option("--model", model, "Checkpoint to evaluate")->required();
  ev->add_option("--data", data, "Split directory (train/valid/test.tsv)")->required();
  ev->add_option("--n", eval.n, "Cutoff N")->capture_default_str();
  ev->add_option("--split", eval.split, "test or valid")->capture_default_str();
  ev->add_flag("--mad", eval.mad, "Add MAD over the most popular users and items");
  ev->add_flag("--bench", eval.bench, "Add teacher vs student inference timing");
  ev->add_option("--against", against, "Checkpoint of the other model kind for --bench");
  ev->add_option("--repetitions", eval.bench_repetitions, "Timing repetitions")->capture_default_str();

  glrc::cli::ExportOptions exp;
  std::string export_model, export_out, export_data;
  auto* ex = app.add_subcommand("export-embeddings", "Write embeddings as TSV");
  ex->add_option("--model", export_model, "Checkpoint")->required();
  ex->add_option("--out", export_out, "Output TSV path")->required();
  ex->add_flag("--output-embeddings", exp.output_embeddings, "Export model outputs instead of stored tensors");
  ex->add_option("--data", export_data, "Split directory (teacher outputs only)");

  auto* runner = app.add_subcommand("run", "Run the configured mode end to end");
  runner->add_option("config", config_path, "Run configuration file")->required();

  std::string synth_out;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("make-synthetic", "Write the 4-community synthetic dataset");
  synth->add_option("--out", synth_out, "Output TSV path")->required();
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : glrc::cli::kConfigError;
  }

  namespace cli = glrc::cli;
  if (*teacher) return cli::cmd_train_teacher(config_path, std::cout, std::cerr);
  if (*dist) {
    distill.config = config_path;
    distill.teacher = teacher_ckpt;
    return cli::cmd_distill(distill, std::cout, std::cerr);
  }
  if (*ev) {
    eval.model = model;
    eval.data = data;
    eval.against = against;
    return cli::cmd_evaluate(eval, std::cout, std::cerr);
  }
  if (*ex) {
    exp.model = export_model;
    exp.out = export_out;
    exp.data = export_data;
    return cli::cmd_export_embeddings(exp, std::cout, std::cerr);
  }
  if (*runner) return cli::cmd_run(config_path, std::cout, std::cerr);
  if (*synth) return cli::cmd_make_synthetic(synth_out, synth_seed, std::cout, std::cerr);
  return cli::kConfigError;
}
