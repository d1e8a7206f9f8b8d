#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "amrnn/cli.hpp"

namespace {

void add_key(CLI::App* cmd, amrnn::RunConfig& config, const std::string& flag,
             const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&config, key](const std::string& v) { amrnn::apply_config_entry(config, key, v); },
      help);
}

void add_model_options(CLI::App* cmd, amrnn::RunConfig& config) {
  add_key(cmd, config, "--hidden-size", "hidden-size", "GRU hidden size (default 128)");
  add_key(cmd, config, "--input-dim", "input-dim", "learned word embedding size (default 128)");
  add_key(cmd, config, "--hops", "hops", "number of attention hops (default 1)");
  add_key(cmd, config, "--level", "level", "attention level: word or sentence (default word)");
}

void add_train_options(CLI::App* cmd, amrnn::RunConfig& config) {
  add_key(cmd, config, "--lr", "lr", "initial learning rate (default 1e-5)");
  add_key(cmd, config, "--momentum", "momentum", "momentum (default 0.9)");
  add_key(cmd, config, "--rms-decay", "rms-decay", "squared-gradient decay (default 0.9)");
  add_key(cmd, config, "--epsilon", "epsilon", "optimizer epsilon (default 1e-8)");
  add_key(cmd, config, "--dropout", "dropout", "dropout rate (default 0.2)");
  add_key(cmd, config, "--batch-size", "batch-size", "batch size (default 40)");
  add_key(cmd, config, "--epochs", "epochs", "training epochs (default 50)");
  add_key(cmd, config, "--seed", "seed", "training / init seed (default 1)");
  add_key(cmd, config, "--cross-entropy", "cross-entropy",
          "true for softmax cross-entropy loss instead of squared error");
}

void add_data_options(CLI::App* cmd, amrnn::RunConfig& config, bool embeddings = true) {
  add_key(cmd, config, "--dataset", "dataset", "dataset file (JSON lines)");
  if (embeddings) {
    add_key(cmd, config, "--embeddings", "embeddings", "embedding text file");
    add_key(cmd, config, "--keep-fraction", "keep-fraction",
            "fraction of utterances kept by question-similarity pruning (default 1 = keep all)");
  }
  add_key(cmd, config, "--out-dir", "out-dir", "directory for output artifacts (default .)");
}

}  // namespace

int main(int argc, char** argv) {
  amrnn::RunConfig config;

  // The config file is applied before the flags so that flags win.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        amrnn::apply_config_file(config, argv[i + 1]);
      } else if (arg.rfind("--config=", 0) == 0) {
        amrnn::apply_config_file(config, arg.substr(9));
      }
    }
  } catch (const amrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return amrnn::kExitConfig;
  }

  CLI::App app{"Multi-hop attention model for multiple-choice comprehension of spoken-content "
               "transcripts, with baselines and attention-trace export"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value config file; flags override it");

  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + history");
  add_data_options(train_cmd, config);
  add_model_options(train_cmd, config);
  add_train_options(train_cmd, config);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint and write a report");
  add_data_options(eval_cmd, config);
  add_key(eval_cmd, config, "--checkpoint", "checkpoint", "model checkpoint file");
  add_key(eval_cmd, config, "--split", "split", "train, dev or test (default test)");
  add_key(eval_cmd, config, "--corrupt-rate", "corrupt-rate",
          "word error rate applied to stories before evaluation (default 0)");
  add_key(eval_cmd, config, "--corrupt-seed", "corrupt-seed", "corruption seed (default 0)");

  auto* baseline_cmd = app.add_subcommand("baseline", "run a baseline and write a report");
  add_data_options(baseline_cmd, config);
  add_key(baseline_cmd, config, "--split", "split", "train, dev or test (default test)");
  add_key(baseline_cmd, config, "--method", "method",
          "longest | shortest | most_different_length | choice_most_similar | "
          "choice_most_different | question_choice_similar | sliding_window | memnet | all");
  add_key(baseline_cmd, config, "--window", "window", "sliding window size (default 5)");
  add_key(baseline_cmd, config, "--memnet-size", "memnet-size", "memory network embedding size");
  add_key(baseline_cmd, config, "--memnet-lr", "memnet-lr", "memory network learning rate");
  add_key(baseline_cmd, config, "--memnet-batch-size", "memnet-batch-size",
          "memory network batch size");
  add_key(baseline_cmd, config, "--memnet-epochs", "memnet-epochs", "memory network epochs");
  add_key(baseline_cmd, config, "--memnet-shared", "memnet-shared",
          "share the three embedding matrices (default true)");
  add_key(baseline_cmd, config, "--memnet-seed", "memnet-seed", "memory network seed");
  add_key(baseline_cmd, config, "--memnet-hop-search", "memnet-hop-search",
          "comma-separated hop candidates (default 1,2,3)");

  auto* gen_cmd = app.add_subcommand("gen-synthetic", "generate a synthetic task dataset");
  add_key(gen_cmd, config, "--out-dir", "out-dir", "output directory");
  add_key(gen_cmd, config, "--task-kind", "task-kind", "keyword_match or two_fact");
  add_key(gen_cmd, config, "--vocab-size", "vocab-size", "task vocabulary size (default 64)");
  add_key(gen_cmd, config, "--utterances", "utterances", "story utterances (default 8)");
  add_key(gen_cmd, config, "--words", "words", "words per utterance (default 5)");
  add_key(gen_cmd, config, "--train-n", "train-n", "train examples (default 500)");
  add_key(gen_cmd, config, "--dev-n", "dev-n", "dev examples (default 100)");
  add_key(gen_cmd, config, "--test-n", "test-n", "test examples (default 100)");
  add_key(gen_cmd, config, "--task-seed", "task-seed", "generator seed (default 1)");
  add_key(gen_cmd, config, "--embedding-dim", "embedding-dim",
          "synthetic embedding dimension (default 64)");

  auto* tune_cmd = app.add_subcommand("tune-hops", "select the hop count on the dev split");
  add_data_options(tune_cmd, config);
  add_model_options(tune_cmd, config);
  add_train_options(tune_cmd, config);
  add_key(tune_cmd, config, "--hop-search", "hop-search",
          "comma-separated hop candidates (default 1,2,3)");

  auto* export_cmd = app.add_subcommand("export-attention",
                                        "write attention heatmaps for one example");
  add_data_options(export_cmd, config);
  add_key(export_cmd, config, "--checkpoint", "checkpoint", "model checkpoint file");
  add_key(export_cmd, config, "--example-id", "example-id", "id of the example to visualize");
  add_key(export_cmd, config, "--level", "level", "word or sentence (default word)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? amrnn::kExitOk : amrnn::kExitConfig;
  } catch (const amrnn::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return amrnn::kExitConfig;
  }

  for (CLI::App* cmd : {train_cmd, eval_cmd, baseline_cmd, gen_cmd, tune_cmd, export_cmd}) {
    if (cmd->parsed()) config.subcommand = cmd->get_name();
  }
  return amrnn::run(config);
}
