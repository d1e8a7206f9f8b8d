#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amrnn/baselines.hpp"
#include "amrnn/model.hpp"
#include "amrnn/synthetic.hpp"
#include "amrnn/training.hpp"

namespace amrnn {

// Exit codes shared by run() and the binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;      // usage / configuration errors
inline constexpr int kExitValidation = 2;  // data parse / validation errors
inline constexpr int kExitRuntime = 3;     // runtime / numeric errors

struct RunConfig {
  std::string subcommand;  // train | eval | baseline | gen-synthetic | export-attention | tune-hops

  // paths
  std::string dataset_path;
  std::string embeddings_path;
  std::string checkpoint_path;
  std::string out_dir = ".";

  // model
  int hidden_size = 128;
  int input_dim = 128;
  int n_hops = 1;
  std::string level = "word";

  // training
  TrainConfig train;

  // preprocessing
  double keep_fraction = 1.0;

  // eval
  std::string split = "test";
  double corrupt_rate = 0.0;
  std::uint64_t corrupt_seed = 0;

  // baseline
  std::string method = "longest";  // simple kinds | sliding_window | memnet | all
  int window_size = 5;
  MemNetConfig memnet;

  // gen-synthetic
  TaskSpec task;
  int embedding_dim = 64;

  // export-attention
  std::string example_id;
};

// Flat `key = value` file; '#' starts a comment. Unknown keys are rejected.
// Values use the same spellings as the command line flags.
void apply_config_file(RunConfig& config, const std::string& path);
// Applies one key/value pair (shared by the file loader and flag handling).
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// Runs one subcommand and writes its artifacts under config.out_dir. Returns
// an exit code instead of throwing.
int run(const RunConfig& config);

// Writes `<id>.<level>.tsv` (rows = hops, columns = story word positions, 17
// significant digits) and `<id>.<level>.svg` (grayscale cells, darkness linear
// in weight, words printed beneath) into out_dir. Returns the two paths.
std::vector<std::string> export_attention(const AmrnnModel& model, const Example& example,
                                          AttentionLevel level, const std::string& out_dir);

}  // namespace amrnn
