#include "amrnn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "amrnn/rng.hpp"

namespace amrnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

int parse_int(const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(parse_int(item));
  if (out.empty()) throw ConfigError("expected a comma-separated integer list, got '" + v + "'");
  return out;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

Dataset load_prepared_dataset(const RunConfig& config) {
  if (config.dataset_path.empty()) throw ConfigError("missing --dataset");
  Dataset dataset = load_dataset(config.dataset_path);
  if (config.keep_fraction < 1.0) {
    if (config.embeddings_path.empty()) {
      throw ConfigError("--keep-fraction below 1 requires --embeddings for pruning");
    }
    if (!(config.keep_fraction > 0.0)) throw ConfigError("--keep-fraction must be in (0, 1]");
    const EmbeddingTable table = load_embedding_table(config.embeddings_path);
    for (auto* split : {&dataset.train, &dataset.dev, &dataset.test}) {
      for (Example& ex : *split) {
        ex.story = prune_story(ex.story, ex.question, config.keep_fraction, table);
      }
    }
  }
  return dataset;
}

std::vector<Example> corrupted_copy(const std::vector<Example>& examples, const Dataset& dataset,
                                    double rate, std::uint64_t seed) {
  const std::vector<std::string> lexicon = story_lexicon(dataset);
  std::vector<Example> out = examples;
  for (Example& ex : out) {
    ex.story = corrupt_transcript(ex.story, rate, mix_seed(seed, fnv1a(ex.id)), lexicon);
  }
  return out;
}

const Example* find_example(const Dataset& dataset, const std::string& id) {
  for (const auto* split : {&dataset.train, &dataset.dev, &dataset.test}) {
    for (const Example& ex : *split) {
      if (ex.id == id) return &ex;
    }
  }
  return nullptr;
}

int run_train(const RunConfig& config) {
  const Dataset dataset = load_prepared_dataset(config);
  ensure_out_dir(config.out_dir);

  HopConfig hops{config.n_hops, attention_level_from_string(config.level)};
  AmrnnModel model = AmrnnModel::init(vocabulary(dataset), config.hidden_size, config.input_dim,
                                      hops, config.train.seed);
  const TrainResult result = train(std::move(model), dataset, config.train);

  const std::string ckpt = (fs::path(config.out_dir) / "model.ckpt").string();
  result.model.save(ckpt);

  auto out = open_out((fs::path(config.out_dir) / "history.jsonl").string());
  for (const EpochStats& stats : result.history) {
    json rec;
    rec["epoch"] = stats.epoch;
    rec["mean_train_loss"] = stats.mean_train_loss;
    rec["dev_accuracy"] = stats.dev_accuracy;
    out << rec.dump() << '\n';
  }

  double best_dev = 0.0;
  for (const EpochStats& s : result.history) best_dev = std::max(best_dev, s.dev_accuracy);
  std::cout << "trained " << result.history.size() << " epochs, best dev accuracy " << best_dev
            << ", checkpoint " << ckpt << "\n";
  return kExitOk;
}

int run_eval(const RunConfig& config) {
  if (config.checkpoint_path.empty()) throw ConfigError("missing --checkpoint");
  const Dataset dataset = load_prepared_dataset(config);
  const AmrnnModel model = AmrnnModel::load(config.checkpoint_path);

  std::vector<Example> examples = dataset.split(config.split);
  if (examples.empty()) throw ConfigError("split '" + config.split + "' is empty");
  if (config.corrupt_rate > 0.0) {
    examples = corrupted_copy(examples, dataset, config.corrupt_rate, config.corrupt_seed);
  }

  ensure_out_dir(config.out_dir);
  auto out = open_out((fs::path(config.out_dir) / "eval.jsonl").string());
  int correct = 0;
  Tape tape;
  for (const Example& ex : examples) {
    tape.reset();
    const int chosen = model.forward(tape, ex).chosen;
    const bool ok = chosen == ex.answer;
    correct += ok ? 1 : 0;
    json rec;
    rec["id"] = ex.id;
    rec["chosen"] = chosen;
    rec["correct"] = ok;
    out << rec.dump() << '\n';
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  json agg;
  agg["accuracy"] = accuracy;
  agg["count"] = examples.size();
  agg["split"] = config.split;
  agg["corrupt_rate"] = config.corrupt_rate;
  out << agg.dump() << '\n';
  std::cout << "accuracy " << accuracy << " on " << examples.size() << " examples\n";
  return kExitOk;
}

int run_baseline(const RunConfig& config) {
  const Dataset dataset = load_prepared_dataset(config);
  const std::vector<Example>& examples = dataset.split(config.split);
  if (examples.empty()) throw ConfigError("split '" + config.split + "' is empty");

  EmbeddingTable table;
  if (!config.embeddings_path.empty()) table = load_embedding_table(config.embeddings_path);

  std::vector<std::string> methods;
  if (config.method == "all") {
    methods = {"longest",
               "shortest",
               "most_different_length",
               "choice_most_similar",
               "choice_most_different",
               "question_choice_similar",
               "sliding_window"};
  } else {
    methods = {config.method};
  }

  ensure_out_dir(config.out_dir);
  auto out = open_out((fs::path(config.out_dir) / "baseline.jsonl").string());

  for (const std::string& method : methods) {
    std::vector<int> chosen(examples.size(), 0);
    if (method == "sliding_window") {
      for (std::size_t i = 0; i < examples.size(); ++i) {
        chosen[i] = sliding_window(examples[i], table, config.window_size);
      }
    } else if (method == "memnet") {
      MemNetConfig cfg = config.memnet;
      const MemNet net = MemNet::init(vocabulary(dataset), cfg);
      const MemNetTrainResult trained = memnet_train(net, dataset, cfg);
      Tape tape;
      for (std::size_t i = 0; i < examples.size(); ++i) {
        tape.reset();
        chosen[i] = memnet_forward(tape, trained.net, examples[i], trained.net.n_hops).chosen;
      }
    } else {
      const SimpleBaselineKind kind = simple_baseline_from_string(method);
      for (std::size_t i = 0; i < examples.size(); ++i) {
        chosen[i] = simple_baseline(examples[i], kind, table);
      }
    }

    int correct = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const bool ok = chosen[i] == examples[i].answer;
      correct += ok ? 1 : 0;
      json rec;
      rec["id"] = examples[i].id;
      rec["method"] = method;
      rec["chosen"] = chosen[i];
      rec["correct"] = ok;
      out << rec.dump() << '\n';
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
    json agg;
    agg["method"] = method;
    agg["accuracy"] = accuracy;
    agg["count"] = examples.size();
    out << agg.dump() << '\n';
    std::cout << method << " accuracy " << accuracy << "\n";
  }
  return kExitOk;
}

int run_gen_synthetic(const RunConfig& config) {
  ensure_out_dir(config.out_dir);
  const Dataset dataset = generate(config.task);
  const EmbeddingTable table = synthetic_embeddings(config.task, config.embedding_dim);
  const std::string dataset_path = (fs::path(config.out_dir) / "dataset.jsonl").string();
  const std::string emb_path = (fs::path(config.out_dir) / "embeddings.txt").string();
  save_dataset(dataset_path, dataset);
  save_embedding_table(emb_path, table);
  std::cout << "wrote " << dataset.train.size() << "/" << dataset.dev.size() << "/"
            << dataset.test.size() << " examples to " << dataset_path << "\n";
  return kExitOk;
}

int run_tune_hops(const RunConfig& config) {
  const Dataset dataset = load_prepared_dataset(config);
  const std::vector<std::string> vocab = vocabulary(dataset);
  const AttentionLevel level = attention_level_from_string(config.level);

  const TuneResult result = tune_hops(
      [&](int n) {
        return AmrnnModel::init(vocab, config.hidden_size, config.input_dim,
                                HopConfig{n, level}, config.train.seed);
      },
      dataset, config.train);

  ensure_out_dir(config.out_dir);
  auto out = open_out((fs::path(config.out_dir) / "tune.jsonl").string());
  for (const auto& [n, acc] : result.dev_accuracy) {
    json rec;
    rec["n_hops"] = n;
    rec["dev_accuracy"] = acc;
    out << rec.dump() << '\n';
    std::cout << "hops " << n << ": dev accuracy " << acc << "\n";
  }
  json agg;
  agg["chosen_n_hops"] = result.best_hops;
  out << agg.dump() << '\n';
  std::cout << "chosen hop count: " << result.best_hops << "\n";
  return kExitOk;
}

int run_export_attention(const RunConfig& config) {
  if (config.checkpoint_path.empty()) throw ConfigError("missing --checkpoint");
  if (config.example_id.empty()) throw ConfigError("missing --example-id");
  const Dataset dataset = load_prepared_dataset(config);
  const AmrnnModel model = AmrnnModel::load(config.checkpoint_path);

  const Example* example = find_example(dataset, config.example_id);
  if (example == nullptr) {
    throw ValidationError("example " + config.example_id + " not found in " + config.dataset_path);
  }
  ensure_out_dir(config.out_dir);
  const auto paths = export_attention(model, *example, attention_level_from_string(config.level),
                                      config.out_dir);
  for (const std::string& p : paths) std::cout << "wrote " << p << "\n";
  return kExitOk;
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "dataset") config.dataset_path = value;
  else if (key == "embeddings") config.embeddings_path = value;
  else if (key == "checkpoint") config.checkpoint_path = value;
  else if (key == "out-dir") config.out_dir = value;
  else if (key == "hidden-size") config.hidden_size = parse_int(value);
  else if (key == "input-dim") config.input_dim = parse_int(value);
  else if (key == "hops") config.n_hops = parse_int(value);
  else if (key == "level") config.level = value;
  else if (key == "lr") config.train.learning_rate = parse_double(value);
  else if (key == "momentum") config.train.momentum = parse_double(value);
  else if (key == "rms-decay") config.train.rms_decay = parse_double(value);
  else if (key == "epsilon") config.train.epsilon = parse_double(value);
  else if (key == "dropout") config.train.dropout_rate = parse_double(value);
  else if (key == "batch-size") config.train.batch_size = parse_int(value);
  else if (key == "epochs") config.train.max_epochs = parse_int(value);
  else if (key == "hop-search") config.train.hop_search = parse_int_list(value);
  else if (key == "seed") config.train.seed = parse_u64(value);
  else if (key == "cross-entropy") config.train.cross_entropy = parse_bool(value);
  else if (key == "keep-fraction") config.keep_fraction = parse_double(value);
  else if (key == "split") config.split = value;
  else if (key == "corrupt-rate") config.corrupt_rate = parse_double(value);
  else if (key == "corrupt-seed") config.corrupt_seed = parse_u64(value);
  else if (key == "method") config.method = value;
  else if (key == "window") config.window_size = parse_int(value);
  else if (key == "memnet-size") config.memnet.embedding_size = parse_int(value);
  else if (key == "memnet-lr") config.memnet.learning_rate = parse_double(value);
  else if (key == "memnet-batch-size") config.memnet.batch_size = parse_int(value);
  else if (key == "memnet-epochs") config.memnet.max_epochs = parse_int(value);
  else if (key == "memnet-shared") config.memnet.shared_embeddings = parse_bool(value);
  else if (key == "memnet-seed") config.memnet.seed = parse_u64(value);
  else if (key == "memnet-hop-search") config.memnet.hop_search = parse_int_list(value);
  else if (key == "task-kind") config.task.kind = task_kind_from_string(value);
  else if (key == "vocab-size") config.task.vocab_size = parse_int(value);
  else if (key == "utterances") config.task.story_utterances = parse_int(value);
  else if (key == "words") config.task.words_per_utterance = parse_int(value);
  else if (key == "train-n") config.task.n_train = parse_int(value);
  else if (key == "dev-n") config.task.n_dev = parse_int(value);
  else if (key == "test-n") config.task.n_test = parse_int(value);
  else if (key == "task-seed") config.task.seed = parse_u64(value);
  else if (key == "embedding-dim") config.embedding_dim = parse_int(value);
  else if (key == "example-id") config.example_id = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ConfigError("config file " + path + " line " + std::to_string(line_no) +
                          ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config file " + path + " line " + std::to_string(line_no) +
                        ": empty key");
    }
    apply_config_entry(config, key, value);
  }
}

std::vector<std::string> export_attention(const AmrnnModel& model, const Example& example,
                                          AttentionLevel level, const std::string& out_dir) {
  AmrnnModel local = model;
  local.hops.level = level;

  Tape tape;
  const AmrnnModel::Forward fwd = local.forward(tape, example);
  const std::vector<std::string> words = example.story.flat_tokens();
  const std::size_t n_pos = words.size();

  ensure_out_dir(out_dir);
  const std::string stem = example.id + "." + to_string(level);
  const std::string tsv_path = (fs::path(out_dir) / (stem + ".tsv")).string();
  const std::string svg_path = (fs::path(out_dir) / (stem + ".svg")).string();

  {
    auto out = open_out(tsv_path);
    for (const HopTrace& hop : fwd.trace.hops) {
      for (std::size_t t = 0; t < n_pos; ++t) {
        if (t > 0) out << '\t';
        out << g17(hop.weights[t]);
      }
      out << '\n';
    }
  }

  {
    const int cell = 26;
    const int left = 54;
    const int top = 10;
    const int word_space = 64;
    const std::size_t n_hops = fwd.trace.hops.size();
    const int width = left + cell * static_cast<int>(n_pos) + 10;
    const int height = top + cell * static_cast<int>(n_hops) + word_space;

    auto out = open_out(svg_path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"monospace\" font-size=\"9\">\n";
    for (std::size_t k = 0; k < n_hops; ++k) {
      const int y = top + cell * static_cast<int>(k);
      out << "<text x=\"2\" y=\"" << y + cell / 2 + 3 << "\">hop " << k + 1 << "</text>\n";
      for (std::size_t t = 0; t < n_pos; ++t) {
        const double w = fwd.trace.hops[k].weights[t];
        const int gray = static_cast<int>(std::lround(255.0 * (1.0 - std::min(1.0, w))));
        const int x = left + cell * static_cast<int>(t);
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"rgb(" << gray << ',' << gray << ',' << gray
            << ")\" stroke=\"rgb(200,200,200)\"/>\n";
      }
    }
    const int word_y = top + cell * static_cast<int>(n_hops) + 12;
    for (std::size_t t = 0; t < n_pos; ++t) {
      const int x = left + cell * static_cast<int>(t) + cell / 2;
      out << "<text x=\"" << x << "\" y=\"" << word_y << "\" transform=\"rotate(60 " << x << ' '
          << word_y << ")\">" << words[t] << "</text>\n";
    }
    out << "</svg>\n";
  }

  return {tsv_path, svg_path};
}

int run(const RunConfig& config) {
  try {
    if (config.subcommand == "train") return run_train(config);
    if (config.subcommand == "eval") return run_eval(config);
    if (config.subcommand == "baseline") return run_baseline(config);
    if (config.subcommand == "gen-synthetic") return run_gen_synthetic(config);
    if (config.subcommand == "tune-hops") return run_tune_hops(config);
    if (config.subcommand == "export-attention") return run_export_attention(config);
    throw ConfigError("unknown subcommand '" + config.subcommand + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace amrnn
