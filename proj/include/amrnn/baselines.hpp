#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "amrnn/data.hpp"
#include "amrnn/tensor.hpp"

namespace amrnn {

enum class SimpleBaselineKind {
  longest,
  shortest,
  most_different_length,
  choice_most_similar,
  choice_most_different,
  question_choice_similar,
};

std::string to_string(SimpleBaselineKind kind);
SimpleBaselineKind simple_baseline_from_string(const std::string& name);

// Non-neural comparison systems over bag-of-embedding vectors. All ties break
// to the lowest choice index. The table is only consulted by the similarity
// kinds.
int simple_baseline(const Example& example, SimpleBaselineKind kind, const EmbeddingTable& table);

// Finds the contiguous window of min(W, N) utterances most similar to the
// question (mean bag-vector cosine; earliest window on ties), then scores each
// choice by its mean cosine to that window's utterances.
int sliding_window(const Example& example, const EmbeddingTable& table, int window_size);

// End-to-end memory network adapted to four-choice selection: choices are
// embedded with the question module and the answer is the choice closest (by
// cosine) to the final hop output.
struct MemNetConfig {
  int embedding_size = 128;
  int n_hops = 1;
  std::vector<int> hop_search = {1, 2, 3};
  double learning_rate = 0.01;
  int batch_size = 40;
  int max_epochs = 20;
  bool shared_embeddings = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct MemNet {
  int embedding_size = 0;
  bool shared_embeddings = true;
  std::vector<std::string> vocab;  // slot 0 reserved for unknown words
  std::unordered_map<std::string, int> vocab_index;
  Tensor emb_a;        // memory embedding, d x V
  Tensor emb_b;        // question/choice embedding; empty when shared
  Tensor emb_c;        // output embedding; empty when shared
  int n_hops = 1;      // active hop count (set by training when tuned)

  static MemNet init(const std::vector<std::string>& words, const MemNetConfig& cfg);

  int word_index(const std::string& word) const;
  std::vector<std::pair<std::string, Tensor*>> parameters();
  const Tensor& memory_embedding() const { return emb_a; }
  const Tensor& question_embedding() const { return shared_embeddings ? emb_a : emb_b; }
  const Tensor& output_embedding() const { return shared_embeddings ? emb_a : emb_c; }
};

struct MemNetForward {
  std::array<Tensor, 4> scores;
  int chosen = 0;
  std::vector<std::vector<double>> hop_probs;  // attention over memories per hop
};

MemNetForward memnet_forward(Tape& tape, const MemNet& net, const Example& example, int n_hops);

struct MemNetTrainResult {
  MemNet net;  // best candidate, with n_hops set to the selected hop count
  std::vector<std::pair<int, double>> dev_accuracy;
};

// Plain SGD on the squared-error-to-target loss; the hop count is selected on
// the dev split from cfg.hop_search (each candidate trains from the given
// initial net). Falls back to cfg.n_hops when the dev split is empty.
MemNetTrainResult memnet_train(const MemNet& net, const Dataset& dataset, const MemNetConfig& cfg);

double memnet_evaluate(const MemNet& net, const std::vector<Example>& examples);

}  // namespace amrnn
