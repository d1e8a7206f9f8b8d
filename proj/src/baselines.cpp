#include "amrnn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amrnn/encoder.hpp"
#include "amrnn/rng.hpp"
#include "amrnn/training.hpp"

namespace amrnn {

namespace {

// argmax with lowest-index tie-break
int argmax4(const std::array<double, 4>& scores) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

std::string to_string(SimpleBaselineKind kind) {
  switch (kind) {
    case SimpleBaselineKind::longest: return "longest";
    case SimpleBaselineKind::shortest: return "shortest";
    case SimpleBaselineKind::most_different_length: return "most_different_length";
    case SimpleBaselineKind::choice_most_similar: return "choice_most_similar";
    case SimpleBaselineKind::choice_most_different: return "choice_most_different";
    case SimpleBaselineKind::question_choice_similar: return "question_choice_similar";
  }
  throw ConfigError("bad SimpleBaselineKind");
}

SimpleBaselineKind simple_baseline_from_string(const std::string& name) {
  for (SimpleBaselineKind kind :
       {SimpleBaselineKind::longest, SimpleBaselineKind::shortest,
        SimpleBaselineKind::most_different_length, SimpleBaselineKind::choice_most_similar,
        SimpleBaselineKind::choice_most_different, SimpleBaselineKind::question_choice_similar}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown baseline kind '" + name + "'");
}

int simple_baseline(const Example& example, SimpleBaselineKind kind, const EmbeddingTable& table) {
  std::array<double, 4> score{};

  switch (kind) {
    case SimpleBaselineKind::longest:
    case SimpleBaselineKind::shortest: {
      const double sign = kind == SimpleBaselineKind::longest ? 1.0 : -1.0;
      for (int i = 0; i < 4; ++i) {
        score[static_cast<std::size_t>(i)] =
            sign * static_cast<double>(example.choices[static_cast<std::size_t>(i)].size());
      }
      break;
    }
    case SimpleBaselineKind::most_different_length: {
      for (int i = 0; i < 4; ++i) {
        const auto len_i = static_cast<double>(example.choices[static_cast<std::size_t>(i)].size());
        double gap = 0.0;
        for (int j = 0; j < 4; ++j) {
          if (j == i) continue;
          gap += std::abs(len_i -
                          static_cast<double>(example.choices[static_cast<std::size_t>(j)].size()));
        }
        score[static_cast<std::size_t>(i)] = gap;
      }
      break;
    }
    case SimpleBaselineKind::choice_most_similar:
    case SimpleBaselineKind::choice_most_different: {
      std::array<Tensor, 4> bags;
      for (int i = 0; i < 4; ++i) {
        bags[static_cast<std::size_t>(i)] =
            bag_vector(example.choices[static_cast<std::size_t>(i)], table);
      }
      const double sign = kind == SimpleBaselineKind::choice_most_similar ? 1.0 : -1.0;
      for (int i = 0; i < 4; ++i) {
        double mean = 0.0;
        for (int j = 0; j < 4; ++j) {
          if (j == i) continue;
          mean += cosine_similarity_value(bags[static_cast<std::size_t>(i)].values,
                                          bags[static_cast<std::size_t>(j)].values);
        }
        score[static_cast<std::size_t>(i)] = sign * mean / 3.0;
      }
      break;
    }
    case SimpleBaselineKind::question_choice_similar: {
      const Tensor q = bag_vector(example.question, table);
      for (int i = 0; i < 4; ++i) {
        const Tensor c = bag_vector(example.choices[static_cast<std::size_t>(i)], table);
        score[static_cast<std::size_t>(i)] = cosine_similarity_value(c.values, q.values);
      }
      break;
    }
  }
  return argmax4(score);
}

int sliding_window(const Example& example, const EmbeddingTable& table, int window_size) {
  if (window_size < 1) throw PreconditionError("sliding_window: window size must be >= 1");

  const int n = static_cast<int>(example.story.utterances.size());
  const int w = std::min(window_size, n);

  std::vector<Tensor> utt_bags;
  utt_bags.reserve(static_cast<std::size_t>(n));
  for (const Utterance& u : example.story.utterances) utt_bags.push_back(bag_vector(u.tokens, table));
  const Tensor q = bag_vector(example.question, table);

  std::vector<double> utt_q_sim(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    utt_q_sim[static_cast<std::size_t>(i)] =
        cosine_similarity_value(utt_bags[static_cast<std::size_t>(i)].values, q.values);
  }

  int best_start = 0;
  double best_sim = -1e300;
  for (int start = 0; start + w <= n; ++start) {
    double mean = 0.0;
    for (int i = start; i < start + w; ++i) mean += utt_q_sim[static_cast<std::size_t>(i)];
    mean /= w;
    if (mean > best_sim) {  // earliest window on ties
      best_sim = mean;
      best_start = start;
    }
  }

  std::array<double, 4> score{};
  for (int c = 0; c < 4; ++c) {
    const Tensor choice_bag = bag_vector(example.choices[static_cast<std::size_t>(c)], table);
    double mean = 0.0;
    for (int i = best_start; i < best_start + w; ++i) {
      mean += cosine_similarity_value(utt_bags[static_cast<std::size_t>(i)].values,
                                      choice_bag.values);
    }
    score[static_cast<std::size_t>(c)] = mean / w;
  }
  return argmax4(score);
}

void MemNetConfig::validate() const {
  if (embedding_size < 1) throw ConfigError("memnet embedding_size must be positive");
  if (n_hops < 1) throw ConfigError("memnet n_hops must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("memnet learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("memnet batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("memnet max_epochs must be >= 0");
  for (int n : hop_search) {
    if (n < 1) throw ConfigError("memnet hop_search entries must be >= 1");
  }
}

MemNet MemNet::init(const std::vector<std::string>& words, const MemNetConfig& cfg) {
  cfg.validate();
  MemNet net;
  net.embedding_size = cfg.embedding_size;
  net.shared_embeddings = cfg.shared_embeddings;
  net.n_hops = cfg.n_hops;
  net.vocab.reserve(words.size() + 1);
  net.vocab.push_back("<unk>");
  for (const std::string& w : words) net.vocab.push_back(w);
  for (std::size_t i = 0; i < net.vocab.size(); ++i) {
    if (!net.vocab_index.emplace(net.vocab[i], static_cast<int>(i)).second) {
      throw ConfigError("duplicate vocabulary word '" + net.vocab[i] + "'");
    }
  }

  Rng rng(cfg.seed);
  const int v = static_cast<int>(net.vocab.size());
  net.emb_a = Tensor::zeros({cfg.embedding_size, v});
  glorot_fill(net.emb_a, v, cfg.embedding_size, rng);
  if (!cfg.shared_embeddings) {
    net.emb_b = Tensor::zeros({cfg.embedding_size, v});
    glorot_fill(net.emb_b, v, cfg.embedding_size, rng);
    net.emb_c = Tensor::zeros({cfg.embedding_size, v});
    glorot_fill(net.emb_c, v, cfg.embedding_size, rng);
  }
  return net;
}

int MemNet::word_index(const std::string& word) const {
  auto it = vocab_index.find(word);
  return it == vocab_index.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, Tensor*>> MemNet::parameters() {
  if (shared_embeddings) return {{"embedding", &emb_a}};
  return {{"embedding_a", &emb_a}, {"embedding_b", &emb_b}, {"embedding_c", &emb_c}};
}

namespace {

std::vector<int> word_indices(const MemNet& net, const std::vector<std::string>& words) {
  std::vector<int> out;
  out.reserve(words.size());
  for (const std::string& w : words) out.push_back(net.word_index(w));
  return out;
}

struct BoundMemNet {
  Tensor a, b, c;  // b/c alias a's values when shared (separate leaves are not needed)
  bool shared = true;
};

BoundMemNet bind(Tape& tape, const MemNet& net) {
  BoundMemNet bound;
  bound.shared = net.shared_embeddings;
  bound.a = tape.leaf(net.emb_a);
  if (!net.shared_embeddings) {
    bound.b = tape.leaf(net.emb_b);
    bound.c = tape.leaf(net.emb_c);
  } else {
    bound.b = bound.a;
    bound.c = bound.a;
  }
  return bound;
}

}  // namespace

MemNetForward memnet_forward(Tape& tape, const MemNet& net, const Example& example, int n_hops) {
  if (n_hops < 1) throw ConfigError("memnet_forward: n_hops must be >= 1");
  const BoundMemNet bound = bind(tape, net);

  const std::size_t n_mem = example.story.utterances.size();
  std::vector<Tensor> memories, outputs;
  memories.reserve(n_mem);
  outputs.reserve(n_mem);
  for (const Utterance& utt : example.story.utterances) {
    const std::vector<int> idx = word_indices(net, utt.tokens);
    memories.push_back(tape.embed_bag(bound.a, idx));
    outputs.push_back(tape.embed_bag(bound.c, idx));
  }

  Tensor u = tape.embed_bag(bound.b, word_indices(net, example.question));

  MemNetForward result;
  for (int k = 0; k < n_hops; ++k) {
    std::vector<Tensor> match;
    match.reserve(n_mem);
    for (const Tensor& m : memories) match.push_back(tape.dot(u, m));
    const Tensor probs =
        tape.normalize_attention(tape.stack(match), std::vector<char>(n_mem, 1));
    const Tensor o = tape.weighted_sum(probs, outputs);
    u = tape.add(u, o);
    result.hop_probs.push_back(probs.values);
  }

  std::array<double, 4> plain_scores{};
  for (int i = 0; i < 4; ++i) {
    const Tensor choice =
        tape.embed_bag(bound.b, word_indices(net, example.choices[static_cast<std::size_t>(i)]));
    result.scores[static_cast<std::size_t>(i)] = tape.cosine_similarity(u, choice);
    plain_scores[static_cast<std::size_t>(i)] =
        result.scores[static_cast<std::size_t>(i)].scalar_value();
  }
  result.chosen = argmax4(plain_scores);
  return result;
}

double memnet_evaluate(const MemNet& net, const std::vector<Example>& examples) {
  if (examples.empty()) throw PreconditionError("memnet_evaluate: empty example list");
  int correct = 0;
  Tape tape;
  for (const Example& ex : examples) {
    tape.reset();
    if (memnet_forward(tape, net, ex, net.n_hops).chosen == ex.answer) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

namespace {

MemNet memnet_train_one(MemNet net, const Dataset& dataset, const MemNetConfig& cfg, int n_hops) {
  net.n_hops = n_hops;

  auto params = net.parameters();
  std::vector<Tensor*> tensors;
  tensors.reserve(params.size());
  for (auto& [name, t] : params) tensors.push_back(t);

  Rng shuffle_rng(mix_seed(cfg.seed, 11));
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Tensor> grad_sum;
  grad_sum.reserve(tensors.size());
  for (const Tensor* t : tensors) grad_sum.push_back(Tensor::zeros(t->shape));

  Tape tape;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (Tensor& g : grad_sum) std::fill(g.values.begin(), g.values.end(), 0.0);

      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = dataset.train[order[i]];
        tape.reset();
        const std::size_t first_leaf = tape.size();
        MemNetForward fwd = memnet_forward(tape, net, ex, n_hops);
        const Tensor loss = scores_loss(tape, fwd.scores, ex.answer, /*cross_entropy=*/false);
        tape.backward(loss);
        for (std::size_t k = 0; k < tensors.size(); ++k) {
          Tensor handle = *tensors[k];
          handle.node = static_cast<int>(first_leaf + k);
          const Tensor g = tape.grad(handle);
          for (std::size_t j = 0; j < g.values.size(); ++j) grad_sum[k].values[j] += g.values[j];
        }
      }

      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < tensors.size(); ++k) {
        for (std::size_t j = 0; j < tensors[k]->values.size(); ++j) {
          tensors[k]->values[j] -= step * grad_sum[k].values[j];
        }
      }
    }
  }
  return net;
}

}  // namespace

MemNetTrainResult memnet_train(const MemNet& net, const Dataset& dataset, const MemNetConfig& cfg) {
  cfg.validate();
  if (dataset.train.empty()) throw ConfigError("memnet_train: empty train split");

  std::vector<int> candidates = cfg.hop_search;
  if (candidates.empty() || dataset.dev.empty()) candidates = {cfg.n_hops};
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  MemNetTrainResult result;
  double best = -1.0;
  for (int n : candidates) {
    MemNet trained = memnet_train_one(net, dataset, cfg, n);
    const double acc = dataset.dev.empty() ? 0.0 : memnet_evaluate(trained, dataset.dev);
    result.dev_accuracy.emplace_back(n, acc);
    if (acc > best || result.dev_accuracy.size() == 1) {
      best = acc;
      result.net = std::move(trained);
    }
  }
  return result;
}

}  // namespace amrnn
