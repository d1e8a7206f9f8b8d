#include "amrnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "amrnn/rng.hpp"

namespace amrnn {

namespace {

std::string numbered(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

// Question markers qm<i> appear only in questions; their partner words pm<i>
// key the story side. Keeping the question token out of the story means an
// untrained model has no verbatim anchor to attend to.
struct Pools {
  std::vector<std::string> question_markers;
  std::vector<std::string> partners;  // partners[i] keys stories for question_markers[i]
  std::vector<std::string> answer_markers;
  std::vector<std::string> fillers;
};

Pools build_pools(const TaskSpec& spec) {
  const int pool = std::max(4, spec.vocab_size / 5);
  const int reserved = pool * 3;
  if (spec.vocab_size - reserved < 1) {
    throw ConfigError("synthetic task: vocab_size " + std::to_string(spec.vocab_size) +
                      " too small to avoid marker collisions");
  }
  Pools pools;
  for (int i = 0; i < pool; ++i) pools.question_markers.push_back(numbered("qm", i));
  for (int i = 0; i < pool; ++i) pools.partners.push_back(numbered("pm", i));
  for (int i = 0; i < pool; ++i) pools.answer_markers.push_back(numbered("am", i));
  for (int i = 0; i < spec.vocab_size - reserved; ++i) pools.fillers.push_back(numbered("fl", i));
  return pools;
}

// k distinct indices into a pool, order randomized
std::vector<int> draw_distinct(std::size_t pool_size, int k, Rng& rng) {
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Utterance filler_utterance(int len, const Pools& pools, Rng& rng) {
  Utterance u;
  u.tokens.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) u.tokens.push_back(rng.pick(pools.fillers));
  return u;
}

// Fills the whole utterance with the alternating pattern key value key ...,
// so the value is redundantly keyed and, from three slots up, flanked.
void plant_chain(Utterance& u, const std::string& key, const std::string& value) {
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    u.tokens[i] = i % 2 == 0 ? key : value;
  }
}

Example make_keyword_example(const TaskSpec& spec, const Pools& pools, Rng& rng) {
  Example ex;
  ex.answer = static_cast<int>(rng.below(4));

  const auto q_idx = draw_distinct(pools.question_markers.size(), 4, rng);  // [0] is asked
  const auto a_idx = draw_distinct(pools.answer_markers.size(), 4, rng);    // [k] is choice k

  for (int u = 0; u < spec.story_utterances; ++u) {
    ex.story.utterances.push_back(filler_utterance(spec.words_per_utterance, pools, rng));
  }
  std::vector<int> slots(static_cast<std::size_t>(spec.story_utterances));
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots);

  int next_slot = 0;
  int next_decoy = 1;
  for (int k = 0; k < 4; ++k) {
    Utterance& u =
        ex.story.utterances[static_cast<std::size_t>(slots[static_cast<std::size_t>(next_slot++)])];
    const int via = k == ex.answer ? q_idx[0] : q_idx[static_cast<std::size_t>(next_decoy++)];
    plant_chain(u, pools.partners[static_cast<std::size_t>(via)],
                pools.answer_markers[static_cast<std::size_t>(a_idx[static_cast<std::size_t>(k)])]);
  }

  ex.question = {pools.question_markers[static_cast<std::size_t>(q_idx[0])]};
  for (int k = 0; k < 4; ++k) {
    ex.choices[static_cast<std::size_t>(k)] = {
        pools.answer_markers[static_cast<std::size_t>(a_idx[static_cast<std::size_t>(k)])]};
  }
  return ex;
}

Example make_two_fact_example(const TaskSpec& spec, const Pools& pools, Rng& rng) {
  Example ex;
  ex.answer = static_cast<int>(rng.below(4));

  // Chain k: the question marker's partner shares an utterance with a bridge
  // word, and the bridge's own partner keys the utterance holding the answer
  // marker. The real chain resolves the correct choice, a decoy chain covers
  // one distractor, so single-utterance evidence is ambiguous between two
  // candidates and no utterance links the question side to an answer marker.
  const auto q_idx = draw_distinct(pools.question_markers.size(), 4, rng);
  const std::array<int, 2> asked = {q_idx[0], q_idx[1]};    // question markers
  const std::array<int, 2> bridge = {q_idx[2], q_idx[3]};   // bridges, from the same pool
  const auto a_idx = draw_distinct(pools.answer_markers.size(), 4, rng);

  for (int u = 0; u < spec.story_utterances; ++u) {
    ex.story.utterances.push_back(filler_utterance(spec.words_per_utterance, pools, rng));
  }
  std::vector<int> slots(static_cast<std::size_t>(spec.story_utterances));
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots);

  int decoy = static_cast<int>(rng.below(3));
  if (decoy >= ex.answer) ++decoy;

  int next_slot = 0;
  const std::array<int, 2> chain_choice = {ex.answer, decoy};
  for (int k = 0; k < 2; ++k) {
    Utterance& x =
        ex.story.utterances[static_cast<std::size_t>(slots[static_cast<std::size_t>(next_slot++)])];
    plant_chain(x, pools.partners[static_cast<std::size_t>(asked[static_cast<std::size_t>(k)])],
                pools.question_markers[static_cast<std::size_t>(bridge[static_cast<std::size_t>(k)])]);
    Utterance& y =
        ex.story.utterances[static_cast<std::size_t>(slots[static_cast<std::size_t>(next_slot++)])];
    plant_chain(y, pools.partners[static_cast<std::size_t>(bridge[static_cast<std::size_t>(k)])],
                pools.answer_markers[static_cast<std::size_t>(
                    a_idx[static_cast<std::size_t>(chain_choice[static_cast<std::size_t>(k)])])]);
  }

  ex.question = {pools.question_markers[static_cast<std::size_t>(asked[0])]};
  for (int k = 0; k < 4; ++k) {
    ex.choices[static_cast<std::size_t>(k)] = {
        pools.answer_markers[static_cast<std::size_t>(a_idx[static_cast<std::size_t>(k)])]};
  }
  return ex;
}

}  // namespace

std::string to_string(TaskKind kind) {
  return kind == TaskKind::keyword_match ? "keyword_match" : "two_fact";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "keyword_match") return TaskKind::keyword_match;
  if (name == "two_fact") return TaskKind::two_fact;
  throw ConfigError("unknown task kind '" + name + "' (expected keyword_match or two_fact)");
}

void TaskSpec::validate() const {
  if (vocab_size < 8) throw ConfigError("synthetic task: vocab_size must be >= 8");
  if (words_per_utterance < 2) {
    throw ConfigError("synthetic task: words_per_utterance must be >= 2 to hold a marker pair");
  }
  if (story_utterances < 4) {
    throw ConfigError("synthetic task: " + to_string(kind) +
                      " needs at least 4 story utterances");
  }
  if (n_train < 0 || n_dev < 0 || n_test < 0) {
    throw ConfigError("synthetic task: split sizes must be >= 0");
  }
}

Dataset generate(const TaskSpec& spec) {
  spec.validate();
  const Pools pools = build_pools(spec);
  Rng rng(mix_seed(spec.seed, 17));

  Dataset dataset;
  auto fill_split = [&](std::vector<Example>& split, const char* name, int count) {
    split.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      Example ex = spec.kind == TaskKind::keyword_match ? make_keyword_example(spec, pools, rng)
                                                        : make_two_fact_example(spec, pools, rng);
      ex.id = to_string(spec.kind) + "-" + name + "-" + std::to_string(i);
      split.push_back(std::move(ex));
    }
  };
  fill_split(dataset.train, "train", spec.n_train);
  fill_split(dataset.dev, "dev", spec.n_dev);
  fill_split(dataset.test, "test", spec.n_test);
  return dataset;
}

std::vector<std::string> task_vocabulary(const TaskSpec& spec) {
  spec.validate();
  const Pools pools = build_pools(spec);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(spec.vocab_size));
  out.insert(out.end(), pools.question_markers.begin(), pools.question_markers.end());
  out.insert(out.end(), pools.partners.begin(), pools.partners.end());
  out.insert(out.end(), pools.answer_markers.begin(), pools.answer_markers.end());
  out.insert(out.end(), pools.fillers.begin(), pools.fillers.end());
  return out;
}

EmbeddingTable synthetic_embeddings(const TaskSpec& spec, int dimension) {
  if (dimension < 1) throw ConfigError("synthetic embeddings: dimension must be positive");
  EmbeddingTable table;
  table.dimension = dimension;
  Rng rng(mix_seed(spec.seed, 23));
  for (const std::string& word : task_vocabulary(spec)) {
    std::vector<double> v(static_cast<std::size_t>(dimension));
    double norm_sq = 0.0;
    for (double& x : v) {
      x = rng.uniform(-1.0, 1.0);
      norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 0) {
      for (double& x : v) x /= norm;
    }
    table.entries.emplace(word, std::move(v));
  }
  return table;
}

}  // namespace amrnn
