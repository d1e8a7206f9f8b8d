#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amrnn/data.hpp"

namespace amrnn {

enum class TaskKind { keyword_match, two_fact };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// Desk-scale comprehension tasks with known solvability. Questions and
// choices are single marker words. Each question marker qm<i> has a fixed
// partner word pm<i> that keys the story side, so the question token itself
// never appears in a story and an untrained model has no verbatim anchor.
// Planted utterances alternate key and value words (key value key ...),
// giving word-level attention redundant informative positions.
//
// keyword_match: exactly one story utterance keys the correct choice's marker
// by the question's partner word; each distractor choice's marker sits in its
// own utterance keyed by an unrelated partner. All four choice markers occur
// in every story, so the keyed pairing is the only usable signal.
//
// two_fact: marker chains (question marker, bridge, answer marker), where
// bridges are question-pool words. One utterance pairs the question's partner
// with a bridge and a different utterance, keyed by the bridge's partner,
// holds the correct choice's marker; a decoy chain does the same for one
// distractor choice. No utterance links the question side to an answer
// marker, so single-utterance evidence narrows the answer to two candidates
// at best.
struct TaskSpec {
  TaskKind kind = TaskKind::keyword_match;
  int vocab_size = 64;
  int story_utterances = 8;
  int words_per_utterance = 5;
  int n_train = 500;
  int n_dev = 100;
  int n_test = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset generate(const TaskSpec& spec);

// The generator's full word list, in a fixed deterministic order.
std::vector<std::string> task_vocabulary(const TaskSpec& spec);

// Random unit vectors per vocabulary word, seeded from the spec.
EmbeddingTable synthetic_embeddings(const TaskSpec& spec, int dimension = 64);

}  // namespace amrnn
