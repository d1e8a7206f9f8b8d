#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "amrnn/tensor.hpp"

namespace amrnn {

struct Utterance {
  std::vector<std::string> tokens;  // non-empty, lowercase-normalized
};

struct Story {
  std::vector<Utterance> utterances;

  int word_count() const;
  std::vector<std::string> flat_tokens() const;
  // True at each utterance-final flattened position.
  std::vector<char> eos_mask() const;
};

struct Example {
  std::string id;
  Story story;
  std::vector<std::string> question;
  std::array<std::vector<std::string>, 4> choices;
  int answer = 0;  // index of the correct choice
};

struct Dataset {
  std::vector<Example> train, dev, test;

  const std::vector<Example>& split(const std::string& name) const;
};

struct EmbeddingTable {
  int dimension = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  // nullptr for words without an entry.
  const std::vector<double>* find(const std::string& word) const;
};

// Lowercases and strips punctuation other than apostrophes; returns "" when
// nothing is left.
std::string normalize_token(const std::string& raw);
std::vector<std::string> tokenize(const std::string& text);

// Plain-text embeddings: one `word v1 ... vD` line per entry. The dimension is
// inferred from the first line; inconsistent lines raise ParseError with the
// line number.
EmbeddingTable load_embedding_table(const std::string& path);
void save_embedding_table(const std::string& path, const EmbeddingTable& table);

// Line-delimited JSON records with fields id, split, story, question, choices,
// answer. Parse failures raise ParseError; semantic failures raise
// ValidationError naming the example id.
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& dataset);

// Sum of the embedding vectors of the known words; unknown words contribute
// zero. Always returns a tensor of the table's dimension.
Tensor bag_vector(const std::vector<std::string>& words, const EmbeddingTable& table);

// Keeps the ceil(keep_fraction * N) utterances whose bag vector is most
// cosine-similar to the question's, in original order; never drops below one.
Story prune_story(const Story& story, const std::vector<std::string>& question,
                  double keep_fraction, const EmbeddingTable& table);

// Emulated recognition noise: each word independently, with probability
// word_error_rate, is substituted by a uniform lexicon word (p = 0.5), deleted
// (p = 0.25) or duplicated (p = 0.25). Utterance boundaries are preserved and
// the last remaining word of an utterance is never deleted.
Story corrupt_transcript(const Story& story, double word_error_rate, std::uint64_t rng_seed,
                         const std::vector<std::string>& lexicon);

// Sorted unique tokens over every story, question and choice in all splits.
std::vector<std::string> vocabulary(const Dataset& dataset);
// Sorted unique story tokens in all splits; the lexicon used for corruption.
std::vector<std::string> story_lexicon(const Dataset& dataset);

}  // namespace amrnn
