#include "amrnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "amrnn/rng.hpp"

namespace amrnn {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void normalize_tokens_in_place(std::vector<std::string>& tokens, const std::string& what,
                               const std::string& id) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    std::string n = normalize_token(t);
    if (!n.empty()) out.push_back(std::move(n));
  }
  if (out.empty()) {
    throw ValidationError("example " + id + ": " + what + " has no tokens after normalization");
  }
  tokens = std::move(out);
}

json tokens_to_json(const std::vector<std::string>& tokens) {
  return json(tokens);
}

std::vector<std::string> tokens_from_json(const json& j, const std::string& what,
                                          const std::string& id) {
  if (!j.is_array()) throw ValidationError("example " + id + ": " + what + " must be an array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string()) {
      throw ValidationError("example " + id + ": " + what + " must contain only strings");
    }
    out.push_back(t.get<std::string>());
  }
  return out;
}

}  // namespace

int Story::word_count() const {
  int n = 0;
  for (const Utterance& u : utterances) n += static_cast<int>(u.tokens.size());
  return n;
}

std::vector<std::string> Story::flat_tokens() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(word_count()));
  for (const Utterance& u : utterances) {
    out.insert(out.end(), u.tokens.begin(), u.tokens.end());
  }
  return out;
}

std::vector<char> Story::eos_mask() const {
  std::vector<char> mask(static_cast<std::size_t>(word_count()), 0);
  std::size_t pos = 0;
  for (const Utterance& u : utterances) {
    pos += u.tokens.size();
    mask[pos - 1] = 1;
  }
  return mask;
}

const std::vector<Example>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (expected train, dev or test)");
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
  auto it = entries.find(word);
  return it == entries.end() ? nullptr : &it->second;
}

std::string normalize_token(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c >= 0x80) {
      out.push_back(static_cast<char>(c));  // pass non-ASCII bytes through
    } else if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      out.push_back('\'');
    }
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    std::string n = normalize_token(word);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

EmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path);

  EmbeddingTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word.empty()) continue;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (!ls.eof()) {
      throw ParseError("embedding file " + path + " line " + std::to_string(line_no) +
                       ": malformed float");
    }
    if (table.entries.empty()) {
      if (vec.empty()) {
        throw ParseError("embedding file " + path + " line " + std::to_string(line_no) +
                         ": no vector components");
      }
      table.dimension = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != table.dimension) {
      throw ParseError("embedding file " + path + " line " + std::to_string(line_no) + ": got " +
                       std::to_string(vec.size()) + " components, expected " +
                       std::to_string(table.dimension));
    }
    table.entries.insert_or_assign(std::move(word), std::move(vec));
  }
  if (table.entries.empty()) {
    throw ParseError("embedding file " + path + ": no entries");
  }
  return table;
}

void save_embedding_table(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file " + path);
  std::vector<const std::string*> words;
  words.reserve(table.entries.size());
  for (const auto& [word, _] : table.entries) words.push_back(&word);
  std::sort(words.begin(), words.end(), [](const auto* a, const auto* b) { return *a < *b; });
  for (const std::string* word : words) {
    out << *word;
    for (double v : table.entries.at(*word)) out << ' ' << format_double(v);
    out << '\n';
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);

  Dataset dataset;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("dataset file " + path + " line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (!rec.is_object()) {
      throw ParseError("dataset file " + path + " line " + std::to_string(line_no) +
                       ": record is not a JSON object");
    }

    const std::string id = rec.contains("id") && rec["id"].is_string()
                               ? rec["id"].get<std::string>()
                               : "<line " + std::to_string(line_no) + ">";
    for (const char* field : {"id", "split", "story", "question", "choices", "answer"}) {
      if (!rec.contains(field)) {
        throw ValidationError("example " + id + ": missing field '" + field + "'");
      }
    }
    if (!rec["id"].is_string()) throw ValidationError("example " + id + ": id must be a string");
    if (!seen_ids.insert(id).second) {
      throw ValidationError("example " + id + ": duplicate id");
    }

    Example ex;
    ex.id = id;

    if (!rec["story"].is_array() || rec["story"].empty()) {
      throw ValidationError("example " + id + ": story must be a non-empty array of utterances");
    }
    for (std::size_t u = 0; u < rec["story"].size(); ++u) {
      Utterance utt;
      utt.tokens = tokens_from_json(rec["story"][u], "story utterance " + std::to_string(u), id);
      normalize_tokens_in_place(utt.tokens, "story utterance " + std::to_string(u), id);
      ex.story.utterances.push_back(std::move(utt));
    }

    ex.question = tokens_from_json(rec["question"], "question", id);
    normalize_tokens_in_place(ex.question, "question", id);

    if (!rec["choices"].is_array() || rec["choices"].size() != 4) {
      throw ValidationError("example " + id + ": expected exactly 4 choices, got " +
                            std::to_string(rec["choices"].is_array() ? rec["choices"].size() : 0));
    }
    for (int c = 0; c < 4; ++c) {
      ex.choices[c] = tokens_from_json(rec["choices"][c], "choice " + std::to_string(c), id);
      normalize_tokens_in_place(ex.choices[c], "choice " + std::to_string(c), id);
    }

    if (!rec["answer"].is_number_integer()) {
      throw ValidationError("example " + id + ": answer must be an integer");
    }
    ex.answer = rec["answer"].get<int>();
    if (ex.answer < 0 || ex.answer > 3) {
      throw ValidationError("example " + id + ": answer " + std::to_string(ex.answer) +
                            " out of range 0-3");
    }

    const std::string split = rec["split"].is_string() ? rec["split"].get<std::string>() : "";
    if (split == "train") {
      dataset.train.push_back(std::move(ex));
    } else if (split == "dev") {
      dataset.dev.push_back(std::move(ex));
    } else if (split == "test") {
      dataset.test.push_back(std::move(ex));
    } else {
      throw ValidationError("example " + id + ": unknown split '" + split + "'");
    }
  }
  return dataset;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file " + path);
  auto dump_split = [&](const std::vector<Example>& examples, const char* split) {
    for (const Example& ex : examples) {
      json rec;
      rec["id"] = ex.id;
      rec["split"] = split;
      json story = json::array();
      for (const Utterance& u : ex.story.utterances) story.push_back(tokens_to_json(u.tokens));
      rec["story"] = story;
      rec["question"] = tokens_to_json(ex.question);
      json choices = json::array();
      for (const auto& c : ex.choices) choices.push_back(tokens_to_json(c));
      rec["choices"] = choices;
      rec["answer"] = ex.answer;
      out << rec.dump() << '\n';
    }
  };
  dump_split(dataset.train, "train");
  dump_split(dataset.dev, "dev");
  dump_split(dataset.test, "test");
}

Tensor bag_vector(const std::vector<std::string>& words, const EmbeddingTable& table) {
  Tensor out = Tensor::zeros({table.dimension});
  for (const std::string& w : words) {
    if (const std::vector<double>* vec = table.find(w)) {
      for (int i = 0; i < table.dimension; ++i) out(i) += (*vec)[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

Story prune_story(const Story& story, const std::vector<std::string>& question,
                  double keep_fraction, const EmbeddingTable& table) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw PreconditionError("prune_story: keep_fraction must be in (0, 1]");
  }
  const int n = static_cast<int>(story.utterances.size());
  if (n == 0) return story;
  int keep = static_cast<int>(std::ceil(keep_fraction * n));
  keep = std::max(1, std::min(keep, n));
  if (keep == n) return story;

  const Tensor q = bag_vector(question, table);
  std::vector<double> sims(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Tensor u = bag_vector(story.utterances[static_cast<std::size_t>(i)].tokens, table);
    sims[static_cast<std::size_t>(i)] = cosine_similarity_value(u.values, q.values);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sims[static_cast<std::size_t>(a)] > sims[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(keep));
  std::sort(order.begin(), order.end());

  Story pruned;
  pruned.utterances.reserve(order.size());
  for (int idx : order) pruned.utterances.push_back(story.utterances[static_cast<std::size_t>(idx)]);
  return pruned;
}

Story corrupt_transcript(const Story& story, double word_error_rate, std::uint64_t rng_seed,
                         const std::vector<std::string>& lexicon) {
  if (!(word_error_rate >= 0.0 && word_error_rate <= 1.0)) {
    throw PreconditionError("corrupt_transcript: word_error_rate must be in [0, 1]");
  }
  if (word_error_rate > 0.0 && lexicon.empty()) {
    throw ConfigError("corrupt_transcript: empty lexicon with a positive error rate");
  }

  Rng rng(rng_seed);
  Story out;
  out.utterances.reserve(story.utterances.size());
  for (const Utterance& utt : story.utterances) {
    Utterance corrupted;
    const std::size_t n = utt.tokens.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& word = utt.tokens[i];
      if (rng.uniform() >= word_error_rate) {
        corrupted.tokens.push_back(word);
        continue;
      }
      const double op = rng.uniform();
      if (op < 0.5) {
        corrupted.tokens.push_back(rng.pick(lexicon));  // substitution
      } else if (op < 0.75) {
        // deletion, unless it would empty the utterance
        if (corrupted.tokens.empty() && i + 1 == n) corrupted.tokens.push_back(word);
      } else {
        corrupted.tokens.push_back(word);  // duplication
        corrupted.tokens.push_back(word);
      }
    }
    out.utterances.push_back(std::move(corrupted));
  }
  return out;
}

std::vector<std::string> vocabulary(const Dataset& dataset) {
  std::set<std::string> words;
  auto add_split = [&](const std::vector<Example>& examples) {
    for (const Example& ex : examples) {
      for (const Utterance& u : ex.story.utterances) words.insert(u.tokens.begin(), u.tokens.end());
      words.insert(ex.question.begin(), ex.question.end());
      for (const auto& c : ex.choices) words.insert(c.begin(), c.end());
    }
  };
  add_split(dataset.train);
  add_split(dataset.dev);
  add_split(dataset.test);
  return {words.begin(), words.end()};
}

std::vector<std::string> story_lexicon(const Dataset& dataset) {
  std::set<std::string> words;
  auto add_split = [&](const std::vector<Example>& examples) {
    for (const Example& ex : examples) {
      for (const Utterance& u : ex.story.utterances) words.insert(u.tokens.begin(), u.tokens.end());
    }
  };
  add_split(dataset.train);
  add_split(dataset.dev);
  add_split(dataset.test);
  return {words.begin(), words.end()};
}

}  // namespace amrnn
