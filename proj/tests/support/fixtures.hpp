#pragma once

// Small randomized inputs shared by the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tagsum/corpus.hpp"
#include "tagsum/model.hpp"
#include "tagsum/topic_model.hpp"

namespace fixture {

using namespace tagsum;

// Vocabulary of `size` entries: the specials plus w0, w1, ...
inline corpus::Vocabulary word_vocab(std::size_t size) {
  std::vector<std::string> words;
  for (std::size_t i = corpus::kNumSpecials; i < size; ++i)
    words.push_back("w" + std::to_string(i - corpus::kNumSpecials));
  return corpus::Vocabulary::from_tokens(words);
}

// Article of src_len tokens drawn from the vocabulary plus `oovs` distinct
// out-of-vocabulary tokens; the summary mixes vocabulary words with source OOVs.
inline corpus::DocumentPair random_pair(std::mt19937_64& rng, const corpus::Vocabulary& vocab,
                                        std::size_t src_len, std::size_t tgt_len, std::size_t oovs) {
  const std::size_t real = vocab.size() - corpus::kNumSpecials;
  std::uniform_int_distribution<std::size_t> word(0, real - 1);
  corpus::DocumentPair p;
  for (std::size_t i = 0; i < src_len; ++i) p.article.push_back("w" + std::to_string(word(rng)));
  std::vector<std::string> oov_tokens;
  for (std::size_t j = 0; j < oovs && j < src_len; ++j) {
    oov_tokens.push_back("oov" + std::to_string(j));
    std::uniform_int_distribution<std::size_t> pos(0, src_len - 1);
    p.article[pos(rng)] = oov_tokens.back();
  }
  for (std::size_t t = 0; t < tgt_len; ++t) {
    if (!oov_tokens.empty() && t % 2 == 1)
      p.summary.push_back(oov_tokens[t / 2 % oov_tokens.size()]);
    else
      p.summary.push_back("w" + std::to_string(word(rng)));
  }
  p.id = "r";
  return p;
}

inline topic::TopicVector random_theta(std::mt19937_64& rng, std::size_t k) {
  std::gamma_distribution<double> g(0.5, 1.0);
  topic::TopicVector theta(k);
  double total = 0;
  for (auto& t : theta) total += (t = g(rng) + 1e-3);
  for (auto& t : theta) t /= total;
  return theta;
}

// A topic model over the non-special part of a vocabulary with random rows.
inline topic::TopicModel random_topics(std::mt19937_64& rng, std::size_t k, std::size_t vocab_size) {
  topic::TopicModel tm;
  tm.num_topics = k;
  tm.vocab_size = vocab_size - corpus::kNumSpecials;
  tm.alpha = 0.1;
  tm.eta = 0.01;
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = random_theta(rng, tm.vocab_size);
    tm.beta.insert(tm.beta.end(), row.begin(), row.end());
  }
  return tm;
}

inline model::ModelDims tiny_dims(std::size_t vocab_size, std::size_t k, std::size_t d = 8) {
  model::ModelDims dims;
  dims.vocab_size = vocab_size;
  dims.emb_dim = d;
  dims.hidden_dim = d;
  dims.attn_dim = d;
  dims.num_topics = k;
  dims.switch_hidden = d;
  return dims;
}

}  // namespace fixture
