#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tagsum/corpus.hpp"

namespace tagsum::topic {

// Word ids here index the LDA vocabulary, which is the model vocabulary with
// the special tokens removed: topic word w is vocabulary id w + kNumSpecials.
using Document = std::vector<int>;
using TopicVector = std::vector<double>;

inline constexpr int kFormatVersion = 1;

struct TopicModel {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  double alpha = 0.0;
  double eta = 0.0;
  std::vector<double> beta;  // num_topics x vocab_size, row-major
  std::string vocab_file;    // optional link to the token list, relative to the manifest

  double beta_at(std::size_t k, std::size_t w) const { return beta[k * vocab_size + w]; }

  // JSON manifest plus a little-endian float64 sidecar named <stem>.bin.
  void save(const std::filesystem::path& manifest) const;
  static TopicModel load(const std::filesystem::path& manifest);
};

struct LdaOptions {
  std::size_t num_topics = 100;
  double alpha = -1.0;  // <= 0 selects 50 / num_topics
  double eta = 0.01;
  std::size_t iterations = 200;
  std::uint64_t seed = 1;
};

struct GibbsState {
  std::vector<std::vector<int>> z;
  std::vector<int> n_kw;  // K x V
  std::vector<int> n_dk;  // D x K
  std::vector<int> n_k;

  // Recounts from z and compares with the stored tallies.
  bool consistent(const std::vector<Document>& docs, std::size_t num_topics,
                  std::size_t vocab_size) const;
};

class GibbsSampler {
 public:
  GibbsSampler(std::vector<Document> docs, std::size_t vocab_size, const LdaOptions& options);

  void sweep();
  const GibbsState& state() const { return state_; }
  const std::vector<Document>& documents() const { return docs_; }
  TopicModel model() const;
  // Total log likelihood (nats) of the training corpus under the current counts.
  double log_likelihood() const;

 private:
  std::vector<Document> docs_;
  std::size_t K_, V_;
  double alpha_, eta_;
  GibbsState state_;
  std::mt19937_64 rng_;
  std::vector<double> weights_;
};

// Collapsed Gibbs sampling; beta is read off the final state with eta smoothing.
TopicModel fit_lda(const std::vector<Document>& docs, std::size_t vocab_size,
                   const LdaOptions& options, std::vector<double>* log_likelihood_trace = nullptr);

// Fold-in Gibbs on one document with beta held fixed.
TopicVector infer_theta(const TopicModel& model, const Document& doc, std::size_t iterations = 50,
                        std::uint64_t seed = 1);

// Sum over documents and tokens of log sum_k theta*_k beta_k,w (nats).
double log_likelihood(const TopicModel& model, const std::vector<Document>& docs,
                      std::size_t iterations = 50, std::uint64_t seed = 1);

std::vector<std::string> top_words(const TopicModel& model, const corpus::Vocabulary& vocab,
                                   std::size_t topic, std::size_t n);

Document to_topic_document(const std::vector<int>& vocab_ids);
Document to_topic_document(const corpus::Tokens& tokens, const corpus::Vocabulary& vocab);

}  // namespace tagsum::topic
