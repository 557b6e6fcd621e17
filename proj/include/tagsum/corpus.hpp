#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace tagsum::corpus {

using Tokens = std::vector<std::string>;

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumSpecials = 4;

inline const char* const kSpecialTokens[kNumSpecials] = {"<pad>", "<unk>", "<s>", "</s>"};

// Lowercases, splits on whitespace and isolates the marks . , ! ? ; : " ' ( ) -
Tokens tokenize(const std::string& text);
std::string detokenize(const Tokens& tokens);
bool is_sentence_end(const std::string& token);

class Vocabulary {
 public:
  Vocabulary();  // specials only

  // Non-special tokens, in id order starting at kNumSpecials.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return id_to_token_.size(); }

  // One non-special token per line; line n holds id n + kNumSpecials.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(const std::string& token);

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct DocumentPair {
  Tokens article;
  Tokens summary;
  std::string id;
};

// Ranks article+summary tokens by frequency (ties lexicographic), keeps those
// with count >= min_freq, truncated to max_size - kNumSpecials entries.
Vocabulary build_vocab(const std::vector<DocumentPair>& corpus, std::size_t max_size,
                       std::size_t min_freq = 1);

struct EncodedPair {
  std::vector<int> src_ids;
  std::vector<int> src_extended_ids;
  std::vector<std::string> oov_list;
  std::vector<int> tgt_ids;           // BOS y_1 .. y_T EOS
  std::vector<int> tgt_extended_ids;  // same framing, source OOVs as V + j
  std::string id;

  std::size_t num_oovs() const { return oov_list.size(); }
};

EncodedPair encode_pair(const DocumentPair& pair, const Vocabulary& vocab,
                        std::size_t max_src_len = 0, std::size_t max_tgt_len = 0);

// Maps an extended id back to its surface token.
std::string extended_token(int extended_id, const Vocabulary& vocab,
                           const std::vector<std::string>& oov_list);

std::vector<DocumentPair> load_jsonl(const std::filesystem::path& path);
void save_jsonl(const std::filesystem::path& path, const std::vector<DocumentPair>& pairs);

struct SyntheticCorpus {
  std::vector<DocumentPair> pairs;
  std::vector<std::vector<double>> beta;   // K x V over the synthetic words
  std::vector<std::vector<double>> theta;  // one per document
  std::vector<std::string> words;          // word v is words[v]
  std::vector<std::vector<int>> topic_words;  // high-probability words per topic
};

struct SyntheticOptions {
  std::size_t num_topics = 2;
  std::size_t vocab_size = 30;
  std::size_t num_docs = 200;
  std::size_t doc_len = 40;
  std::size_t summary_len = 6;
  double doc_topic_alpha = 0.1;
  std::uint64_t seed = 1;
};

// Planted-topic corpus: each topic owns a contiguous block of words carrying
// most of its mass; articles follow the LDA generative process; every summary
// holds at least one of the dominant topic's head words that the article lacks.
SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

}  // namespace tagsum::corpus
