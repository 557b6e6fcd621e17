#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tagsum/corpus.hpp"
#include "tagsum/model.hpp"
#include "tagsum/topic_model.hpp"

namespace tagsum::decode {

using model::Mode;

struct DecodeOptions {
  Mode mode = Mode::TAG;
  bool use_coverage = false;
  std::size_t beam_size = 4;
  std::size_t max_len = 30;
  std::size_t min_len = 2;
  bool length_norm = true;
  // TAG only: decode with the topic channel switched off.
  bool disable_topic = false;
};

struct Hypothesis {
  std::vector<int> tokens;  // extended ids, EOS included when generated
  double log_prob = 0.0;
  model::DecoderState state;
  bool finished = false;

  double score(bool length_norm) const;
};

struct Summary {
  std::vector<int> ids;  // extended ids, EOS stripped
  double log_prob = 0.0;
  double score = 0.0;    // ranking criterion (length-normalized when enabled)
};

Summary greedy_decode(const model::ModelParams& params, const corpus::EncodedPair& src,
                      const std::optional<topic::TopicVector>& theta, const DecodeOptions& options);

// Ranked best-first; at most beam_size entries.
std::vector<Summary> beam_search(const model::ModelParams& params, const corpus::EncodedPair& src,
                                 const std::optional<topic::TopicVector>& theta,
                                 const DecodeOptions& options);

// One line per document: {"id", "summary", "score"}.
struct SummaryRecord {
  std::string id;
  std::string summary;
  double score = 0.0;
};

void write_summaries_jsonl(const std::filesystem::path& path,
                           const std::vector<SummaryRecord>& records);
std::vector<SummaryRecord> read_summaries_jsonl(const std::filesystem::path& path);

corpus::Tokens to_tokens(const std::vector<int>& ids, const corpus::Vocabulary& vocab,
                         const std::vector<std::string>& oov_list);

}  // namespace tagsum::decode
