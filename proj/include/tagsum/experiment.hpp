#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tagsum/corpus.hpp"
#include "tagsum/metrics.hpp"
#include "tagsum/model.hpp"
#include "tagsum/topic_model.hpp"
#include "tagsum/training.hpp"

namespace tagsum::experiment {

// Cosine similarity of each true topic with its matched estimated topic under
// the best one-to-one assignment (exhaustive over permutations, K <= 8).
// estimated and truth are K x V row-major over the same word order.
std::vector<double> aligned_topic_cosines(const std::vector<std::vector<double>>& estimated,
                                          const std::vector<std::vector<double>>& truth);

// Re-indexes a fitted topic model onto the synthetic word order.
std::vector<std::vector<double>> beta_over_words(const topic::TopicModel& topics,
                                                 const corpus::Vocabulary& vocab,
                                                 const std::vector<std::string>& words);

struct ExperimentOptions {
  std::uint64_t seed = 7;
  corpus::SyntheticOptions corpus{4, 48, 1300, 30, 6, 0.1, 7};
  std::size_t test_docs = 200;
  // Carved from the end of the training portion; the checkpoint with the lowest
  // validation NLL is the one decoded. 0 keeps the last epoch.
  std::size_t val_docs = 100;
  topic::LdaOptions lda{4, 0.1, 0.01, 200, 7};
  model::ModelDims dims{0, 32, 32, 32, 4, 64};
  train::TrainConfig train;
  std::size_t beam_size = 4;
  std::size_t min_len = 2;
  std::size_t max_len = 10;

  ExperimentOptions();
  // Threads the single seed into every stage.
  void reseed(std::uint64_t seed);
};

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::vector<double> topic_cosines;
  metrics::Evaluation evaluation;  // systems: PG, TAG, Lead-3
  std::vector<CriterionResult> criteria;
  std::vector<train::EpochRecord> pg_history, tag_history;

  bool passed() const;
};

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Synthetic corpus -> LDA on training articles -> PG and TAG under one seed and
// budget -> beam decoding of held-out articles -> ROUGE and topic coherence.
// Artifacts go to out_dir; progress lines to log when non-null. A failing stage
// leaves a fail report in out_dir/acceptance.json and throws StageError.
ExperimentReport run_acceptance(const ExperimentOptions& options,
                                const std::filesystem::path& out_dir, std::ostream* log);

}  // namespace tagsum::experiment
