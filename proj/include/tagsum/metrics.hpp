#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tagsum/corpus.hpp"
#include "tagsum/topic_model.hpp"

namespace tagsum::metrics {

using corpus::Tokens;

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScores {
  Prf rouge1, rouge2, rougeL;
};

// f1 = 2PR / (P + R), 0 when P + R = 0.
Prf make_prf(double precision, double recall);

// Clipped n-gram overlap.
Prf rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n);
// Longest common subsequence.
Prf rouge_l(const Tokens& candidate, const Tokens& reference);
RougeScores rouge(const Tokens& candidate, const Tokens& reference);

// First three sentences, split after ".", "!" or "?".
Tokens lead3(const Tokens& article);

// KL(p || q) in nats with 0 ln 0 = 0.
double topic_kl(const topic::TopicVector& p, const topic::TopicVector& q);

struct BoxStats {
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

using SummarySet = std::pair<std::string, std::vector<Tokens>>;

struct CoherenceReport {
  std::vector<std::string> systems;
  std::vector<std::vector<double>> kl;  // [system][document], nats
  std::vector<BoxStats> stats;
};

struct CoherenceOptions {
  std::size_t fold_in_iterations = 50;
  std::uint64_t seed = 20190101;
};

// KL(theta*_document || theta*_summary) per document for each named set.
CoherenceReport coherence_eval(const topic::TopicModel& topics, const corpus::Vocabulary& vocab,
                               const std::vector<Tokens>& documents,
                               const std::vector<SummarySet>& summary_sets,
                               const CoherenceOptions& options = {});

struct CorpusRouge {
  RougeScores mean;
  std::vector<RougeScores> per_pair;
};

CorpusRouge corpus_rouge(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

// Mean of the ROUGE-1/2/L F1 values; the per-document quality used for wins.
double pair_quality(const RougeScores& scores);

// wins[s] = documents on which system s scores strictly above every other system.
std::vector<std::size_t> count_wins(const std::vector<const CorpusRouge*>& systems);

// ---- evaluation report ----------------------------------------------------

struct SystemEvaluation {
  std::string name;
  CorpusRouge rouge;
  std::optional<BoxStats> kl;
  std::vector<double> kl_values;
  std::size_t wins = 0;
};

struct EvaluationInput {
  std::vector<std::string> ids;
  std::vector<Tokens> documents;
  std::vector<Tokens> references;
  std::vector<SummarySet> systems;
  bool include_lead3 = true;
  const topic::TopicModel* topics = nullptr;  // enables the coherence columns
  const corpus::Vocabulary* vocab = nullptr;
  CoherenceOptions coherence;
};

struct Evaluation {
  std::vector<std::string> ids;
  std::vector<SystemEvaluation> systems;   // candidates, then Lead-3
  std::optional<SystemEvaluation> reference_coherence;  // ground-truth KL row
};

Evaluation evaluate(const EvaluationInput& input);

// per_pair.csv and report.json under out_dir.
void write_evaluation(const std::filesystem::path& out_dir, const Evaluation& evaluation);

}  // namespace tagsum::metrics
