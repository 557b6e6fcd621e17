#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tagsum/corpus.hpp"
#include "tagsum/model.hpp"
#include "tagsum/topic_model.hpp"

namespace tagsum::train {

using model::Mode;
using model::ModelParams;

struct TrainConfig {
  Mode mode = Mode::TAG;
  bool use_coverage = false;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 2.0;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  double coverage_weight = 1.0;
  std::uint64_t seed = 1;
  std::size_t max_src_len = 100;
  std::size_t max_tgt_len = 30;
  std::size_t fold_in_iterations = 50;
  // TAG only: run with theta zeroed in the switch input and w_topic forced to 0.
  bool disable_topic = false;
  // Stop after the first epoch whose mean training NLL falls below this (0 = never).
  double target_nll = 0.0;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

inline constexpr double kProbabilityFloor = 1e-12;

struct SequenceLoss {
  ad::Tensor total;        // (sum nll + coverage_weight * sum coverage) / steps
  double nll = 0.0;        // per-token mean
  double coverage = 0.0;   // per-token mean, unweighted
  std::size_t steps = 0;
};

// Teacher-forced loss over BOS y_1..y_T EOS, scored at extended target ids.
SequenceLoss sequence_loss(const ModelParams& params, const corpus::EncodedPair& pair,
                           const std::optional<topic::TopicVector>& theta,
                           const TrainConfig& config);

// Scales all gradients so their global L2 norm is at most max_norm; returns the
// norm measured before scaling.
double clip_grad_norm(ModelParams& params, double max_norm);

// Clip, bias-corrected Adam update, zero gradients. Throws on non-finite grads.
void adam_step(ModelParams& params, AdamState& state, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double mean_nll = 0.0;
  double mean_coverage_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::vector<topic::TopicVector> train_thetas;
};

using EpochCallback = std::function<void(const ModelParams&, const EpochRecord&)>;

// Topic vectors for each training article come from fold-in against the
// supplied (already fitted) topic model; train never fits LDA itself.
TrainResult train(const std::vector<corpus::EncodedPair>& corpus, const model::ModelDims& dims,
                  const topic::TopicModel* topics, const TrainConfig& config,
                  const std::vector<corpus::EncodedPair>* validation = nullptr,
                  const EpochCallback& on_epoch = {});

std::optional<topic::TopicVector> fold_in_theta(const topic::TopicModel* topics,
                                                const corpus::EncodedPair& pair,
                                                std::size_t iterations, std::uint64_t seed);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace tagsum::train
