#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tagsum/autodiff.hpp"
#include "tagsum/corpus.hpp"
#include "tagsum/topic_model.hpp"

namespace tagsum::model {

using ad::Tensor;

// PG mixes generation and copying; TAG adds the topic channel q.
enum class Mode { PG, TAG };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

inline constexpr double kSpecialTopicLogit = -1e9;

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t emb_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t attn_dim = 64;
  std::size_t num_topics = 0;
  std::size_t switch_hidden = 64;

  std::size_t switch_input() const { return 3 * hidden_dim + emb_dim + num_topics; }
};

struct ModelParams {
  ModelDims dims;

  Tensor embedding;  // V x E

  // GRU weights: input projection in x 3H, recurrence H x 3H, bias 3H,
  // gate order (reset, update, candidate).
  Tensor enc_fwd_wx, enc_fwd_wh, enc_fwd_b;
  Tensor enc_bwd_wx, enc_bwd_wh, enc_bwd_b;
  Tensor bridge_w, bridge_b;  // [h_fwd_L; h_bwd_1] -> s_0
  Tensor dec_wx, dec_wh, dec_b;  // input [emb(y_{t-1}); c_{t-1}]

  Tensor attn_wh, attn_ws, attn_b, attn_v;
  Tensor coverage_w;  // one scalar

  Tensor out_w, out_b;  // [s_t; c_t] -> V logits

  Tensor switch_w1, switch_b1, switch_w2, switch_b2;

  Tensor mu;  // V x K topic-word logits

  static ModelParams init(const ModelDims& dims, std::uint64_t seed);
  static ModelParams zeros(const ModelDims& dims);
  // Deep copy with fresh, gradient-free-of-history tensors.
  ModelParams clone() const;

  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  void zero_grad();
  std::size_t parameter_count() const;
};

// mu[v][k] = log beta[k][v - kNumSpecials] for non-special v, special rows at
// kSpecialTopicLogit. Returned as V x K row-major values.
std::vector<double> init_mu_from_beta(const topic::TopicModel& topics, std::size_t vocab_size);
void set_mu_from_beta(ModelParams& params, const topic::TopicModel& topics);

struct EncoderStates {
  Tensor states;     // L x 2H
  Tensor projected;  // L x A, attention key projection of the states
  Tensor initial_decoder_state;  // H

  std::size_t length() const { return states.dim(0); }
};

EncoderStates encode(const ModelParams& params, const std::vector<int>& src_ids);

struct Attention {
  Tensor weights;  // L, categorical
  Tensor context;  // 2H
};

Attention attention(const ModelParams& params, const EncoderStates& enc, const Tensor& s,
                    const Tensor& coverage, bool use_coverage);

// Softmax over the three logits of a one-hidden-layer tanh net on
// [c_t; s_t; prev_emb; theta]. Output order (w_gen, w_copy, w_topic).
Tensor switch_net(const ModelParams& params, const Tensor& context, const Tensor& s,
                  const Tensor& prev_emb, const Tensor& theta);

// q = softmax_v(mu_v . theta) over the fixed vocabulary.
Tensor topic_distribution(const ModelParams& params, const Tensor& theta);

// Attention scattered onto extended ids, summing repeated source tokens.
Tensor copy_distribution(const Tensor& attention_weights, const std::vector<int>& src_extended_ids,
                         std::size_t extended_size);

// With `topic` defined: w_gen*gen + w_copy*copy + w_topic*topic. Without it the
// first two weights are renormalized to sum to one.
Tensor mix_distribution(const Tensor& gen, const Tensor& copy, const Tensor& topic,
                        const Tensor& weights);

Tensor coverage_loss(const Tensor& attention_weights, const Tensor& coverage);

struct SourceContext {
  EncoderStates enc;
  std::vector<int> src_extended_ids;
  std::size_t num_oovs = 0;
  Tensor theta;        // K; undefined without a topic vector
  Tensor topic_probs;  // q over V; undefined without a topic vector

  std::size_t extended_size(std::size_t vocab_size) const { return vocab_size + num_oovs; }
};

// theta is required in TAG mode and ignored in PG mode.
SourceContext prepare_source(const ModelParams& params, const corpus::EncodedPair& pair,
                             const std::optional<topic::TopicVector>& theta, Mode mode);

struct DecoderState {
  Tensor s;         // H
  Tensor coverage;  // L, running sum of past attention
  Tensor context;   // 2H, c_{t-1}
  int prev_token = corpus::kBos;  // extended id of y_{t-1}
};

DecoderState initial_state(const ModelParams& params, const SourceContext& source);

struct StepOptions {
  Mode mode = Mode::TAG;
  bool use_coverage = false;
  // TAG only: zero theta in the switch input and force w_topic = 0.
  bool disable_topic = false;
};

struct StepOutput {
  Tensor probs;           // V + U
  DecoderState state;     // coverage already includes this step's attention
  Tensor attention;       // L
  Tensor switch_weights;  // (w_gen, w_copy, w_topic) actually applied
  Tensor coverage_loss;   // sum_i min(alpha_i, coverage_i) against the incoming coverage
};

StepOutput decode_step(const ModelParams& params, const DecoderState& state,
                       const SourceContext& source, const StepOptions& options);

}  // namespace tagsum::model
