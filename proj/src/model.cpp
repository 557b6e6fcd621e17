#include "tagsum/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tagsum::model {

using namespace tagsum::ad;

std::string to_string(Mode mode) { return mode == Mode::PG ? "PG" : "TAG"; }

Mode parse_mode(const std::string& text) {
  if (text == "PG" || text == "pg") return Mode::PG;
  if (text == "TAG" || text == "tag") return Mode::TAG;
  throw std::invalid_argument("unknown mode '" + text + "' (expected PG or TAG)");
}

// ---- parameters -----------------------------------------------------------

namespace {

struct Initializer {
  std::mt19937_64 rng;

  Tensor uniform(Shape shape, double limit) {
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<double> v(num_elements(shape));
    for (auto& x : v) x = u(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
  }
  Tensor glorot(std::size_t fan_in, std::size_t fan_out) {
    return uniform({fan_in, fan_out}, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  }
};

Tensor zero_param(Shape shape) {
  const std::size_t n = num_elements(shape);
  return Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0));
}

void fix_special_mu_rows(Tensor& mu, std::size_t K) {
  auto v = mu.mutable_values();
  for (std::size_t r = 0; r < static_cast<std::size_t>(corpus::kNumSpecials); ++r)
    for (std::size_t k = 0; k < K; ++k) v[r * K + k] = kSpecialTopicLogit;
}

void validate_dims(const ModelDims& d) {
  if (d.vocab_size <= static_cast<std::size_t>(corpus::kNumSpecials) || d.emb_dim == 0 ||
      d.hidden_dim == 0 || d.attn_dim == 0 || d.switch_hidden == 0)
    throw std::invalid_argument("model: every dimension must be positive and V > 4");
}

// Gate layout (reset, update, candidate); x_proj already carries the bias.
Tensor gru_cell(const Tensor& x_proj, const Tensor& h, const Tensor& wh, std::size_t H) {
  const Tensor gh = matmul(h, wh);
  const Tensor r = sigmoid(add(slice(x_proj, 0, H), slice(gh, 0, H)));
  const Tensor z = sigmoid(add(slice(x_proj, H, 2 * H), slice(gh, H, 2 * H)));
  const Tensor n = tanh(add(slice(x_proj, 2 * H, 3 * H), mul(r, slice(gh, 2 * H, 3 * H))));
  return add(n, mul(z, sub(h, n)));
}

}  // namespace

ModelParams ModelParams::init(const ModelDims& d, std::uint64_t seed) {
  validate_dims(d);
  Initializer ini{std::mt19937_64(seed)};
  const std::size_t V = d.vocab_size, E = d.emb_dim, H = d.hidden_dim, A = d.attn_dim,
                    K = d.num_topics, S = d.switch_hidden;
  ModelParams p;
  p.dims = d;
  p.embedding = ini.uniform({V, E}, 0.1);
  p.enc_fwd_wx = ini.glorot(E, 3 * H);
  p.enc_fwd_wh = ini.glorot(H, 3 * H);
  p.enc_fwd_b = zero_param({3 * H});
  p.enc_bwd_wx = ini.glorot(E, 3 * H);
  p.enc_bwd_wh = ini.glorot(H, 3 * H);
  p.enc_bwd_b = zero_param({3 * H});
  p.bridge_w = ini.glorot(2 * H, H);
  p.bridge_b = zero_param({H});
  p.dec_wx = ini.glorot(E + 2 * H, 3 * H);
  p.dec_wh = ini.glorot(H, 3 * H);
  p.dec_b = zero_param({3 * H});
  p.attn_wh = ini.glorot(2 * H, A);
  p.attn_ws = ini.glorot(H, A);
  p.attn_b = zero_param({A});
  p.attn_v = ini.uniform({A}, std::sqrt(3.0 / static_cast<double>(A)));
  p.coverage_w = ini.uniform({1}, 0.1);
  p.out_w = ini.glorot(3 * H, V);
  p.out_b = zero_param({V});
  p.switch_w1 = ini.glorot(d.switch_input(), S);
  p.switch_b1 = zero_param({S});
  p.switch_w2 = ini.glorot(S, 3);
  p.switch_b2 = zero_param({3});
  p.mu = ini.uniform({V, K}, 0.1);
  fix_special_mu_rows(p.mu, K);
  return p;
}

ModelParams ModelParams::zeros(const ModelDims& d) {
  validate_dims(d);
  ModelParams p = init(d, 0);
  for (auto& [name, t] : p.named()) {
    auto v = t->mutable_values();
    std::fill(v.begin(), v.end(), 0.0);
  }
  fix_special_mu_rows(p.mu, d.num_topics);
  return p;
}

ModelParams ModelParams::clone() const {
  ModelParams p = zeros(dims);
  auto dst = p.named();
  const auto src = named();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto v = src[i].second->values();
    std::copy(v.begin(), v.end(), dst[i].second->mutable_values().begin());
  }
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  return {{"embedding", &embedding},   {"enc_fwd_wx", &enc_fwd_wx}, {"enc_fwd_wh", &enc_fwd_wh},
          {"enc_fwd_b", &enc_fwd_b},   {"enc_bwd_wx", &enc_bwd_wx}, {"enc_bwd_wh", &enc_bwd_wh},
          {"enc_bwd_b", &enc_bwd_b},   {"bridge_w", &bridge_w},     {"bridge_b", &bridge_b},
          {"dec_wx", &dec_wx},         {"dec_wh", &dec_wh},         {"dec_b", &dec_b},
          {"attn_wh", &attn_wh},       {"attn_ws", &attn_ws},       {"attn_b", &attn_b},
          {"attn_v", &attn_v},         {"coverage_w", &coverage_w}, {"out_w", &out_w},
          {"out_b", &out_b},           {"switch_w1", &switch_w1},   {"switch_b1", &switch_b1},
          {"switch_w2", &switch_w2},   {"switch_b2", &switch_b2},   {"mu", &mu}};
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

void ModelParams::zero_grad() {
  for (auto& [name, t] : named()) t->zero_grad();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

std::vector<double> init_mu_from_beta(const topic::TopicModel& topics, std::size_t vocab_size) {
  if (topics.vocab_size + corpus::kNumSpecials != vocab_size)
    throw std::invalid_argument("init_mu_from_beta: topic model covers " +
                                std::to_string(topics.vocab_size) + " words but the vocabulary has " +
                                std::to_string(vocab_size) + " entries (" +
                                std::to_string(corpus::kNumSpecials) + " special)");
  const std::size_t K = topics.num_topics;
  std::vector<double> mu(vocab_size * K, kSpecialTopicLogit);
  for (std::size_t v = corpus::kNumSpecials; v < vocab_size; ++v)
    for (std::size_t k = 0; k < K; ++k)
      mu[v * K + k] = std::log(topics.beta_at(k, v - corpus::kNumSpecials));
  return mu;
}

void set_mu_from_beta(ModelParams& params, const topic::TopicModel& topics) {
  if (topics.num_topics != params.dims.num_topics)
    throw std::invalid_argument("set_mu_from_beta: model has " +
                                std::to_string(params.dims.num_topics) + " topic slots, topic model " +
                                std::to_string(topics.num_topics));
  const auto mu = init_mu_from_beta(topics, params.dims.vocab_size);
  std::copy(mu.begin(), mu.end(), params.mu.mutable_values().begin());
}

// ---- encoder --------------------------------------------------------------

EncoderStates encode(const ModelParams& p, const std::vector<int>& src_ids) {
  if (src_ids.empty()) throw std::invalid_argument("encode: empty source sequence");
  const std::size_t L = src_ids.size(), H = p.dims.hidden_dim;
  const Tensor emb = embedding_lookup(p.embedding, src_ids);
  const Tensor xf = add(matmul(emb, p.enc_fwd_wx), broadcast_rows(p.enc_fwd_b, L));
  const Tensor xb = add(matmul(emb, p.enc_bwd_wx), broadcast_rows(p.enc_bwd_b, L));

  std::vector<Tensor> fwd(L), bwd(L);
  Tensor h = Tensor::zeros({H});
  for (std::size_t i = 0; i < L; ++i) fwd[i] = h = gru_cell(row(xf, i), h, p.enc_fwd_wh, H);
  h = Tensor::zeros({H});
  for (std::size_t i = L; i-- > 0;) bwd[i] = h = gru_cell(row(xb, i), h, p.enc_bwd_wh, H);

  EncoderStates enc;
  enc.states = concat({stack(fwd), stack(bwd)}, 1);
  enc.projected = matmul(enc.states, p.attn_wh);
  enc.initial_decoder_state =
      tanh(add(matmul(concat({fwd[L - 1], bwd[0]}), p.bridge_w), p.bridge_b));
  return enc;
}

// ---- attention ------------------------------------------------------------

Attention attention(const ModelParams& p, const EncoderStates& enc, const Tensor& s,
                    const Tensor& coverage, bool use_coverage) {
  const std::size_t L = enc.length(), A = p.dims.attn_dim;
  Tensor features = add(enc.projected, broadcast_rows(add(matmul(s, p.attn_ws), p.attn_b), L));
  if (use_coverage) {
    if (coverage.size() != L)
      throw ShapeError("attention: coverage " + ad::to_string(coverage.shape()) +
                       " does not match source length " + std::to_string(L));
    features = add(features, broadcast_cols(scale(coverage, p.coverage_w), A));
  }
  Attention out;
  out.weights = softmax(matmul(tanh(features), p.attn_v));
  out.context = matmul(out.weights, enc.states);
  return out;
}

Tensor coverage_loss(const Tensor& attention_weights, const Tensor& coverage) {
  return sum(minimum(attention_weights, coverage));
}

// ---- output distributions -------------------------------------------------

Tensor switch_net(const ModelParams& p, const Tensor& context, const Tensor& s,
                  const Tensor& prev_emb, const Tensor& theta) {
  const Tensor input = concat({context, s, prev_emb, theta});
  const Tensor hidden = tanh(add(matmul(input, p.switch_w1), p.switch_b1));
  return softmax(add(matmul(hidden, p.switch_w2), p.switch_b2));
}

Tensor topic_distribution(const ModelParams& p, const Tensor& theta) {
  if (theta.size() != p.dims.num_topics)
    throw ShapeError("topic_distribution: theta " + ad::to_string(theta.shape()) + " but model has " +
                     std::to_string(p.dims.num_topics) + " topics");
  return softmax(matmul(p.mu, theta));
}

Tensor copy_distribution(const Tensor& attention_weights, const std::vector<int>& src_extended_ids,
                         std::size_t extended_size) {
  return scatter_add(attention_weights, src_extended_ids, extended_size);
}

Tensor mix_distribution(const Tensor& gen, const Tensor& copy, const Tensor& topic,
                        const Tensor& weights) {
  const Tensor w_gen = slice(weights, 0, 1), w_copy = slice(weights, 1, 2);
  if (topic.defined())
    return add(add(scale(gen, w_gen), scale(copy, w_copy)), scale(topic, slice(weights, 2, 3)));
  const Tensor total = add(w_gen, w_copy);
  return add(scale(gen, div(w_gen, total)), scale(copy, div(w_copy, total)));
}

namespace {

Tensor extend(const Tensor& probs, std::size_t extra) {
  if (extra == 0) return probs;
  return concat({probs, Tensor::zeros({extra})});
}

}  // namespace

// ---- decoding step --------------------------------------------------------

SourceContext prepare_source(const ModelParams& p, const corpus::EncodedPair& pair,
                             const std::optional<topic::TopicVector>& theta, Mode mode) {
  SourceContext src;
  src.enc = encode(p, pair.src_ids);
  src.src_extended_ids = pair.src_extended_ids;
  src.num_oovs = pair.num_oovs();
  if (mode == Mode::TAG) {
    if (!theta) throw std::invalid_argument("prepare_source: TAG mode requires a topic vector");
    src.theta = Tensor::constant({theta->size()}, *theta);
    src.topic_probs = topic_distribution(p, src.theta);
  }
  return src;
}

DecoderState initial_state(const ModelParams& p, const SourceContext& source) {
  DecoderState st;
  st.s = source.enc.initial_decoder_state;
  st.coverage = Tensor::zeros({source.enc.length()});
  st.context = Tensor::zeros({2 * p.dims.hidden_dim});
  st.prev_token = corpus::kBos;
  return st;
}

StepOutput decode_step(const ModelParams& p, const DecoderState& state, const SourceContext& source,
                       const StepOptions& options) {
  const bool tag = options.mode == Mode::TAG;
  if (tag && !source.theta.defined())
    throw std::invalid_argument("decode_step: TAG mode requires a topic vector");
  const std::size_t V = p.dims.vocab_size, H = p.dims.hidden_dim;

  const int fed = state.prev_token < static_cast<int>(V) ? state.prev_token : corpus::kUnk;
  const Tensor prev_emb = embedding_lookup(p.embedding, fed);
  const Tensor x_proj = add(matmul(concat({prev_emb, state.context}), p.dec_wx), p.dec_b);
  const Tensor s = gru_cell(x_proj, state.s, p.dec_wh, H);

  const Attention att = attention(p, source.enc, s, state.coverage, options.use_coverage);
  const Tensor gen = softmax(add(matmul(concat({s, att.context}), p.out_w), p.out_b));
  const std::size_t ext = source.extended_size(V);
  const Tensor copy = copy_distribution(att.weights, source.src_extended_ids, ext);

  const bool topic_active = tag && !options.disable_topic;
  const Tensor theta_feature =
      topic_active ? source.theta : Tensor::zeros({p.dims.num_topics});
  const Tensor weights = switch_net(p, att.context, s, prev_emb, theta_feature);

  StepOutput out;
  const Tensor gen_ext = extend(gen, ext - V);
  if (topic_active) {
    out.probs = mix_distribution(gen_ext, copy, extend(source.topic_probs, ext - V), weights);
    out.switch_weights = weights;
  } else {
    out.probs = mix_distribution(gen_ext, copy, Tensor(), weights);
    const double total = weights[0] + weights[1];
    out.switch_weights = Tensor::constant({3}, {weights[0] / total, weights[1] / total, 0.0});
    if (tag) {
      // The topic term still enters the sum, with weight exactly zero.
      out.probs = add(out.probs, scale(extend(source.topic_probs, ext - V), Tensor::zeros({1})));
    }
  }

  out.attention = att.weights;
  out.coverage_loss = coverage_loss(att.weights, state.coverage);
  out.state.s = s;
  out.state.coverage = add(state.coverage, att.weights);
  out.state.context = att.context;
  out.state.prev_token = state.prev_token;
  return out;
}

}  // namespace tagsum::model
